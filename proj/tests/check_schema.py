"""Cross-checks the C++ schema validator against the jsonschema package.

usage: check_schema.py SCHEMA CONFIG_DIR PROBE
"""

import copy
import json
import pathlib
import random
import subprocess
import sys
import tempfile

import jsonschema


def mutations(doc, rng):
    """Valid and invalid variants of one config document."""
    out = []

    def variant(fn):
        d = copy.deepcopy(doc)
        try:
            fn(d)
        except (KeyError, TypeError, IndexError):
            return
        out.append(d)

    variant(lambda d: d.pop("environment"))
    variant(lambda d: d.pop("reward"))
    variant(lambda d: d.__setitem__("unexpected", 1))
    variant(lambda d: d["environment"].__setitem__("type", "maze"))
    variant(lambda d: d["environment"].__setitem__("horizon", 0))
    variant(lambda d: d["environment"].__setitem__("horizon", 2.5))
    variant(lambda d: d["environment"].__setitem__("horizon", "6"))
    variant(lambda d: d["environment"].pop("horizon"))
    variant(lambda d: d["environment"].pop(next(iter(sorted(k for k in d["environment"] if k != "type")))))
    variant(lambda d: d["reward"].__setitem__("kind", "unknown"))
    variant(lambda d: d.__setitem__("seeds", []))
    variant(lambda d: d.__setitem__("seeds", [1, -2]))
    variant(lambda d: d.__setitem__("seeds", [1, 2, 3]))
    variant(lambda d: d.__setitem__("output_dir", 7))
    variant(lambda d: d.setdefault("train", {}).__setitem__("batch_size", 0))
    variant(lambda d: d.setdefault("train", {}).__setitem__("learning_rate", 0.0))
    variant(lambda d: d.setdefault("train", {}).__setitem__("learning_rate", 0.5))
    variant(lambda d: d.setdefault("train", {}).__setitem__("optimizer", "rmsprop"))
    variant(lambda d: d.setdefault("train", {}).__setitem__("estimator", "modpo"))
    variant(lambda d: d.setdefault("train", {}).__setitem__("entropy_coef", -1))
    variant(lambda d: d.setdefault("policy", {}).__setitem__("type", "history"))
    variant(lambda d: d.setdefault("policy", {}).update({"type": "history", "window": 2}))
    variant(lambda d: d.setdefault("policy", {}).update({"type": "mlp", "hidden": [8]}))
    variant(lambda d: d.setdefault("policy", {}).update({"type": "mlp", "hidden": [8, 8]}))
    variant(lambda d: d.setdefault("oracle", {}).__setitem__("tolerance", -1))
    variant(lambda d: d["reward"].__setitem__("density", {"source": "constant"}))
    variant(lambda d: d["reward"].__setitem__("density", {"source": "csv", "path": "x.csv"}))
    variant(lambda d: d["reward"].__setitem__("density", {"source": "mixture", "count": 2, "sigma": 1.0, "seed": 3}))
    variant(lambda d: d["reward"].__setitem__("density", {"source": "gp_sample"}))
    # Random scalar replacements anywhere in the tree.
    for _ in range(40):
        d = copy.deepcopy(doc)
        paths = []

        def walk(node, trail):
            if isinstance(node, dict):
                for k, v in node.items():
                    paths.append(trail + [k])
                    walk(v, trail + [k])

        walk(d, [])
        path = rng.choice(paths)
        parent = d
        for k in path[:-1]:
            parent = parent[k]
        parent[path[-1]] = rng.choice([None, True, -1, 0, 1, 0.5, 3, "x", [], {}, [1], 1e9])
        out.append(d)
    return out


def main():
    schema_path, config_dir, probe = sys.argv[1:4]
    schema = json.loads(pathlib.Path(schema_path).read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)

    embedded = json.loads(subprocess.run([probe, "--print-schema"], check=True, capture_output=True, text=True).stdout)
    if embedded != schema:
        print("embedded schema differs from the published file")
        return 1

    rng = random.Random(0)
    docs = []
    for cfg in sorted(pathlib.Path(config_dir).glob("*.json")):
        doc = json.loads(cfg.read_text())
        if not validator.is_valid(doc):
            print(f"{cfg.name}: shipped config rejected by jsonschema")
            return 1
        docs.append((cfg.name, doc))
        docs.extend((f"{cfg.name}#{i}", m) for i, m in enumerate(mutations(doc, rng)))

    mismatches = 0
    with tempfile.TemporaryDirectory() as tmp:
        files = []
        for i, (_, doc) in enumerate(docs):
            p = pathlib.Path(tmp) / f"{i}.json"
            p.write_text(json.dumps(doc))
            files.append(str(p))
        result = subprocess.run([probe, *files], check=True, capture_output=True, text=True).stdout.split("\n")
        verdicts = dict(line.split("\t") for line in result if line)
        valid = 0
        for (name, doc), f in zip(docs, files):
            expected = validator.is_valid(doc)
            got = verdicts[f] == "valid"
            valid += expected
            if expected != got:
                mismatches += 1
                print(f"{name}: jsonschema says {expected}, probe says {got}: {json.dumps(doc)}")
    print(f"{len(docs)} documents ({valid} valid), {mismatches} disagreements")
    return 1 if mismatches else 0


if __name__ == "__main__":
    sys.exit(main())
