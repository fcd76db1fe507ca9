#include "subrl/config.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "subrl/envs.hpp"
#include "subrl/errors.hpp"
#include "subrl/schema_text.hpp"

namespace subrl::app {

using nlohmann::json;

const json& experiment_schema() {
  static const json schema = json::parse(kExperimentSchemaText);
  return schema;
}

namespace {

bool is_integer(const json& v) {
  if (v.is_number_integer()) return true;
  if (!v.is_number_float()) return false;
  const double x = v.get<double>();
  return std::isfinite(x) && std::floor(x) == x;
}

bool has_type(const json& v, const std::string& type) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "boolean") return v.is_boolean();
  if (type == "null") return v.is_null();
  if (type == "number") return v.is_number();
  if (type == "integer") return is_integer(v);
  return false;
}

std::string show(const json& v) {
  std::string s = v.dump();
  return s.size() > 60 ? s.substr(0, 57) + "..." : s;
}

void check(const json& v, const json& schema, const std::string& where, std::vector<std::string>& errors) {
  const std::string at = where.empty() ? "/" : where;
  if (schema.contains("type")) {
    const auto& t = schema["type"];
    bool ok = false;
    if (t.is_string()) ok = has_type(v, t.get<std::string>());
    for (const auto& u : t.is_array() ? t : json::array()) ok = ok || has_type(v, u.get<std::string>());
    if (!ok) {
      errors.push_back(at + ": expected " + t.dump() + ", got " + show(v));
      return;
    }
  }
  if (schema.contains("const") && v != schema["const"])
    errors.push_back(at + ": must equal " + schema["const"].dump());
  if (schema.contains("enum")) {
    bool found = false;
    for (const auto& e : schema["enum"]) found = found || v == e;
    if (!found) errors.push_back(at + ": " + show(v) + " is not one of " + schema["enum"].dump());
  }
  if (v.is_number()) {
    const double x = v.get<double>();
    if (schema.contains("minimum") && x < schema["minimum"].get<double>())
      errors.push_back(at + ": " + show(v) + " is below the minimum " + schema["minimum"].dump());
    if (schema.contains("maximum") && x > schema["maximum"].get<double>())
      errors.push_back(at + ": " + show(v) + " is above the maximum " + schema["maximum"].dump());
    if (schema.contains("exclusiveMinimum") && x <= schema["exclusiveMinimum"].get<double>())
      errors.push_back(at + ": " + show(v) + " must be greater than " + schema["exclusiveMinimum"].dump());
    if (schema.contains("exclusiveMaximum") && x >= schema["exclusiveMaximum"].get<double>())
      errors.push_back(at + ": " + show(v) + " must be less than " + schema["exclusiveMaximum"].dump());
  }
  if (v.is_array()) {
    if (schema.contains("minItems") && v.size() < schema["minItems"].get<std::size_t>())
      errors.push_back(at + ": needs at least " + schema["minItems"].dump() + " items");
    if (schema.contains("maxItems") && v.size() > schema["maxItems"].get<std::size_t>())
      errors.push_back(at + ": allows at most " + schema["maxItems"].dump() + " items");
    if (schema.contains("items"))
      for (std::size_t i = 0; i < v.size(); ++i) check(v[i], schema["items"], where + "/" + std::to_string(i), errors);
  }
  if (v.is_object()) {
    for (const auto& key : schema.value("required", json::array()))
      if (!v.contains(key.get<std::string>()))
        errors.push_back(at + ": missing required property '" + key.get<std::string>() + "'");
    const auto& props = schema.contains("properties") ? schema["properties"] : json::object();
    for (const auto& [key, value] : v.items()) {
      if (props.contains(key))
        check(value, props[key], where + "/" + key, errors);
      else if (schema.value("additionalProperties", true) == false)
        errors.push_back(at + ": unknown property '" + key + "'");
    }
  }
  for (const auto& sub : schema.value("allOf", json::array())) check(v, sub, where, errors);
  if (schema.contains("oneOf")) {
    int matches = 0;
    for (const auto& sub : schema["oneOf"]) {
      std::vector<std::string> scratch;
      check(v, sub, where, scratch);
      if (scratch.empty()) ++matches;
    }
    if (matches != 1)
      errors.push_back(at + ": " + show(v) + " matches " + std::to_string(matches) + " alternatives, expected exactly 1");
  }
  if (schema.contains("if")) {
    std::vector<std::string> scratch;
    check(v, schema["if"], where, scratch);
    if (scratch.empty() && schema.contains("then")) check(v, schema["then"], where, errors);
    if (!scratch.empty() && schema.contains("else")) check(v, schema["else"], where, errors);
  }
}

template <class T>
T get_or(const json& block, const char* key, T fallback) {
  return block.contains(key) ? block[key].get<T>() : fallback;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

struct Built {
  Smdp smdp;
  int width = 0;
  int height = 0;
  std::vector<StateId> excluded;  // cells that never hold items
};

Built build_environment(const json& env, const std::filesystem::path& base) {
  const std::string type = env["type"];
  if (type == "grid") {
    GridSpec spec;
    spec.width = env["width"];
    spec.height = env["height"];
    spec.horizon = env["horizon"];
    spec.slip = get_or(env, "slip", 0.0);
    std::vector<StateId> excluded;
    if (env.contains("start") && env["start"].is_array()) {
      spec.start = std::make_pair(env["start"][0].get<int>(), env["start"][1].get<int>());
    } else if (!env.contains("start")) {
      spec.start = std::make_pair(spec.width / 2, spec.height / 2);
    }
    if (spec.start) excluded.push_back(spec.cell(spec.start->first, spec.start->second));
    return {build_grid(spec), spec.width, spec.height, excluded};
  }
  if (type == "two_rooms") {
    auto rooms = build_two_rooms(env["corridor_length"], env["room_size"], env["horizon"]);
    std::vector<StateId> excluded{rooms.start};
    for (std::size_t v = 0; v < rooms.free.size(); ++v)
      if (!rooms.free[v]) excluded.push_back(static_cast<StateId>(v));
    return {std::move(rooms.smdp), rooms.width, rooms.height, excluded};
  }
  if (type == "epsilon_bandit") {
    EpsilonBanditSpec spec;
    spec.num_states = env["num_states"];
    spec.horizon = env["horizon"];
    if (env.contains("epsilon")) {
      if (env["epsilon"].is_array())
        spec.epsilon = env["epsilon"].get<std::vector<double>>();
      else
        spec.epsilon = {env["epsilon"].get<double>()};
    }
    spec.initial = get_or(env, "initial_dist", std::vector<double>{});
    return {build_epsilon_bandit(spec), 0, 0, {}};
  }
  const auto path = resolve(base, env["path"].get<std::string>());
  std::ifstream in(path);
  if (!in) throw InputError("cannot open SMDP file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError("SMDP file '" + path.string() + "': " + e.what());
  }
  return {Smdp::from_json(doc), 0, 0, {}};
}

std::vector<double> build_density(const json& block, int width, int height, const std::filesystem::path& base) {
  if (width == 0) throw ConfigError("density fields need a grid environment");
  const std::string source = block["source"];
  if (source == "constant") return constant_density(width, height, get_or(block, "value", 1.0)).values;
  if (source == "csv")
    return density_from_csv(resolve(base, block["path"].get<std::string>()).string(), width, height).values;
  if (source == "mixture") {
    std::vector<GaussianBump> bumps;
    if (block.contains("components")) {
      for (const auto& c : block["components"])
        bumps.push_back({c["mean"][0].get<double>(), c["mean"][1].get<double>(), c["sigma"].get<double>(),
                         get_or(c, "weight", 1.0)});
    } else {
      bumps = random_bumps(width, height, get_or(block, "count", 2), get_or(block, "sigma", 2.0),
                           get_or<std::uint64_t>(block, "seed", 0));
    }
    return mixture_density(width, height, bumps).values;
  }
  return gp_sample_density(width, height, get_or(block, "lengthscale", 3.0), get_or(block, "signal_variance", 1.0),
                           get_or<std::uint64_t>(block, "seed", 0))
      .values;
}

RewardPtr build_reward(const json& r, const Built& env, const std::filesystem::path& base) {
  const std::string kind = r["kind"];
  const int nv = env.smdp.num_states();
  if (kind == "weighted_coverage") {
    const json density = r.contains("density") ? r["density"] : json{{"source", "constant"}, {"value", 1.0}};
    const auto rho = build_density(density, env.width, env.height, base);
    return WeightedCoverage::on_grid(env.width, env.height, rho, get_or(r, "footprint_radius", 1));
  }
  if (kind == "item_collection") {
    std::vector<std::vector<StateId>> groups;
    if (r.contains("groups")) {
      groups = r["groups"].get<std::vector<std::vector<StateId>>>();
    } else if (r.contains("random_groups")) {
      const auto& g = r["random_groups"];
      groups = place_item_groups(nv, g["sizes"].get<std::vector<int>>(), get_or<std::uint64_t>(g, "seed", 0),
                                 env.excluded);
    } else {
      throw ConfigError("item_collection needs 'groups' or 'random_groups'");
    }
    return std::make_shared<ItemCollection>(nv, std::move(groups), r["quotas"].get<std::vector<int>>());
  }
  if (kind == "gp_mutual_information") {
    gp::GpParams params;
    params.lengthscale = get_or(r, "lengthscale", params.lengthscale);
    params.signal_variance = get_or(r, "signal_variance", params.signal_variance);
    params.noise_variance = get_or(r, "noise_variance", params.noise_variance);
    if (env.width > 0) {
      for (int v = 0; v < nv; ++v)
        params.points.push_back({static_cast<double>(v % env.width), static_cast<double>(v / env.width)});
    } else {
      // Without a grid the states sit on a line, one unit apart.
      for (int v = 0; v < nv; ++v) params.points.push_back({static_cast<double>(v), 0.0});
    }
    return std::make_shared<GpMutualInformation>(std::move(params));
  }
  auto values = r["state_reward"].get<std::vector<double>>();
  if (static_cast<int>(values.size()) != nv)
    throw ConfigError("state_reward has " + std::to_string(values.size()) + " entries, environment has " +
                      std::to_string(nv) + " states");
  return std::make_shared<ModularReward>(std::move(values), get_or(r, "discount", 1.0));
}

TrainConfig build_train(const json& t) {
  TrainConfig c;
  c.epochs = get_or(t, "epochs", c.epochs);
  c.batch_size = get_or(t, "batch_size", c.batch_size);
  c.learning_rate = get_or(t, "learning_rate", c.learning_rate);
  if (t.contains("optimizer")) c.optimizer = optimizer_from_string(t["optimizer"]);
  c.entropy_coef = get_or(t, "entropy_coef", c.entropy_coef);
  if (t.contains("estimator")) c.estimator = estimator_from_string(t["estimator"]);
  if (t.contains("baseline")) c.baseline = baseline_from_string(t["baseline"]);
  c.baseline_decay = get_or(t, "baseline_decay", c.baseline_decay);
  c.eval_episodes = get_or(t, "eval_episodes", c.eval_episodes);
  c.validate();
  return c;
}

}  // namespace

std::vector<std::string> schema_errors(const json& doc, const json& schema) {
  std::vector<std::string> errors;
  check(doc, schema, "", errors);
  return errors;
}

std::string config_hash(const json& doc) {
  const std::string text = doc.dump();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
  return hex.str();
}

void validate_experiment(const json& doc) {
  const auto errors = schema_errors(doc, experiment_schema());
  if (errors.empty()) return;
  std::string msg = "configuration does not match the experiment schema:";
  for (const auto& e : errors) msg += "\n  " + e;
  throw ConfigError(msg);
}

Experiment build_experiment(const json& doc, const std::filesystem::path& base_dir) {
  validate_experiment(doc);
  Built env = build_environment(doc["environment"], base_dir);
  RewardPtr reward = build_reward(doc["reward"], env, base_dir);
  if (reward->num_states() != env.smdp.num_states())
    throw ConfigError("reward ground set does not match the environment");
  const json train_block = doc.contains("train") ? doc["train"] : json::object();
  std::vector<std::uint64_t> seeds =
      doc.contains("seeds") ? doc["seeds"].get<std::vector<std::uint64_t>>() : std::vector<std::uint64_t>{0};
  Experiment ex{doc,   base_dir,   std::move(env.smdp),    std::move(reward),
                env.width, env.height, build_train(train_block), std::move(seeds),
                get_or(doc, "output_dir", std::string("runs"))};
  ex.make_policy(0);  // surface policy-shape errors before any run
  return ex;
}

Experiment load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return build_experiment(doc, std::filesystem::path(path).parent_path());
}

const json& Experiment::oracle() const {
  static const json empty = json::object();
  return doc.contains("oracle") ? doc["oracle"] : empty;
}

std::unique_ptr<Policy> Experiment::make_policy(std::uint64_t seed) const {
  const json block = doc.contains("policy") ? doc["policy"] : json{{"type", "tabular"}};
  const std::string type = block["type"];
  const int nv = smdp.num_states(), na = smdp.num_actions(), horizon = smdp.horizon();
  if (type == "tabular") return std::make_unique<TabularSoftmaxPolicy>(nv, na, horizon);

  const auto hidden = get_or(block, "hidden", std::vector<int>{64, 64});
  ObservationSpec obs;
  obs.num_states = nv;
  obs.horizon = horizon;
  if (type == "history") {
    obs.kind = ObservationKind::history_window;
    obs.window = get_or(block, "window", 1);
  } else if (get_or(block, "observation", std::string("one_hot_state_time")) == "one_hot_state_only") {
    obs.kind = ObservationKind::one_hot_state_only;
  }
  auto mlp = std::make_unique<MlpPolicy>(obs, hidden[0], hidden[1], na);
  mlp->initialize(seed);
  return mlp;
}

void apply_policy_flag(json& doc, const std::string& flag) {
  json block = doc.contains("policy") ? doc["policy"] : json::object();
  if (flag == "tabular" || flag == "mlp") {
    block["type"] = flag;
    block.erase("window");
  } else if (flag.rfind("history:", 0) == 0) {
    int k = 0;
    try {
      std::size_t used = 0;
      k = std::stoi(flag.substr(8), &used);
      if (used != flag.size() - 8) k = 0;
    } catch (const std::exception&) {
      k = 0;
    }
    if (k < 1) throw ConfigError("--policy history:k needs a positive integer k");
    block["type"] = "history";
    block["window"] = k;
    block.erase("observation");
  } else {
    throw ConfigError("--policy must be tabular, mlp or history:k");
  }
  if (block["type"] == "tabular") {
    block.erase("hidden");
    block.erase("observation");
  }
  doc["policy"] = block;
}

}  // namespace subrl::app
