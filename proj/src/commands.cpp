#include "subrl/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>

#include "subrl/config.hpp"
#include "subrl/errors.hpp"
#include "subrl/oracle.hpp"
#include "subrl/parallel.hpp"
#include "subrl/trainer.hpp"

namespace subrl::app {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << text;
}

/// OPT when the instance admits brute force, otherwise empty.
std::optional<double> try_opt(const Experiment& ex) {
  if (!ex.smdp.is_deterministic() || !ex.smdp.fixed_start()) return std::nullopt;
  try {
    return brute_force_opt(ex.smdp, *ex.reward).value;
  } catch (const SizeRefusal&) {
    return std::nullopt;
  }
}

template <class F>
int guarded(std::ostream& log, F&& body) {
  try {
    return body();
  } catch (const SizeRefusal& e) {
    log << json{{"error", e.what()}, {"requested", e.requested()}, {"limit", e.limit()}}.dump() << '\n';
    std::cerr << "size refusal: " << e.what() << '\n';
    return kExitSizeRefusal;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace

int cmd_train(const TrainOptions& options, std::ostream& log) {
  return guarded(log, [&] {
    json doc = read_json(options.config_path);
    if (options.estimator) {
      doc["train"]["estimator"] = *options.estimator;
    }
    if (options.policy) apply_policy_flag(doc, *options.policy);
    if (options.out) doc["output_dir"] = *options.out;
    if (options.seed) {
      doc["seeds"] = {*options.seed};
    } else if (options.seeds) {
      if (*options.seeds < 1) throw ConfigError("--seeds must be positive");
      const std::uint64_t first = doc.contains("seeds") ? doc["seeds"][0].get<std::uint64_t>() : 0;
      json list = json::array();
      for (int i = 0; i < *options.seeds; ++i) list.push_back(first + static_cast<std::uint64_t>(i));
      doc["seeds"] = list;
    }
    const Experiment ex = build_experiment(doc, fs::path(options.config_path).parent_path());
    const fs::path out_dir = ex.output_dir;
    fs::create_directories(out_dir);
    write_text(out_dir / "config.json", ex.doc.dump(2) + "\n");

    // Seeds run as independent jobs; with several seeds each one trains
    // serially so the machine is not oversubscribed.
    const bool many = ex.seeds.size() > 1;
    std::vector<Evaluation> finals(ex.seeds.size());
    std::mutex log_mutex;
    parallel_for(
        ex.seeds.size(),
        [&](std::size_t i) {
          const std::uint64_t seed = ex.seeds[i];
          TrainConfig config = ex.train;
          config.seed = seed;
          config.execution = many ? Execution::serial : Execution::parallel;
          auto policy = ex.make_policy(seed);
          const auto result = train(ex.smdp, ex.reward, *policy, config);
          const fs::path dir = out_dir / ("seed_" + std::to_string(seed));
          write_text(dir / "curve.csv", result.curve.to_csv());
          save_checkpoint(*policy, (dir / "policy.ckpt").string());
          finals[i] = result.final_eval;
          std::lock_guard lock(log_mutex);
          std::cerr << "seed " << seed << ": final mean J " << result.final_eval.mean << '\n';
        },
        many ? Execution::parallel : Execution::serial);

    double mean = 0.0;
    for (const auto& f : finals) mean += f.mean;
    mean /= static_cast<double>(finals.size());
    double var = 0.0;
    for (const auto& f : finals) var += (f.mean - mean) * (f.mean - mean);
    var /= static_cast<double>(finals.size());

    json per_seed = json::array();
    for (std::size_t i = 0; i < finals.size(); ++i)
      per_seed.push_back({{"seed", ex.seeds[i]},
                          {"final_mean_J", finals[i].mean},
                          {"final_std_J", finals[i].std},
                          {"episodes", finals[i].episodes}});
    json summary{{"config_hash", ex.hash()},
                 {"seeds", ex.seeds},
                 {"final_mean_J", mean},
                 {"final_std_J", std::sqrt(var)},
                 {"per_seed", per_seed}};
    if (const auto opt = try_opt(ex)) {
      summary["opt"] = *opt;
      if (*opt > 0.0) summary["ratio"] = mean / *opt;
    }
    write_text(out_dir / "summary.json", summary.dump(2) + "\n");
    log << summary.dump(2) << '\n';
    return kExitOk;
  });
}

int cmd_oracle(const OracleOptions& options, std::ostream& log) {
  return guarded(log, [&] {
    const Experiment ex = load_experiment(options.config_path);
    const json& o = ex.oracle();
    const auto samples = o.value("samples", std::size_t{10000});
    const double tol = o.value("tolerance", 1e-8);
    const auto seed = o.value("seed", std::uint64_t{0});
    const int nv = ex.smdp.num_states();

    Verdict verdict;
    const std::string& check = options.check;
    if (check == "submodularity") {
      verdict = check_submodular(*ex.reward, nv, samples, tol, seed);
    } else if (check == "monotonicity") {
      verdict = check_monotone(*ex.reward, nv, samples, tol, seed);
    } else if (check == "brute-force") {
      const auto opt = brute_force_opt(ex.smdp, *ex.reward);
      verdict.check = "brute_force";
      verdict.details = {{"opt", opt.value}, {"actions", opt.actions}, {"states", opt.states},
                         {"sequences", opt.count}};
    } else if (check == "greedy") {
      const auto walk = greedy_walk(ex.smdp, *ex.reward);
      verdict.check = "greedy";
      verdict.details = {{"value", walk.telescoped_value()}, {"states", walk.states()}};
      try {
        const auto opt = brute_force_opt(ex.smdp, *ex.reward);
        verdict.details["opt"] = opt.value;
        if (opt.value > 0.0) verdict.details["ratio"] = walk.telescoped_value() / opt.value;
      } catch (const SizeRefusal&) {
      }
    } else if (check == "dr-check") {
      if (ex.doc["environment"]["type"] != "epsilon_bandit")
        throw ConfigError("dr-check needs an epsilon_bandit environment");
      const double step = o.value("fd_step", 1e-3);
      const double dr_tol = o.value("tolerance", 1e-6);
      std::vector<std::vector<double>> points;
      if (o.contains("policy_point")) {
        points.push_back(o["policy_point"].get<std::vector<double>>());
      } else {
        RandomStream rng(seed);
        for (int k = 0; k < o.value("points", 100); ++k)
          points.push_back(random_interior_point(nv, ex.smdp.horizon(), rng));
      }
      verdict.check = "dr_submodularity";
      std::size_t failed = 0;
      for (const auto& p : points) {
        const auto v = dr_check(ex.smdp, *ex.reward, p, step, dr_tol);
        if (v.max_violation >= verdict.max_violation && !v.pass) verdict.witness = v.witness;
        verdict.max_violation = std::max(verdict.max_violation, v.max_violation);
        if (!v.pass) ++failed;
      }
      verdict.pass = failed == 0;
      verdict.details = {{"points", points.size()}, {"failed", failed}, {"fd_step", step}, {"tolerance", dr_tol}};
    } else if (check == "curvature") {
      verdict.check = "curvature";
      verdict.details = {{"c", curvature(*ex.reward, nv)}};
    } else if (check == "markov-optimality") {
      verdict = markovian_optimality_check(ex.smdp, *ex.reward, o.value("samples", std::size_t{100}), seed);
    } else {
      throw ConfigError("unknown oracle check '" + check +
                        "' (submodularity, monotonicity, brute-force, greedy, dr-check, curvature, "
                        "markov-optimality)");
    }
    const json out = verdict.to_json();
    if (options.out) write_text(*options.out, out.dump(2) + "\n");
    log << out.dump(2) << '\n';
    return verdict.pass ? kExitOk : kExitError;
  });
}

int cmd_eval(const EvalOptions& options, std::ostream& log) {
  return guarded(log, [&] {
    const Experiment ex = load_experiment(options.config_path);
    const auto policy = load_checkpoint(options.checkpoint);
    const auto expected = ex.make_policy(0)->header();
    if (policy->header() != expected)
      throw InputError("checkpoint header " + policy->header().dump() + " does not match the config's policy " +
                       expected.dump());
    const std::size_t episodes = options.episodes.value_or(ex.train.evaluation_episodes());
    if (episodes == 0) throw ConfigError("--episodes must be positive");
    const std::uint64_t seed = options.seed.value_or(ex.seeds.front());

    const auto eval = evaluate_policy(ex.smdp, *ex.reward, *policy, episodes, seed);
    json summary{{"config_hash", ex.hash()},
                 {"checkpoint", options.checkpoint},
                 {"seed", seed},
                 {"episodes", episodes},
                 {"mean_J", eval.mean},
                 {"std_J", eval.std}};
    if (const auto opt = try_opt(ex)) {
      summary["opt"] = *opt;
      if (*opt > 0.0) summary["ratio"] = eval.mean / *opt;
    }
    if (options.out) write_text(*options.out, summary.dump(2) + "\n");
    log << summary.dump(2) << '\n';
    return kExitOk;
  });
}

}  // namespace subrl::app
