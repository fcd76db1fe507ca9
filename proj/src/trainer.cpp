#include "subrl/trainer.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "subrl/errors.hpp"
#include "subrl/random.hpp"
#include "subrl/rollout.hpp"

namespace subrl {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning rate must be positive");
  if (!(entropy_coef >= 0.0)) throw ConfigError("entropy coefficient must be nonnegative");
  if (!(baseline_decay >= 0.0 && baseline_decay < 1.0)) throw ConfigError("baseline decay must lie in [0, 1)");
}

EstimatorKind estimator_from_string(const std::string& name) {
  if (name == "subpo") return EstimatorKind::subpo;
  if (name == "modpo") return EstimatorKind::modpo;
  throw ConfigError("unknown estimator '" + name + "'");
}

std::string to_string(EstimatorKind kind) { return kind == EstimatorKind::subpo ? "subpo" : "modpo"; }

BaselineKind baseline_from_string(const std::string& name) {
  if (name == "zero") return BaselineKind::zero;
  if (name == "ema") return BaselineKind::ema;
  throw ConfigError("unknown baseline '" + name + "'");
}

void LearningCurve::write_csv(std::ostream& out) const {
  out << kHeader << '\n';
  out << std::setprecision(17);
  for (const auto& r : rows)
    out << r.epoch << ',' << r.mean_J << ',' << r.std_J << ',' << r.mean_entropy << ',' << r.ms << '\n';
}

std::string LearningCurve::to_csv() const {
  std::ostringstream s;
  write_csv(s);
  return s.str();
}

namespace {

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size());
  return {mean, std::sqrt(var)};
}

std::vector<double> values_of(const std::vector<Trajectory>& batch) {
  std::vector<double> out;
  out.reserve(batch.size());
  for (const auto& t : batch) out.push_back(t.telescoped_value());
  return out;
}

}  // namespace

Evaluation evaluate_policy(const Smdp& smdp, const RewardFunction& reward, const StochasticPolicy& policy,
                           std::size_t episodes, std::uint64_t seed, Execution exec) {
  if (episodes == 0) throw ConfigError("evaluation needs at least one episode");
  const auto batch = rollout_batch(smdp, reward, policy, episodes, seed, kEvaluationEpoch, exec);
  const auto [mean, sd] = mean_std(values_of(batch));
  return {mean, sd, episodes};
}

TrainResult train(const Smdp& smdp, const RewardPtr& reward, Policy& policy, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (!reward) throw ConfigError("no reward function");
  check_compatible(smdp, *reward, policy);

  std::shared_ptr<const ModularReward> surrogate;
  if (config.estimator == EstimatorKind::modpo) surrogate = modularize(reward);

  auto optimizer = make_optimizer(config.optimizer, policy.num_params());
  EmaBaseline ema(smdp.horizon(), config.baseline_decay);
  const ZeroBaseline zero;
  const Baseline& baseline = config.baseline == BaselineKind::ema ? static_cast<const Baseline&>(ema) : zero;

  TrainResult result;
  result.curve.rows.reserve(static_cast<std::size_t>(config.epochs));
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const auto batch = rollout_batch(smdp, *reward, policy, config.batch_size, config.seed,
                                     static_cast<std::uint64_t>(epoch), config.execution);

    const auto est = policy_gradient(batch, policy, config.estimator, surrogate.get(), baseline,
                                     config.entropy_coef, config.execution);
    if (!est.finite()) {
      std::size_t bad = 0;
      for (double g : est.gradient)
        if (!std::isfinite(g)) ++bad;
      std::ostringstream msg;
      msg << "non-finite gradient at epoch " << epoch << ": " << bad << " of " << est.gradient.size()
          << " entries, mean return " << est.mean_return << ", mean entropy " << est.mean_entropy;
      std::cerr << msg.str() << '\n';
      throw NumericalError(msg.str());
    }
    optimizer->step(policy.params(), est.gradient, config.learning_rate);
    // The baseline only moves between epochs; epoch 0 runs with b = 0.
    if (config.baseline == BaselineKind::ema) {
      std::vector<std::vector<double>> returns;
      returns.reserve(batch.size());
      for (const auto& t : batch) returns.push_back(returns_to_go(step_rewards(t, config.estimator, surrogate.get())));
      ema.update(returns);
    }

    const auto [mean, sd] = mean_std(values_of(batch));
    const auto stop = std::chrono::steady_clock::now();
    CurveRow row{epoch, mean, sd, est.mean_entropy,
                 std::chrono::duration<double, std::milli>(stop - start).count()};
    result.curve.rows.push_back(row);
    if (on_epoch) on_epoch(row);
  }

  result.final_eval =
      evaluate_policy(smdp, *reward, policy, config.evaluation_episodes(), config.seed, config.execution);
  return result;
}

}  // namespace subrl
