#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "subrl/estimator.hpp"
#include "subrl/optimizer.hpp"
#include "subrl/parallel.hpp"
#include "subrl/policy.hpp"
#include "subrl/rewards.hpp"
#include "subrl/smdp.hpp"

namespace subrl {

enum class BaselineKind { zero, ema };

struct TrainConfig {
  int epochs = 100;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::adam;
  double entropy_coef = 0.0;
  EstimatorKind estimator = EstimatorKind::subpo;
  BaselineKind baseline = BaselineKind::ema;
  double baseline_decay = 0.9;
  std::uint64_t seed = 0;
  /// Fresh rollouts for the final evaluation; 0 means batch_size.
  std::size_t eval_episodes = 0;
  Execution execution = Execution::parallel;

  void validate() const;
  std::size_t evaluation_episodes() const { return eval_episodes == 0 ? batch_size : eval_episodes; }
};

EstimatorKind estimator_from_string(const std::string& name);
std::string to_string(EstimatorKind kind);
BaselineKind baseline_from_string(const std::string& name);

struct CurveRow {
  int epoch = 0;
  double mean_J = 0.0;
  double std_J = 0.0;
  double mean_entropy = 0.0;
  double ms = 0.0;
};

struct LearningCurve {
  std::vector<CurveRow> rows;

  static constexpr const char* kHeader = "epoch,mean_J,std_J,mean_entropy,ms";
  /// Values are written with 17 significant digits so they round-trip.
  void write_csv(std::ostream& out) const;
  std::string to_csv() const;
};

struct Evaluation {
  double mean = 0.0;
  double std = 0.0;
  std::size_t episodes = 0;
};

/// Mean and population standard deviation of F(tau) over `episodes` fresh
/// rollouts drawn from the evaluation streams of `seed`.
Evaluation evaluate_policy(const Smdp& smdp, const RewardFunction& reward, const StochasticPolicy& policy,
                           std::size_t episodes, std::uint64_t seed, Execution exec = Execution::parallel);

struct TrainResult {
  LearningCurve curve;
  Evaluation final_eval;
};

/// Called after every epoch with the new row; may be empty.
using EpochCallback = std::function<void(const CurveRow&)>;

/// Runs `config.epochs` epochs of batched rollouts, gradient estimation and
/// one optimizer step each, updating `policy` in place. The reward being
/// logged is always the submodular F; ModPO only swaps the per-step weights
/// for those of modularize(F).
TrainResult train(const Smdp& smdp, const RewardPtr& reward, Policy& policy, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

}  // namespace subrl
