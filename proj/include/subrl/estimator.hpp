#pragma once

#include <functional>
#include <span>
#include <vector>

#include "subrl/parallel.hpp"
#include "subrl/policy.hpp"
#include "subrl/rewards.hpp"
#include "subrl/trajectory.hpp"

namespace subrl {

/// b(tau_{0:i}): a function of the history prefix s_0..s_i only.
class Baseline {
 public:
  virtual ~Baseline() = default;
  virtual double at(const HistoryView& prefix) const = 0;
};

class ZeroBaseline final : public Baseline {
 public:
  double at(const HistoryView&) const override { return 0.0; }
};

/// Per-timestep exponential moving average of returns-to-go. Call update()
/// between epochs only; within an epoch the values are fixed.
class EmaBaseline final : public Baseline {
 public:
  explicit EmaBaseline(int horizon, double decay = 0.9);

  double at(const HistoryView& prefix) const override;
  /// Folds in the batch mean of the returns-to-go at every step. The first
  /// update copies the batch mean.
  void update(const std::vector<std::vector<double>>& returns_to_go);

  std::span<const double> values() const { return values_; }
  bool initialized() const { return initialized_; }

 private:
  std::vector<double> values_;
  double decay_;
  bool initialized_ = false;
};

/// Arbitrary history-indexed baseline, e.g. a fixed random table in tests.
class FunctionBaseline final : public Baseline {
 public:
  using Fn = std::function<double(const HistoryView&)>;
  explicit FunctionBaseline(Fn fn) : fn_(std::move(fn)) {}
  double at(const HistoryView& prefix) const override { return fn_(prefix); }

 private:
  Fn fn_;
};

enum class EstimatorKind { subpo, modpo };

struct GradientEstimate {
  std::vector<double> gradient;
  std::size_t batch_size = 0;
  /// Batch mean of the summed per-step rewards.
  double mean_return = 0.0;
  /// Batch mean of the per-decision policy entropy (nats).
  double mean_entropy = 0.0;

  bool finite() const;
};

/// Per-step rewards r_j, j = 0..H-1, weighting the score terms. SubPO uses
/// the marginal gains F(s_{j+1} | tau_{0:j}); ModPO uses the surrogate's
/// additive reward of (j+1, s_{j+1}).
std::vector<double> step_rewards(const Trajectory& traj, EstimatorKind kind, const ModularReward* surrogate);

/// Suffix sums: out[i] = sum_{j >= i} rewards[j].
std::vector<double> returns_to_go(std::span<const double> rewards);

/// Adds scale * sum_i grad log pi(a_i | tau_{0:i}) (G_i - b(tau_{0:i}))
/// plus scale * entropy_coef * grad sum_i H(pi(. | tau_{0:i})) into grad.
/// Returns the summed entropy over the H decisions.
double accumulate_trajectory_gradient(const Policy& policy, const Trajectory& traj,
                                      std::span<const double> rewards, const Baseline& baseline,
                                      double entropy_coef, double scale, std::span<double> grad);

/// Fused estimator used by the trainer: score term of the chosen kind plus
/// the entropy term, averaged over the batch.
GradientEstimate policy_gradient(const std::vector<Trajectory>& batch, const Policy& policy, EstimatorKind kind,
                                 const ModularReward* surrogate, const Baseline& baseline, double entropy_coef,
                                 Execution exec = Execution::parallel);

GradientEstimate subpo_gradient(const std::vector<Trajectory>& batch, const Policy& policy,
                                const Baseline& baseline, Execution exec = Execution::parallel);

GradientEstimate modpo_gradient(const std::vector<Trajectory>& batch, const Policy& policy,
                                const ModularReward& surrogate, const Baseline& baseline,
                                Execution exec = Execution::parallel);

/// Gradient of coefficient * sum_h H(pi(. | tau_{0:h})), averaged over the batch.
GradientEstimate entropy_gradient(const std::vector<Trajectory>& batch, const Policy& policy, double coefficient,
                                  Execution exec = Execution::parallel);

}  // namespace subrl
