#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "subrl/gp.hpp"
#include "subrl/trajectory.hpp"
#include "subrl/types.hpp"

namespace subrl {

enum class RewardKind { weighted_coverage, item_collection, gp_mutual_information, modular, modularized_wrapper, custom };

std::string to_string(RewardKind kind);

/// Single-owner incremental state for one growing set A.
class IncrementalEvaluator {
 public:
  virtual ~IncrementalEvaluator() = default;

  /// F(A + s) - F(A), leaving A unchanged.
  virtual double gain(TimedState s) const = 0;
  /// A <- A + s; returns the marginal gain.
  virtual double add(TimedState s) = 0;
  /// F(A).
  virtual double value() const = 0;
  virtual std::unique_ptr<IncrementalEvaluator> clone() const = 0;
};

/// Monotone submodular set function over time-augmented states. Parameters
/// are immutable after construction; evaluators carry all mutable state.
class RewardFunction {
 public:
  virtual ~RewardFunction() = default;

  virtual RewardKind kind() const = 0;
  virtual int num_states() const = 0;
  /// True when F only sees T(tau), the visited states with time dropped.
  virtual bool drops_time() const { return true; }

  /// Exact F(set), recomputed from scratch.
  virtual double evaluate(const VisitedSet& set) const = 0;
  virtual std::unique_ptr<IncrementalEvaluator> make_evaluator() const = 0;

  /// F({s}).
  double singleton(TimedState s) const;

 protected:
  void check_range(const VisitedSet& set) const;
  void check_range(StateId v) const;
};

using RewardPtr = std::shared_ptr<const RewardFunction>;

/// Weighted coverage: F(A) = sum of weights of cells in the union of the
/// footprints D[v], v in T(A).
class WeightedCoverage final : public RewardFunction {
 public:
  WeightedCoverage(std::vector<double> cell_weights, std::vector<std::vector<int>> footprints);

  /// Grid states v = y*width + x with square footprints of Chebyshev radius
  /// `radius`, clipped at the boundary; cell weights are the density.
  static std::shared_ptr<WeightedCoverage> on_grid(int width, int height, std::span<const double> density,
                                                   int radius);

  RewardKind kind() const override { return RewardKind::weighted_coverage; }
  int num_states() const override { return static_cast<int>(footprints_.size()); }
  double evaluate(const VisitedSet& set) const override;
  std::unique_ptr<IncrementalEvaluator> make_evaluator() const override;

  std::span<const int> footprint(StateId v) const { return footprints_[static_cast<std::size_t>(v)]; }
  std::span<const double> cell_weights() const { return weights_; }

 private:
  class Evaluator;
  std::vector<double> weights_;
  std::vector<std::vector<int>> footprints_;
};

/// F(A) = sum_i min(|T(A) cap g_i|, d_i) over disjoint groups.
class ItemCollection final : public RewardFunction {
 public:
  ItemCollection(int num_states, std::vector<std::vector<StateId>> groups, std::vector<int> quotas);

  RewardKind kind() const override { return RewardKind::item_collection; }
  int num_states() const override { return num_states_; }
  double evaluate(const VisitedSet& set) const override;
  std::unique_ptr<IncrementalEvaluator> make_evaluator() const override;

  const std::vector<std::vector<StateId>>& groups() const { return groups_; }
  const std::vector<int>& quotas() const { return quotas_; }

 private:
  class Evaluator;
  int num_states_;
  std::vector<std::vector<StateId>> groups_;
  std::vector<int> quotas_;
  std::vector<int> group_of_;  // -1 when the state holds no item
};

/// F(A) = I(y_A; f) for a GP prior over the state locations.
class GpMutualInformation final : public RewardFunction {
 public:
  explicit GpMutualInformation(gp::GpParams params);

  RewardKind kind() const override { return RewardKind::gp_mutual_information; }
  int num_states() const override { return static_cast<int>(params_.points.size()); }
  double evaluate(const VisitedSet& set) const override;
  std::unique_ptr<IncrementalEvaluator> make_evaluator() const override;

  const gp::GpParams& params() const { return params_; }

 private:
  class Evaluator;
  gp::GpParams params_;
};

/// Classical additive reward over time-augmented states:
/// F(A) = sum_{(h,v) in A} discount^h r(v). Revisiting v at a later step
/// counts again, since (h, v) differs.
class ModularReward : public RewardFunction {
 public:
  explicit ModularReward(std::vector<double> state_reward, double discount = 1.0);

  RewardKind kind() const override { return RewardKind::modular; }
  int num_states() const override { return static_cast<int>(reward_.size()); }
  bool drops_time() const override { return false; }
  double evaluate(const VisitedSet& set) const override;
  std::unique_ptr<IncrementalEvaluator> make_evaluator() const override;

  double reward(TimedState s) const;
  std::span<const double> state_reward() const { return reward_; }
  double discount() const { return discount_; }

 private:
  class Evaluator;
  std::vector<double> reward_;
  double discount_;
};

/// Modular surrogate r(v) = F({v}) of a wrapped reward, as optimized by ModPO.
class ModularizedReward final : public ModularReward {
 public:
  ModularizedReward(std::vector<double> state_reward, RewardKind wrapped)
      : ModularReward(std::move(state_reward)), wrapped_(wrapped) {}

  RewardKind kind() const override { return RewardKind::modularized_wrapper; }
  RewardKind wrapped_kind() const { return wrapped_; }

 private:
  RewardKind wrapped_;
};

/// Arbitrary set function of T(A), evaluated from scratch on every call.
/// Meant for tests and verifiers, not for training.
class SetFunctionReward final : public RewardFunction {
 public:
  using Fn = std::function<double(std::span<const StateId>)>;
  SetFunctionReward(int num_states, Fn fn);

  RewardKind kind() const override { return RewardKind::custom; }
  int num_states() const override { return num_states_; }
  double evaluate(const VisitedSet& set) const override;
  std::unique_ptr<IncrementalEvaluator> make_evaluator() const override;

 private:
  class Evaluator;
  int num_states_;
  Fn fn_;
};

/// r(v) = F({v}); a modular input is returned unchanged.
std::shared_ptr<const ModularReward> modularize(const RewardPtr& reward);

}  // namespace subrl
