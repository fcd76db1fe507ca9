#pragma once

#include <cstdint>
#include <functional>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "subrl/estimator.hpp"
#include "subrl/parallel.hpp"
#include "subrl/policy.hpp"
#include "subrl/random.hpp"
#include "subrl/rewards.hpp"
#include "subrl/smdp.hpp"
#include "subrl/trajectory.hpp"

namespace subrl {

/// Enumeration budget shared by every exact computation.
inline constexpr std::uint64_t kEnumerationLimit = 10'000'000;

struct ExactResult {
  double value = 0.0;
  /// Maximizing action sequence and the states it visits, when applicable.
  std::vector<ActionId> actions;
  std::vector<StateId> states;
  std::uint64_t count = 0;
};

/// Upper bound on the number of trajectories with positive probability:
/// |supp rho| * (|A| * max branching)^H.
std::uint64_t trajectory_bound(const Smdp& smdp);

/// visit(traj, probability, accumulator) for one trajectory; marginal gains are filled in.
using TrajectoryVisitor = std::function<void(const Trajectory&, double, std::span<double>)>;

/// Runs `visit` on every trajectory of positive probability and returns the
/// accumulated vector. Work is split by the (s_0, a_0, s_1) prefix and
/// reduced in prefix order. Throws SizeRefusal beyond kEnumerationLimit.
std::vector<double> enumerate_expectation(const Smdp& smdp, const RewardFunction& reward,
                                          const StochasticPolicy& policy, std::size_t dim,
                                          const TrajectoryVisitor& visit, Execution exec = Execution::parallel,
                                          std::uint64_t* count = nullptr);

/// J(pi) = sum_tau f(tau; pi) F(tau).
ExactResult exact_J(const Smdp& smdp, const RewardFunction& reward, const StochasticPolicy& policy,
                    Execution exec = Execution::parallel);

/// sum_tau f(tau; pi) F(tau) sum_i grad log pi(a_i | tau_{0:i}).
std::vector<double> exact_grad(const Smdp& smdp, const RewardFunction& reward, const Policy& policy,
                               Execution exec = Execution::parallel);

/// E[estimator] over the exact trajectory distribution, with the per-step
/// weights of `kind` and the given baseline.
std::vector<double> expected_estimator(const Smdp& smdp, const RewardFunction& reward, const Policy& policy,
                                       const Baseline& baseline, EstimatorKind kind = EstimatorKind::subpo,
                                       const ModularReward* surrogate = nullptr,
                                       Execution exec = Execution::parallel);

/// Central differences of f around x.
std::vector<double> fd_gradient(const std::function<double(std::span<const double>)>& f,
                                std::span<const double> x, double step = 1e-5);

/// Central finite differences of exact_J in the policy parameters.
std::vector<double> fd_exact_grad(const Smdp& smdp, const RewardFunction& reward, const Policy& policy,
                                  double step = 1e-5);

/// max over open-loop action sequences of F on a deterministic SMDP with a
/// fixed start. The first maximizer in lexicographic action order is kept.
ExactResult brute_force_opt(const Smdp& smdp, const RewardFunction& reward);

/// At each step takes the action whose successor has the largest marginal
/// gain; ties go to the lowest action id.
Trajectory greedy_walk(const Smdp& smdp, const RewardFunction& reward);

struct Verdict {
  std::string check;
  bool pass = true;
  std::optional<nlohmann::json> witness;
  double max_violation = 0.0;
  nlohmann::json details = nlohmann::json::object();

  nlohmann::json to_json() const;
};

/// Samples (A subset B, v not in B) over time-dropped subsets of the ground
/// set and fails iff F(A + v) - F(A) < F(B + v) - F(B) - tol somewhere.
Verdict check_submodular(const RewardFunction& reward, int ground_size, std::size_t samples, double tol,
                         std::uint64_t seed = 0);

/// Samples (A, v) and fails iff F(A + v) - F(A) < -tol somewhere.
Verdict check_monotone(const RewardFunction& reward, int ground_size, std::size_t samples, double tol,
                       std::uint64_t seed = 0);

/// State-independent policy on an epsilon-bandit in probability space:
/// x[h][a] is the probability of action a at step h, except that the
/// self-loop action a = v at state v takes the remaining mass
/// 1 - sum_{a != v} x[h][a].
class LoopReparamPolicy final : public StochasticPolicy {
 public:
  LoopReparamPolicy(int num_states, int horizon, std::vector<double> x);

  int num_actions() const override { return num_states_; }
  void action_probabilities(const HistoryView& history, std::span<double> out) const override;

  /// Every coordinate nonnegative and every relaxed simplex sum at most 1.
  bool feasible(double margin = 0.0) const;
  std::span<const double> coordinates() const { return x_; }

 private:
  int num_states_;
  int horizon_;
  std::vector<double> x_;
};

/// Random point strictly inside the relaxed simplices: every coordinate and
/// every loop residual is at least 0.02.
std::vector<double> random_interior_point(int num_states, int horizon, RandomStream& rng);

/// Finite-difference monotonicity and DR-submodularity of
/// x -> J(LoopReparamPolicy(x)) at one point: first partials >= -tol and
/// second partials (cross terms included) <= tol.
Verdict dr_check(const Smdp& bandit, const RewardFunction& reward, std::span<const double> point,
                 double fd_step = 1e-3, double tol = 1e-6);

/// c = 1 - min over s with F({s}) > 0 of F(s | V \ {s}) / F({s}).
double curvature(const RewardFunction& reward, int ground_size);

/// Deterministic time-indexed table policy (h, v) -> a.
class TablePolicy final : public StochasticPolicy {
 public:
  TablePolicy(int num_states, int num_actions, std::vector<ActionId> table);

  int num_actions() const override { return num_actions_; }
  void action_probabilities(const HistoryView& history, std::span<double> out) const override;

 private:
  int num_states_;
  int num_actions_;
  std::vector<ActionId> table_;
};

/// Best deterministic time-augmented Markovian policy against `samples`
/// random stochastic Markovian ones, and against brute_force_opt when the
/// SMDP is deterministic with a fixed start.
Verdict markovian_optimality_check(const Smdp& smdp, const RewardFunction& reward, std::size_t samples = 100,
                                   std::uint64_t seed = 0, double tol = 1e-12);

}  // namespace subrl
