#pragma once

#include <vector>

#include "subrl/types.hpp"

namespace subrl {

struct Step {
  int h = 0;
  StateId state = 0;
  ActionId action = 0;
};

/// tau = ((s_h, a_h)_{h<H}, s_H) with the per-step marginal gains
/// F(s_{h+1} | tau_{0:h}) recorded during the rollout.
struct Trajectory {
  std::vector<Step> steps;
  StateId final_state = 0;
  std::vector<double> marginal_gains;
  double initial_value = 0.0;

  int horizon() const noexcept { return static_cast<int>(steps.size()); }
  StateId state_at(int h) const {
    return h == horizon() ? final_state : steps[static_cast<std::size_t>(h)].state;
  }
  /// s_0 .. s_H.
  std::vector<StateId> states() const;
  /// F({s_0}) + sum of marginal gains.
  double telescoped_value() const;
};

/// Set of time-augmented pairs visited by a trajectory, plus its projection
/// onto V with time dropped (operator T).
struct VisitedSet {
  std::vector<TimedState> pairs;   // sorted, unique
  std::vector<StateId> projected;  // sorted, unique

  static VisitedSet from_pairs(std::vector<TimedState> pairs);
  static VisitedSet from_trajectory(const Trajectory& traj);
  /// Each state at time 0; for rewards that ignore time.
  static VisitedSet from_states(const std::vector<StateId>& states);

  bool empty() const noexcept { return pairs.empty(); }
};

}  // namespace subrl
