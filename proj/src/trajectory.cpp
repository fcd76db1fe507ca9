#include "subrl/trajectory.hpp"

#include <algorithm>

namespace subrl {

std::vector<StateId> Trajectory::states() const {
  std::vector<StateId> out;
  out.reserve(steps.size() + 1);
  for (const auto& s : steps) out.push_back(s.state);
  out.push_back(final_state);
  return out;
}

double Trajectory::telescoped_value() const {
  double v = initial_value;
  for (double g : marginal_gains) v += g;
  return v;
}

VisitedSet VisitedSet::from_pairs(std::vector<TimedState> pairs) {
  VisitedSet out;
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  out.projected.reserve(pairs.size());
  for (const auto& p : pairs) out.projected.push_back(p.v);
  std::sort(out.projected.begin(), out.projected.end());
  out.projected.erase(std::unique(out.projected.begin(), out.projected.end()), out.projected.end());
  out.pairs = std::move(pairs);
  return out;
}

VisitedSet VisitedSet::from_trajectory(const Trajectory& traj) {
  std::vector<TimedState> pairs;
  pairs.reserve(traj.steps.size() + 1);
  for (const auto& s : traj.steps) pairs.push_back({s.h, s.state});
  pairs.push_back({traj.horizon(), traj.final_state});
  return from_pairs(std::move(pairs));
}

VisitedSet VisitedSet::from_states(const std::vector<StateId>& states) {
  std::vector<TimedState> pairs;
  pairs.reserve(states.size());
  for (StateId v : states) pairs.push_back({0, v});
  return from_pairs(std::move(pairs));
}

}  // namespace subrl
