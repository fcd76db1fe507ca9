#pragma once

#include <cstdint>
#include <vector>

#include "subrl/parallel.hpp"
#include "subrl/policy.hpp"
#include "subrl/random.hpp"
#include "subrl/rewards.hpp"
#include "subrl/smdp.hpp"
#include "subrl/trajectory.hpp"

namespace subrl {

/// Samples one trajectory: s_0 ~ rho, a_h ~ pi(.|tau_{0:h}),
/// s_{h+1} ~ P_h(.|s_h, a_h), recording F(s_{h+1} | tau_{0:h}) through a
/// private incremental evaluator.
Trajectory rollout(const Smdp& smdp, const RewardFunction& reward, const StochasticPolicy& policy,
                   RandomStream& rng);

/// B rollouts; rollout b uses RandomStream::derive(seed, epoch, b).
std::vector<Trajectory> rollout_batch(const Smdp& smdp, const RewardFunction& reward,
                                      const StochasticPolicy& policy, std::size_t batch_size, std::uint64_t seed,
                                      std::uint64_t epoch, Execution exec = Execution::parallel);

/// F(visited set of traj), recomputed from scratch.
double trajectory_value(const RewardFunction& reward, const Trajectory& traj);

/// Throws ConfigError when policy/reward shapes do not fit the SMDP.
void check_compatible(const Smdp& smdp, const RewardFunction& reward, const StochasticPolicy& policy);

}  // namespace subrl
