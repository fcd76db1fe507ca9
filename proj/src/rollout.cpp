#include "subrl/rollout.hpp"

#include "subrl/errors.hpp"

namespace subrl {

void check_compatible(const Smdp& smdp, const RewardFunction& reward, const StochasticPolicy& policy) {
  if (policy.num_actions() != smdp.num_actions())
    throw ConfigError("policy has " + std::to_string(policy.num_actions()) + " actions, SMDP has " +
                      std::to_string(smdp.num_actions()));
  if (reward.num_states() != smdp.num_states())
    throw ConfigError("reward ground set has " + std::to_string(reward.num_states()) + " states, SMDP has " +
                      std::to_string(smdp.num_states()));
}

Trajectory rollout(const Smdp& smdp, const RewardFunction& reward, const StochasticPolicy& policy,
                   RandomStream& rng) {
  check_compatible(smdp, reward, policy);
  const int horizon = smdp.horizon();
  Trajectory traj;
  traj.steps.reserve(static_cast<std::size_t>(horizon));
  traj.marginal_gains.reserve(static_cast<std::size_t>(horizon));

  std::vector<StateId> states;
  states.reserve(static_cast<std::size_t>(horizon) + 1);
  states.push_back(static_cast<StateId>(sample_categorical(smdp.initial_distribution(), rng)));

  auto evaluator = reward.make_evaluator();
  traj.initial_value = evaluator->add({0, states[0]});

  std::vector<double> probs(static_cast<std::size_t>(smdp.num_actions()));
  for (int h = 0; h < horizon; ++h) {
    const StateId v = states.back();
    const HistoryView history{states, horizon};
    policy.action_probabilities(history, probs);
    const ActionId a = sample_categorical(probs, rng);

    const auto row = smdp.successors(h, v, a);
    StateId next = row.back().next;
    if (row.size() > 1) {
      const double u = rng.uniform();
      double cdf = 0.0;
      for (const auto& s : row) {
        cdf += s.prob;
        if (u < cdf) {
          next = s.next;
          break;
        }
      }
    }
    traj.steps.push_back({h, v, a});
    states.push_back(next);
    traj.marginal_gains.push_back(evaluator->add({h + 1, next}));
  }
  traj.final_state = states.back();
  return traj;
}

std::vector<Trajectory> rollout_batch(const Smdp& smdp, const RewardFunction& reward,
                                      const StochasticPolicy& policy, std::size_t batch_size, std::uint64_t seed,
                                      std::uint64_t epoch, Execution exec) {
  check_compatible(smdp, reward, policy);
  std::vector<Trajectory> batch(batch_size);
  parallel_for(
      batch_size,
      [&](std::size_t b) {
        RandomStream rng = RandomStream::derive(seed, epoch, b);
        batch[b] = rollout(smdp, reward, policy, rng);
      },
      exec);
  return batch;
}

double trajectory_value(const RewardFunction& reward, const Trajectory& traj) {
  return reward.evaluate(VisitedSet::from_trajectory(traj));
}

}  // namespace subrl
