#include "subrl/estimator.hpp"

#include <cmath>

#include "subrl/errors.hpp"

namespace subrl {

EmaBaseline::EmaBaseline(int horizon, double decay)
    : values_(static_cast<std::size_t>(std::max(horizon, 0)), 0.0), decay_(decay) {
  if (!(decay >= 0.0 && decay < 1.0)) throw ConfigError("baseline decay must lie in [0, 1)");
}

double EmaBaseline::at(const HistoryView& prefix) const {
  const auto i = static_cast<std::size_t>(prefix.time());
  return i < values_.size() ? values_[i] : 0.0;
}

void EmaBaseline::update(const std::vector<std::vector<double>>& returns_to_go) {
  if (returns_to_go.empty()) return;
  std::vector<double> mean(values_.size(), 0.0);
  for (const auto& g : returns_to_go) {
    if (g.size() != values_.size()) throw ContractError("returns-to-go length differs from the horizon");
    for (std::size_t i = 0; i < g.size(); ++i) mean[i] += g[i];
  }
  const double inv = 1.0 / static_cast<double>(returns_to_go.size());
  for (std::size_t i = 0; i < values_.size(); ++i) {
    mean[i] *= inv;
    values_[i] = initialized_ ? decay_ * values_[i] + (1.0 - decay_) * mean[i] : mean[i];
  }
  initialized_ = true;
}

bool GradientEstimate::finite() const {
  for (double g : gradient)
    if (!std::isfinite(g)) return false;
  return std::isfinite(mean_return) && std::isfinite(mean_entropy);
}

std::vector<double> step_rewards(const Trajectory& traj, EstimatorKind kind, const ModularReward* surrogate) {
  const auto horizon = static_cast<std::size_t>(traj.horizon());
  if (kind == EstimatorKind::subpo) {
    if (traj.marginal_gains.size() != horizon)
      throw ContractError("trajectory is missing its marginal gains");
    return traj.marginal_gains;
  }
  if (surrogate == nullptr) throw ContractError("ModPO needs a modular surrogate reward");
  std::vector<double> out(horizon);
  for (std::size_t j = 0; j < horizon; ++j) {
    const int h = static_cast<int>(j) + 1;
    out[j] = surrogate->reward({h, traj.state_at(h)});
  }
  return out;
}

std::vector<double> returns_to_go(std::span<const double> rewards) {
  std::vector<double> out(rewards.size());
  double acc = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    acc += rewards[i];
    out[i] = acc;
  }
  return out;
}

double accumulate_trajectory_gradient(const Policy& policy, const Trajectory& traj,
                                      std::span<const double> rewards, const Baseline& baseline,
                                      double entropy_coef, double scale, std::span<double> grad) {
  if (rewards.size() != static_cast<std::size_t>(traj.horizon()))
    throw ContractError("one reward per step is required");
  const auto returns = returns_to_go(rewards);
  const auto states = traj.states();
  const auto n = static_cast<std::size_t>(policy.num_actions());
  std::vector<double> z(n), p(n), dz(n);
  double entropy_sum = 0.0;

  for (std::size_t i = 0; i < traj.steps.size(); ++i) {
    const HistoryView prefix{std::span<const StateId>(states.data(), i + 1), traj.horizon()};
    policy.logits(prefix, z);
    softmax(z, p);

    double entropy = 0.0;
    for (double x : p)
      if (x > 0.0) entropy -= x * std::log(x);
    entropy_sum += entropy;

    const double weight = scale * (returns[i] - baseline.at(prefix));
    const auto a = static_cast<std::size_t>(traj.steps[i].action);
    for (std::size_t k = 0; k < n; ++k) {
      // d log p_a / dz_k = [k == a] - p_k;  dH / dz_k = -p_k (log p_k + H)
      double d = weight * ((k == a ? 1.0 : 0.0) - p[k]);
      if (entropy_coef != 0.0 && p[k] > 0.0) d -= scale * entropy_coef * p[k] * (std::log(p[k]) + entropy);
      dz[k] = d;
    }
    policy.backprop_logits(prefix, dz, grad);
  }
  return entropy_sum;
}

namespace {

GradientEstimate reduce(const std::vector<Trajectory>& batch, const Policy& policy,
                        const std::function<double(const Trajectory&, std::span<double>, double&)>& per_traj,
                        Execution exec) {
  GradientEstimate est;
  est.batch_size = batch.size();
  const std::size_t dim = policy.num_params();
  est.gradient.assign(dim, 0.0);
  if (batch.empty()) return est;

  // Two trailing slots carry the return and entropy sums through the same
  // ordered reduction as the gradient.
  std::vector<double> acc(dim + 2);
  std::size_t decisions = 0;
  for (const auto& t : batch) decisions += static_cast<std::size_t>(t.horizon());
  blocked_sum(
      batch.size(), acc,
      [&](std::size_t b, std::span<double> out) {
        double ret = 0.0;
        out[dim + 1] += per_traj(batch[b], out.first(dim), ret);
        out[dim] += ret;
      },
      exec);
  std::copy(acc.begin(), acc.begin() + static_cast<std::ptrdiff_t>(dim), est.gradient.begin());
  est.mean_return = acc[dim] / static_cast<double>(batch.size());
  est.mean_entropy = decisions > 0 ? acc[dim + 1] / static_cast<double>(decisions) : 0.0;
  return est;
}

}  // namespace

GradientEstimate policy_gradient(const std::vector<Trajectory>& batch, const Policy& policy, EstimatorKind kind,
                                 const ModularReward* surrogate, const Baseline& baseline, double entropy_coef,
                                 Execution exec) {
  if (entropy_coef < 0.0) throw ConfigError("entropy coefficient must be nonnegative");
  const double scale = batch.empty() ? 0.0 : 1.0 / static_cast<double>(batch.size());
  return reduce(
      batch, policy,
      [&](const Trajectory& t, std::span<double> grad, double& ret) {
        const auto r = step_rewards(t, kind, surrogate);
        for (double x : r) ret += x;
        return accumulate_trajectory_gradient(policy, t, r, baseline, entropy_coef, scale, grad);
      },
      exec);
}

GradientEstimate subpo_gradient(const std::vector<Trajectory>& batch, const Policy& policy,
                                const Baseline& baseline, Execution exec) {
  return policy_gradient(batch, policy, EstimatorKind::subpo, nullptr, baseline, 0.0, exec);
}

GradientEstimate modpo_gradient(const std::vector<Trajectory>& batch, const Policy& policy,
                                const ModularReward& surrogate, const Baseline& baseline, Execution exec) {
  return policy_gradient(batch, policy, EstimatorKind::modpo, &surrogate, baseline, 0.0, exec);
}

GradientEstimate entropy_gradient(const std::vector<Trajectory>& batch, const Policy& policy, double coefficient,
                                  Execution exec) {
  if (coefficient < 0.0) throw ConfigError("entropy coefficient must be nonnegative");
  const double scale = batch.empty() ? 0.0 : 1.0 / static_cast<double>(batch.size());
  const ZeroBaseline zero;
  return reduce(
      batch, policy,
      [&](const Trajectory& t, std::span<double> grad, double&) {
        const std::vector<double> none(static_cast<std::size_t>(t.horizon()), 0.0);
        return accumulate_trajectory_gradient(policy, t, none, zero, coefficient, scale, grad);
      },
      exec);
}

}  // namespace subrl
