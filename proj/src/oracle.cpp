#include "subrl/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "subrl/errors.hpp"
#include "subrl/random.hpp"

namespace subrl {

namespace {

std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) return std::numeric_limits<std::uint64_t>::max();
  return a * b;
}

std::uint64_t saturating_pow(std::uint64_t base, int exp) {
  std::uint64_t r = 1;
  for (int i = 0; i < exp; ++i) r = saturating_mul(r, base);
  return r;
}

struct Prefix {
  StateId s0 = 0;
  ActionId a0 = -1;
  StateId s1 = 0;
  double prob = 0.0;
};

class Enumerator {
 public:
  Enumerator(const Smdp& smdp, const StochasticPolicy& policy, const TrajectoryVisitor& visit)
      : smdp_(smdp), policy_(policy), visit_(visit), probs_(static_cast<std::size_t>(smdp.horizon() + 1)) {
    for (auto& p : probs_) p.resize(static_cast<std::size_t>(smdp.num_actions()));
  }

  std::uint64_t run(const Prefix& prefix, const RewardFunction& reward, std::span<double> acc) {
    count_ = 0;
    acc_ = acc;
    traj_ = Trajectory{};
    states_.assign(1, prefix.s0);
    auto eval = reward.make_evaluator();
    traj_.initial_value = eval->add({0, prefix.s0});
    if (prefix.a0 < 0) {
      descend(0, *eval, prefix.prob);
    } else {
      push(0, prefix.a0, prefix.s1, eval->add({1, prefix.s1}));
      descend(1, *eval, prefix.prob);
    }
    return count_;
  }

 private:
  void push(int h, ActionId a, StateId next, double gain) {
    traj_.steps.push_back({h, states_.back(), a});
    traj_.marginal_gains.push_back(gain);
    states_.push_back(next);
  }
  void pop() {
    traj_.steps.pop_back();
    traj_.marginal_gains.pop_back();
    states_.pop_back();
  }

  void descend(int h, const IncrementalEvaluator& eval, double prob) {
    if (h == smdp_.horizon()) {
      traj_.final_state = states_.back();
      visit_(traj_, prob, acc_);
      ++count_;
      return;
    }
    auto& p = probs_[static_cast<std::size_t>(h)];
    const StateId v = states_.back();
    policy_.action_probabilities(HistoryView{states_, smdp_.horizon()}, p);
    for (ActionId a = 0; a < smdp_.num_actions(); ++a) {
      const double pa = p[static_cast<std::size_t>(a)];
      if (pa == 0.0) continue;
      for (const auto& s : smdp_.successors(h, v, a)) {
        auto child = eval.clone();
        push(h, a, s.next, child->add({h + 1, s.next}));
        descend(h + 1, *child, prob * pa * s.prob);
        pop();
      }
    }
  }

  const Smdp& smdp_;
  const StochasticPolicy& policy_;
  const TrajectoryVisitor& visit_;
  std::vector<std::vector<double>> probs_;
  std::vector<StateId> states_;
  Trajectory traj_;
  std::span<double> acc_;
  std::uint64_t count_ = 0;
};

void require_deterministic(const Smdp& smdp, const char* what) {
  if (!smdp.is_deterministic()) throw ContractError(std::string(what) + " needs deterministic transitions");
  if (!smdp.fixed_start()) throw ContractError(std::string(what) + " needs a fixed start state");
}

double value_of(const RewardFunction& reward, const std::vector<StateId>& states) {
  return reward.evaluate(VisitedSet::from_states(states));
}

}  // namespace

std::uint64_t trajectory_bound(const Smdp& smdp) {
  std::uint64_t support = 0;
  for (double p : smdp.initial_distribution())
    if (p > 0.0) ++support;
  const auto fan = static_cast<std::uint64_t>(smdp.num_actions()) * static_cast<std::uint64_t>(smdp.max_branching());
  return saturating_mul(support, saturating_pow(fan, smdp.horizon()));
}

std::vector<double> enumerate_expectation(const Smdp& smdp, const RewardFunction& reward,
                                          const StochasticPolicy& policy, std::size_t dim,
                                          const TrajectoryVisitor& visit, Execution exec, std::uint64_t* count) {
  const std::uint64_t bound = trajectory_bound(smdp);
  if (bound > kEnumerationLimit) throw SizeRefusal("trajectory enumeration", bound, kEnumerationLimit);
  if (policy.num_actions() != smdp.num_actions()) throw ConfigError("policy and SMDP disagree on |A|");
  if (reward.num_states() != smdp.num_states()) throw ConfigError("reward and SMDP disagree on |V|");

  std::vector<Prefix> prefixes;
  std::vector<double> probs(static_cast<std::size_t>(smdp.num_actions()));
  const auto rho = smdp.initial_distribution();
  for (StateId s0 = 0; s0 < smdp.num_states(); ++s0) {
    const double p0 = rho[static_cast<std::size_t>(s0)];
    if (p0 == 0.0) continue;
    if (smdp.horizon() == 0) {
      prefixes.push_back({s0, -1, 0, p0});
      continue;
    }
    const std::vector<StateId> start{s0};
    policy.action_probabilities(HistoryView{start, smdp.horizon()}, probs);
    for (ActionId a = 0; a < smdp.num_actions(); ++a) {
      const double pa = probs[static_cast<std::size_t>(a)];
      if (pa == 0.0) continue;
      for (const auto& s : smdp.successors(0, s0, a)) prefixes.push_back({s0, a, s.next, p0 * pa * s.prob});
    }
  }

  std::vector<std::uint64_t> counts(prefixes.size(), 0);
  std::vector<double> out(dim);
  blocked_sum(
      prefixes.size(), out,
      [&](std::size_t i, std::span<double> acc) {
        Enumerator e(smdp, policy, visit);
        counts[i] = e.run(prefixes[i], reward, acc);
      },
      exec);
  if (count) {
    *count = 0;
    for (auto c : counts) *count += c;
  }
  return out;
}

ExactResult exact_J(const Smdp& smdp, const RewardFunction& reward, const StochasticPolicy& policy,
                    Execution exec) {
  ExactResult r;
  const auto v = enumerate_expectation(
      smdp, reward, policy, 1,
      [](const Trajectory& t, double p, std::span<double> acc) { acc[0] += p * t.telescoped_value(); }, exec,
      &r.count);
  r.value = v[0];
  return r;
}

std::vector<double> exact_grad(const Smdp& smdp, const RewardFunction& reward, const Policy& policy,
                               Execution exec) {
  return enumerate_expectation(
      smdp, reward, policy, policy.num_params(),
      [&](const Trajectory& t, double p, std::span<double> acc) {
        const double weight = p * t.telescoped_value();
        const auto states = t.states();
        for (std::size_t i = 0; i < t.steps.size(); ++i) {
          const HistoryView prefix{std::span<const StateId>(states.data(), i + 1), t.horizon()};
          policy.accumulate_grad_log_prob(prefix, t.steps[i].action, weight, acc);
        }
      },
      exec);
}

std::vector<double> expected_estimator(const Smdp& smdp, const RewardFunction& reward, const Policy& policy,
                                       const Baseline& baseline, EstimatorKind kind,
                                       const ModularReward* surrogate, Execution exec) {
  return enumerate_expectation(
      smdp, reward, policy, policy.num_params(),
      [&](const Trajectory& t, double p, std::span<double> acc) {
        const auto r = step_rewards(t, kind, surrogate);
        accumulate_trajectory_gradient(policy, t, r, baseline, 0.0, p, acc);
      },
      exec);
}

std::vector<double> fd_gradient(const std::function<double(std::span<const double>)>& f,
                                std::span<const double> x, double step) {
  std::vector<double> point(x.begin(), x.end());
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = point[i];
    point[i] = keep + step;
    const double up = f(point);
    point[i] = keep - step;
    const double down = f(point);
    point[i] = keep;
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

std::vector<double> fd_exact_grad(const Smdp& smdp, const RewardFunction& reward, const Policy& policy,
                                  double step) {
  auto probe = policy.clone();
  const std::vector<double> theta(policy.params().begin(), policy.params().end());
  return fd_gradient(
      [&](std::span<const double> x) {
        std::copy(x.begin(), x.end(), probe->params().begin());
        return exact_J(smdp, reward, *probe).value;
      },
      theta, step);
}

ExactResult brute_force_opt(const Smdp& smdp, const RewardFunction& reward) {
  require_deterministic(smdp, "brute-force optimum");
  const std::uint64_t sequences = saturating_pow(static_cast<std::uint64_t>(smdp.num_actions()), smdp.horizon());
  if (sequences > kEnumerationLimit) throw SizeRefusal("action-sequence enumeration", sequences, kEnumerationLimit);
  if (reward.num_states() != smdp.num_states()) throw ConfigError("reward and SMDP disagree on |V|");

  ExactResult best;
  best.value = -std::numeric_limits<double>::infinity();
  const int horizon = smdp.horizon();
  std::vector<ActionId> actions;
  std::vector<StateId> states{*smdp.fixed_start()};

  auto root = reward.make_evaluator();
  root->add({0, states[0]});
  std::function<void(int, const IncrementalEvaluator&)> search = [&](int h, const IncrementalEvaluator& eval) {
    if (h == horizon) {
      ++best.count;
      if (eval.value() > best.value) {
        best.value = eval.value();
        best.actions = actions;
        best.states = states;
      }
      return;
    }
    for (ActionId a = 0; a < smdp.num_actions(); ++a) {
      const StateId next = smdp.successors(h, states.back(), a).front().next;
      auto child = eval.clone();
      child->add({h + 1, next});
      actions.push_back(a);
      states.push_back(next);
      search(h + 1, *child);
      actions.pop_back();
      states.pop_back();
    }
  };
  search(0, *root);
  return best;
}

Trajectory greedy_walk(const Smdp& smdp, const RewardFunction& reward) {
  require_deterministic(smdp, "greedy walk");
  Trajectory traj;
  StateId v = *smdp.fixed_start();
  auto eval = reward.make_evaluator();
  traj.initial_value = eval->add({0, v});
  for (int h = 0; h < smdp.horizon(); ++h) {
    ActionId best_a = 0;
    double best_gain = -std::numeric_limits<double>::infinity();
    for (ActionId a = 0; a < smdp.num_actions(); ++a) {
      const StateId next = smdp.successors(h, v, a).front().next;
      const double g = eval->gain({h + 1, next});
      if (g > best_gain) {
        best_gain = g;
        best_a = a;
      }
    }
    const StateId next = smdp.successors(h, v, best_a).front().next;
    traj.steps.push_back({h, v, best_a});
    traj.marginal_gains.push_back(eval->add({h + 1, next}));
    v = next;
  }
  traj.final_state = v;
  return traj;
}

nlohmann::json Verdict::to_json() const {
  nlohmann::json j{{"check", check}, {"pass", pass}, {"max_violation", max_violation}};
  if (witness) j["witness"] = *witness;
  if (!details.empty()) j["details"] = details;
  return j;
}

namespace {

std::vector<StateId> random_subset(const std::vector<StateId>& from, double keep, RandomStream& rng) {
  std::vector<StateId> out;
  for (StateId v : from)
    if (rng.uniform() < keep) out.push_back(v);
  return out;
}

std::vector<StateId> with(std::vector<StateId> set, StateId v) {
  set.insert(std::upper_bound(set.begin(), set.end(), v), v);
  return set;
}

}  // namespace

Verdict check_submodular(const RewardFunction& reward, int ground_size, std::size_t samples, double tol,
                         std::uint64_t seed) {
  Verdict verdict;
  verdict.check = "submodularity";
  if (ground_size < 1) return verdict;
  RandomStream rng(seed);
  double worst = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    const auto v = static_cast<StateId>(rng.below(static_cast<std::uint64_t>(ground_size)));
    std::vector<StateId> rest;
    for (StateId u = 0; u < ground_size; ++u)
      if (u != v) rest.push_back(u);
    const auto b = random_subset(rest, rng.uniform(), rng);
    const auto a = random_subset(b, rng.uniform(), rng);
    const double gain_a = value_of(reward, with(a, v)) - value_of(reward, a);
    const double gain_b = value_of(reward, with(b, v)) - value_of(reward, b);
    const double margin = gain_a - gain_b;
    if (-margin > worst) {
      worst = -margin;
      verdict.witness = nlohmann::json{{"A", a}, {"B", b}, {"v", v}, {"gain_A", gain_a}, {"gain_B", gain_b}};
    }
  }
  verdict.max_violation = worst;
  verdict.pass = worst <= tol;
  if (verdict.pass) verdict.witness.reset();
  verdict.details = {{"samples", samples}, {"tolerance", tol}};
  return verdict;
}

Verdict check_monotone(const RewardFunction& reward, int ground_size, std::size_t samples, double tol,
                       std::uint64_t seed) {
  Verdict verdict;
  verdict.check = "monotonicity";
  if (ground_size < 1) return verdict;
  RandomStream rng(seed);
  double worst = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    const auto v = static_cast<StateId>(rng.below(static_cast<std::uint64_t>(ground_size)));
    std::vector<StateId> rest;
    for (StateId u = 0; u < ground_size; ++u)
      if (u != v) rest.push_back(u);
    const auto a = random_subset(rest, rng.uniform(), rng);
    const double gain = value_of(reward, with(a, v)) - value_of(reward, a);
    if (-gain > worst) {
      worst = -gain;
      verdict.witness = nlohmann::json{{"A", a}, {"v", v}, {"gain", gain}};
    }
  }
  verdict.max_violation = worst;
  verdict.pass = worst <= tol;
  if (verdict.pass) verdict.witness.reset();
  verdict.details = {{"samples", samples}, {"tolerance", tol}};
  return verdict;
}

LoopReparamPolicy::LoopReparamPolicy(int num_states, int horizon, std::vector<double> x)
    : num_states_(num_states), horizon_(horizon), x_(std::move(x)) {
  if (x_.size() != static_cast<std::size_t>(num_states) * static_cast<std::size_t>(horizon))
    throw ConfigError("reparameterized policy needs |V| * H coordinates");
}

void LoopReparamPolicy::action_probabilities(const HistoryView& history, std::span<double> out) const {
  const auto h = static_cast<std::size_t>(std::min(history.time(), horizon_ - 1));
  const auto v = static_cast<std::size_t>(history.current());
  const auto n = static_cast<std::size_t>(num_states_);
  double rest = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    if (a == v) continue;
    out[a] = x_[h * n + a];
    rest += out[a];
  }
  out[v] = 1.0 - rest;
}

bool LoopReparamPolicy::feasible(double margin) const {
  const auto n = static_cast<std::size_t>(num_states_);
  for (double x : x_)
    if (!(x >= margin)) return false;
  for (std::size_t h = 0; h < static_cast<std::size_t>(horizon_); ++h) {
    double total = 0.0;
    for (std::size_t a = 0; a < n; ++a) total += x_[h * n + a];
    for (std::size_t v = 0; v < n; ++v)
      if (1.0 - (total - x_[h * n + v]) < margin) return false;
  }
  return true;
}

std::vector<double> random_interior_point(int num_states, int horizon, RandomStream& rng) {
  if (num_states < 2 || num_states > 40) throw ConfigError("interior points need 2 <= |V| <= 40");
  const auto n = static_cast<std::size_t>(num_states);
  std::vector<double> x(n * static_cast<std::size_t>(horizon));
  const double spread = 0.96 - 0.02 * static_cast<double>(n);
  for (std::size_t h = 0; h < static_cast<std::size_t>(horizon); ++h) {
    std::vector<double> w(n);
    double total = 0.0;
    for (double& v : w) total += (v = rng.uniform() + 1e-12);
    const double scale = rng.uniform();
    for (std::size_t a = 0; a < n; ++a) x[h * n + a] = 0.02 + spread * scale * w[a] / total;
  }
  return x;
}

Verdict dr_check(const Smdp& bandit, const RewardFunction& reward, std::span<const double> point, double fd_step,
                 double tol) {
  const int n = bandit.num_states();
  const int horizon = bandit.horizon();
  if (bandit.num_actions() != n) throw ConfigError("DR check expects an epsilon-bandit (|A| = |V|)");
  std::vector<double> x(point.begin(), point.end());
  if (!LoopReparamPolicy(n, horizon, x).feasible(0.0))
    throw ContractError("policy point violates the relaxed simplex");
  if (!LoopReparamPolicy(n, horizon, x).feasible(2.0 * fd_step))
    throw ContractError("policy point lies within two finite-difference steps of the boundary");

  auto J = [&](const std::vector<double>& p) {
    return exact_J(bandit, reward, LoopReparamPolicy(n, horizon, p), Execution::serial).value;
  };
  const std::size_t d = x.size();
  const double f0 = J(x);
  std::vector<double> plus(d), minus(d);
  for (std::size_t i = 0; i < d; ++i) {
    auto y = x;
    y[i] += fd_step;
    plus[i] = J(y);
    y[i] = x[i] - fd_step;
    minus[i] = J(y);
  }

  Verdict verdict;
  verdict.check = "dr_submodularity";
  double min_first = std::numeric_limits<double>::infinity();
  double max_second = -std::numeric_limits<double>::infinity();
  std::size_t first_at = 0, second_i = 0, second_j = 0;
  for (std::size_t i = 0; i < d; ++i) {
    const double g = (plus[i] - minus[i]) / (2.0 * fd_step);
    if (g < min_first) {
      min_first = g;
      first_at = i;
    }
  }
  const double h2 = fd_step * fd_step;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      double s = 0.0;
      if (i == j) {
        s = (plus[i] - 2.0 * f0 + minus[i]) / h2;
      } else {
        auto y = x;
        y[i] += fd_step;
        y[j] += fd_step;
        const double pp = J(y);
        y[j] = x[j] - fd_step;
        const double pm = J(y);
        y[i] = x[i] - fd_step;
        const double mm = J(y);
        y[j] = x[j] + fd_step;
        const double mp = J(y);
        s = (pp - pm - mp + mm) / (4.0 * h2);
      }
      if (s > max_second) {
        max_second = s;
        second_i = i;
        second_j = j;
      }
    }

  const bool monotone = min_first >= -tol;
  const bool dr = max_second <= tol;
  verdict.pass = monotone && dr;
  verdict.max_violation = std::max({0.0, -min_first, max_second});
  verdict.details = {{"J", f0},
                     {"min_first_partial", min_first},
                     {"max_second_partial", max_second},
                     {"monotone", monotone},
                     {"dr_submodular", dr},
                     {"fd_step", fd_step},
                     {"tolerance", tol}};
  if (!verdict.pass)
    verdict.witness = nlohmann::json{{"point", x},
                                     {"first_partial_coordinate", first_at},
                                     {"second_partial_coordinates", {second_i, second_j}}};
  return verdict;
}

double curvature(const RewardFunction& reward, int ground_size) {
  std::vector<StateId> all(static_cast<std::size_t>(ground_size));
  for (int v = 0; v < ground_size; ++v) all[static_cast<std::size_t>(v)] = v;
  const double total = value_of(reward, all);
  double min_ratio = std::numeric_limits<double>::infinity();
  for (StateId s = 0; s < ground_size; ++s) {
    const double single = value_of(reward, {s});
    if (!(single > 0.0)) continue;
    std::vector<StateId> rest;
    for (StateId u = 0; u < ground_size; ++u)
      if (u != s) rest.push_back(u);
    min_ratio = std::min(min_ratio, (total - value_of(reward, rest)) / single);
  }
  if (!std::isfinite(min_ratio)) throw InputError("curvature is undefined: every singleton value is zero");
  return std::clamp(1.0 - min_ratio, 0.0, 1.0);
}

TablePolicy::TablePolicy(int num_states, int num_actions, std::vector<ActionId> table)
    : num_states_(num_states), num_actions_(num_actions), table_(std::move(table)) {
  for (ActionId a : table_)
    if (a < 0 || a >= num_actions) throw ConfigError("table action out of range");
}

void TablePolicy::action_probabilities(const HistoryView& history, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  const auto i = static_cast<std::size_t>(history.time()) * static_cast<std::size_t>(num_states_) +
                 static_cast<std::size_t>(history.current());
  out[static_cast<std::size_t>(table_.at(i))] = 1.0;
}

Verdict markovian_optimality_check(const Smdp& smdp, const RewardFunction& reward, std::size_t samples,
                                   std::uint64_t seed, double tol) {
  const int nv = smdp.num_states();
  const int na = smdp.num_actions();
  const int horizon = smdp.horizon();
  const auto cells = static_cast<std::size_t>(nv) * static_cast<std::size_t>(horizon);
  const std::uint64_t tables = saturating_pow(static_cast<std::uint64_t>(na), static_cast<int>(cells));
  if (tables > kEnumerationLimit) throw SizeRefusal("deterministic Markovian policy enumeration", tables, kEnumerationLimit);

  auto decode = [&](std::uint64_t index) {
    std::vector<ActionId> t(cells);
    for (std::size_t c = 0; c < cells; ++c) {
      t[c] = static_cast<ActionId>(index % static_cast<std::uint64_t>(na));
      index /= static_cast<std::uint64_t>(na);
    }
    return t;
  };

  // Chunked search; each chunk keeps its first maximizer and chunks are
  // compared in index order, so the reported table is thread-independent.
  constexpr std::uint64_t kChunk = 256;
  const std::size_t chunks = static_cast<std::size_t>((tables + kChunk - 1) / kChunk);
  std::vector<double> chunk_best(chunks, -std::numeric_limits<double>::infinity());
  std::vector<std::uint64_t> chunk_arg(chunks, 0);
  parallel_for(
      chunks,
      [&](std::size_t c) {
        const std::uint64_t end = std::min<std::uint64_t>(tables, (c + 1) * kChunk);
        for (std::uint64_t i = c * kChunk; i < end; ++i) {
          const double j = exact_J(smdp, reward, TablePolicy(nv, na, decode(i)), Execution::serial).value;
          if (j > chunk_best[c]) {
            chunk_best[c] = j;
            chunk_arg[c] = i;
          }
        }
      },
      Execution::parallel);
  double best = -std::numeric_limits<double>::infinity();
  std::uint64_t arg = 0;
  for (std::size_t c = 0; c < chunks; ++c)
    if (chunk_best[c] > best) {
      best = chunk_best[c];
      arg = chunk_arg[c];
    }

  RandomStream rng(seed);
  double best_stochastic = -std::numeric_limits<double>::infinity();
  double worst_gap = 0.0;
  TabularSoftmaxPolicy random_policy(nv, na, horizon);
  for (std::size_t k = 0; k < samples; ++k) {
    for (double& t : random_policy.params()) t = 6.0 * rng.uniform() - 3.0;
    const double j = exact_J(smdp, reward, random_policy).value;
    best_stochastic = std::max(best_stochastic, j);
    worst_gap = std::max(worst_gap, j - best);
  }

  Verdict verdict;
  verdict.check = "markovian_optimality";
  const double scale = std::max(1.0, std::abs(best));
  bool pass = worst_gap <= tol * scale;
  verdict.max_violation = worst_gap;
  verdict.details = {{"best_deterministic", best},
                     {"best_table", decode(arg)},
                     {"tables", tables},
                     {"best_sampled_stochastic", best_stochastic},
                     {"samples", samples}};
  if (smdp.is_deterministic() && smdp.fixed_start()) {
    const auto opt = brute_force_opt(smdp, reward);
    const double gap = std::abs(opt.value - best);
    verdict.details["opt"] = opt.value;
    verdict.details["opt_gap"] = gap;
    verdict.max_violation = std::max(verdict.max_violation, gap);
    if (gap > tol * scale) pass = false;
  }
  verdict.pass = pass;
  return verdict;
}

}  // namespace subrl
