#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "subrl/random.hpp"
#include "subrl/rewards.hpp"
#include "subrl/smdp.hpp"

namespace subrl::testing {

/// Random stochastic SMDP with a dense, non-stationary transition tensor.
inline Smdp random_smdp(int nv, int na, int horizon, RandomStream& rng, bool deterministic = false,
                        bool fixed_start = false) {
  std::vector<double> init(static_cast<std::size_t>(nv), 0.0);
  if (fixed_start) {
    init[rng.below(static_cast<std::uint64_t>(nv))] = 1.0;
  } else {
    double z = 0.0;
    for (double& p : init) z += (p = 0.1 + rng.uniform());
    for (double& p : init) p /= z;
  }
  std::vector<TransitionTable> tables;
  std::vector<int> step;
  for (int h = 0; h < horizon; ++h) {
    TransitionTable t(nv, na);
    for (StateId v = 0; v < nv; ++v)
      for (ActionId a = 0; a < na; ++a) {
        if (deterministic) {
          t.add(v, a, static_cast<StateId>(rng.below(static_cast<std::uint64_t>(nv))), 1.0);
          continue;
        }
        std::vector<double> row(static_cast<std::size_t>(nv));
        double z = 0.0;
        for (double& p : row) z += (p = rng.uniform() + 0.05);
        std::vector<Successor> succ;
        for (StateId w = 0; w < nv; ++w) succ.push_back({w, row[static_cast<std::size_t>(w)] / z});
        // Renormalize so the row sums to one within rounding.
        double s = 0.0;
        for (std::size_t i = 0; i + 1 < succ.size(); ++i) s += succ[i].prob;
        succ.back().prob = 1.0 - s;
        t.set_row(v, a, succ);
      }
    tables.push_back(std::move(t));
    step.push_back(h);
  }
  return Smdp(nv, na, horizon, std::move(init), std::move(tables), std::move(step));
}

/// Random weighted coverage over `cells` cells with random footprints.
inline std::shared_ptr<WeightedCoverage> random_coverage(int nv, int cells, RandomStream& rng) {
  std::vector<double> w(static_cast<std::size_t>(cells));
  for (double& x : w) x = rng.uniform();
  std::vector<std::vector<int>> fp(static_cast<std::size_t>(nv));
  for (auto& f : fp) {
    for (int c = 0; c < cells; ++c)
      if (rng.uniform() < 0.4) f.push_back(c);
    if (f.empty()) f.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(cells))));
  }
  return std::make_shared<WeightedCoverage>(std::move(w), std::move(fp));
}

}  // namespace subrl::testing

#include <functional>

#include "subrl/policy.hpp"
#include "subrl/trajectory.hpp"

namespace subrl::testing {

/// Full enumeration over (s_0, a_0, s_1, ..., s_H), independent of the
/// oracle module: probabilities are products of dense table lookups and
/// marginal gains come from from-scratch evaluations.
inline void enumerate_all(const Smdp& m, const RewardFunction& f, const StochasticPolicy& pi,
                          const std::function<void(const Trajectory&, double)>& visit) {
  const int H = m.horizon();
  std::vector<StateId> states;
  std::vector<ActionId> actions;
  std::function<void(double)> rec = [&](double prob) {
    const int h = static_cast<int>(states.size()) - 1;
    if (h == H) {
      Trajectory t;
      std::vector<TimedState> pairs{{0, states[0]}};
      t.initial_value = f.evaluate(VisitedSet::from_pairs(pairs));
      double prev = t.initial_value;
      for (int j = 0; j < H; ++j) {
        t.steps.push_back({j, states[static_cast<std::size_t>(j)], actions[static_cast<std::size_t>(j)]});
        pairs.push_back({j + 1, states[static_cast<std::size_t>(j + 1)]});
        const double now = f.evaluate(VisitedSet::from_pairs(pairs));
        t.marginal_gains.push_back(now - prev);
        prev = now;
      }
      t.final_state = states.back();
      visit(t, prob);
      return;
    }
    std::vector<double> p(static_cast<std::size_t>(m.num_actions()));
    pi.action_probabilities(HistoryView{states, H}, p);
    for (ActionId a = 0; a < m.num_actions(); ++a)
      for (StateId w = 0; w < m.num_states(); ++w) {
        const double q = p[static_cast<std::size_t>(a)] * m.probability(h, states.back(), a, w);
        if (q == 0.0) continue;
        states.push_back(w);
        actions.push_back(a);
        rec(prob * q);
        states.pop_back();
        actions.pop_back();
      }
  };
  for (StateId s = 0; s < m.num_states(); ++s) {
    const double p0 = m.initial_distribution()[static_cast<std::size_t>(s)];
    if (p0 == 0.0) continue;
    states = {s};
    rec(p0);
  }
}

inline double enumerated_J(const Smdp& m, const RewardFunction& f, const StochasticPolicy& pi) {
  double j = 0.0;
  enumerate_all(m, f, pi, [&](const Trajectory& t, double p) { j += p * f.evaluate(VisitedSet::from_trajectory(t)); });
  return j;
}

/// Central differences of the enumerated J in theta.
inline std::vector<double> fd_J(const Smdp& m, const RewardFunction& f, Policy& pi, double step = 1e-5) {
  auto theta = pi.params();
  std::vector<double> g(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double keep = theta[i];
    theta[i] = keep + step;
    const double up = enumerated_J(m, f, pi);
    theta[i] = keep - step;
    const double down = enumerated_J(m, f, pi);
    theta[i] = keep;
    g[i] = (up - down) / (2 * step);
  }
  return g;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace subrl::testing
