#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "subrl/envs.hpp"
#include "subrl/errors.hpp"
#include "subrl/oracle.hpp"
#include "subrl/rollout.hpp"

using namespace subrl;
using subrl::testing::max_abs_diff;

namespace {

std::shared_ptr<WeightedCoverage> unit_coverage(int w, int h, int radius) {
  return WeightedCoverage::on_grid(w, h, std::vector<double>(static_cast<std::size_t>(w * h), 1.0), radius);
}

/// min over every context S not containing s of F(s | S) / F({s}), by exhaustion.
double exhaustive_curvature(const RewardFunction& f, int n) {
  double worst = 1.0;
  for (StateId s = 0; s < n; ++s) {
    const double single = f.evaluate(VisitedSet::from_states({s}));
    if (single <= 0) continue;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      if (mask >> s & 1) continue;
      std::vector<StateId> ctx;
      for (StateId v = 0; v < n; ++v)
        if (mask >> v & 1) ctx.push_back(v);
      auto with = ctx;
      with.push_back(s);
      const double gain = f.evaluate(VisitedSet::from_states(with)) - f.evaluate(VisitedSet::from_states(ctx));
      worst = std::min(worst, gain / single);
    }
  }
  return 1.0 - worst;
}

}  // namespace

TEST_CASE("exact J: deterministic policy on deterministic dynamics") {
  const GridSpec spec{3, 3, 3, 0.0, std::make_pair(0, 0)};
  const Smdp m = build_grid(spec);
  const auto f = unit_coverage(3, 3, 0);
  // right, up, right from (0, 0) visits 4 distinct cells.
  std::vector<ActionId> table(static_cast<std::size_t>(3 * 9), kStay);
  table[0 * 9 + static_cast<std::size_t>(spec.cell(0, 0))] = kRight;
  table[1 * 9 + static_cast<std::size_t>(spec.cell(1, 0))] = kUp;
  table[2 * 9 + static_cast<std::size_t>(spec.cell(1, 1))] = kRight;
  const auto r = exact_J(m, *f, TablePolicy(9, 5, table));
  CHECK(r.value == 4.0);
  CHECK(r.count == 1);
}

TEST_CASE("exact J: two-state hand enumeration") {
  TransitionTable t(2, 1);
  t.add(0, 0, 0, 0.3);
  t.add(0, 0, 1, 0.7);
  t.add(1, 0, 1, 1.0);
  const Smdp m = Smdp::stationary(1, {1.0, 0.0}, std::move(t));
  const WeightedCoverage f({2.0, 5.0}, {{0}, {1}});
  // tau_1 = (0, 0): F = 2; tau_2 = (0, 1): F = 7.
  const TabularSoftmaxPolicy pi(2, 1, 1);
  CHECK(exact_J(m, f, pi).value == doctest::Approx(0.3 * 2.0 + 0.7 * 7.0).epsilon(1e-15));
}

TEST_CASE("exact J agrees with a Monte-Carlo mean within 3 sigma") {
  RandomStream rng(5);
  const Smdp m = testing::random_smdp(4, 2, 3, rng);
  const auto f = testing::random_coverage(4, 6, rng);
  TabularSoftmaxPolicy pi(4, 2, 3);
  for (double& t : pi.params()) t = 2 * rng.uniform() - 1;
  const double exact = exact_J(m, *f, pi).value;
  CHECK(exact == doctest::Approx(testing::enumerated_J(m, *f, pi)).epsilon(1e-13));
  const auto batch = rollout_batch(m, *f, pi, 100000, 9, 0);
  double s = 0, sq = 0;
  for (const auto& t : batch) {
    const double v = trajectory_value(*f, t);
    s += v;
    sq += v * v;
  }
  const double n = static_cast<double>(batch.size()), mean = s / n;
  const double se = std::sqrt((sq / n - mean * mean) / n);
  CHECK(std::abs(mean - exact) <= 3 * se);
}

TEST_CASE("enumeration count is |A|^H times the start support for deterministic dynamics") {
  RandomStream rng(2);
  const Smdp m = testing::random_smdp(3, 2, 4, rng, true, false);
  const auto f = testing::random_coverage(3, 4, rng);
  const TabularSoftmaxPolicy pi(3, 2, 4);
  std::uint64_t support = 0;
  for (double p : m.initial_distribution()) support += p > 0;
  CHECK(exact_J(m, *f, pi).count == support * 16);
}

TEST_CASE("exact gradient matches finite differences on 50 random instances") {
  RandomStream rng(17);
  double worst = 0.0, worst_est = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    const int nv = 2 + inst % 3, na = 2 + inst % 2, H = 1 + inst % 3;
    const Smdp m = testing::random_smdp(nv, na, H, rng, inst % 4 == 0);
    const auto f = testing::random_coverage(nv, 5, rng);
    std::unique_ptr<Policy> pi;
    if (inst % 2 == 0) {
      pi = std::make_unique<TabularSoftmaxPolicy>(nv, na, H);
      for (double& t : pi->params()) t = 2 * rng.uniform() - 1;
    } else {
      auto mlp = std::make_unique<MlpPolicy>(ObservationSpec{ObservationKind::history_window, nv, H, 2}, 4, 3, na);
      // Dense random weights and biases keep ReLU pre-activations off the kink
      // at exactly zero, where central differences see the mean of both slopes.
      for (double& t : mlp->params()) t = 2 * rng.uniform() - 1;
      pi = std::move(mlp);
    }
    const auto g = exact_grad(m, *f, *pi);
    worst = std::max(worst, max_abs_diff(g, fd_exact_grad(m, *f, *pi)));
    worst = std::max(worst, max_abs_diff(g, testing::fd_J(m, *f, *pi)));
    worst_est = std::max(worst_est, max_abs_diff(g, expected_estimator(m, *f, *pi, ZeroBaseline{})));
  }
  CHECK(worst <= 1e-6);
  CHECK(worst_est <= 1e-9);
}

TEST_CASE("exact gradient respects symmetry") {
  // Uniform start, state-independent dynamics and F = number of distinct states.
  const Smdp m = build_epsilon_bandit({3, {0.2}, 2, {1.0 / 3, 1.0 / 3, 1.0 / 3}});
  const WeightedCoverage f({1.0, 1.0, 1.0}, {{0}, {1}, {2}});
  const TabularSoftmaxPolicy pi(3, 3, 2);
  const auto g = exact_grad(m, f, pi);
  for (int h = 0; h < 2; ++h) {
    const double loop = g[pi.offset(h, 0) + 0], away = g[pi.offset(h, 0) + 1];
    for (StateId v = 0; v < 3; ++v)
      for (ActionId a = 0; a < 3; ++a)
        CHECK(g[pi.offset(h, v) + static_cast<std::size_t>(a)] == doctest::Approx(a == v ? loop : away).epsilon(1e-12));
  }
  CHECK(g[pi.offset(1, 0)] < 0.0);  // staying put is worse than moving on
}

TEST_CASE("exact computations refuse oversized instances") {
  const Smdp big = build_grid({10, 10, 12, 0.1, std::nullopt});
  const auto f = unit_coverage(10, 10, 0);
  const TabularSoftmaxPolicy pi(100, 5, 12);
  CHECK_THROWS_AS(exact_J(big, *f, pi), SizeRefusal);
  const Smdp long_walk = build_grid({3, 3, 11, 0.0, std::make_pair(0, 0)});
  CHECK_THROWS_AS(brute_force_opt(long_walk, *unit_coverage(3, 3, 0)), SizeRefusal);
  CHECK_THROWS_AS(markovian_optimality_check(build_grid({3, 3, 3, 0.0, std::make_pair(0, 0)}), *unit_coverage(3, 3, 0)),
                  SizeRefusal);
}

TEST_CASE("brute force optimum") {
  const Smdp m = build_grid({3, 3, 4, 0.0, std::make_pair(0, 0)});
  const auto opt = brute_force_opt(m, *unit_coverage(3, 3, 0));
  CHECK(opt.value == 5.0);
  CHECK(opt.count == 625);
  CHECK(opt.actions.size() == 4);
  CHECK(opt.states.size() == 5);

  const Smdp one = build_grid({3, 3, 1, 0.0, std::make_pair(1, 1)});
  const ModularReward w({0, 0, 0, 0, 1, 3, 0, 2, 0});
  const auto r1 = brute_force_opt(one, w);
  CHECK(r1.value == 4.0);  // start (1 at centre) plus the best neighbour (3 on the right)
  CHECK(r1.actions == std::vector<ActionId>{kRight});

  const Smdp five = build_grid({4, 4, 5, 0.0, std::make_pair(0, 0)});
  CHECK(brute_force_opt(five, ModularReward(std::vector<double>(16, 1.0))).value == 6.0);

  const Smdp noisy = build_grid({3, 3, 2, 0.1, std::make_pair(0, 0)});
  CHECK_THROWS_AS(brute_force_opt(noisy, *unit_coverage(3, 3, 0)), ContractError);
}

TEST_CASE("greedy walk") {
  // Modular reward on (time, state) pairs: greedy takes the best reachable
  // value each step, and staying on a good cell pays again.
  const Smdp line = build_grid({5, 1, 2, 0.0, std::make_pair(2, 0)});
  const auto g = greedy_walk(line, ModularReward({4, 1, 0, 2, 0}));
  CHECK(g.states() == std::vector<StateId>{2, 3, 3});
  CHECK(g.marginal_gains == std::vector<double>{2, 2});

  // One nearby cell of weight 1 to the left, a cell of weight 10 five steps right.
  std::vector<double> rho(9, 0.0);
  rho[2] = 1.0;
  rho[8] = 10.0;
  const Smdp trap = build_grid({9, 1, 5, 0.0, std::make_pair(3, 0)});
  const auto f = WeightedCoverage::on_grid(9, 1, rho, 0);
  const double greedy_value = trajectory_value(*f, greedy_walk(trap, *f));
  const double opt = brute_force_opt(trap, *f).value;
  CHECK(opt == 10.0);
  CHECK(greedy_value / opt < 1.0);

  // Dead-end corridor: once everything is covered every action gains 0 and
  // the lowest action id (right, which stays at the wall) is taken.
  const Smdp corridor = build_grid({3, 1, 4, 0.0, std::make_pair(0, 0)});
  const auto t = greedy_walk(corridor, *unit_coverage(3, 1, 0));
  CHECK(t.marginal_gains == std::vector<double>{1, 1, 0, 0});
  for (const auto& step : t.steps) CHECK(step.action == kRight);
  CHECK(t.states() == std::vector<StateId>{0, 1, 2, 2, 2});
}

TEST_CASE("submodularity and monotonicity checks") {
  RandomStream rng(3);
  const ModularReward mod({1, 2, 3, 0.5, 7});
  CHECK(check_submodular(mod, 5, 2000, 1e-12).pass);
  CHECK(check_monotone(mod, 5, 2000, 1e-12).pass);
  const auto cov = testing::random_coverage(8, 12, rng);
  CHECK(check_submodular(*cov, 8, 10000, 1e-8).pass);
  CHECK(check_monotone(*cov, 8, 10000, 1e-8).pass);

  const SetFunctionReward square(6, [](std::span<const StateId> s) {
    return static_cast<double>(s.size() * s.size());
  });
  const auto v = check_submodular(square, 6, 1000, 1e-8);
  CHECK_FALSE(v.pass);
  REQUIRE(v.witness.has_value());
  CHECK(v.max_violation > 0.0);
  const auto j = v.to_json();
  CHECK(j.at("check") == "submodularity");
  CHECK(j.at("pass") == false);
  CHECK(j.contains("witness"));

  const SetFunctionReward decreasing(4, [](std::span<const StateId> s) { return -static_cast<double>(s.size()); });
  CHECK_FALSE(check_monotone(decreasing, 4, 100, 1e-8).pass);
}

TEST_CASE("DR-submodularity check on epsilon bandits") {
  RandomStream rng(12);
  const auto f = testing::random_coverage(3, 5, rng);
  const std::vector<double> uniform(6, 1.0 / 3.0);
  for (double eps : {0.1, 0.0}) {
    const Smdp m = build_epsilon_bandit({3, {eps}, 2, {}});
    const auto v = dr_check(m, *f, uniform);
    CHECK(v.pass);
    CHECK(v.max_violation <= 1e-6);
  }
  const Smdp m = build_epsilon_bandit({3, {0.1}, 2, {}});
  // Modular on V: sum of r(v) over distinct visited states.
  CHECK(dr_check(m, WeightedCoverage({1, 2, 3}, {{0}, {1}, {2}}), uniform).pass);
  // Additive over (time, state) pairs is not a function of T(tau) and the
  // property fails: raising x[0][v] lowers P(s_1 = b), which raises dJ/dx[1][b].
  const auto timed = dr_check(m, ModularReward({1, 2, 3}), uniform);
  CHECK_FALSE(timed.pass);
  MESSAGE("time-augmented modular reward: max violation " << timed.max_violation);
  CHECK_THROWS_AS(dr_check(m, *f, std::vector<double>{0.6, 0.6, 0.1, 0.3, 0.3, 0.3}), ContractError);
  CHECK_THROWS_AS(dr_check(m, *f, std::vector<double>{-0.1, 0.3, 0.3, 0.3, 0.3, 0.3}), ContractError);

  // The reparameterized policy puts the residual on the self-loop.
  const LoopReparamPolicy pi(3, 2, {0.2, 0.3, 0.1, 0.3, 0.3, 0.3});
  std::vector<double> p(3);
  const std::vector<StateId> at1{1};
  pi.action_probabilities({at1, 2}, p);
  CHECK(p[0] == doctest::Approx(0.2));
  CHECK(p[1] == doctest::Approx(0.7));
  CHECK(p[2] == doctest::Approx(0.1));
}

TEST_CASE("curvature") {
  CHECK(std::abs(curvature(WeightedCoverage({1, 2, 0.5}, {{0}, {1}, {2}}), 3)) <= 1e-15);
  const SetFunctionReward flat(4, [](std::span<const StateId> s) { return s.empty() ? 0.0 : 1.0; });
  CHECK(curvature(flat, 4) == doctest::Approx(1.0));
  CHECK_THROWS_AS(curvature(ModularReward({0, 0}), 2), InputError);

  // Six overlapping patches on a ring of shared cells, each with one private cell.
  const std::vector<double> rho{1, 2, 3, 1, 1, 2, 0.5, 0.25, 1, 2, 0.1, 0.7};
  std::vector<std::vector<int>> patches;
  for (int i = 0; i < 6; ++i) patches.push_back({i, (i + 1) % 6, 6 + i});
  const WeightedCoverage cov(rho, patches);
  const double c = curvature(cov, 6);
  CHECK(c == doctest::Approx(exhaustive_curvature(cov, 6)).epsilon(1e-14));
  CHECK(c > 0.0);
  CHECK(c < 1.0);
  RandomStream rng(6);
  for (int i = 0; i < 10; ++i) {
    const auto r = testing::random_coverage(6, 8, rng);
    CHECK(curvature(*r, 6) == doctest::Approx(exhaustive_curvature(*r, 6)).epsilon(1e-12));
  }
}

TEST_CASE("deterministic Markovian policies are optimal") {
  RandomStream rng(21);
  const Smdp det = testing::random_smdp(2, 2, 2, rng, true, true);
  const auto f = testing::random_coverage(2, 3, rng);
  const auto v = markovian_optimality_check(det, *f);
  CHECK(v.pass);
  CHECK(v.details.contains("opt"));
  CHECK(v.details.at("opt_gap").get<double>() <= 1e-12);

  const Smdp sto = testing::random_smdp(2, 2, 2, rng);
  const auto s = markovian_optimality_check(sto, *f);
  CHECK(s.pass);
  CHECK(s.details.at("best_sampled_stochastic").get<double>() <= s.details.at("best_deterministic").get<double>() + 1e-12);

  const Smdp single = testing::random_smdp(3, 1, 2, rng);
  const auto one = markovian_optimality_check(single, *testing::random_coverage(3, 3, rng));
  CHECK(one.pass);
  CHECK(one.details.at("tables").get<std::uint64_t>() == 1);
  CHECK(one.details.at("best_sampled_stochastic").get<double>() ==
        doctest::Approx(one.details.at("best_deterministic").get<double>()).epsilon(1e-14));
}
