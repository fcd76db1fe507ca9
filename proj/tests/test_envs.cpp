#include <doctest.h>

#include <cmath>
#include <deque>
#include <map>

#include "helpers.hpp"
#include "subrl/envs.hpp"
#include "subrl/errors.hpp"

using namespace subrl;

namespace {

void check_rows_stochastic(const Smdp& m) {
  for (int h = 0; h < m.horizon(); ++h)
    for (StateId v = 0; v < m.num_states(); ++v)
      for (ActionId a = 0; a < m.num_actions(); ++a) {
        double s = 0.0;
        for (const auto& succ : m.successors(h, v, a)) {
          CHECK(succ.prob >= 0.0);
          s += succ.prob;
        }
        CHECK(std::abs(s - 1.0) <= 1e-12);
      }
}

/// Where a deterministic move from (x, y) lands on a width x height grid.
std::pair<int, int> move(int x, int y, int a, int w, int hgt) {
  static const int dx[] = {1, 0, -1, 0, 0}, dy[] = {0, 1, 0, -1, 0};
  const int nx = x + dx[a], ny = y + dy[a];
  if (nx < 0 || ny < 0 || nx >= w || ny >= hgt) return {x, y};
  return {nx, ny};
}

std::vector<int> bfs(const Smdp& m, StateId src) {
  std::vector<int> d(static_cast<std::size_t>(m.num_states()), -1);
  std::deque<StateId> q{src};
  d[static_cast<std::size_t>(src)] = 0;
  while (!q.empty()) {
    const StateId v = q.front();
    q.pop_front();
    for (ActionId a = 0; a < m.num_actions(); ++a)
      for (const auto& s : m.successors(0, v, a))
        if (d[static_cast<std::size_t>(s.next)] < 0) {
          d[static_cast<std::size_t>(s.next)] = d[static_cast<std::size_t>(v)] + 1;
          q.push_back(s.next);
        }
  }
  return d;
}

/// Held-Karp over the metric closure: shortest open walk from `start`
/// visiting all targets.
int held_karp(const Smdp& m, StateId start, const std::vector<StateId>& t) {
  const std::size_t n = t.size();
  std::vector<std::vector<int>> dist;
  for (StateId s : t) dist.push_back(bfs(m, s));
  const auto from_start = bfs(m, start);
  const int inf = 1 << 28;
  std::vector<int> dp((std::size_t{1} << n) * n, inf);
  for (std::size_t i = 0; i < n; ++i) dp[(std::size_t{1} << i) * n + i] = from_start[static_cast<std::size_t>(t[i])];
  for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask)
    for (std::size_t i = 0; i < n; ++i) {
      const int cur = dp[mask * n + i];
      if (cur >= inf || !(mask >> i & 1)) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (mask >> j & 1) continue;
        const std::size_t nm = mask | (std::size_t{1} << j);
        const int c = cur + dist[i][static_cast<std::size_t>(t[j])];
        if (c < dp[nm * n + j]) dp[nm * n + j] = c;
      }
    }
  int best = inf;
  for (std::size_t i = 0; i < n; ++i) best = std::min(best, dp[((std::size_t{1} << n) - 1) * n + i]);
  return best;
}

}  // namespace

TEST_CASE("30x30 grid shape") {
  const Smdp m = build_grid({30, 30, 40, 0.0, std::nullopt});
  CHECK(m.num_states() == 900);
  CHECK(m.num_actions() == 5);
  CHECK(m.horizon() == 40);
  for (double p : m.initial_distribution()) CHECK(p == doctest::Approx(1.0 / 900));
}

TEST_CASE("deterministic grid moves") {
  const GridSpec spec{3, 3, 2, 0.0, std::make_pair(0, 0)};
  const Smdp m = build_grid(spec);
  CHECK(m.probability(0, spec.cell(0, 0), kRight, spec.cell(1, 0)) == 1.0);
  CHECK(m.probability(0, spec.cell(0, 0), kUp, spec.cell(0, 1)) == 1.0);
  CHECK(m.probability(0, spec.cell(0, 0), kLeft, spec.cell(0, 0)) == 1.0);
  CHECK(m.probability(1, spec.cell(2, 2), kRight, spec.cell(2, 2)) == 1.0);
  CHECK(m.is_deterministic());
  CHECK(m.initial_distribution()[0] == 1.0);
  check_rows_stochastic(m);
}

TEST_CASE("slip rows mix the intended move with a uniform action") {
  const int w = 4, hgt = 3;
  const double p = 0.1;
  const Smdp m = build_grid({w, hgt, 2, p, std::nullopt});
  check_rows_stochastic(m);
  for (int x = 0; x < w; ++x)
    for (int y = 0; y < hgt; ++y)
      for (int a = 0; a < 5; ++a) {
        std::map<StateId, double> row;
        const auto [ix, iy] = move(x, y, a, w, hgt);
        row[iy * w + ix] += 1.0 - p;
        for (int b = 0; b < 5; ++b) {
          const auto [bx, by] = move(x, y, b, w, hgt);
          row[by * w + bx] += p / 5.0;
        }
        for (StateId v = 0; v < w * hgt; ++v) {
          const double want = row.count(v) ? row[v] : 0.0;
          CHECK(std::abs(m.probability(0, y * w + x, a, v) - want) <= 1e-15);
        }
      }
  // Interior cell, action right: 0.9 + 0.02 on the right cell, 0.02 on the other four.
  CHECK(m.probability(0, 1 * w + 1, kRight, 1 * w + 2) == doctest::Approx(0.92));
  CHECK(m.probability(0, 1 * w + 1, kRight, 1 * w + 1) == doctest::Approx(0.02));
  CHECK_THROWS_AS(build_grid({0, 3, 2, 0.0, std::nullopt}), ConfigError);
  CHECK_THROWS_AS(build_grid({3, 3, 2, 1.5, std::nullopt}), ConfigError);
}

TEST_CASE("two rooms: reachability matches the hand-drawn map") {
  // Rooms of 3x3 joined by a corridor of 3 along the middle row:
  //   ###...###      '#' free room cell, '.' wall, '-' corridor
  //   ###---###
  //   ###...###
  const char* map[] = {"###...###", "###---###", "###...###"};  // row y = 0 first
  const TwoRooms env = build_two_rooms(3, 3, 30);
  REQUIRE(env.width == 9);
  REQUIRE(env.height == 3);
  CHECK(env.start == 1 * 9 + 4);
  const auto d = bfs(env.smdp, env.start);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 9; ++x) {
      const bool open = map[y][x] != '.';
      CHECK(env.free[static_cast<std::size_t>(y * 9 + x)] == open);
      CHECK((d[static_cast<std::size_t>(y * 9 + x)] >= 0) == open);
    }
  CHECK(env.free_cells().size() == 21);
  check_rows_stochastic(env.smdp);
  // Moving from the corridor into a wall stays put.
  CHECK(env.smdp.probability(0, env.start, kUp, env.start) == 1.0);
  CHECK(env.smdp.probability(0, env.start, kDown, env.start) == 1.0);
  CHECK(env.smdp.probability(0, env.start, kRight, env.start + 1) == 1.0);
  CHECK_THROWS(build_two_rooms(0, 3, 10));
}

TEST_CASE("two rooms: covering walk equals the Held-Karp tour") {
  const TwoRooms env = build_two_rooms(3, 3, 30);
  std::vector<StateId> rooms;
  for (StateId v : env.free_cells())
    if (v % 9 < 3 || v % 9 >= 6) rooms.push_back(v);
  REQUIRE(rooms.size() == 18);
  const int oracle = held_karp(env.smdp, env.start, rooms);
  CHECK(shortest_covering_walk(env.smdp, env.start, rooms) == oracle);
  MESSAGE("covering both 3x3 rooms takes " << oracle << " steps");
  // Reaching the far corner (0, 0) from (4, 1) takes 4 + 1 steps.
  CHECK(shortest_covering_walk(env.smdp, env.start, {0}) == 5);
}

TEST_CASE("epsilon bandit rows") {
  const Smdp m = build_epsilon_bandit({3, {0.1}, 2, {}});
  check_rows_stochastic(m);
  for (StateId src = 0; src < 3; ++src) {
    CHECK(m.probability(0, src, 0, 0) == doctest::Approx(0.9));
    CHECK(m.probability(0, src, 0, 1) == doctest::Approx(0.05));
    CHECK(m.probability(0, src, 0, 2) == doctest::Approx(0.05));
    for (ActionId a = 0; a < 3; ++a)
      for (StateId w = 0; w < 3; ++w) CHECK(m.probability(1, src, a, w) == m.probability(1, 0, a, w));
  }
  const Smdp det = build_epsilon_bandit({4, {0.0}, 3, {}});
  CHECK(det.is_deterministic());
  CHECK(det.probability(2, 3, 1, 1) == 1.0);
  CHECK_THROWS_AS(build_epsilon_bandit({3, {0.7}, 2, {}}), ConfigError);  // above 2/3
  CHECK_THROWS_AS(build_epsilon_bandit({3, {-0.1}, 2, {}}), ConfigError);
  CHECK_THROWS_AS(build_epsilon_bandit({1, {0.0}, 2, {}}), ConfigError);
  CHECK_THROWS_AS(build_epsilon_bandit({3, {0.1, 0.2, 0.3}, 2, {}}), ConfigError);
  CHECK(EpsilonBanditSpec{3, {0.1}, 2, {}}.max_epsilon() == doctest::Approx(2.0 / 3.0));
  const Smdp varying = build_epsilon_bandit({2, {0.0, 0.5}, 2, {}});
  CHECK(varying.probability(0, 0, 1, 1) == 1.0);
  CHECK(varying.probability(1, 0, 1, 1) == 0.5);
}

TEST_CASE("epsilon bandit: successor law does not depend on the source state") {
  // A state-independent policy: action probabilities depend on h only.
  const double pol[2][3] = {{0.2, 0.5, 0.3}, {0.6, 0.1, 0.3}};
  const Smdp m = build_epsilon_bandit({3, {0.1, 0.25}, 2, {}});
  std::vector<std::map<std::pair<StateId, StateId>, double>> laws(3);
  for (StateId s0 = 0; s0 < 3; ++s0)
    for (ActionId a0 = 0; a0 < 3; ++a0)
      for (StateId s1 = 0; s1 < 3; ++s1)
        for (ActionId a1 = 0; a1 < 3; ++a1)
          for (StateId s2 = 0; s2 < 3; ++s2)
            laws[static_cast<std::size_t>(s0)][{s1, s2}] +=
                pol[0][a0] * m.probability(0, s0, a0, s1) * pol[1][a1] * m.probability(1, s1, a1, s2);
  for (const auto& [k, p] : laws[0]) {
    CHECK(std::abs(laws[1][k] - p) <= 1e-15);
    CHECK(std::abs(laws[2][k] - p) <= 1e-15);
  }
}

TEST_CASE("density fields") {
  const auto c = constant_density(4, 3, 1.0);
  for (double v : c.values) CHECK(v == 1.0);

  const auto mix = mixture_density(10, 8, {{2, 2, 1.0, 1.0}, {7, 5, 1.0, 1.0}});
  CHECK(mix.argmax() == 2 * 10 + 2);
  const double at_second = mix.at(7, 5);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 10; ++x)
      if (std::abs(x - 7) + std::abs(y - 5) <= 2 && !(x == 7 && y == 5)) CHECK(mix.at(x, y) < at_second);
  CHECK(mix.at(2, 2) == doctest::Approx(1.0 + std::exp(-(25.0 + 9.0) / 2.0)).epsilon(1e-14));

  const auto g1 = gp_sample_density(6, 5, 1.5, 1.0, 11);
  const auto g2 = gp_sample_density(6, 5, 1.5, 1.0, 11);
  const auto g3 = gp_sample_density(6, 5, 1.5, 1.0, 12);
  CHECK(g1.values == g2.values);
  CHECK(g1.values != g3.values);
  CHECK(*std::min_element(g1.values.begin(), g1.values.end()) == 0.0);
  for (double v : g1.values) CHECK(std::isfinite(v));

  CHECK(random_bumps(10, 10, 3, 1.0, 5).size() == 3);
  const auto b1 = random_bumps(10, 10, 3, 1.0, 5), b2 = random_bumps(10, 10, 3, 1.0, 5);
  CHECK(b1[2].x == b2[2].x);
}

TEST_CASE("density CSV parsing") {
  const auto d = parse_density_csv("1,2,3\n4,5,6\n", 3, 2);
  CHECK(d.at(2, 1) == 6.0);
  CHECK(d.at(0, 0) == 1.0);
  CHECK_THROWS_AS(parse_density_csv("1,2\n3,4\n", 3, 2), InputError);
  CHECK_THROWS_AS(parse_density_csv("1,2,3\n", 3, 2), InputError);
  CHECK_THROWS_AS(parse_density_csv("1,x,3\n4,5,6\n", 3, 2), InputError);
  CHECK_THROWS_AS(parse_density_csv("1,-2,3\n4,5,6\n", 3, 2), InputError);
  CHECK_THROWS_AS(parse_density_csv("1,nan,3\n4,5,6\n", 3, 2), InputError);
  CHECK_THROWS_AS(density_from_csv("/nonexistent/rho.csv", 3, 2), InputError);
}

TEST_CASE("item groups are disjoint, seeded and avoid excluded cells") {
  const auto g = place_item_groups(64, {5, 7}, 3, {0, 1, 2});
  REQUIRE(g.size() == 2);
  CHECK(g[0].size() == 5);
  CHECK(g[1].size() == 7);
  std::vector<StateId> all = g[0];
  all.insert(all.end(), g[1].begin(), g[1].end());
  std::sort(all.begin(), all.end());
  CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
  for (StateId v : all) CHECK(v > 2);
  CHECK(place_item_groups(64, {5, 7}, 3, {0, 1, 2}) == g);
  CHECK_THROWS(place_item_groups(4, {3, 3}, 1));
}
