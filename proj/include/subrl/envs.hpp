#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "subrl/smdp.hpp"
#include "subrl/types.hpp"

namespace subrl {

/// Grid actions, in action-id order. "up" increases y.
enum GridAction : ActionId { kRight = 0, kUp = 1, kLeft = 2, kDown = 3, kStay = 4 };
inline constexpr int kGridActions = 5;

struct GridSpec {
  int width = 0;
  int height = 0;
  int horizon = 0;
  /// Probability that the intended action is replaced by one drawn uniformly
  /// from all five actions (the intended one included).
  double slip = 0.0;
  /// Fixed start cell (x, y); uniform over all cells when empty.
  std::optional<std::pair<int, int>> start;

  int num_states() const { return width * height; }
  StateId cell(int x, int y) const { return y * width + x; }
};

/// Stationary grid world; moves off the grid leave the agent in place.
Smdp build_grid(const GridSpec& spec);

/// Two square rooms joined by a one-cell-wide corridor along the middle row.
/// Wall cells are kept as unreachable states that only self-loop.
struct TwoRooms {
  Smdp smdp;
  int width = 0;
  int height = 0;
  std::vector<bool> free;
  StateId start = 0;

  std::vector<StateId> free_cells() const;
};

TwoRooms build_two_rooms(int corridor_length, int room_size, int horizon);

/// Fewest steps of a deterministic SMDP walk from `start` that visits every
/// target. Breadth-first search over (position, visited targets); at most 24
/// targets.
int shortest_covering_walk(const Smdp& smdp, StateId start, const std::vector<StateId>& targets);

struct EpsilonBanditSpec {
  int num_states = 2;
  /// One value per step; a single value is broadcast over the horizon.
  std::vector<double> epsilon;
  int horizon = 1;
  /// Initial distribution; point mass on state 0 when empty.
  std::vector<double> initial;

  /// Largest admissible epsilon, (|V| - 1) / |V|.
  double max_epsilon() const;
};

/// |V| states and |V| actions; a_j lands on v_j with probability 1 - eps_h
/// and on each other state with probability eps_h / (|V| - 1), whatever the
/// source state.
Smdp build_epsilon_bandit(const EpsilonBanditSpec& spec);

struct GaussianBump {
  double x = 0.0;
  double y = 0.0;
  double sigma = 1.0;
  double weight = 1.0;
};

/// Nonnegative field rho over grid cells, stored row-major (v = y*width + x).
struct DensityField {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  double at(int x, int y) const { return values[static_cast<std::size_t>(y * width + x)]; }
  StateId argmax() const;
};

DensityField constant_density(int width, int height, double value);
/// Reads `height` lines of `width` comma-separated nonnegative numbers.
DensityField density_from_csv(const std::string& path, int width, int height);
DensityField parse_density_csv(const std::string& text, int width, int height);
/// rho(x, y) = sum_k w_k exp(-|(x, y) - mu_k|^2 / (2 sigma_k^2)).
DensityField mixture_density(int width, int height, const std::vector<GaussianBump>& bumps);
/// `count` bumps with means uniform over the grid, drawn from `seed`.
std::vector<GaussianBump> random_bumps(int width, int height, int count, double sigma, std::uint64_t seed);
/// One draw f ~ GP(0, k) on the cell centres, shifted so its minimum is 0.
DensityField gp_sample_density(int width, int height, double lengthscale, double signal_variance,
                               std::uint64_t seed);

/// `sizes.size()` disjoint groups sampled uniformly without replacement from
/// [0, num_states) minus `excluded`.
std::vector<std::vector<StateId>> place_item_groups(int num_states, const std::vector<int>& sizes,
                                                    std::uint64_t seed, const std::vector<StateId>& excluded = {});

}  // namespace subrl
