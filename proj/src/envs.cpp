#include "subrl/envs.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "subrl/errors.hpp"
#include "subrl/gp.hpp"
#include "subrl/random.hpp"

namespace subrl {

namespace {

constexpr int kDx[kGridActions] = {1, 0, -1, 0, 0};
constexpr int kDy[kGridActions] = {0, 1, 0, -1, 0};

std::vector<double> start_distribution(int num_states, std::optional<StateId> start) {
  if (start) {
    std::vector<double> d(static_cast<std::size_t>(num_states), 0.0);
    d[static_cast<std::size_t>(*start)] = 1.0;
    return d;
  }
  return std::vector<double>(static_cast<std::size_t>(num_states), 1.0 / num_states);
}

// Deterministic successor of (x, y) under `a` on a grid with blocked cells.
StateId move(int width, int height, const std::vector<bool>* free, int x, int y, int a) {
  const int nx = x + kDx[a];
  const int ny = y + kDy[a];
  const StateId here = y * width + x;
  if (nx < 0 || ny < 0 || nx >= width || ny >= height) return here;
  const StateId there = ny * width + nx;
  if (free && !(*free)[static_cast<std::size_t>(there)]) return here;
  return there;
}

TransitionTable grid_table(int width, int height, double slip, const std::vector<bool>* free) {
  TransitionTable table(width * height, kGridActions);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const StateId v = y * width + x;
      for (int a = 0; a < kGridActions; ++a) {
        if (free && !(*free)[static_cast<std::size_t>(v)]) {
          table.add(v, a, v, 1.0);
          continue;
        }
        if (slip < 1.0) table.add(v, a, move(width, height, free, x, y, a), 1.0 - slip);
        if (slip > 0.0)
          for (int b = 0; b < kGridActions; ++b)
            table.add(v, a, move(width, height, free, x, y, b), slip / kGridActions);
      }
    }
  return table;
}

}  // namespace

Smdp build_grid(const GridSpec& spec) {
  if (spec.width <= 0 || spec.height <= 0) throw ConfigError("grid must have positive width and height");
  if (spec.horizon < 0) throw ConfigError("horizon must be nonnegative");
  if (!(spec.slip >= 0.0 && spec.slip <= 1.0)) throw ConfigError("slip probability must lie in [0, 1]");
  std::optional<StateId> start;
  if (spec.start) {
    const auto [x, y] = *spec.start;
    if (x < 0 || y < 0 || x >= spec.width || y >= spec.height) throw ConfigError("start cell lies off the grid");
    start = spec.cell(x, y);
  }
  return Smdp::stationary(spec.horizon, start_distribution(spec.num_states(), start),
                          grid_table(spec.width, spec.height, spec.slip, nullptr));
}

std::vector<StateId> TwoRooms::free_cells() const {
  std::vector<StateId> out;
  for (std::size_t v = 0; v < free.size(); ++v)
    if (free[v]) out.push_back(static_cast<StateId>(v));
  return out;
}

TwoRooms build_two_rooms(int corridor_length, int room_size, int horizon) {
  if (room_size < 1 || corridor_length < 1)
    throw ConfigError("two-rooms layout needs rooms and a corridor of at least one cell");
  if (horizon < 0) throw ConfigError("horizon must be nonnegative");
  const int width = 2 * room_size + corridor_length;
  const int height = room_size;
  const int row = room_size / 2;
  std::vector<bool> free(static_cast<std::size_t>(width * height), false);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const bool in_room = x < room_size || x >= room_size + corridor_length;
      if (in_room || y == row) free[static_cast<std::size_t>(y * width + x)] = true;
    }
  const StateId start = row * width + room_size + corridor_length / 2;
  Smdp smdp = Smdp::stationary(horizon, start_distribution(width * height, start),
                               grid_table(width, height, 0.0, &free));
  return TwoRooms{std::move(smdp), width, height, std::move(free), start};
}

int shortest_covering_walk(const Smdp& smdp, StateId start, const std::vector<StateId>& targets) {
  if (!smdp.is_deterministic()) throw ContractError("covering walk needs deterministic dynamics");
  if (targets.size() > 24) throw SizeRefusal("covering walk search", targets.size(), 24);
  const auto nv = static_cast<std::size_t>(smdp.num_states());
  std::vector<int> bit(nv, -1);
  for (std::size_t i = 0; i < targets.size(); ++i) bit[static_cast<std::size_t>(targets[i])] = static_cast<int>(i);
  const std::uint32_t full = targets.empty() ? 0u : (1u << targets.size()) - 1u;
  auto mark = [&](std::uint32_t mask, StateId v) {
    const int b = bit[static_cast<std::size_t>(v)];
    return b < 0 ? mask : mask | (1u << b);
  };

  const std::size_t masks = std::size_t{1} << targets.size();
  std::vector<char> seen(nv * masks, 0);
  std::vector<std::pair<StateId, std::uint32_t>> frontier{{start, mark(0, start)}}, next;
  seen[static_cast<std::size_t>(start) * masks + frontier[0].second] = 1;
  for (int d = 0; !frontier.empty(); ++d) {
    next.clear();
    for (const auto& [v, mask] : frontier) {
      if (mask == full) return d;
      for (ActionId a = 0; a < smdp.num_actions(); ++a) {
        const StateId w = smdp.successors(0, v, a).front().next;
        const std::uint32_t m = mark(mask, w);
        char& flag = seen[static_cast<std::size_t>(w) * masks + m];
        if (!flag) {
          flag = 1;
          next.emplace_back(w, m);
        }
      }
    }
    std::swap(frontier, next);
  }
  throw InputError("some target is unreachable from the start state");
}

double EpsilonBanditSpec::max_epsilon() const {
  return static_cast<double>(num_states - 1) / static_cast<double>(num_states);
}

Smdp build_epsilon_bandit(const EpsilonBanditSpec& spec) {
  const int n = spec.num_states;
  if (n < 2) throw ConfigError("epsilon bandit needs at least two states");
  if (spec.horizon < 0) throw ConfigError("horizon must be nonnegative");
  std::vector<double> eps = spec.epsilon;
  if (eps.empty()) eps.push_back(0.0);
  if (eps.size() == 1) eps.assign(static_cast<std::size_t>(std::max(spec.horizon, 1)), eps[0]);
  if (static_cast<int>(eps.size()) != std::max(spec.horizon, 1) && static_cast<int>(eps.size()) != spec.horizon)
    throw ConfigError("epsilon needs one value per step");
  for (double e : eps)
    if (!(e >= 0.0 && e <= spec.max_epsilon()))
      throw ConfigError("epsilon " + std::to_string(e) + " outside [0, (|V|-1)/|V|]");

  std::vector<TransitionTable> tables;
  std::vector<int> step_table;
  for (int h = 0; h < spec.horizon; ++h) {
    const double e = eps[static_cast<std::size_t>(h)];
    if (h > 0 && e == eps[static_cast<std::size_t>(h - 1)]) {
      step_table.push_back(step_table.back());
      continue;
    }
    TransitionTable t(n, n);
    for (StateId v = 0; v < n; ++v)
      for (ActionId a = 0; a < n; ++a) {
        std::vector<Successor> row;
        for (StateId w = 0; w < n; ++w) row.push_back({w, w == a ? 1.0 - e : e / (n - 1)});
        t.set_row(v, a, std::move(row));
      }
    tables.push_back(std::move(t));
    step_table.push_back(static_cast<int>(tables.size()) - 1);
  }
  std::vector<double> init = spec.initial;
  if (init.empty()) init = start_distribution(n, StateId{0});
  return Smdp(n, n, spec.horizon, std::move(init), std::move(tables), std::move(step_table));
}

StateId DensityField::argmax() const {
  return static_cast<StateId>(std::max_element(values.begin(), values.end()) - values.begin());
}

DensityField constant_density(int width, int height, double value) {
  if (width <= 0 || height <= 0) throw ConfigError("density grid must be nonempty");
  if (!(value >= 0.0) || !std::isfinite(value)) throw ConfigError("density must be finite and nonnegative");
  return {width, height, std::vector<double>(static_cast<std::size_t>(width * height), value)};
}

DensityField parse_density_csv(const std::string& text, int width, int height) {
  DensityField field{width, height, {}};
  std::istringstream lines(text);
  std::string line;
  int rows = 0;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream cells(line);
    std::string cell;
    int cols = 0;
    while (std::getline(cells, cell, ',')) {
      std::size_t used = 0;
      double x = 0.0;
      try {
        x = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw InputError("density CSV row " + std::to_string(rows + 1) + ": '" + cell + "' is not a number");
      }
      if (cell.find_first_not_of(" \t", used) != std::string::npos)
        throw InputError("density CSV row " + std::to_string(rows + 1) + ": '" + cell + "' is not a number");
      if (!(x >= 0.0) || !std::isfinite(x))
        throw InputError("density CSV row " + std::to_string(rows + 1) + ": negative or non-finite value");
      field.values.push_back(x);
      ++cols;
    }
    if (cols != width)
      throw InputError("density CSV row " + std::to_string(rows + 1) + " has " + std::to_string(cols) +
                       " values, expected " + std::to_string(width));
    ++rows;
  }
  if (rows != height)
    throw InputError("density CSV has " + std::to_string(rows) + " rows, expected " + std::to_string(height));
  return field;
}

DensityField density_from_csv(const std::string& path, int width, int height) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open density file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_density_csv(text.str(), width, height);
}

DensityField mixture_density(int width, int height, const std::vector<GaussianBump>& bumps) {
  DensityField field = constant_density(width, height, 0.0);
  for (const auto& b : bumps)
    if (!(b.sigma > 0.0) || !(b.weight >= 0.0)) throw ConfigError("mixture bumps need sigma > 0 and weight >= 0");
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double rho = 0.0;
      for (const auto& b : bumps) {
        const double dx = x - b.x, dy = y - b.y;
        rho += b.weight * std::exp(-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma));
      }
      field.values[static_cast<std::size_t>(y * width + x)] = rho;
    }
  return field;
}

std::vector<GaussianBump> random_bumps(int width, int height, int count, double sigma, std::uint64_t seed) {
  RandomStream rng(seed);
  std::vector<GaussianBump> out;
  for (int k = 0; k < count; ++k) {
    const double x = rng.uniform() * (width - 1);
    const double y = rng.uniform() * (height - 1);
    out.push_back({x, y, sigma, 1.0});
  }
  return out;
}

DensityField gp_sample_density(int width, int height, double lengthscale, double signal_variance,
                               std::uint64_t seed) {
  gp::GpParams params;
  params.lengthscale = lengthscale;
  params.signal_variance = signal_variance;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) params.points.push_back({static_cast<double>(x), static_cast<double>(y)});
  params.validate();

  const auto n = static_cast<Eigen::Index>(params.points.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) k(i, j) = params.kernel(static_cast<int>(i), static_cast<int>(j));

  // Smooth kernels on dense grids are numerically rank deficient; grow the
  // jitter until the factorization succeeds.
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 1e-10 * signal_variance;
  for (;; jitter *= 10.0) {
    llt.compute(k + jitter * Eigen::MatrixXd::Identity(n, n));
    if (llt.info() == Eigen::Success) break;
    if (jitter > 1e-2 * signal_variance) throw NumericalError("GP sample: kernel matrix is not positive definite");
  }

  // Box-Muller keeps the draw identical across standard libraries.
  RandomStream rng(seed);
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; i += 2) {
    const double u1 = 1.0 - rng.uniform();
    const double u2 = rng.uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    z(i) = r * std::cos(2.0 * std::numbers::pi * u2);
    if (i + 1 < n) z(i + 1) = r * std::sin(2.0 * std::numbers::pi * u2);
  }
  const Eigen::VectorXd f = llt.matrixL() * z;
  const double lo = f.minCoeff();
  DensityField field{width, height, std::vector<double>(static_cast<std::size_t>(n))};
  for (Eigen::Index i = 0; i < n; ++i) field.values[static_cast<std::size_t>(i)] = f(i) - lo;
  return field;
}

std::vector<std::vector<StateId>> place_item_groups(int num_states, const std::vector<int>& sizes,
                                                    std::uint64_t seed, const std::vector<StateId>& excluded) {
  std::vector<char> banned(static_cast<std::size_t>(num_states), 0);
  for (StateId v : excluded)
    if (v >= 0 && v < num_states) banned[static_cast<std::size_t>(v)] = 1;
  std::vector<StateId> pool;
  for (StateId v = 0; v < num_states; ++v)
    if (!banned[static_cast<std::size_t>(v)]) pool.push_back(v);

  std::size_t total = 0;
  for (int s : sizes) {
    if (s < 1) throw ConfigError("item groups need at least one item");
    total += static_cast<std::size_t>(s);
  }
  if (total > pool.size()) throw ConfigError("not enough free states for the requested item groups");

  // Partial Fisher-Yates: the first `total` entries become a uniform sample.
  RandomStream rng(seed);
  for (std::size_t i = 0; i < total; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  std::vector<std::vector<StateId>> groups;
  std::size_t pos = 0;
  for (int s : sizes) {
    std::vector<StateId> g(pool.begin() + static_cast<std::ptrdiff_t>(pos),
                           pool.begin() + static_cast<std::ptrdiff_t>(pos + static_cast<std::size_t>(s)));
    std::sort(g.begin(), g.end());
    groups.push_back(std::move(g));
    pos += static_cast<std::size_t>(s);
  }
  return groups;
}

}  // namespace subrl
