#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <vector>

#include "subrl/types.hpp"

namespace subrl {

struct Successor {
  StateId next = 0;
  double prob = 0.0;

  bool operator==(const Successor&) const = default;
};

/// Sparse P(v' | v, a) for one time step. Zero-probability successors are not stored.
class TransitionTable {
 public:
  TransitionTable() = default;
  TransitionTable(int num_states, int num_actions);

  void set_row(StateId v, ActionId a, std::vector<Successor> row);
  /// Adds `prob` to P(next | v, a), merging with an existing entry.
  void add(StateId v, ActionId a, StateId next, double prob);

  std::span<const Successor> row(StateId v, ActionId a) const { return rows_[index(v, a)]; }
  int num_states() const noexcept { return num_states_; }
  int num_actions() const noexcept { return num_actions_; }

  bool operator==(const TransitionTable&) const = default;

 private:
  std::size_t index(StateId v, ActionId a) const {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(num_actions_) + static_cast<std::size_t>(a);
  }

  int num_states_ = 0;
  int num_actions_ = 0;
  std::vector<std::vector<Successor>> rows_;
};

/// Finite-horizon controlled Markov process over ground set V with actions A.
/// Step h uses table `step_table[h]`, so stationary dynamics share one table.
/// Construction validates that the initial distribution and every transition
/// row are probability vectors (1e-12).
class Smdp {
 public:
  Smdp(int num_states, int num_actions, int horizon, std::vector<double> initial_dist,
       std::vector<TransitionTable> tables, std::vector<int> step_table);

  /// One table replicated across every step.
  static Smdp stationary(int horizon, std::vector<double> initial_dist, TransitionTable table);

  int num_states() const noexcept { return num_states_; }
  int num_actions() const noexcept { return num_actions_; }
  int horizon() const noexcept { return horizon_; }

  std::span<const double> initial_distribution() const noexcept { return initial_; }
  std::span<const Successor> successors(int h, StateId v, ActionId a) const;
  double probability(int h, StateId v, ActionId a, StateId next) const;

  /// Every reachable row has a single successor with probability one.
  bool is_deterministic() const;
  /// Start state when the initial distribution is a point mass.
  std::optional<StateId> fixed_start() const;
  /// Largest number of successors over all rows.
  int max_branching() const;

  /// Dense document {num_states, num_actions, horizon, initial_dist,
  /// transitions[h][v][a][v']}.
  nlohmann::json to_json() const;
  static Smdp from_json(const nlohmann::json& doc);

 private:
  int num_states_;
  int num_actions_;
  int horizon_;
  std::vector<double> initial_;
  std::vector<TransitionTable> tables_;
  std::vector<int> step_table_;
};

}  // namespace subrl
