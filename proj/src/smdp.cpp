#include "subrl/smdp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "subrl/errors.hpp"

namespace subrl {
namespace {

constexpr double kStochasticTol = 1e-12;

void check_distribution(std::span<const double> p, const std::string& what) {
  double sum = 0.0;
  for (double x : p) {
    if (!std::isfinite(x) || x < 0.0) throw ConfigError(what + ": entries must be finite and nonnegative");
    sum += x;
  }
  if (std::abs(sum - 1.0) > kStochasticTol)
    throw ConfigError(what + ": sums to " + std::to_string(sum) + ", expected 1");
}

}  // namespace

TransitionTable::TransitionTable(int num_states, int num_actions)
    : num_states_(num_states),
      num_actions_(num_actions),
      rows_(static_cast<std::size_t>(num_states) * static_cast<std::size_t>(num_actions)) {
  if (num_states <= 0 || num_actions <= 0) throw ConfigError("transition table needs |V| >= 1 and |A| >= 1");
}

void TransitionTable::set_row(StateId v, ActionId a, std::vector<Successor> row) {
  if (v < 0 || v >= num_states_ || a < 0 || a >= num_actions_) throw InputError("transition row index out of range");
  std::erase_if(row, [](const Successor& s) { return s.prob == 0.0; });
  for (const auto& s : row)
    if (s.next < 0 || s.next >= num_states_) throw InputError("successor state out of range");
  std::sort(row.begin(), row.end(), [](const Successor& x, const Successor& y) { return x.next < y.next; });
  rows_[index(v, a)] = std::move(row);
}

void TransitionTable::add(StateId v, ActionId a, StateId next, double prob) {
  if (v < 0 || v >= num_states_ || a < 0 || a >= num_actions_ || next < 0 || next >= num_states_)
    throw InputError("transition index out of range");
  if (prob == 0.0) return;
  auto& row = rows_[index(v, a)];
  auto it = std::lower_bound(row.begin(), row.end(), next,
                             [](const Successor& s, StateId n) { return s.next < n; });
  if (it != row.end() && it->next == next)
    it->prob += prob;
  else
    row.insert(it, Successor{next, prob});
}

Smdp::Smdp(int num_states, int num_actions, int horizon, std::vector<double> initial_dist,
           std::vector<TransitionTable> tables, std::vector<int> step_table)
    : num_states_(num_states),
      num_actions_(num_actions),
      horizon_(horizon),
      initial_(std::move(initial_dist)),
      tables_(std::move(tables)),
      step_table_(std::move(step_table)) {
  if (num_states_ <= 0 || num_actions_ <= 0) throw ConfigError("SMDP needs |V| >= 1 and |A| >= 1");
  if (horizon_ < 0) throw ConfigError("horizon must be nonnegative");
  if (static_cast<int>(initial_.size()) != num_states_) throw ConfigError("initial distribution has wrong length");
  check_distribution(initial_, "initial distribution");
  if (static_cast<int>(step_table_.size()) != horizon_)
    throw ConfigError("need one transition table index per step");
  for (int t : step_table_)
    if (t < 0 || t >= static_cast<int>(tables_.size())) throw ConfigError("step table index out of range");
  for (std::size_t t = 0; t < tables_.size(); ++t) {
    const auto& table = tables_[t];
    if (table.num_states() != num_states_ || table.num_actions() != num_actions_)
      throw ConfigError("transition table shape does not match SMDP");
    for (StateId v = 0; v < num_states_; ++v) {
      for (ActionId a = 0; a < num_actions_; ++a) {
        std::vector<double> probs;
        for (const auto& s : table.row(v, a)) probs.push_back(s.prob);
        check_distribution(probs, "transition row (table " + std::to_string(t) + ", v=" + std::to_string(v) +
                                      ", a=" + std::to_string(a) + ")");
      }
    }
  }
}

Smdp Smdp::stationary(int horizon, std::vector<double> initial_dist, TransitionTable table) {
  const int v = table.num_states();
  const int a = table.num_actions();
  std::vector<TransitionTable> tables;
  tables.push_back(std::move(table));
  return Smdp(v, a, horizon, std::move(initial_dist), std::move(tables),
              std::vector<int>(static_cast<std::size_t>(std::max(horizon, 0)), 0));
}

std::span<const Successor> Smdp::successors(int h, StateId v, ActionId a) const {
  return tables_[static_cast<std::size_t>(step_table_[static_cast<std::size_t>(h)])].row(v, a);
}

double Smdp::probability(int h, StateId v, ActionId a, StateId next) const {
  for (const auto& s : successors(h, v, a))
    if (s.next == next) return s.prob;
  return 0.0;
}

bool Smdp::is_deterministic() const {
  for (int t : step_table_) {
    const auto& table = tables_[static_cast<std::size_t>(t)];
    for (StateId v = 0; v < num_states_; ++v)
      for (ActionId a = 0; a < num_actions_; ++a) {
        auto row = table.row(v, a);
        if (row.size() != 1 || row[0].prob != 1.0) return false;
      }
  }
  return true;
}

std::optional<StateId> Smdp::fixed_start() const {
  for (StateId v = 0; v < num_states_; ++v)
    if (initial_[static_cast<std::size_t>(v)] == 1.0) return v;
  return std::nullopt;
}

int Smdp::max_branching() const {
  std::size_t best = 0;
  for (const auto& table : tables_)
    for (StateId v = 0; v < num_states_; ++v)
      for (ActionId a = 0; a < num_actions_; ++a) best = std::max(best, table.row(v, a).size());
  return static_cast<int>(best);
}

nlohmann::json Smdp::to_json() const {
  nlohmann::json transitions = nlohmann::json::array();
  for (int h = 0; h < horizon_; ++h) {
    nlohmann::json per_state = nlohmann::json::array();
    for (StateId v = 0; v < num_states_; ++v) {
      nlohmann::json per_action = nlohmann::json::array();
      for (ActionId a = 0; a < num_actions_; ++a) {
        std::vector<double> dense(static_cast<std::size_t>(num_states_), 0.0);
        for (const auto& s : successors(h, v, a)) dense[static_cast<std::size_t>(s.next)] = s.prob;
        per_action.push_back(std::move(dense));
      }
      per_state.push_back(std::move(per_action));
    }
    transitions.push_back(std::move(per_state));
  }
  return {{"num_states", num_states_},
          {"num_actions", num_actions_},
          {"horizon", horizon_},
          {"initial_dist", initial_},
          {"transitions", std::move(transitions)}};
}

Smdp Smdp::from_json(const nlohmann::json& doc) {
  try {
    const int nv = doc.at("num_states").get<int>();
    const int na = doc.at("num_actions").get<int>();
    const int horizon = doc.at("horizon").get<int>();
    auto initial = doc.at("initial_dist").get<std::vector<double>>();
    const auto& transitions = doc.at("transitions");
    if (nv <= 0 || na <= 0 || horizon < 0) throw InputError("SMDP document: sizes must be positive");
    if (!transitions.is_array() || static_cast<int>(transitions.size()) != horizon)
      throw InputError("SMDP document: transitions must have one entry per step");

    std::vector<TransitionTable> tables;
    std::vector<int> step_table;
    for (int h = 0; h < horizon; ++h) {
      const auto& per_state = transitions[static_cast<std::size_t>(h)];
      if (!per_state.is_array() || static_cast<int>(per_state.size()) != nv)
        throw InputError("SMDP document: transitions[" + std::to_string(h) + "] has wrong length");
      TransitionTable table(nv, na);
      for (StateId v = 0; v < nv; ++v) {
        const auto& per_action = per_state[static_cast<std::size_t>(v)];
        if (!per_action.is_array() || static_cast<int>(per_action.size()) != na)
          throw InputError("SMDP document: wrong action count");
        for (ActionId a = 0; a < na; ++a) {
          auto dense = per_action[static_cast<std::size_t>(a)].get<std::vector<double>>();
          if (static_cast<int>(dense.size()) != nv) throw InputError("SMDP document: wrong row length");
          std::vector<Successor> row;
          for (StateId n = 0; n < nv; ++n)
            if (dense[static_cast<std::size_t>(n)] != 0.0) row.push_back({n, dense[static_cast<std::size_t>(n)]});
          table.set_row(v, a, std::move(row));
        }
      }
      if (!tables.empty() && tables.back() == table) {
        step_table.push_back(static_cast<int>(tables.size()) - 1);
      } else {
        tables.push_back(std::move(table));
        step_table.push_back(static_cast<int>(tables.size()) - 1);
      }
    }
    return Smdp(nv, na, horizon, std::move(initial), std::move(tables), std::move(step_table));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("SMDP document: ") + e.what());
  }
}

}  // namespace subrl
