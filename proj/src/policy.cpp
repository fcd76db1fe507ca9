#include "subrl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "subrl/errors.hpp"

namespace subrl {

ActionId sample_categorical(std::span<const double> probs, RandomStream& rng) {
  const double u = rng.uniform();
  double cdf = 0.0;
  for (std::size_t a = 0; a < probs.size(); ++a) {
    cdf += probs[a];
    if (u < cdf) return static_cast<ActionId>(a);
  }
  // Rounding left u above the final cdf; fall back to the last action with mass.
  for (std::size_t a = probs.size(); a-- > 0;)
    if (probs[a] > 0.0) return static_cast<ActionId>(a);
  return 0;
}

ActionId StochasticPolicy::sample_action(const HistoryView& history, RandomStream& rng) const {
  std::vector<double> probs(static_cast<std::size_t>(num_actions()));
  action_probabilities(history, probs);
  return sample_categorical(probs, rng);
}

void softmax(std::span<const double> logits, std::span<double> out) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    z += out[i];
  }
  for (double& p : out) p /= z;
}

void Policy::action_probabilities(const HistoryView& history, std::span<double> out) const {
  std::vector<double> z(static_cast<std::size_t>(num_actions()));
  logits(history, z);
  softmax(z, out);
}

double Policy::log_prob(const HistoryView& history, ActionId a) const {
  std::vector<double> z(static_cast<std::size_t>(num_actions()));
  logits(history, z);
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double x : z) sum += std::exp(x - m);
  return z[static_cast<std::size_t>(a)] - m - std::log(sum);
}

void Policy::accumulate_grad_log_prob(const HistoryView& history, ActionId a, double weight,
                                      std::span<double> grad) const {
  if (weight == 0.0) return;
  const auto n = static_cast<std::size_t>(num_actions());
  if (a < 0 || static_cast<std::size_t>(a) >= n) throw InputError("action out of range");
  std::vector<double> d(n);
  action_probabilities(history, d);
  // d log softmax_a / d z = one_hot(a) - p
  for (std::size_t i = 0; i < n; ++i) d[i] = weight * ((i == static_cast<std::size_t>(a) ? 1.0 : 0.0) - d[i]);
  backprop_logits(history, d, grad);
}

double Policy::entropy(const HistoryView& history) const {
  std::vector<double> p(static_cast<std::size_t>(num_actions()));
  action_probabilities(history, p);
  double h = 0.0;
  for (double x : p)
    if (x > 0.0) h -= x * std::log(x);
  return h;
}

void Policy::accumulate_entropy_grad(const HistoryView& history, double weight, std::span<double> grad) const {
  if (weight == 0.0) return;
  const auto n = static_cast<std::size_t>(num_actions());
  std::vector<double> p(n);
  action_probabilities(history, p);
  double h = 0.0;
  for (double x : p)
    if (x > 0.0) h -= x * std::log(x);
  // dH/dz_k = -p_k (log p_k + H)
  std::vector<double> d(n);
  for (std::size_t k = 0; k < n; ++k) d[k] = p[k] > 0.0 ? -weight * p[k] * (std::log(p[k]) + h) : 0.0;
  backprop_logits(history, d, grad);
}

// ---------------------------------------------------------------------------

TabularSoftmaxPolicy::TabularSoftmaxPolicy(int num_states, int num_actions, int horizon)
    : num_states_(num_states), num_actions_(num_actions), horizon_(horizon) {
  if (num_states <= 0 || num_actions <= 0 || horizon < 0) throw ConfigError("invalid tabular policy shape");
  theta_.assign(static_cast<std::size_t>(horizon) * static_cast<std::size_t>(num_states) *
                    static_cast<std::size_t>(num_actions),
                0.0);
}

std::size_t TabularSoftmaxPolicy::offset(int h, StateId v) const {
  if (h < 0 || h >= horizon_ || v < 0 || v >= num_states_)
    throw ConfigError("tabular policy queried at (h=" + std::to_string(h) + ", v=" + std::to_string(v) +
                      ") outside its table");
  return (static_cast<std::size_t>(h) * static_cast<std::size_t>(num_states_) + static_cast<std::size_t>(v)) *
         static_cast<std::size_t>(num_actions_);
}

void TabularSoftmaxPolicy::logits(const HistoryView& history, std::span<double> out) const {
  const std::size_t base = offset(history.time(), history.current());
  std::copy_n(theta_.begin() + static_cast<std::ptrdiff_t>(base), num_actions_, out.begin());
}

void TabularSoftmaxPolicy::backprop_logits(const HistoryView& history, std::span<const double> dlogits,
                                           std::span<double> grad) const {
  const std::size_t base = offset(history.time(), history.current());
  for (int a = 0; a < num_actions_; ++a) grad[base + static_cast<std::size_t>(a)] += dlogits[static_cast<std::size_t>(a)];
}

nlohmann::json TabularSoftmaxPolicy::header() const {
  return {{"kind", kind()},
          {"arch", {{"num_actions", num_actions_}}},
          {"obs_spec", {{"kind", "time_augmented_state"}, {"num_states", num_states_}, {"horizon", horizon_}}}};
}

// ---------------------------------------------------------------------------

std::size_t ObservationSpec::length() const {
  const auto v = static_cast<std::size_t>(num_states);
  switch (kind) {
    case ObservationKind::one_hot_state_time: return v + 1;
    case ObservationKind::one_hot_state_only: return v;
    case ObservationKind::history_window: return v * static_cast<std::size_t>(window) + 1;
  }
  return 0;
}

void ObservationSpec::features(const HistoryView& history, std::vector<std::pair<std::size_t, double>>& out) const {
  out.clear();
  if (history.states.empty()) throw ConfigError("empty history");
  auto checked = [&](StateId s) {
    if (s < 0 || s >= num_states)
      throw ConfigError("state " + std::to_string(s) + " outside the observation space of " +
                        std::to_string(num_states) + " states");
    return static_cast<std::size_t>(s);
  };
  const int h = history.time();
  const double t = horizon > 0 ? static_cast<double>(h) / horizon : 0.0;
  const auto v = static_cast<std::size_t>(num_states);
  switch (kind) {
    case ObservationKind::one_hot_state_time:
      out.emplace_back(checked(history.current()), 1.0);
      if (t != 0.0) out.emplace_back(v, t);
      break;
    case ObservationKind::one_hot_state_only:
      out.emplace_back(checked(history.current()), 1.0);
      break;
    case ObservationKind::history_window:
      for (int lag = 0; lag < window && lag <= h; ++lag) {
        const StateId s = history.states[static_cast<std::size_t>(h - lag)];
        out.emplace_back(static_cast<std::size_t>(lag) * v + checked(s), 1.0);
      }
      if (t != 0.0) out.emplace_back(v * static_cast<std::size_t>(window), t);
      break;
  }
}

std::vector<double> ObservationSpec::dense(const HistoryView& history) const {
  std::vector<double> x(length(), 0.0);
  std::vector<std::pair<std::size_t, double>> nz;
  features(history, nz);
  for (auto [i, val] : nz) x[i] = val;
  return x;
}

nlohmann::json ObservationSpec::to_json() const {
  std::string k;
  switch (kind) {
    case ObservationKind::one_hot_state_time: k = "one_hot_state_time"; break;
    case ObservationKind::one_hot_state_only: k = "one_hot_state_only"; break;
    case ObservationKind::history_window: k = "history_window"; break;
  }
  return {{"kind", k}, {"num_states", num_states}, {"horizon", horizon}, {"window", window}};
}

ObservationSpec ObservationSpec::from_json(const nlohmann::json& doc) {
  ObservationSpec spec;
  const auto k = doc.at("kind").get<std::string>();
  if (k == "one_hot_state_time")
    spec.kind = ObservationKind::one_hot_state_time;
  else if (k == "one_hot_state_only")
    spec.kind = ObservationKind::one_hot_state_only;
  else if (k == "history_window")
    spec.kind = ObservationKind::history_window;
  else
    throw InputError("unknown observation kind '" + k + "'");
  spec.num_states = doc.at("num_states").get<int>();
  spec.horizon = doc.at("horizon").get<int>();
  spec.window = doc.value("window", 1);
  return spec;
}

// ---------------------------------------------------------------------------

struct MlpPolicy::Activations {
  std::vector<std::pair<std::size_t, double>> x;
  std::vector<double> a1, h1, a2, h2, z;
};

std::size_t MlpPolicy::param_count(std::size_t input, int hidden1, int hidden2, int num_actions) {
  const auto w1 = static_cast<std::size_t>(hidden1);
  const auto w2 = static_cast<std::size_t>(hidden2);
  const auto a = static_cast<std::size_t>(num_actions);
  return input * w1 + w1 + w2 * w1 + w2 + a * w2 + a;
}

MlpPolicy::MlpPolicy(ObservationSpec obs, int hidden1, int hidden2, int num_actions)
    : obs_(obs), input_(obs.length()), w1_(hidden1), w2_(hidden2), num_actions_(num_actions) {
  if (obs_.num_states <= 0 || obs_.horizon < 0) throw ConfigError("invalid observation spec");
  if (obs_.kind == ObservationKind::history_window && obs_.window < 1)
    throw ConfigError("history window must be at least 1");
  if (hidden1 <= 0 || hidden2 <= 0 || num_actions <= 0) throw ConfigError("invalid MLP shape");
  const auto w1 = static_cast<std::size_t>(w1_);
  const auto w2 = static_cast<std::size_t>(w2_);
  off_b1_ = input_ * w1;
  off_w2_ = off_b1_ + w1;
  off_b2_ = off_w2_ + w2 * w1;
  off_w3_ = off_b2_ + w2;
  off_b3_ = off_w3_ + static_cast<std::size_t>(num_actions_) * w2;
  theta_.assign(param_count(input_, w1_, w2_, num_actions_), 0.0);
}

void MlpPolicy::initialize(std::uint64_t seed) {
  RandomStream rng(seed);
  std::fill(theta_.begin(), theta_.end(), 0.0);
  auto fill = [&](std::size_t begin, std::size_t count, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < count; ++i) theta_[begin + i] = bound * (2.0 * rng.uniform() - 1.0);
  };
  fill(0, input_ * static_cast<std::size_t>(w1_), input_);
  fill(off_w2_, static_cast<std::size_t>(w2_ * w1_), static_cast<std::size_t>(w1_));
  fill(off_w3_, static_cast<std::size_t>(num_actions_ * w2_), static_cast<std::size_t>(w2_));
}

std::string MlpPolicy::kind() const {
  return obs_.kind == ObservationKind::history_window ? "history_mlp" : "mlp";
}

void MlpPolicy::forward(const HistoryView& history, Activations& act) const {
  const auto w1 = static_cast<std::size_t>(w1_);
  const auto w2 = static_cast<std::size_t>(w2_);
  const auto na = static_cast<std::size_t>(num_actions_);
  obs_.features(history, act.x);

  act.a1.assign(theta_.begin() + static_cast<std::ptrdiff_t>(off_b1_),
                theta_.begin() + static_cast<std::ptrdiff_t>(off_b1_ + w1));
  for (auto [i, xi] : act.x) {
    const double* row = theta_.data() + i * w1;
    for (std::size_t j = 0; j < w1; ++j) act.a1[j] += xi * row[j];
  }
  act.h1.resize(w1);
  for (std::size_t j = 0; j < w1; ++j) act.h1[j] = act.a1[j] > 0.0 ? act.a1[j] : 0.0;

  act.a2.resize(w2);
  for (std::size_t k = 0; k < w2; ++k) {
    const double* row = theta_.data() + off_w2_ + k * w1;
    double acc = theta_[off_b2_ + k];
    for (std::size_t j = 0; j < w1; ++j) acc += row[j] * act.h1[j];
    act.a2[k] = acc;
  }
  act.h2.resize(w2);
  for (std::size_t k = 0; k < w2; ++k) act.h2[k] = act.a2[k] > 0.0 ? act.a2[k] : 0.0;

  act.z.resize(na);
  for (std::size_t a = 0; a < na; ++a) {
    const double* row = theta_.data() + off_w3_ + a * w2;
    double acc = theta_[off_b3_ + a];
    for (std::size_t k = 0; k < w2; ++k) acc += row[k] * act.h2[k];
    act.z[a] = acc;
  }
}

void MlpPolicy::logits(const HistoryView& history, std::span<double> out) const {
  Activations act;
  forward(history, act);
  std::copy(act.z.begin(), act.z.end(), out.begin());
}

void MlpPolicy::backprop_logits(const HistoryView& history, std::span<const double> dlogits,
                                std::span<double> grad) const {
  const auto w1 = static_cast<std::size_t>(w1_);
  const auto w2 = static_cast<std::size_t>(w2_);
  const auto na = static_cast<std::size_t>(num_actions_);
  Activations act;
  forward(history, act);

  std::vector<double> dh2(w2, 0.0);
  for (std::size_t a = 0; a < na; ++a) {
    const double g = dlogits[a];
    if (g == 0.0) continue;
    grad[off_b3_ + a] += g;
    double* gw = grad.data() + off_w3_ + a * w2;
    const double* w = theta_.data() + off_w3_ + a * w2;
    for (std::size_t k = 0; k < w2; ++k) {
      gw[k] += g * act.h2[k];
      dh2[k] += g * w[k];
    }
  }

  std::vector<double> dh1(w1, 0.0);
  for (std::size_t k = 0; k < w2; ++k) {
    if (act.a2[k] <= 0.0) continue;
    const double g = dh2[k];
    grad[off_b2_ + k] += g;
    double* gw = grad.data() + off_w2_ + k * w1;
    const double* w = theta_.data() + off_w2_ + k * w1;
    for (std::size_t j = 0; j < w1; ++j) {
      gw[j] += g * act.h1[j];
      dh1[j] += g * w[j];
    }
  }

  for (std::size_t j = 0; j < w1; ++j) {
    if (act.a1[j] <= 0.0) dh1[j] = 0.0;
    grad[off_b1_ + j] += dh1[j];
  }
  for (auto [i, xi] : act.x) {
    double* gw = grad.data() + i * w1;
    for (std::size_t j = 0; j < w1; ++j) gw[j] += xi * dh1[j];
  }
}

nlohmann::json MlpPolicy::header() const {
  return {{"kind", kind()},
          {"arch", {{"hidden", {w1_, w2_}}, {"num_actions", num_actions_}, {"activation", "relu"}}},
          {"obs_spec", obs_.to_json()}};
}

}  // namespace subrl
