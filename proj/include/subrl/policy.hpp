#pragma once

#include <memory>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "subrl/random.hpp"
#include "subrl/types.hpp"

namespace subrl {

/// Anything that maps a history prefix to a distribution over actions.
class StochasticPolicy {
 public:
  virtual ~StochasticPolicy() = default;

  virtual int num_actions() const = 0;
  /// Writes pi(. | history) into `out` (length num_actions()).
  virtual void action_probabilities(const HistoryView& history, std::span<double> out) const = 0;

  /// Inverse-CDF draw from action_probabilities.
  ActionId sample_action(const HistoryView& history, RandomStream& rng) const;
};

/// Inverse-CDF draw from an explicit probability vector.
ActionId sample_categorical(std::span<const double> probs, RandomStream& rng);

/// Softmax policy with a flat parameter vector theta.
///
/// Subclasses supply the logits and the vector-Jacobian product of the
/// logits w.r.t. theta; score-function and entropy gradients are built from
/// those two primitives.
class Policy : public StochasticPolicy {
 public:
  virtual std::string kind() const = 0;
  virtual std::size_t num_params() const = 0;
  virtual std::span<double> params() = 0;
  virtual std::span<const double> params() const = 0;

  virtual void logits(const HistoryView& history, std::span<double> out) const = 0;
  /// grad += (d logits / d theta)^T dlogits.
  virtual void backprop_logits(const HistoryView& history, std::span<const double> dlogits,
                               std::span<double> grad) const = 0;

  /// Architecture and observation description for checkpoint headers.
  virtual nlohmann::json header() const = 0;
  virtual std::unique_ptr<Policy> clone() const = 0;

  void action_probabilities(const HistoryView& history, std::span<double> out) const override;

  double log_prob(const HistoryView& history, ActionId a) const;
  /// grad += weight * d/dtheta log pi(a | history).
  void accumulate_grad_log_prob(const HistoryView& history, ActionId a, double weight,
                                std::span<double> grad) const;
  /// Shannon entropy (nats) of pi(. | history).
  double entropy(const HistoryView& history) const;
  /// grad += weight * d/dtheta entropy(pi(. | history)).
  void accumulate_entropy_grad(const HistoryView& history, double weight, std::span<double> grad) const;
};

/// Numerically stable softmax.
void softmax(std::span<const double> logits, std::span<double> out);

/// One independent categorical per time-augmented state (h, v);
/// theta is laid out as [h][v][a].
class TabularSoftmaxPolicy final : public Policy {
 public:
  TabularSoftmaxPolicy(int num_states, int num_actions, int horizon);

  std::string kind() const override { return "tabular_softmax"; }
  int num_actions() const override { return num_actions_; }
  std::size_t num_params() const override { return theta_.size(); }
  std::span<double> params() override { return theta_; }
  std::span<const double> params() const override { return theta_; }

  void logits(const HistoryView& history, std::span<double> out) const override;
  void backprop_logits(const HistoryView& history, std::span<const double> dlogits,
                       std::span<double> grad) const override;
  nlohmann::json header() const override;
  std::unique_ptr<Policy> clone() const override { return std::make_unique<TabularSoftmaxPolicy>(*this); }

  std::size_t offset(int h, StateId v) const;

 private:
  int num_states_;
  int num_actions_;
  int horizon_;
  std::vector<double> theta_;
};

enum class ObservationKind { one_hot_state_time, one_hot_state_only, history_window };

/// Feature map from a history prefix to the MLP input.
///
/// one_hot_state_time: one_hot(s_h) ++ [h/H]
/// one_hot_state_only: one_hot(s_h)
/// history_window(k):  one_hot(s_h) ++ one_hot(s_{h-1}) ++ ... (k blocks,
///                     zero blocks before the episode start) ++ [h/H]
struct ObservationSpec {
  ObservationKind kind = ObservationKind::one_hot_state_time;
  int num_states = 0;
  int horizon = 0;
  int window = 1;

  std::size_t length() const;
  /// Nonzero features as (index, value), ascending by index.
  void features(const HistoryView& history, std::vector<std::pair<std::size_t, double>>& out) const;
  /// Dense feature vector.
  std::vector<double> dense(const HistoryView& history) const;

  nlohmann::json to_json() const;
  static ObservationSpec from_json(const nlohmann::json& doc);
};

/// Two-hidden-layer ReLU perceptron producing action logits.
///
/// theta layout: W1 [in][w1], b1 [w1], W2 [w2][w1], b2 [w2], W3 [A][w2], b3 [A].
/// W1 is stored input-major so sparse one-hot inputs touch contiguous rows.
class MlpPolicy final : public Policy {
 public:
  MlpPolicy(ObservationSpec obs, int hidden1, int hidden2, int num_actions);

  /// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
  void initialize(std::uint64_t seed);

  std::string kind() const override;
  int num_actions() const override { return num_actions_; }
  std::size_t num_params() const override { return theta_.size(); }
  std::span<double> params() override { return theta_; }
  std::span<const double> params() const override { return theta_; }

  void logits(const HistoryView& history, std::span<double> out) const override;
  void backprop_logits(const HistoryView& history, std::span<const double> dlogits,
                       std::span<double> grad) const override;
  nlohmann::json header() const override;
  std::unique_ptr<Policy> clone() const override { return std::make_unique<MlpPolicy>(*this); }

  const ObservationSpec& observation() const { return obs_; }
  int hidden1() const { return w1_; }
  int hidden2() const { return w2_; }

  /// Parameter count for the given shape.
  static std::size_t param_count(std::size_t input, int hidden1, int hidden2, int num_actions);

 private:
  struct Activations;
  void forward(const HistoryView& history, Activations& act) const;

  ObservationSpec obs_;
  std::size_t input_;
  int w1_;
  int w2_;
  int num_actions_;
  std::size_t off_b1_, off_w2_, off_b2_, off_w3_, off_b3_;
  std::vector<double> theta_;
};

/// Writes a checkpoint: one JSON header line, then theta as little-endian
/// float64 values.
void save_checkpoint(const Policy& policy, const std::string& path);
std::unique_ptr<Policy> load_checkpoint(const std::string& path);
/// Builds an uninitialized policy from a header document.
std::unique_ptr<Policy> policy_from_header(const nlohmann::json& header);

}  // namespace subrl
