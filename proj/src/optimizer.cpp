#include "subrl/optimizer.hpp"

#include <cmath>

#include "subrl/errors.hpp"

namespace subrl {

OptimizerKind optimizer_from_string(const std::string& name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer '" + name + "'");
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::sgd ? "sgd" : "adam"; }

static void check_dims(std::span<double> theta, std::span<const double> g) {
  if (theta.size() != g.size()) throw ContractError("gradient and parameter sizes differ");
}

void Sgd::step(std::span<double> theta, std::span<const double> g, double lr) {
  check_dims(theta, g);
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] += lr * g[i];
}

Adam::Adam(std::size_t dim, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps), m_(dim, 0.0), v_(dim, 0.0) {}

void Adam::step(std::span<double> theta, std::span<const double> g, double lr) {
  check_dims(theta, g);
  if (theta.size() != m_.size()) throw ContractError("Adam state sized for a different parameter vector");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g[i] * g[i];
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    theta[i] += lr * m_hat / (std::sqrt(v_hat) + eps_);
  }
}

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, std::size_t dim) {
  if (kind == OptimizerKind::sgd) return std::make_unique<Sgd>();
  return std::make_unique<Adam>(dim);
}

}  // namespace subrl
