#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace subrl {

enum class OptimizerKind { sgd, adam };

OptimizerKind optimizer_from_string(const std::string& name);
std::string to_string(OptimizerKind kind);

/// Gradient ascent on theta.
class Optimizer {
 public:
  virtual ~Optimizer() = default;
  /// theta <- theta' given ascent direction g and step size lr.
  virtual void step(std::span<double> theta, std::span<const double> g, double lr) = 0;
};

/// theta' = theta + lr * g.
class Sgd final : public Optimizer {
 public:
  void step(std::span<double> theta, std::span<const double> g, double lr) override;
};

/// Adam with bias-corrected moments, applied as ascent.
class Adam final : public Optimizer {
 public:
  explicit Adam(std::size_t dim, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(std::span<double> theta, std::span<const double> g, double lr) override;

  long long steps() const { return t_; }

 private:
  double beta1_, beta2_, eps_;
  long long t_ = 0;
  std::vector<double> m_, v_;
};

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, std::size_t dim);

}  // namespace subrl
