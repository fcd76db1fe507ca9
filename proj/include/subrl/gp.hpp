#pragma once

#include <array>
#include <span>
#include <vector>

namespace subrl::gp {

using Point = std::array<double, 2>;

/// Zero-mean GP prior with RBF kernel k(x,x') = sf2 * exp(-|x-x'|^2 / (2 l^2))
/// and i.i.d. Gaussian observation noise.
struct GpParams {
  std::vector<Point> points;  // indexed by state id
  double lengthscale = 3.0;
  double signal_variance = 1.0;
  double noise_variance = 0.1;

  double kernel(int i, int j) const;
  void validate() const;
};

/// 1/2 log det(I + K_S / noise) for the (multi)set S, computed from scratch
/// with a dense Cholesky factorization.
double mutual_information(const GpParams& params, std::span<const int> subset);

/// Incrementally grown Cholesky factor L of (I + K_S / noise). Each `add`
/// appends one row, so the running value 1/2 log det = sum log diag(L) costs
/// O(|S|^2) per point. Duplicate points are allowed; the noise term keeps the
/// matrix positive definite.
class CholState {
 public:
  explicit CholState(const GpParams& params);

  /// MI(S + v) - MI(S) without modifying the state.
  double gain(int v) const;
  /// Appends v and returns its gain.
  double add(int v);

  double value() const noexcept { return value_; }
  std::size_t size() const noexcept { return chosen_.size(); }
  const std::vector<int>& points() const noexcept { return chosen_; }
  /// Diagonal of L.
  std::vector<double> diagonal() const;

 private:
  /// Solves L row = b for the new row; returns the squared new pivot.
  double new_row(int v, std::vector<double>& row) const;

  const GpParams* params_;
  std::vector<int> chosen_;
  std::vector<double> lower_;  // packed rows of L
  double value_ = 0.0;
};

/// Jitter added to a failing pivot before giving up.
inline constexpr double kCholeskyJitter = 1e-10;

}  // namespace subrl::gp
