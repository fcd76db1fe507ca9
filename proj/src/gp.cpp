#include "subrl/gp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "subrl/errors.hpp"

namespace subrl::gp {

double GpParams::kernel(int i, int j) const {
  const Point& a = points[static_cast<std::size_t>(i)];
  const Point& b = points[static_cast<std::size_t>(j)];
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  return signal_variance * std::exp(-(dx * dx + dy * dy) / (2.0 * lengthscale * lengthscale));
}

void GpParams::validate() const {
  if (!(lengthscale > 0.0) || !(signal_variance > 0.0) || !(noise_variance > 0.0))
    throw ConfigError("GP hyperparameters must be positive");
}

double mutual_information(const GpParams& params, std::span<const int> subset) {
  const auto n = static_cast<Eigen::Index>(subset.size());
  if (n == 0) return 0.0;
  for (int v : subset)
    if (v < 0 || v >= static_cast<int>(params.points.size())) throw InputError("GP point id out of range");
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double k = params.kernel(subset[static_cast<std::size_t>(i)], subset[static_cast<std::size_t>(j)]) /
                       params.noise_variance;
      m(i, j) = k;
      m(j, i) = k;
    }
  m.diagonal().array() += 1.0;

  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    m.diagonal().array() += kCholeskyJitter;
    llt.compute(m);
    if (llt.info() != Eigen::Success) {
      std::ostringstream msg;
      msg << "Cholesky of I + K/noise failed for " << n << " points (noise " << params.noise_variance << ")";
      throw NumericalError(msg.str());
    }
  }
  return llt.matrixLLT().diagonal().array().log().sum();
}

CholState::CholState(const GpParams& params) : params_(&params) {}

double CholState::new_row(int v, std::vector<double>& row) const {
  if (v < 0 || v >= static_cast<int>(params_->points.size())) throw InputError("GP point id out of range");
  const std::size_t n = chosen_.size();
  const double inv_noise = 1.0 / params_->noise_variance;
  row.assign(n, 0.0);
  // Forward substitution: L row = k(S, v) / noise.
  std::size_t offset = 0;
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double acc = params_->kernel(chosen_[i], v) * inv_noise;
    for (std::size_t j = 0; j < i; ++j) acc -= lower_[offset + j] * row[j];
    row[i] = acc / lower_[offset + i];
    sq += row[i] * row[i];
    offset += i + 1;
  }
  return 1.0 + params_->kernel(v, v) * inv_noise - sq;
}

double CholState::gain(int v) const {
  std::vector<double> row;
  double pivot2 = new_row(v, row);
  if (!(pivot2 > 0.0)) pivot2 += kCholeskyJitter;
  if (!(pivot2 > 0.0)) throw NumericalError("incremental Cholesky: non-positive pivot");
  return std::log(std::sqrt(pivot2));
}

double CholState::add(int v) {
  std::vector<double> row;
  double pivot2 = new_row(v, row);
  if (!(pivot2 > 0.0)) pivot2 += kCholeskyJitter;
  if (!(pivot2 > 0.0)) {
    std::ostringstream msg;
    msg << "incremental Cholesky: non-positive pivot " << pivot2 << " adding point " << v << " after "
        << chosen_.size() << " points";
    throw NumericalError(msg.str());
  }
  const double pivot = std::sqrt(pivot2);
  lower_.insert(lower_.end(), row.begin(), row.end());
  lower_.push_back(pivot);
  chosen_.push_back(v);
  const double g = std::log(pivot);
  value_ += g;
  return g;
}

std::vector<double> CholState::diagonal() const {
  std::vector<double> d;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < chosen_.size(); ++i) {
    d.push_back(lower_[offset + i]);
    offset += i + 1;
  }
  return d;
}

}  // namespace subrl::gp
