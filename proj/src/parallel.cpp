#include "subrl/parallel.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <omp.h>
#include <vector>

namespace subrl {

void blocked_sum(std::size_t count, std::span<double> out,
                 const std::function<void(std::size_t, std::span<double>)>& contribution, Execution exec) {
  std::fill(out.begin(), out.end(), 0.0);
  if (count == 0) return;
  const std::size_t blocks = (count + kReductionBlock - 1) / kReductionBlock;
  const std::size_t dim = out.size();
  std::vector<double> partial(blocks * dim, 0.0);

  std::exception_ptr error;
  std::mutex error_mutex;
#pragma omp parallel for schedule(dynamic) if (exec == Execution::parallel && blocks > 1)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
    try {
      std::span<double> acc(partial.data() + static_cast<std::size_t>(b) * dim, dim);
      const std::size_t begin = static_cast<std::size_t>(b) * kReductionBlock;
      const std::size_t end = std::min(count, begin + kReductionBlock);
      for (std::size_t i = begin; i < end; ++i) contribution(i, acc);
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);

  for (std::size_t b = 0; b < blocks; ++b) {
    const double* acc = partial.data() + b * dim;
    for (std::size_t j = 0; j < dim; ++j) out[j] += acc[j];
  }
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body, Execution exec) {
  std::exception_ptr error;
  std::mutex error_mutex;
#pragma omp parallel for schedule(dynamic) if (exec == Execution::parallel && count > 1)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(count); ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace subrl
