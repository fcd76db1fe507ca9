#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace subrl {

/// Serial runs the same kernels on one thread; it is the reference path the
/// OpenMP path is tested against and produces identical bits.
enum class Execution { serial, parallel };

/// Items per reduction block. Fixed so the summation order, and hence the
/// result, does not depend on the thread count.
inline constexpr std::size_t kReductionBlock = 8;

/// out = sum_i contribution(i), where contribution(i, acc) adds item i into
/// acc. Items are grouped into consecutive blocks of kReductionBlock; blocks
/// are accumulated independently and then summed in block order.
void blocked_sum(std::size_t count, std::span<double> out,
                 const std::function<void(std::size_t, std::span<double>)>& contribution, Execution exec);

/// Runs body(i) for i in [0, count); iterations must be independent.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body, Execution exec);

/// Number of OpenMP threads the parallel path will use.
int max_threads();

}  // namespace subrl
