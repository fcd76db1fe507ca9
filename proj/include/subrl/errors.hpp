#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace subrl {

/// Inconsistent shapes or settings (policy vs. SMDP, bad config values).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed external input: out-of-range ids, bad CSV/JSON payloads.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cholesky breakdown, non-finite gradients and similar.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// An exact computation would exceed its enumeration budget.
class SizeRefusal : public std::runtime_error {
 public:
  SizeRefusal(const std::string& what, std::uint64_t requested, std::uint64_t limit)
      : std::runtime_error(what + " (requested " + std::to_string(requested) +
                           " terms, limit " + std::to_string(limit) + ")"),
        requested_(requested),
        limit_(limit) {}

  std::uint64_t requested() const noexcept { return requested_; }
  std::uint64_t limit() const noexcept { return limit_; }

 private:
  std::uint64_t requested_;
  std::uint64_t limit_;
};

}  // namespace subrl
