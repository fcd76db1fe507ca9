#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace subrl::app {

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitSizeRefusal = 2;

struct TrainOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  /// Runs seeds first, first+1, ..., first+n-1, with `first` the config's first seed.
  std::optional<int> seeds;
  std::optional<std::string> out;
  std::optional<std::string> estimator;
  std::optional<std::string> policy;
};

/// Writes <out>/config.json, <out>/seed_<s>/{curve.csv,policy.ckpt} and
/// <out>/summary.json; the summary is also printed to `log`.
int cmd_train(const TrainOptions& options, std::ostream& log);

struct OracleOptions {
  std::string config_path;
  std::string check;
  std::optional<std::string> out;
};

/// Checks: submodularity, monotonicity, brute-force, greedy, dr-check,
/// curvature, markov-optimality. Prints the verdict JSON; exit 0 iff pass.
int cmd_oracle(const OracleOptions& options, std::ostream& log);

struct EvalOptions {
  std::string config_path;
  std::string checkpoint;
  std::optional<std::size_t> episodes;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

int cmd_eval(const EvalOptions& options, std::ostream& log);

}  // namespace subrl::app
