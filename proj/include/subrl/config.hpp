#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "subrl/policy.hpp"
#include "subrl/rewards.hpp"
#include "subrl/smdp.hpp"
#include "subrl/trainer.hpp"

namespace subrl::app {

/// The published experiment schema (schemas/experiment.schema.json).
const nlohmann::json& experiment_schema();

/// Validates `doc` against the JSON-Schema subset the experiment schema uses
/// (type, const, enum, properties, required, additionalProperties, items,
/// min/maxItems, numeric bounds, allOf, oneOf, if/then). Returns one message
/// per violation, each prefixed with its JSON pointer.
std::vector<std::string> schema_errors(const nlohmann::json& doc, const nlohmann::json& schema);

/// Hex SHA-256 of the canonical (sorted-key, compact) serialization.
std::string config_hash(const nlohmann::json& doc);

struct Experiment {
  nlohmann::json doc;
  std::filesystem::path base_dir;
  Smdp smdp;
  RewardPtr reward;
  /// Grid geometry when the environment is a grid; 0 otherwise.
  int grid_width = 0;
  int grid_height = 0;
  TrainConfig train;
  std::vector<std::uint64_t> seeds;
  std::string output_dir;

  std::string hash() const { return config_hash(doc); }
  /// Policy described by the "policy" block, initialized from `seed`.
  std::unique_ptr<Policy> make_policy(std::uint64_t seed) const;
  const nlohmann::json& oracle() const;
};

/// Throws ConfigError listing every schema violation.
void validate_experiment(const nlohmann::json& doc);

/// Validates and builds; relative file paths resolve against `base_dir`.
Experiment build_experiment(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
Experiment load_experiment(const std::string& path);

/// Rewrites the policy block from a --policy flag value: "tabular", "mlp"
/// or "history:k".
void apply_policy_flag(nlohmann::json& doc, const std::string& flag);

}  // namespace subrl::app
