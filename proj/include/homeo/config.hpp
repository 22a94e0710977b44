#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "homeo/field2d.hpp"
#include "homeo/foodshare.hpp"
#include "homeo/grid.hpp"
#include "homeo/network.hpp"
#include "homeo/ppo.hpp"

namespace homeo {

enum class EnvironmentId { kFoodShare, kGrid, kField2D };

std::string_view to_string(EnvironmentId id);
EnvironmentId parse_environment_id(std::string_view name);

struct EnvironmentConfig {
  EnvironmentId id = EnvironmentId::kFoodShare;
  FoodShareConfig foodshare;
  GridConfig grid;
  Field2DConfig field2d;
};

std::unique_ptr<Environment> make_environment(const EnvironmentConfig& config,
                                              const EmpathyCondition& cond);

struct EvalProtocol {
  int test_steps = 1000;     // behavioural test run, continues across resets
  int episodes = 16;         // full episodes for the duration metric
  int histogram_bins = 20;   // partner energy at ingestion over [-1, 1]
  int drive_window = 1000;   // leading test-run steps averaged for drive statistics
};

struct ExperimentConfig {
  std::string name = "foodshare";
  EnvironmentConfig environment;
  std::vector<EmpathyCondition> conditions;
  int encoder_size = 16;
  int recurrent_size = 16;
  PpoConfig ppo;
  int n_seeds = 5;
  std::uint64_t base_seed = 1;
  EvalProtocol eval;
  int checkpoint_interval = 0;  // iterations; 0 keeps only the final checkpoint
  std::string output_dir;       // empty: $HOMEO_OUTPUT_ROOT/<name> or runs/<name>

  /// Throws std::invalid_argument on any inconsistent field.
  void validate() const;
  NetworkShape network_shape(const EmpathyCondition& cond) const;

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  /// FNV-1a over the canonical JSON dump, as 16 hex digits.
  std::string hash() const;

  /// Built-in presets: foodshare, grid, field2d, field2d-desk.
  static ExperimentConfig preset(std::string_view name);
  static std::vector<std::string> preset_names();
};

ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& config, const std::filesystem::path& path);

/// Output root for an experiment: config.output_dir, else $HOMEO_OUTPUT_ROOT/<name>,
/// else runs/<name>.
std::filesystem::path resolve_output_dir(const ExperimentConfig& config);

std::string fnv1a_hex(std::string_view bytes);

}  // namespace homeo
