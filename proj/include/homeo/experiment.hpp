#pragma once

// Training and evaluation drivers: per-seed PPO runs, behavioural test runs,
// and the on-disk layout of every metrics file.
//
//   <out>/config.json
//   <out>/<condition>/seed_<k>/train.csv       per-iteration learning metrics
//   <out>/<condition>/seed_<k>/checkpoint.bin
//   <out>/<condition>/seed_<k>/eval.csv        metric,value
//   <out>/<condition>/seed_<k>/trajectory.csv  test-run transitions
//   <out>/<condition>/seed_<k>/histogram.csv   partner energy at ingestion
//   <out>/<condition>/seed_<k>/rescues.csv     2-D field only
//   <out>/<condition>/learning_curve.csv       mean and 95% CI across seeds
//   <out>/summary.csv                          one row per (condition, seed)

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "homeo/checkpoint.hpp"
#include "homeo/config.hpp"

namespace homeo {

struct TrainingRow {
  int iteration = 0;
  std::int64_t timestep = 0;
  std::int64_t episodes_completed = 0;
  double mean_episode_duration = 0.0;  // last 100 completed episodes; NaN before the first
  UpdateStats stats;
};

struct SeedRun {
  EmpathyCondition condition;
  int seed_index = 0;
  std::uint64_t seed = 0;
  std::int64_t timesteps = 0;
  std::vector<TrainingRow> rows;
  PolicyNetwork network{NetworkShape{}};
};

using ProgressFn = std::function<void(const TrainingRow&)>;
using CheckpointFn = std::function<void(const PolicyNetwork&, const TrainingRow&)>;

std::uint64_t seed_for(const ExperimentConfig& config, int seed_index);

SeedRun train_seed(const ExperimentConfig& config, const EmpathyCondition& cond, int seed_index,
                   const ProgressFn& progress = {}, const CheckpointFn& checkpoint = {});

struct RescueEvent {
  int episode = 0;
  int t_pass = 0;     // step at which food was handed to the immobile agent
  int t_recover = 0;  // step at which the agent ate and could move again
  int rescuer = 0;
  int rescued = 1;
};

struct EvalMetrics {
  int episodes = 0;
  double mean_episode_duration = 0.0;
  std::vector<int> durations;

  int test_steps = 0;
  int pass_count = 0;
  int pass_when_partner_low = 0;  // food-share: Partner Low at decision time
  int partner_low_steps = 0;
  double pass_rate = 0.0;
  double partner_low_rate = 0.0;

  double mean_possessor_drive = 0.0;
  double mean_partner_drive = 0.0;
  double var_possessor_drive = 0.0;
  double var_partner_drive = 0.0;

  std::vector<int> ingestion_histogram;
  std::vector<double> ingestion_energies;
  std::vector<RescueEvent> rescues;

  std::vector<std::string> trajectory;  // CSV rows of the test run
  std::string trajectory_header;
};

/// Sampled-policy evaluation: `episodes` full episodes for duration, then a
/// test run of `test_steps` steps (resetting as needed) for behaviour rates.
EvalMetrics evaluate_policy(const ExperimentConfig& config, const EmpathyCondition& cond,
                            const PolicyNetwork& network, std::uint64_t seed);

/// Writes eval.csv, trajectory.csv, histogram.csv (and rescues.csv) into dir.
void write_eval_outputs(const EvalMetrics& m, const ExperimentConfig& config,
                        const std::filesystem::path& dir);
EvalMetrics read_eval_metrics(const std::filesystem::path& eval_csv);

void write_training_csv(const std::vector<TrainingRow>& rows, const std::filesystem::path& path);

struct TrainOptions {
  std::optional<int> n_seeds;  // overrides config.n_seeds
  int jobs = 1;                // (condition, seed) tasks run concurrently
  bool evaluate = true;
  std::ostream* log = nullptr;
};

struct TrainingSummary {
  std::filesystem::path output_dir;
  struct Entry {
    EmpathyCondition condition;
    int seed_index = 0;
    std::uint64_t seed = 0;
    std::int64_t timesteps = 0;
    EvalMetrics eval;
  };
  std::vector<Entry> entries;

  std::vector<const Entry*> for_condition(EmpathyKind kind) const;
};

TrainingSummary run_training(const ExperimentConfig& config, const TrainOptions& options = {});

/// Loads a checkpoint and evaluates it under its embedded config. Outputs go
/// to out_dir when given.
EvalMetrics run_eval(const std::filesystem::path& checkpoint, std::optional<std::uint64_t> seed,
                     const std::optional<std::filesystem::path>& out_dir);

/// Aggregates <dir>/<condition>/seed_*/train.csv into learning_curve.csv.
void write_learning_curve(const std::filesystem::path& condition_dir);

}  // namespace homeo
