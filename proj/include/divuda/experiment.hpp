#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "divuda/analysis.hpp"
#include "divuda/config.hpp"
#include "divuda/dataset.hpp"
#include "divuda/evaluate.hpp"
#include "divuda/trainer.hpp"

namespace divuda {

// Every key a configuration file may contain (sweep.<key> aside).
const std::vector<std::string>& recognized_keys();

// Scenario keys: classes.*, noise.*, blobs.*, samples_per_class, seed.
ScenarioSpec scenario_from_config(const KeyValueConfig& cfg);

/// Fully resolved settings of one run point.
struct RunSettings {
  ScenarioSpec scenario;
  TrainConfig train;
  bool source_eval = false;
  bool grid = false;
  GridBounds grid_bounds;
  std::size_t grid_resolution = 200;
  std::size_t density_bins = 30;
  std::optional<std::filesystem::path> source_csv;
  std::optional<std::filesystem::path> target_csv;
};

// Throws ConfigError on unrecognized keys or invalid values.
RunSettings run_settings_from_config(const KeyValueConfig& cfg);

struct SweepAxis {
  std::string key;
  std::vector<std::string> values;
};

struct ExperimentConfig {
  KeyValueConfig base;  // without sweep.* entries
  std::vector<std::uint64_t> seeds;
  std::vector<SweepAxis> axes;
  std::filesystem::path out_dir = "out";

  static ExperimentConfig from_config(const KeyValueConfig& cfg);
  // Cartesian product of sweep axes (first axis varies slowest) applied to `base`.
  std::vector<KeyValueConfig> points() const;
};

/// In-memory result of one (point, seed) run.
struct RunResult {
  TwinModel model;
  TrainLog log;
  EvalReport target_report;
  std::optional<EvalReport> source_report;
  DensityHistograms density;
  std::vector<GridRow> grid;
  double delta = 0.0;
};

// Data generation (or CSV ingestion), training, and evaluation; scenario and
// training randomness both come from `seed`.
RunResult run_point(const RunSettings& settings, std::uint64_t seed);

// Writes model.json, trainlog.csv, eval_target.json, [eval_source.json],
// density.csv and [grid.csv] into `dir`.
void write_run_artifacts(const RunResult& result, const std::filesystem::path& dir);

struct RunSummary {
  std::size_t point = 0;
  std::uint64_t seed = 0;
  std::string variant;
  std::string dir;
  double target_accuracy = 0.0;
  double unknown_rate = 0.0;
  std::optional<double> source_accuracy;
  double mean_jd_common = 0.0;
  double mean_jd_private = 0.0;
};

enum class Execution { kSerial, kParallel };

// Runs every (point, seed) pair. Independent runs are distributed over OpenMP
// threads under Execution::kParallel; the serial path is the reference. Writes
// manifest.json and summary.csv last. On failure, outputs created by this call
// are removed and the first error is rethrown.
std::vector<RunSummary> run_experiment(const ExperimentConfig& config,
                                       Execution execution = Execution::kParallel);

}  // namespace divuda
