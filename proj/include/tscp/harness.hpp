#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tscp/bridge.hpp"
#include "tscp/conformal.hpp"
#include "tscp/datasets.hpp"
#include "tscp/domain.hpp"
#include "tscp/forecasters.hpp"
#include "tscp/metrics.hpp"

namespace tscp::harness {

struct DatasetConfig {
  datasets::DatasetSpec spec;
  std::optional<std::filesystem::path> path;      // local file; otherwise fetched
  std::optional<std::filesystem::path> manifest;  // defaults to data/manifest.json
  std::string format = "long_csv";                // long_csv | tsf
  bool strict_horizons = true;
};

struct EstimatorConfig {
  forecasters::ForecasterHandle handle;
  std::optional<conformal::SplitSpec> split;  // per-kind default when absent
};

struct ScenarioConfig {
  enum class Kind { Windows, PerSeries };

  Kind kind = Kind::PerSeries;
  std::string label;  // dataset column in the result table
  HorizonSpec horizon;
  datasets::WindowScenario windows;  // Windows only
};

struct ExperimentConfig {
  DatasetConfig dataset;
  std::vector<ScenarioConfig> scenarios;
  std::vector<EstimatorConfig> estimators;
  MiscoverageRate alpha{0.1};
  conformal::ThresholdMode threshold_mode = conformal::ThresholdMode::Local;
  std::filesystem::path output_dir = "results";
  std::size_t parallelism = 0;  // 0: one worker per series, capped by hardware threads
  std::uint64_t seed = 0;
  bool plots = false;  // per-cell interval plot of the first unit

  // Relative paths resolve against base_dir.
  static ExperimentConfig parse(std::string_view json_text,
                                const std::filesystem::path& base_dir = {});
  static ExperimentConfig load(const std::filesystem::path& path);

  void override_seed(std::uint64_t new_seed);
};

struct ResultRow {
  std::string dataset;
  std::string horizon_label;
  std::string estimator;
  double mase = 0.0;
  double mcr = 0.0;
  double iw = 0.0;
  double msiw = 0.0;
  std::size_t n_units = 0;
  std::size_t failures = 0;

  // Bitwise comparison of the metric values (NaN equals NaN).
  bool identical(const ResultRow& other) const;
};

struct UnitOutcome {
  std::string unit_id;
  bool ok = false;
  std::string error;
  std::size_t context_points = 0;
  std::size_t calibration_points = 0;
  std::vector<double> history_tail;  // last few horizons of history, for plots
  UncertaintyThreshold threshold;
  PredictionInterval interval;
  std::vector<double> actual;
  metrics::EvaluationRecord record;
};

struct CellResult {
  std::string dataset;
  HorizonSpec horizon;
  std::string estimator;
  ResultRow row;
  std::vector<UnitOutcome> units;
  // l / l_naive when one global threshold covers the whole cell.
  std::optional<double> global_width_ratio;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::vector<CellResult> cells;
  std::map<std::string, bridge::LatencyStats> latency;
  std::vector<std::string> warnings;
};

// Largest multiple of 32 that is at most 512 and leaves at least 60% of the
// history for calibration; never below 32.
std::size_t default_adapter_context(std::size_t history_length);

conformal::SplitSpec default_split(const EstimatorConfig& estimator, std::size_t history_length,
                                   int horizon);

std::unique_ptr<forecasters::Forecaster> make_forecaster(const forecasters::ForecasterHandle& handle);

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::vector<TimeSeries>& data);
// Loads the dataset (local path or manifest + cache) and runs it.
ExperimentResult run_experiment(const ExperimentConfig& config);

std::vector<TimeSeries> load_dataset(const DatasetConfig& dataset);

}  // namespace tscp::harness
