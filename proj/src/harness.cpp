#include "tscp/harness.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <limits>
#include <thread>

namespace tscp::harness {

namespace fs = std::filesystem;
using conformal::SplitSpec;
using forecasters::ForecasterKind;

bool ResultRow::identical(const ResultRow& other) const {
  const auto same = [](double a, double b) {
    return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
  };
  return dataset == other.dataset && horizon_label == other.horizon_label &&
         estimator == other.estimator && same(mase, other.mase) && same(mcr, other.mcr) &&
         same(iw, other.iw) && same(msiw, other.msiw) && n_units == other.n_units &&
         failures == other.failures;
}

std::size_t default_adapter_context(std::size_t history_length) {
  constexpr std::size_t kStep = 32;
  constexpr std::size_t kMax = 512;
  if (history_length <= kStep) {
    throw Error(ErrorKind::SeriesTooShort,
                "history of " + std::to_string(history_length) +
                    " points cannot hold a 32-point context plus calibration");
  }
  // Calibration must keep >= 60% of the history: C <= 0.4 * N.
  const std::size_t budget = (history_length * 2) / 5;
  const std::size_t c = std::min(kMax, (budget / kStep) * kStep);
  return std::max(c, kStep);
}

conformal::SplitSpec default_split(const EstimatorConfig& estimator, std::size_t history_length,
                                   int horizon) {
  if (estimator.split) return *estimator.split;
  const auto& handle = estimator.handle;
  switch (handle.kind) {
    case ForecasterKind::Naive:
      return SplitSpec::context(1);
    case ForecasterKind::SeasonalNaive:
      return SplitSpec::context(static_cast<std::size_t>(handle.int_param("season_length", horizon)));
    case ForecasterKind::StatEnsembleLight:
      return SplitSpec::fraction(0.8);
    case ForecasterKind::External:
      return SplitSpec::context(default_adapter_context(history_length));
  }
  return SplitSpec::context(1);
}

std::unique_ptr<forecasters::Forecaster> make_forecaster(const forecasters::ForecasterHandle& handle) {
  switch (handle.kind) {
    case ForecasterKind::Naive:
      return std::make_unique<forecasters::NaiveForecaster>(handle.name);
    case ForecasterKind::SeasonalNaive:
      return std::make_unique<forecasters::SeasonalNaiveForecaster>(
          handle.name, handle.int_param("season_length", 0));
    case ForecasterKind::StatEnsembleLight:
      return std::make_unique<forecasters::StatEnsembleForecaster>(
          handle.name, handle.int_param("season_length", 0));
    case ForecasterKind::External: {
      bridge::ClientOptions options;
      options.timeout_ms = handle.int_param("timeout_ms", bridge::kDefaultTimeoutMs);
      return std::make_unique<bridge::ExternalForecaster>(
          handle.name, bridge::Endpoint::parse(*handle.param("endpoint")), options,
          static_cast<std::size_t>(handle.int_param("connections", 1)));
    }
  }
  throw Error(ErrorKind::ConfigError, "unsupported forecaster kind");
}

std::vector<TimeSeries> load_dataset(const DatasetConfig& dataset) {
  fs::path path;
  std::string format = dataset.format;
  if (dataset.path) {
    path = *dataset.path;
  } else {
    const fs::path manifest_path = dataset.manifest.value_or("data/manifest.json");
    const auto manifest = datasets::Manifest::load(manifest_path);
    const auto& entry = manifest.at(dataset.spec.name);
    path = datasets::fetch_dataset(manifest, dataset.spec.name, datasets::default_cache_dir()).path;
    format = entry.format;
  }
  if (format == "tsf") return datasets::load_tsf(path, dataset.spec.frequency);
  return datasets::load_long_csv(path, dataset.spec.frequency);
}

namespace {

template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

struct Unit {
  std::string id;
  std::optional<TimeSeries> history;
  std::vector<double> holdout;
  std::size_t group = 0;
  std::string error;  // set when the unit cannot be formed at all
};

std::vector<Unit> build_units(const ScenarioConfig& scenario, const std::vector<TimeSeries>& data) {
  std::vector<Unit> units;
  const auto h = static_cast<std::size_t>(scenario.horizon.steps);
  if (scenario.kind == ScenarioConfig::Kind::Windows) {
    for (const auto& series : data) {
      auto windows = datasets::sample_windows(series, scenario.windows);
      for (std::size_t w = 0; w < windows.size(); ++w) {
        Unit unit;
        unit.id = windows[w].window.id();
        unit.history = std::move(windows[w].window);
        unit.holdout = std::move(windows[w].holdout);
        unit.group = w;
        units.push_back(std::move(unit));
      }
    }
  } else {
    for (const auto& series : data) {
      Unit unit;
      unit.id = series.id();
      if (series.size() < h + 2) {
        unit.error = "SeriesTooShort: series of length " + std::to_string(series.size()) +
                     " cannot hold a horizon of " + std::to_string(h) + " plus calibration";
      } else {
        unit.history = series.slice(0, series.size() - h);
        const auto v = series.values();
        unit.holdout.assign(v.end() - static_cast<std::ptrdiff_t>(h), v.end());
      }
      units.push_back(std::move(unit));
    }
  }
  return units;
}

struct Calibrated {
  bool ok = false;
  std::string error;
  ConformityScores scores;
  Forecast test_forecast;
  std::size_t context_points = 0;
};

Calibrated calibrate_unit(const EstimatorConfig& estimator, forecasters::Forecaster& forecaster,
                          const Unit& unit, int horizon, std::size_t unit_index) {
  Calibrated out;
  if (!unit.error.empty()) {
    out.error = unit.error;
    return out;
  }
  try {
    const TimeSeries& history = *unit.history;
    const auto values = history.values();
    const SplitSpec split = default_split(estimator, history.size(), horizon);
    const bool seasonal_naive = estimator.handle.kind == ForecasterKind::SeasonalNaive;
    const int season = seasonal_naive ? estimator.handle.int_param("season_length", horizon)
                                      : history.frequency().default_season_length();
    auto* trainable = dynamic_cast<forecasters::TrainableForecaster*>(&forecaster);
    if (split.mode == SplitSpec::Mode::Fraction && trainable != nullptr) {
      auto calibration = conformal::split_calibrate(history, *trainable, split, unit_index);
      out.context_points = split.train_size(history.size());
      out.scores = std::move(calibration.scores);
      out.test_forecast = calibration.model->forecast(values, horizon);
    } else {
      const std::size_t c = split.train_size(history.size());
      out.context_points = c;
      out.scores = conformal::rolling_calibrate(history, forecaster, c, horizon, season, unit_index);
      forecasters::ForecastQuery query;
      query.series_id = history.id();
      query.window_index = unit_index;
      query.context = values.subspan(values.size() - c, c);
      query.horizon = horizon;
      query.frequency = history.frequency();
      query.season_length = season;
      out.test_forecast = forecaster.predict(query);
    }
    if (out.test_forecast.size() != static_cast<std::size_t>(horizon)) {
      throw Error(ErrorKind::ForecasterFailure, "test forecast has the wrong length");
    }
    out.ok = true;
  } catch (const Error& e) {
    out.error = e.what();
  } catch (const std::exception& e) {
    out.error = std::string("ForecasterFailure: ") + e.what();
  }
  return out;
}

// Runs one estimator over every unit of a scenario and builds intervals.
std::vector<UnitOutcome> run_estimator(const ExperimentConfig& config, const EstimatorConfig& estimator,
                                       forecasters::Forecaster& forecaster,
                                       const std::vector<Unit>& units, int horizon,
                                       std::size_t workers,
                                       std::optional<UncertaintyThreshold>* pooled_threshold) {
  std::vector<Calibrated> calibrated(units.size());
  parallel_for(units.size(), workers, [&](std::size_t i) {
    calibrated[i] = calibrate_unit(estimator, forecaster, units[i], horizon, i);
  });

  std::map<std::size_t, UncertaintyThreshold> group_thresholds;
  if (config.threshold_mode == conformal::ThresholdMode::Global) {
    std::map<std::size_t, conformal::ScoresBySeries> groups;
    for (std::size_t i = 0; i < units.size(); ++i) {
      if (calibrated[i].ok) groups[units[i].group].emplace(units[i].id, calibrated[i].scores);
    }
    for (const auto& [group, scores] : groups) {
      group_thresholds[group] = conformal::global_threshold(scores, config.alpha);
    }
    if (groups.size() == 1 && pooled_threshold != nullptr) {
      *pooled_threshold = group_thresholds.begin()->second;
    }
  }

  std::vector<UnitOutcome> outcomes(units.size());
  for (std::size_t i = 0; i < units.size(); ++i) {
    UnitOutcome& o = outcomes[i];
    const Unit& unit = units[i];
    Calibrated& c = calibrated[i];
    o.unit_id = unit.id;
    o.actual = unit.holdout;
    if (!c.ok) {
      o.error = c.error;
      continue;
    }
    try {
      o.context_points = c.context_points;
      o.calibration_points = c.scores.size();
      o.threshold = config.threshold_mode == conformal::ThresholdMode::Global
                        ? group_thresholds.at(unit.group)
                        : conformal::uncertainty_threshold(c.scores, config.alpha);
      o.interval = conformal::build_interval(c.test_forecast, o.threshold);
      o.record = metrics::evaluate(unit.id, unit.holdout, o.interval);
      const auto v = unit.history->values();
      const std::size_t tail = std::min<std::size_t>(v.size(), 3 * static_cast<std::size_t>(horizon));
      o.history_tail.assign(v.end() - static_cast<std::ptrdiff_t>(tail), v.end());
      o.ok = true;
    } catch (const Error& e) {
      o.error = e.what();
    }
  }
  return outcomes;
}

ResultRow summarize(const std::string& dataset, const HorizonSpec& horizon,
                    const std::string& estimator, std::vector<UnitOutcome>& model,
                    const std::vector<UnitOutcome>& naive) {
  ResultRow row;
  row.dataset = dataset;
  row.horizon_label = std::string(to_string(horizon.label));
  row.estimator = estimator;

  std::vector<metrics::EvaluationRecord> model_records;
  std::vector<metrics::EvaluationRecord> naive_records;
  for (std::size_t i = 0; i < model.size(); ++i) {
    auto& m = model[i];
    const auto& n = naive[i];
    if (m.ok && !n.ok) {
      m.ok = false;
      m.error = "naive baseline failed: " + n.error;
    } else if (m.ok && !(n.record.iw > 0.0)) {
      m.ok = false;
      m.error = "NaiveZeroWidth: naive interval width is zero for unit '" + n.unit_id + "'";
    } else if (m.ok && !(n.record.mae > 0.0)) {
      m.ok = false;
      m.error = "NaiveZeroError: naive absolute error is zero for unit '" + n.unit_id + "'";
    }
    if (m.ok) {
      model_records.push_back(m.record);
      naive_records.push_back(n.record);
    } else {
      ++row.failures;
    }
  }
  row.n_units = model_records.size();
  if (model_records.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    row.mase = row.mcr = row.iw = row.msiw = nan;
    return row;
  }
  row.mcr = metrics::mean_coverage_rate(model_records);
  double iw_total = 0.0;
  for (const auto& r : model_records) iw_total += r.iw;
  row.iw = iw_total / static_cast<double>(model_records.size());
  row.msiw = metrics::msiw(model_records, naive_records);
  row.mase = metrics::mase(model_records, naive_records);
  return row;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const std::vector<TimeSeries>& data) {
  if (data.empty()) throw Error(ErrorKind::ConfigError, "dataset has no series");
  if (config.estimators.empty()) throw Error(ErrorKind::ConfigError, "no estimators configured");
  ExperimentResult result;
  if (config.dataset.spec.expected_series > 0 && config.dataset.spec.expected_length > 0) {
    result.warnings = datasets::shape_discrepancies(config.dataset.spec, data);
  }

  const std::size_t hardware = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers =
      config.parallelism > 0 ? config.parallelism : std::min<std::size_t>(data.size(), hardware);

  std::vector<std::unique_ptr<forecasters::Forecaster>> forecasters;
  std::vector<std::string> setup_errors(config.estimators.size());
  for (std::size_t e = 0; e < config.estimators.size(); ++e) {
    const auto& handle = config.estimators[e].handle;
    forecasters.push_back(make_forecaster(handle));
    if (auto* external = dynamic_cast<bridge::ExternalForecaster*>(forecasters.back().get())) {
      try {
        const auto info = external->check();
        if (!info.supports(config.dataset.spec.frequency)) {
          setup_errors[e] = "ConfigError: adapter " + info.name + " does not support frequency " +
                            std::string(config.dataset.spec.frequency.name());
        }
      } catch (const Error& err) {
        setup_errors[e] = err.what();
      }
    }
  }

  const EstimatorConfig naive_config{
      forecasters::ForecasterHandle::make("Naive", ForecasterKind::Naive), std::nullopt};
  forecasters::NaiveForecaster naive_forecaster("Naive");

  for (const auto& scenario : config.scenarios) {
    const std::vector<Unit> units = build_units(scenario, data);
    const int horizon = scenario.horizon.steps;
    std::optional<UncertaintyThreshold> naive_pooled;
    const auto naive = run_estimator(config, naive_config, naive_forecaster, units, horizon,
                                     workers, &naive_pooled);

    for (std::size_t e = 0; e < config.estimators.size(); ++e) {
      const auto& estimator = config.estimators[e];
      CellResult cell;
      cell.dataset = scenario.label;
      cell.horizon = scenario.horizon;
      cell.estimator = estimator.handle.name;
      std::optional<UncertaintyThreshold> pooled;
      if (setup_errors[e].empty()) {
        cell.units = run_estimator(config, estimator, *forecasters[e], units, horizon, workers, &pooled);
      } else {
        cell.units.resize(units.size());
        for (std::size_t i = 0; i < units.size(); ++i) {
          cell.units[i].unit_id = units[i].id;
          cell.units[i].error = setup_errors[e];
        }
      }
      cell.row = summarize(scenario.label, scenario.horizon, estimator.handle.name, cell.units, naive);
      if (pooled && naive_pooled && naive_pooled->q_hat > 0.0) {
        cell.global_width_ratio =
            metrics::normalized_global_width(2.0 * pooled->q_hat, 2.0 * naive_pooled->q_hat);
      }
      result.rows.push_back(cell.row);
      result.cells.push_back(std::move(cell));
    }
  }

  for (std::size_t e = 0; e < config.estimators.size(); ++e) {
    if (auto* external = dynamic_cast<bridge::ExternalForecaster*>(forecasters[e].get())) {
      result.latency[config.estimators[e].handle.name] = external->latency();
    }
  }
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  return run_experiment(config, load_dataset(config.dataset));
}

}  // namespace tscp::harness
