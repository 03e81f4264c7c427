#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "tscp/harness.hpp"

using namespace tscp;
using namespace tscp::harness;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no tscp::Error thrown";
  return ErrorKind::IoError;
}

const std::string kNn5Config = R"({
  "dataset": {"name": "nn5_daily"},
  "alpha": 0.1,
  "scenarios": [{"kind": "per_series", "horizons": ["S", "M", "L"]}],
  "estimators": [
    {"name": "Naive", "kind": "naive"},
    {"name": "SeasonalNaive", "kind": "seasonal_naive"},
    {"name": "StatisticalEnsemble_light", "kind": "stat_ensemble_light"}
  ]
})";

std::vector<TimeSeries> nn5_like(std::size_t n_series = 6) {
  auto spec = datasets::DatasetSpec::standard("nn5_daily");
  spec.expected_series = n_series;
  return datasets::synth_dataset(spec, 3);
}

const CellResult& cell(const ExperimentResult& r, const std::string& estimator, HorizonLabel label) {
  for (const auto& c : r.cells) {
    if (c.estimator == estimator && c.horizon.label == label) return c;
  }
  throw std::runtime_error("no cell " + estimator);
}

}  // namespace

TEST(Config, ParsesAndDefaults) {
  const auto c = ExperimentConfig::parse(kNn5Config, "/base");
  EXPECT_EQ(c.dataset.spec.frequency, Frequency(FrequencyKind::Daily));
  EXPECT_EQ(c.dataset.spec.expected_series, 100u);
  ASSERT_EQ(c.scenarios.size(), 3u);
  EXPECT_EQ(c.scenarios[2].horizon.steps, 35);
  EXPECT_EQ(c.scenarios[0].label, "nn5_daily");
  EXPECT_EQ(c.output_dir, "/base/results");
  EXPECT_EQ(c.estimators[1].handle.kind, forecasters::ForecasterKind::SeasonalNaive);
  EXPECT_FALSE(c.estimators[0].split.has_value());
}

TEST(Config, Errors) {
  EXPECT_EQ(kind_of([] { ExperimentConfig::parse("{"); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] {
              ExperimentConfig::parse(R"({"dataset":{"name":"nn5_daily"},"alpha":1.5,
                "scenarios":[{"kind":"per_series","horizon":"S"}],"estimators":[{"name":"a","kind":"naive"}]})");
            }),
            ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] {
              ExperimentConfig::parse(R"({"dataset":{"name":"nn5_daily"},
                "scenarios":[{"kind":"per_series","horizon":"S"}],
                "estimators":[{"name":"a","kind":"naive"},{"name":"a","kind":"naive"}]})");
            }),
            ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] {
              ExperimentConfig::parse(R"({"dataset":{"name":"custom"},
                "scenarios":[{"kind":"per_series","horizon":"S"}],"estimators":[{"name":"a","kind":"naive"}]})");
            }),
            ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] {
              ExperimentConfig::parse(R"({"dataset":{"name":"nn5_daily"},
                "scenarios":[{"kind":"per_series","horizon":{"label":"S","steps":9}}],
                "estimators":[{"name":"a","kind":"naive"}]})");
            }),
            ErrorKind::ConfigError);
}

TEST(Defaults, AdapterContext) {
  EXPECT_EQ(default_adapter_context(2232), 512u);
  EXPECT_EQ(default_adapter_context(8760), 512u);
  EXPECT_EQ(default_adapter_context(500), 192u);
  EXPECT_EQ(default_adapter_context(60), 32u);
  EXPECT_EQ(kind_of([] { default_adapter_context(32); }), ErrorKind::SeriesTooShort);
  for (std::size_t n = 33; n < 3000; ++n) {
    const auto c = default_adapter_context(n);
    ASSERT_EQ(c % 32, 0u);
    ASSERT_LE(c, 512u);
    ASSERT_TRUE(c == 32 || 10 * c <= 4 * n) << n;
  }
}

TEST(Defaults, SplitsPerKind) {
  const auto cfg = ExperimentConfig::parse(kNn5Config);
  EXPECT_EQ(default_split(cfg.estimators[0], 784, 7).train_size(784), 1u);
  EXPECT_EQ(default_split(cfg.estimators[1], 784, 7).train_size(784), 7u);
  EXPECT_EQ(default_split(cfg.estimators[2], 784, 7).train_size(784), 627u);
}

TEST(Run, CalibrationCountsFollowPerEstimatorSplits) {
  const auto cfg = ExperimentConfig::parse(kNn5Config);
  const auto result = run_experiment(cfg, nn5_like());
  for (HorizonLabel label : {HorizonLabel::S, HorizonLabel::M, HorizonLabel::L}) {
    const std::size_t h = static_cast<std::size_t>(HorizonSpec::standard(Frequency(FrequencyKind::Daily), label).steps);
    const std::size_t history = 791 - h;
    for (const auto& u : cell(result, "Naive", label).units) {
      ASSERT_TRUE(u.ok) << u.error;
      EXPECT_EQ(u.context_points, 1u);
      EXPECT_EQ(u.calibration_points, 791 - 1 - h);
    }
    for (const auto& u : cell(result, "SeasonalNaive", label).units) {
      EXPECT_EQ(u.context_points, h);
      EXPECT_EQ(u.calibration_points, 791 - 2 * h);
    }
    for (const auto& u : cell(result, "StatisticalEnsemble_light", label).units) {
      ASSERT_TRUE(u.ok) << u.error;
      const std::size_t train = history * 8 / 10;
      EXPECT_EQ(u.context_points, train);
      EXPECT_EQ(u.calibration_points, history - train);
    }
  }
}

TEST(Run, NaiveRowsScaleToOneAndCountsAddUp) {
  const auto cfg = ExperimentConfig::parse(kNn5Config);
  const auto data = nn5_like();
  const auto result = run_experiment(cfg, data);
  ASSERT_EQ(result.rows.size(), 9u);
  for (const auto& row : result.rows) {
    EXPECT_EQ(row.n_units + row.failures, data.size());
    if (row.estimator == "Naive") {
      EXPECT_EQ(row.mase, 1.0);
      EXPECT_EQ(row.msiw, 1.0);
    }
    EXPECT_GT(row.mcr, 0.0);
    EXPECT_LE(row.mcr, 1.0);
  }
}

TEST(Run, DeterministicAcrossRunsAndThreadCounts) {
  auto cfg = ExperimentConfig::parse(kNn5Config);
  const auto data = nn5_like(5);
  cfg.parallelism = 1;
  const auto a = run_experiment(cfg, data);
  cfg.parallelism = 4;
  const auto b = run_experiment(cfg, data);
  const auto c = run_experiment(cfg, data);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_TRUE(a.rows[i].identical(b.rows[i])) << a.rows[i].estimator;
    EXPECT_TRUE(b.rows[i].identical(c.rows[i]));
  }
}

TEST(Run, WindowScenarioAndGlobalMode) {
  const std::string text = R"({
    "dataset": {"name": "ercot"},
    "scenarios": [{"kind": "windows", "window_points": 600, "n_windows": 4, "horizon": "S"}],
    "estimators": [{"name": "Naive", "kind": "naive"},
                   {"name": "SN", "kind": "seasonal_naive", "params": {"season_length": 24}}]
  })";
  auto cfg = ExperimentConfig::parse(text);
  const auto series = datasets::synth_seasonal(3000, 24, 10, 1, 8);
  const std::vector<TimeSeries> data{series};
  const auto local = run_experiment(cfg, data);
  cfg.threshold_mode = conformal::ThresholdMode::Global;
  const auto global = run_experiment(cfg, data);
  ASSERT_EQ(local.rows.size(), 2u);
  EXPECT_EQ(local.rows[0].dataset, "ercot-600");
  EXPECT_EQ(local.rows[0].n_units, 4u);
  // With one series, each window is its own pooling group.
  for (std::size_t i = 0; i < local.rows.size(); ++i) EXPECT_TRUE(local.rows[i].identical(global.rows[i]));
  for (std::size_t c = 0; c < local.cells.size(); ++c) {
    for (std::size_t u = 0; u < local.cells[c].units.size(); ++u) {
      EXPECT_EQ(local.cells[c].units[u].threshold.q_hat, global.cells[c].units[u].threshold.q_hat);
    }
  }
}

TEST(Run, GlobalPoolsAcrossSeries) {
  auto cfg = ExperimentConfig::parse(kNn5Config);
  cfg.threshold_mode = conformal::ThresholdMode::Global;
  const auto result = run_experiment(cfg, nn5_like(4));
  const auto& naive = cell(result, "Naive", HorizonLabel::S);
  for (const auto& u : naive.units) {
    EXPECT_EQ(u.threshold.q_hat, naive.units[0].threshold.q_hat);
    EXPECT_EQ(u.threshold.calibration_size, 4 * (791 - 1 - 7u));
  }
  ASSERT_TRUE(naive.global_width_ratio.has_value());
  EXPECT_EQ(*naive.global_width_ratio, 1.0);
}

TEST(Run, FailuresAreCountedNotDropped) {
  const std::string text = R"({
    "dataset": {"name": "nn5_weekly"},
    "scenarios": [{"kind": "per_series", "horizon": "L"}],
    "estimators": [{"name": "Ens", "kind": "stat_ensemble_light"},
                   {"name": "Broken", "kind": "external",
                    "params": {"endpoint": ")" + std::string(TSCP_ECHO_ADAPTER) + R"( --mode nan", "timeout_ms": 5000},
                    "split": {"mode": "context", "context_length": 32}}]
  })";
  const auto cfg = ExperimentConfig::parse(text);
  auto data = nn5_like(3);
  std::vector<TimeSeries> weekly;
  for (const auto& s : data) {
    weekly.emplace_back(s.id(), s.start(), Frequency(FrequencyKind::Weekly),
                        std::vector<double>(s.values().begin(), s.values().begin() + 105));
  }
  // One series too short to hold the horizon plus calibration.
  weekly.emplace_back("tiny", Timestamp{}, Frequency(FrequencyKind::Weekly), std::vector<double>(13, 1.0));
  const auto result = run_experiment(cfg, weekly);
  ASSERT_EQ(result.rows.size(), 2u);
  EXPECT_EQ(result.rows[0].failures, 1u);
  EXPECT_EQ(result.rows[0].n_units, 3u);
  EXPECT_EQ(result.rows[1].failures, 4u);
  EXPECT_EQ(result.rows[1].n_units, 0u);
  EXPECT_TRUE(std::isnan(result.rows[1].mase));
  for (const auto& u : result.cells[1].units) {
    EXPECT_FALSE(u.ok);
    EXPECT_FALSE(u.error.empty());
  }
  EXPECT_FALSE(result.warnings.empty());
}

TEST(Run, UnreachableAdapterFailsEveryUnit) {
  const std::string text = R"({
    "dataset": {"name": "nn5_daily"},
    "scenarios": [{"kind": "per_series", "horizon": "S"}],
    "estimators": [{"name": "Gone", "kind": "external",
                    "params": {"endpoint": "/nonexistent/adapter 2>/dev/null", "timeout_ms": 2000}}]
  })";
  const auto result = run_experiment(ExperimentConfig::parse(text), nn5_like(2));
  EXPECT_EQ(result.rows[0].failures, 2u);
  EXPECT_NE(result.cells[0].units[0].error.find("Unreachable"), std::string::npos);
}

TEST(Config, ShippedConfigsParse) {
  std::size_t n = 0;
  for (const auto& entry : std::filesystem::directory_iterator(std::filesystem::path(TSCP_SOURCE_DIR) / "configs")) {
    if (entry.path().extension() != ".json") continue;
    EXPECT_NO_THROW(ExperimentConfig::load(entry.path())) << entry.path();
    ++n;
  }
  EXPECT_GE(n, 5u);
  EXPECT_NO_THROW(datasets::Manifest::load(std::filesystem::path(TSCP_SOURCE_DIR) / "data" / "manifest.json"));
}
