#pragma once

#include <span>
#include <string>
#include <vector>

#include "tscp/domain.hpp"

namespace tscp::metrics {

// Per-unit scores. A unit is a series, or a sampled window of a single series.
struct EvaluationRecord {
  std::string unit_id;
  double cr = 0.0;
  double iw = 0.0;
  double mae = 0.0;

  friend bool operator==(const EvaluationRecord&, const EvaluationRecord&) = default;
};

struct AggregateReport {
  double mcr = 0.0;
  double msiw = 0.0;
  double mase = 0.0;
  std::size_t n_units = 0;
};

// Fraction of actuals inside [lower, upper], bounds inclusive.
double coverage_rate(std::span<const double> actual, const PredictionInterval& interval);

// Mean of (upper - lower).
double interval_width(const PredictionInterval& interval);

double mean_absolute_error(std::span<const double> actual, const Forecast& forecast);

EvaluationRecord evaluate(std::string unit_id, std::span<const double> actual,
                          const PredictionInterval& interval);

double mean_coverage_rate(std::span<const EvaluationRecord> records);

// Mean of per-unit IW ratios against the naive model (mean of ratios).
double msiw(std::span<const EvaluationRecord> model, std::span<const EvaluationRecord> naive);

// Sum of model MAE over sum of naive MAE (ratio of sums).
double mase(std::span<const EvaluationRecord> model, std::span<const EvaluationRecord> naive);

// l / l_naive for the single width of a global-threshold run.
double normalized_global_width(double model_iw, double naive_iw);

AggregateReport aggregate(std::span<const EvaluationRecord> model,
                          std::span<const EvaluationRecord> naive);

}  // namespace tscp::metrics
