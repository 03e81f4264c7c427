#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>

#include "tscp/domain.hpp"
#include "tscp/forecasters.hpp"

namespace tscp::conformal {

// Either a train fraction (train = floor(fraction * N)) or a fixed context
// length for rolling-window calibration.
struct SplitSpec {
  enum class Mode { Fraction, Context };

  Mode mode = Mode::Context;
  double train_fraction = 0.8;
  std::size_t context_length = 1;

  static SplitSpec fraction(double train_fraction);
  static SplitSpec context(std::size_t context_length);

  // Number of leading points that go to training/context for a series of
  // length n. Throws SeriesTooShort when either side would be empty.
  std::size_t train_size(std::size_t n) const;
};

enum class ThresholdMode { Local, Global };

std::string_view to_string(ThresholdMode mode);
ThresholdMode parse_threshold_mode(std::string_view text);

std::pair<TimeSeries, TimeSeries> split_train_calibration(const TimeSeries& series,
                                                          const SplitSpec& spec);

ConformityScores conformity_scores(const Forecast& predicted, std::span<const double> actual);
ConformityScores conformity_scores(const Forecast& predicted, std::span<const double> actual,
                                   const ScoreOrigin& first);

// 1-based rank ceil((n + 1)(1 - alpha)) computed exactly: alpha is taken at
// its shortest decimal representation, so 0.1 means one tenth.
std::size_t corrected_rank(std::size_t calibration_size, MiscoverageRate alpha);

// min(1, corrected_rank / n).
double corrected_level(std::size_t calibration_size, MiscoverageRate alpha);

// Exact order statistic at corrected_rank, or the maximum when the rank
// exceeds n. Never interpolated.
UncertaintyThreshold uncertainty_threshold(std::span<const double> scores, MiscoverageRate alpha);
UncertaintyThreshold uncertainty_threshold(const ConformityScores& scores, MiscoverageRate alpha);

PredictionInterval build_interval(const Forecast& center, const UncertaintyThreshold& threshold);

using ScoresBySeries = std::map<std::string, ConformityScores>;

std::map<std::string, UncertaintyThreshold> local_thresholds(const ScoresBySeries& scores,
                                                             MiscoverageRate alpha);
UncertaintyThreshold global_threshold(const ScoresBySeries& scores, MiscoverageRate alpha);

// Residuals from windows of `context_length` true values, each forecasting
// `horizon` points and shifting by `horizon`; the last partial window keeps
// only the first r = (N - C) mod H scores. Always N - C scores.
ConformityScores rolling_calibrate(const TimeSeries& series, forecasters::Forecaster& forecaster,
                                   std::size_t context_length, int horizon,
                                   int season_length = 0, std::size_t window_index = 0);

// Number of forecasts rolling_calibrate issues: ceil((N - C) / H).
std::size_t rolling_window_count(std::size_t n, std::size_t context_length, int horizon);

struct SplitCalibration {
  ConformityScores scores;
  std::unique_ptr<forecasters::FittedModel> model;
};

// Fits once on the training split and scores a single multi-step forecast
// over the whole calibration split.
SplitCalibration split_calibrate(const TimeSeries& series,
                                 const forecasters::TrainableForecaster& forecaster,
                                 const SplitSpec& spec, std::size_t window_index = 0);

}  // namespace tscp::conformal
