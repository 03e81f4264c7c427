#include "tscp/conformal.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace tscp::conformal {

SplitSpec SplitSpec::fraction(double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "train fraction must lie in (0, 1)");
  }
  SplitSpec spec;
  spec.mode = Mode::Fraction;
  spec.train_fraction = train_fraction;
  return spec;
}

SplitSpec SplitSpec::context(std::size_t context_length) {
  if (context_length == 0) {
    throw Error(ErrorKind::InvalidArgument, "context length must be positive");
  }
  SplitSpec spec;
  spec.mode = Mode::Context;
  spec.context_length = context_length;
  return spec;
}

std::size_t SplitSpec::train_size(std::size_t n) const {
  std::size_t train = 0;
  if (mode == Mode::Fraction) {
    train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
  } else {
    train = context_length;
  }
  if (train < 1 || train >= n) {
    throw Error(ErrorKind::SeriesTooShort,
                "series of length " + std::to_string(n) + " cannot be split into " +
                    std::to_string(train) + " training points and a nonempty calibration set");
  }
  return train;
}

std::string_view to_string(ThresholdMode mode) {
  return mode == ThresholdMode::Local ? "local" : "global";
}

ThresholdMode parse_threshold_mode(std::string_view text) {
  if (text == "local") return ThresholdMode::Local;
  if (text == "global") return ThresholdMode::Global;
  throw Error(ErrorKind::ConfigError, "threshold mode must be local or global");
}

std::pair<TimeSeries, TimeSeries> split_train_calibration(const TimeSeries& series,
                                                          const SplitSpec& spec) {
  const std::size_t n = series.size();
  const std::size_t train = spec.train_size(n);
  return {series.slice(0, train), series.slice(train, n - train)};
}

ConformityScores conformity_scores(const Forecast& predicted, std::span<const double> actual) {
  return conformity_scores(predicted, actual, ScoreOrigin{});
}

ConformityScores conformity_scores(const Forecast& predicted, std::span<const double> actual,
                                   const ScoreOrigin& first) {
  if (predicted.size() != actual.size()) {
    throw Error(ErrorKind::LengthMismatch,
                "forecast has " + std::to_string(predicted.size()) + " points, actuals " +
                    std::to_string(actual.size()));
  }
  std::vector<double> scores(actual.size());
  std::vector<ScoreOrigin> origins(actual.size(), first);
  for (std::size_t k = 0; k < actual.size(); ++k) {
    if (!std::isfinite(actual[k])) {
      throw Error(ErrorKind::MissingValue, "non-finite actual at offset " + std::to_string(k));
    }
    scores[k] = std::fabs(predicted[k] - actual[k]);
    origins[k].offset = first.offset + k;
  }
  return ConformityScores(std::move(scores), std::move(origins));
}

namespace {

// alpha == mantissa * 10^-scale, read from its shortest round-trip decimal.
struct DecimalAlpha {
  unsigned __int128 mantissa = 0;
  int scale = 0;
  bool exact = false;
};

DecimalAlpha decimal_alpha(double alpha) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof buf, alpha);
  const std::string_view text(buf, static_cast<std::size_t>(result.ptr - buf));
  DecimalAlpha out;
  int exponent = 0;
  int fraction_digits = 0;
  bool after_point = false;
  std::size_t i = 0;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '.') {
      after_point = true;
    } else if (c >= '0' && c <= '9') {
      out.mantissa = out.mantissa * 10 + static_cast<unsigned>(c - '0');
      if (after_point) ++fraction_digits;
      if (out.mantissa > static_cast<unsigned __int128>(1e20)) return out;
    } else {
      break;
    }
  }
  if (i < text.size() && text[i] == 'e') {
    std::from_chars(text.data() + i + 1 + (text[i + 1] == '+' ? 1 : 0),
                    text.data() + text.size(), exponent);
  }
  out.scale = fraction_digits - exponent;
  out.exact = out.scale >= 0 && out.scale <= 26;
  return out;
}

}  // namespace

std::size_t corrected_rank(std::size_t calibration_size, MiscoverageRate alpha) {
  if (calibration_size == 0) {
    throw Error(ErrorKind::EmptyCalibration, "calibration set is empty");
  }
  const DecimalAlpha dec = decimal_alpha(alpha.value());
  if (dec.exact && calibration_size < (std::size_t{1} << 40)) {
    unsigned __int128 denom = 1;
    for (int i = 0; i < dec.scale; ++i) denom *= 10;
    const unsigned __int128 numer = static_cast<unsigned __int128>(calibration_size + 1) *
                                    (denom - dec.mantissa);
    return static_cast<std::size_t>((numer + denom - 1) / denom);
  }
  const long double product =
      static_cast<long double>(calibration_size + 1) * (1.0L - static_cast<long double>(alpha.value()));
  return static_cast<std::size_t>(std::ceil(product));
}

double corrected_level(std::size_t calibration_size, MiscoverageRate alpha) {
  const std::size_t rank = corrected_rank(calibration_size, alpha);
  if (rank >= calibration_size) return 1.0;
  return static_cast<double>(rank) / static_cast<double>(calibration_size);
}

UncertaintyThreshold uncertainty_threshold(std::span<const double> scores, MiscoverageRate alpha) {
  if (scores.empty()) throw Error(ErrorKind::EmptyCalibration, "no conformity scores");
  const std::size_t n = scores.size();
  const std::size_t rank = std::min(corrected_rank(n, alpha), n);
  std::vector<double> sorted(scores.begin(), scores.end());
  const auto nth = sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1);
  std::nth_element(sorted.begin(), nth, sorted.end());
  return UncertaintyThreshold{*nth, corrected_level(n, alpha), n};
}

UncertaintyThreshold uncertainty_threshold(const ConformityScores& scores, MiscoverageRate alpha) {
  return uncertainty_threshold(scores.scores(), alpha);
}

PredictionInterval build_interval(const Forecast& center, const UncertaintyThreshold& threshold) {
  if (!(threshold.q_hat >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "threshold must be nonnegative");
  }
  PredictionInterval interval;
  interval.center = center;
  interval.lower.resize(center.size());
  interval.upper.resize(center.size());
  for (std::size_t k = 0; k < center.size(); ++k) {
    interval.lower[k] = center[k] - threshold.q_hat;
    interval.upper[k] = center[k] + threshold.q_hat;
  }
  return interval;
}

std::map<std::string, UncertaintyThreshold> local_thresholds(const ScoresBySeries& scores,
                                                             MiscoverageRate alpha) {
  std::map<std::string, UncertaintyThreshold> out;
  for (const auto& [series_id, set] : scores) {
    if (set.empty()) {
      throw Error(ErrorKind::EmptyCalibration, "series '" + series_id + "' has no scores");
    }
    out.emplace(series_id, uncertainty_threshold(set, alpha));
  }
  return out;
}

UncertaintyThreshold global_threshold(const ScoresBySeries& scores, MiscoverageRate alpha) {
  std::vector<double> pooled;
  for (const auto& entry : scores) {
    const auto values = entry.second.scores();
    pooled.insert(pooled.end(), values.begin(), values.end());
  }
  return uncertainty_threshold(pooled, alpha);
}

std::size_t rolling_window_count(std::size_t n, std::size_t context_length, int horizon) {
  if (horizon <= 0) throw Error(ErrorKind::InvalidArgument, "horizon must be positive");
  if (context_length >= n) return 0;
  const auto h = static_cast<std::size_t>(horizon);
  return (n - context_length + h - 1) / h;
}

ConformityScores rolling_calibrate(const TimeSeries& series, forecasters::Forecaster& forecaster,
                                   std::size_t context_length, int horizon, int season_length,
                                   std::size_t window_index) {
  if (horizon <= 0) throw Error(ErrorKind::InvalidArgument, "horizon must be positive");
  if (context_length == 0) throw Error(ErrorKind::InvalidArgument, "context length must be positive");
  const std::size_t n = series.size();
  if (context_length + 1 > n) {
    throw Error(ErrorKind::ContextTooLong,
                "context " + std::to_string(context_length) + " leaves no calibration points in " +
                    std::to_string(n));
  }
  const auto h = static_cast<std::size_t>(horizon);
  const auto values = series.values();
  forecasters::ForecastQuery query;
  query.series_id = series.id();
  query.window_index = window_index;
  query.horizon = horizon;
  query.frequency = series.frequency();
  query.season_length = season_length > 0 ? season_length : horizon;

  ConformityScores scores;
  for (std::size_t t = context_length; t < n; t += h) {
    query.context = values.subspan(t - context_length, context_length);
    Forecast predicted;
    try {
      predicted = forecaster.predict(query);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(ErrorKind::ForecasterFailure, e.what());
    }
    if (predicted.size() != h) {
      throw Error(ErrorKind::ForecasterFailure,
                  std::string(forecaster.name()) + " returned " + std::to_string(predicted.size()) +
                      " points for horizon " + std::to_string(h));
    }
    const std::size_t keep = std::min(h, n - t);
    for (std::size_t k = 0; k < keep; ++k) {
      scores.push_back(std::fabs(predicted[k] - values[t + k]),
                       ScoreOrigin{series.id(), window_index, t + k});
    }
  }
  return scores;
}

SplitCalibration split_calibrate(const TimeSeries& series,
                                 const forecasters::TrainableForecaster& forecaster,
                                 const SplitSpec& spec, std::size_t window_index) {
  const std::size_t n = series.size();
  const std::size_t train = spec.train_size(n);
  const auto values = series.values();

  forecasters::ForecastQuery query;
  query.series_id = series.id();
  query.window_index = window_index;
  query.context = values.subspan(0, train);
  query.horizon = static_cast<int>(n - train);
  query.frequency = series.frequency();
  query.season_length = series.frequency().default_season_length();

  SplitCalibration out;
  out.model = forecaster.fit(query);
  const Forecast predicted = out.model->forecast(query.context, query.horizon);
  out.scores = conformity_scores(predicted, values.subspan(train),
                                 ScoreOrigin{series.id(), window_index, train});
  return out;
}

}  // namespace tscp::conformal
