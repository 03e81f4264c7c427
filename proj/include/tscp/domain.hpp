#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tscp/error.hpp"

namespace tscp {

using Timestamp = std::chrono::sys_seconds;

enum class FrequencyKind { Hourly, Daily, Weekly, Monthly };

class Frequency {
 public:
  constexpr Frequency() = default;
  constexpr explicit Frequency(FrequencyKind kind) : kind_(kind) {}

  constexpr FrequencyKind kind() const { return kind_; }

  // 24 for hourly, 7 for daily, 4 for weekly, 12 for monthly.
  constexpr int default_season_length() const {
    switch (kind_) {
      case FrequencyKind::Hourly: return 24;
      case FrequencyKind::Daily: return 7;
      case FrequencyKind::Weekly: return 4;
      case FrequencyKind::Monthly: return 12;
    }
    return 1;
  }

  // Single-letter wire code: H, D, W, M.
  char code() const;
  std::string_view name() const;

  // Timestamp of the point `steps` periods after `start`. Monthly steps
  // move by calendar month and keep the day-of-month and time of day.
  Timestamp advance(Timestamp start, std::int64_t steps) const;

  static Frequency parse(std::string_view text);

  friend constexpr bool operator==(Frequency, Frequency) = default;

 private:
  FrequencyKind kind_ = FrequencyKind::Hourly;
};

std::string format_timestamp(Timestamp t);
Timestamp parse_timestamp(std::string_view text);

// One uniformly sampled series. Timestamps are implied by start + i * step.
class TimeSeries {
 public:
  TimeSeries(std::string id, Timestamp start, Frequency frequency,
             std::vector<double> values);

  const std::string& id() const { return id_; }
  Timestamp start() const { return start_; }
  Frequency frequency() const { return frequency_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  Timestamp timestamp(std::size_t i) const;

  // Contiguous sub-series [offset, offset + count) with a derived start.
  TimeSeries slice(std::size_t offset, std::size_t count) const;
  TimeSeries slice(std::size_t offset, std::size_t count,
                   std::string new_id) const;

 private:
  std::string id_;
  Timestamp start_;
  Frequency frequency_;
  std::vector<double> values_;
};

enum class HorizonLabel { S, M, L };

std::string_view to_string(HorizonLabel label);
HorizonLabel parse_horizon_label(std::string_view text);

struct HorizonSpec {
  HorizonLabel label = HorizonLabel::S;
  int steps = 1;

  // Standard steps: hourly {24,72,168}, daily {7,21,35}, weekly {4,8,12},
  // monthly {3,6,9}.
  static HorizonSpec standard(Frequency frequency, HorizonLabel label);
  // Validates steps > 0 and, when strict, that steps matches standard().
  static HorizonSpec make(Frequency frequency, HorizonLabel label, int steps,
                          bool strict = true);
};

struct Forecast {
  std::vector<double> point;

  Forecast() = default;
  explicit Forecast(std::vector<double> values);

  std::size_t size() const { return point.size(); }
  double operator[](std::size_t k) const { return point[k]; }
};

struct ScoreOrigin {
  std::string series_id;
  std::size_t window_index = 0;
  std::size_t offset = 0;

  friend bool operator==(const ScoreOrigin&, const ScoreOrigin&) = default;
};

// Nonnegative absolute residuals together with where each one came from.
class ConformityScores {
 public:
  ConformityScores() = default;
  ConformityScores(std::vector<double> scores, std::vector<ScoreOrigin> origins);

  std::span<const double> scores() const { return scores_; }
  std::span<const ScoreOrigin> provenance() const { return origins_; }
  std::size_t size() const { return scores_.size(); }
  bool empty() const { return scores_.empty(); }

  void append(const ConformityScores& other);
  void push_back(double score, ScoreOrigin origin);

 private:
  std::vector<double> scores_;
  std::vector<ScoreOrigin> origins_;
};

class MiscoverageRate {
 public:
  constexpr MiscoverageRate() = default;
  explicit MiscoverageRate(double alpha);

  double value() const { return alpha_; }
  double target_coverage() const { return 1.0 - alpha_; }

 private:
  double alpha_ = 0.1;
};

struct UncertaintyThreshold {
  double q_hat = 0.0;
  double level = 1.0;
  std::size_t calibration_size = 0;
};

struct PredictionInterval {
  std::vector<double> lower;
  std::vector<double> upper;
  Forecast center;

  std::size_t size() const { return center.size(); }
};

}  // namespace tscp
