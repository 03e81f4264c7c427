#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tscp/domain.hpp"

namespace tscp::forecasters {

enum class ForecasterKind { Naive, SeasonalNaive, StatEnsembleLight, External };

std::string_view to_string(ForecasterKind kind);
ForecasterKind parse_forecaster_kind(std::string_view text);

// Describes an estimator in an experiment. Kind-specific params:
//   seasonal_naive:      season_length (optional; defaults to the horizon)
//   stat_ensemble_light: season_length (optional; defaults to the frequency's)
//   external:            endpoint (required), timeout_ms, connections
struct ForecasterHandle {
  std::string name;
  ForecasterKind kind = ForecasterKind::Naive;
  std::map<std::string, std::string> params;

  static ForecasterHandle make(std::string name, ForecasterKind kind,
                               std::map<std::string, std::string> params = {});

  const std::string* param(std::string_view key) const;
  int int_param(std::string_view key, int fallback) const;
};

struct ForecastQuery {
  std::string_view series_id;
  std::size_t window_index = 0;
  std::span<const double> context;
  int horizon = 1;
  Frequency frequency;
  int season_length = 1;
};

class Forecaster {
 public:
  virtual ~Forecaster() = default;
  virtual std::string_view name() const = 0;
  virtual Forecast predict(const ForecastQuery& query) = 0;
};

// A model whose parameters were fitted once on a training split and are then
// applied to any history: the calibration pass forecasts from the end of the
// training split, the test pass from the end of the full history.
class FittedModel {
 public:
  virtual ~FittedModel() = default;
  virtual Forecast forecast(std::span<const double> history, int horizon) const = 0;
};

class TrainableForecaster : public Forecaster {
 public:
  virtual std::unique_ptr<FittedModel> fit(const ForecastQuery& train) const = 0;
};

Forecast naive_forecast(std::span<const double> context, int horizon);
Forecast seasonal_naive_forecast(std::span<const double> context, int season_length,
                                 int horizon);

// ---- statistical ensemble members -----------------------------------------

// Additive seasonal indices from a classical decomposition (centred moving
// average trend). Indices are zero-mean and indexed by position mod m.
std::vector<double> additive_seasonal_indices(std::span<const double> values, int m);

struct SesFit {
  double alpha = 0.5;
  double level = 0.0;
  double sse = 0.0;
};
SesFit run_ses(std::span<const double> values, double alpha);
SesFit fit_ses(std::span<const double> values);

struct HoltWintersParams {
  double alpha = 0.5;
  double beta = 0.1;
  double gamma = 0.1;
};
struct HoltWintersState {
  double level = 0.0;
  double trend = 0.0;
  std::vector<double> seasonal;  // empty when m == 1
  std::size_t length = 0;
  double sse = 0.0;
};
HoltWintersState run_holt_winters(std::span<const double> values, int m,
                                  const HoltWintersParams& params);
HoltWintersParams fit_holt_winters(std::span<const double> values, int m);
std::vector<double> holt_winters_forecast(const HoltWintersState& state, int m, int horizon);

// Classic Theta method with theta = 2: SES plus half the linear drift.
struct ThetaFit {
  double alpha = 0.5;
  double drift = 0.0;  // slope of the least-squares line through the data
  double level = 0.0;
  std::size_t length = 0;
};
ThetaFit run_theta(std::span<const double> values, double alpha);
ThetaFit fit_theta(std::span<const double> values);
std::vector<double> theta_forecast(const ThetaFit& fit, int horizon);

inline constexpr std::size_t kEnsembleMinContext = 10;

class EnsembleModel : public FittedModel {
 public:
  EnsembleModel(int season_length, bool seasonal, double ses_alpha,
                HoltWintersParams hw, double theta_alpha);

  Forecast forecast(std::span<const double> history, int horizon) const override;

  int season_length() const { return season_length_; }
  bool holt_winters_dropped() const { return !seasonal_ && season_length_ > 1; }
  double ses_alpha() const { return ses_alpha_; }
  const HoltWintersParams& holt_winters() const { return hw_; }
  double theta_alpha() const { return theta_alpha_; }

 private:
  int season_length_;
  bool seasonal_;
  double ses_alpha_;
  HoltWintersParams hw_;
  double theta_alpha_;
};

// Smoothing parameters come from a 0.01-step grid minimising one-step-ahead
// squared error on `train`. Needs at least 10 points; with fewer than two
// seasons the Holt-Winters member is dropped and the others run unseasoned.
EnsembleModel fit_stat_ensemble(std::span<const double> train, int season_length);

Forecast stat_ensemble_light_forecast(std::span<const double> context, int season_length,
                                      int horizon);

// ---- Forecaster implementations -------------------------------------------

class NaiveForecaster final : public Forecaster {
 public:
  explicit NaiveForecaster(std::string name = "Naive") : name_(std::move(name)) {}
  std::string_view name() const override { return name_; }
  Forecast predict(const ForecastQuery& query) override;

 private:
  std::string name_;
};

// Uses the query's season_length unless a fixed one was given.
class SeasonalNaiveForecaster final : public Forecaster {
 public:
  explicit SeasonalNaiveForecaster(std::string name = "SeasonalNaive", int fixed_season = 0)
      : name_(std::move(name)), fixed_season_(fixed_season) {}
  std::string_view name() const override { return name_; }
  Forecast predict(const ForecastQuery& query) override;

 private:
  std::string name_;
  int fixed_season_;
};

class StatEnsembleForecaster final : public TrainableForecaster {
 public:
  explicit StatEnsembleForecaster(std::string name = "StatisticalEnsemble_light",
                                  int fixed_season = 0)
      : name_(std::move(name)), fixed_season_(fixed_season) {}
  std::string_view name() const override { return name_; }
  Forecast predict(const ForecastQuery& query) override;
  std::unique_ptr<FittedModel> fit(const ForecastQuery& train) const override;

 private:
  int season_for(const ForecastQuery& query) const;

  std::string name_;
  int fixed_season_;
};

}  // namespace tscp::forecasters
