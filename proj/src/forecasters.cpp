#include "tscp/forecasters.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

namespace tscp::forecasters {

std::string_view to_string(ForecasterKind kind) {
  switch (kind) {
    case ForecasterKind::Naive: return "naive";
    case ForecasterKind::SeasonalNaive: return "seasonal_naive";
    case ForecasterKind::StatEnsembleLight: return "stat_ensemble_light";
    case ForecasterKind::External: return "external";
  }
  return "?";
}

ForecasterKind parse_forecaster_kind(std::string_view text) {
  if (text == "naive") return ForecasterKind::Naive;
  if (text == "seasonal_naive") return ForecasterKind::SeasonalNaive;
  if (text == "stat_ensemble_light") return ForecasterKind::StatEnsembleLight;
  if (text == "external") return ForecasterKind::External;
  throw Error(ErrorKind::ConfigError, "unknown forecaster kind '" + std::string(text) + "'");
}

namespace {

int parse_positive_int(std::string_view key, const std::string& text) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || value <= 0) {
    throw Error(ErrorKind::ConfigError,
                "parameter '" + std::string(key) + "' must be a positive integer, got '" + text + "'");
  }
  return value;
}

}  // namespace

ForecasterHandle ForecasterHandle::make(std::string name, ForecasterKind kind,
                                        std::map<std::string, std::string> params) {
  if (name.empty()) throw Error(ErrorKind::ConfigError, "forecaster name is empty");
  ForecasterHandle handle{std::move(name), kind, std::move(params)};
  for (const auto& key : {"season_length", "timeout_ms", "connections"}) {
    if (const auto* value = handle.param(key)) parse_positive_int(key, *value);
  }
  if (kind == ForecasterKind::External) {
    const auto* endpoint = handle.param("endpoint");
    if (endpoint == nullptr || endpoint->empty()) {
      throw Error(ErrorKind::ConfigError,
                  "external forecaster '" + handle.name + "' needs an endpoint");
    }
  }
  return handle;
}

const std::string* ForecasterHandle::param(std::string_view key) const {
  const auto it = params.find(std::string(key));
  return it == params.end() ? nullptr : &it->second;
}

int ForecasterHandle::int_param(std::string_view key, int fallback) const {
  const auto* value = param(key);
  return value == nullptr ? fallback : parse_positive_int(key, *value);
}

Forecast naive_forecast(std::span<const double> context, int horizon) {
  if (context.empty()) throw Error(ErrorKind::EmptyContext, "naive forecast needs context");
  if (horizon <= 0) throw Error(ErrorKind::InvalidArgument, "horizon must be positive");
  return Forecast(std::vector<double>(static_cast<std::size_t>(horizon), context.back()));
}

Forecast seasonal_naive_forecast(std::span<const double> context, int season_length,
                                 int horizon) {
  if (season_length <= 0) throw Error(ErrorKind::InvalidArgument, "season length must be positive");
  if (horizon <= 0) throw Error(ErrorKind::InvalidArgument, "horizon must be positive");
  const auto m = static_cast<std::size_t>(season_length);
  if (context.size() < m) {
    throw Error(ErrorKind::ContextShorterThanSeason,
                "context of " + std::to_string(context.size()) + " points is shorter than season " +
                    std::to_string(m));
  }
  const std::size_t base = context.size() - m;
  std::vector<double> out(static_cast<std::size_t>(horizon));
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = context[base + k % m];
  return Forecast(std::move(out));
}

// ---- smoothing members ----------------------------------------------------

namespace {

constexpr int kGridSteps = 99;

double grid_value(int i) { return static_cast<double>(i) / 100.0; }

// Index of the first strictly smallest finite objective across the grid.
template <class Objective>
double grid_argmin(Objective&& objective) {
  double best_value = std::numeric_limits<double>::infinity();
  double best_param = grid_value(1);
  for (int i = 1; i <= kGridSteps; ++i) {
    const double p = grid_value(i);
    const double value = objective(p);
    if (std::isfinite(value) && value < best_value) {
      best_value = value;
      best_param = p;
    }
  }
  return best_param;
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

std::vector<double> additive_seasonal_indices(std::span<const double> values, int m) {
  const auto period = static_cast<std::size_t>(m);
  if (m < 2 || values.size() < 2 * period) {
    throw Error(ErrorKind::ContextTooShort, "seasonal decomposition needs two full seasons");
  }
  const std::size_t n = values.size();
  std::vector<double> sums(period, 0.0);
  std::vector<std::size_t> counts(period, 0);
  const std::size_t half = period / 2;
  for (std::size_t t = half; t + half < n; ++t) {
    double trend = 0.0;
    if (period % 2 == 0) {
      trend = 0.5 * values[t - half] + 0.5 * values[t + half];
      for (std::size_t j = t - half + 1; j < t + half; ++j) trend += values[j];
    } else {
      for (std::size_t j = t - half; j <= t + half; ++j) trend += values[j];
    }
    trend /= static_cast<double>(period);
    sums[t % period] += values[t] - trend;
    ++counts[t % period];
  }
  std::vector<double> indices(period, 0.0);
  for (std::size_t p = 0; p < period; ++p) {
    if (counts[p] > 0) indices[p] = sums[p] / static_cast<double>(counts[p]);
  }
  const double centre = mean_of(indices);
  for (double& s : indices) s -= centre;
  return indices;
}

SesFit run_ses(std::span<const double> values, double alpha) {
  SesFit fit{alpha, values.front(), 0.0};
  for (std::size_t t = 1; t < values.size(); ++t) {
    const double error = values[t] - fit.level;
    fit.sse += error * error;
    fit.level += alpha * error;
  }
  return fit;
}

SesFit fit_ses(std::span<const double> values) {
  const double alpha = grid_argmin([&](double a) { return run_ses(values, a).sse; });
  return run_ses(values, alpha);
}

HoltWintersState run_holt_winters(std::span<const double> values, int m,
                                  const HoltWintersParams& params) {
  const auto period = static_cast<std::size_t>(m);
  HoltWintersState state;
  state.length = values.size();
  std::size_t first = 1;
  if (m <= 1) {
    if (values.size() < 2) throw Error(ErrorKind::ContextTooShort, "Holt needs two points");
    state.level = values[0];
    state.trend = values[1] - values[0];
  } else {
    if (values.size() < 2 * period) {
      throw Error(ErrorKind::ContextTooShort, "Holt-Winters needs two full seasons");
    }
    const double first_mean = mean_of(values.subspan(0, period));
    const double second_mean = mean_of(values.subspan(period, period));
    state.trend = (second_mean - first_mean) / static_cast<double>(period);
    const double mid = static_cast<double>(period - 1) / 2.0;
    state.seasonal.resize(period);
    for (std::size_t i = 0; i < period; ++i) {
      state.seasonal[i] = values[i] - (first_mean + (static_cast<double>(i) - mid) * state.trend);
    }
    state.level = first_mean + mid * state.trend;
    first = period;
  }
  for (std::size_t t = first; t < values.size(); ++t) {
    const double season = state.seasonal.empty() ? 0.0 : state.seasonal[t % period];
    const double error = values[t] - (state.level + state.trend + season);
    state.sse += error * error;
    state.level += state.trend + params.alpha * error;
    state.trend += params.alpha * params.beta * error;
    if (!state.seasonal.empty()) state.seasonal[t % period] += params.gamma * error;
  }
  return state;
}

HoltWintersParams fit_holt_winters(std::span<const double> values, int m) {
  // Cyclic coordinate search over the 0.01 grid; a full 3-D grid is ~10^6
  // passes per fit.
  HoltWintersParams params;
  const auto objective = [&](const HoltWintersParams& p) {
    return run_holt_winters(values, m, p).sse;
  };
  for (int round = 0; round < 20; ++round) {
    const HoltWintersParams before = params;
    params.alpha = grid_argmin([&](double a) { auto p = params; p.alpha = a; return objective(p); });
    params.beta = grid_argmin([&](double b) { auto p = params; p.beta = b; return objective(p); });
    if (m > 1) {
      params.gamma = grid_argmin([&](double g) { auto p = params; p.gamma = g; return objective(p); });
    }
    if (params.alpha == before.alpha && params.beta == before.beta &&
        params.gamma == before.gamma) {
      break;
    }
  }
  return params;
}

std::vector<double> holt_winters_forecast(const HoltWintersState& state, int m, int horizon) {
  const auto period = static_cast<std::size_t>(std::max(m, 1));
  std::vector<double> out(static_cast<std::size_t>(horizon));
  for (std::size_t k = 1; k <= out.size(); ++k) {
    const double season =
        state.seasonal.empty() ? 0.0 : state.seasonal[(state.length - 1 + k) % period];
    out[k - 1] = state.level + static_cast<double>(k) * state.trend + season;
  }
  return out;
}

ThetaFit run_theta(std::span<const double> values, double alpha) {
  const std::size_t n = values.size();
  ThetaFit fit;
  fit.alpha = alpha;
  fit.length = n;
  if (n >= 2) {
    const double t_mean = static_cast<double>(n - 1) / 2.0;
    const double y_mean = mean_of(values);
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double dt = static_cast<double>(t) - t_mean;
      sxy += dt * (values[t] - y_mean);
      sxx += dt * dt;
    }
    fit.drift = sxy / sxx;
  }
  fit.level = run_ses(values, alpha).level;
  return fit;
}

ThetaFit fit_theta(std::span<const double> values) {
  const double alpha = grid_argmin([&](double a) { return run_ses(values, a).sse; });
  return run_theta(values, alpha);
}

std::vector<double> theta_forecast(const ThetaFit& fit, int horizon) {
  const double a = fit.alpha;
  const double decay = std::pow(1.0 - a, static_cast<double>(fit.length));
  std::vector<double> out(static_cast<std::size_t>(horizon));
  for (std::size_t k = 1; k <= out.size(); ++k) {
    out[k - 1] =
        fit.level + 0.5 * fit.drift * (static_cast<double>(k) - 1.0 + 1.0 / a - decay / a);
  }
  return out;
}

// ---- ensemble ---------------------------------------------------------------

EnsembleModel::EnsembleModel(int season_length, bool seasonal, double ses_alpha,
                             HoltWintersParams hw, double theta_alpha)
    : season_length_(season_length),
      seasonal_(seasonal),
      ses_alpha_(ses_alpha),
      hw_(hw),
      theta_alpha_(theta_alpha) {}

namespace {

struct Adjusted {
  std::vector<double> values;
  std::vector<double> indices;  // empty when not seasonal
};

Adjusted deseasonalize(std::span<const double> values, int m, bool seasonal) {
  Adjusted out{std::vector<double>(values.begin(), values.end()), {}};
  if (!seasonal) return out;
  out.indices = additive_seasonal_indices(values, m);
  const auto period = static_cast<std::size_t>(m);
  for (std::size_t t = 0; t < out.values.size(); ++t) out.values[t] -= out.indices[t % period];
  return out;
}

void reseasonalize(std::vector<double>& forecast, const Adjusted& adjusted, int m) {
  if (adjusted.indices.empty()) return;
  const auto period = static_cast<std::size_t>(m);
  const std::size_t n = adjusted.values.size();
  for (std::size_t k = 1; k <= forecast.size(); ++k) {
    forecast[k - 1] += adjusted.indices[(n - 1 + k) % period];
  }
}

void check_context(std::span<const double> values, int season_length) {
  if (season_length <= 0) throw Error(ErrorKind::InvalidArgument, "season length must be positive");
  if (values.size() < kEnsembleMinContext) {
    throw Error(ErrorKind::ContextTooShort,
                "statistical ensemble needs at least " + std::to_string(kEnsembleMinContext) +
                    " points, got " + std::to_string(values.size()));
  }
}

}  // namespace

Forecast EnsembleModel::forecast(std::span<const double> history, int horizon) const {
  check_context(history, season_length_);
  if (horizon <= 0) throw Error(ErrorKind::InvalidArgument, "horizon must be positive");
  const int m = season_length_;
  const bool seasonal =
      seasonal_ && history.size() >= 2 * static_cast<std::size_t>(m);
  const Adjusted adjusted = deseasonalize(history, m, seasonal);

  std::vector<std::vector<double>> members;

  std::vector<double> ses(static_cast<std::size_t>(horizon),
                          run_ses(adjusted.values, ses_alpha_).level);
  reseasonalize(ses, adjusted, m);
  members.push_back(std::move(ses));

  if (seasonal || m == 1) {
    const int hw_period = seasonal ? m : 1;
    members.push_back(
        holt_winters_forecast(run_holt_winters(history, hw_period, hw_), hw_period, horizon));
  }

  auto theta = theta_forecast(run_theta(adjusted.values, theta_alpha_), horizon);
  reseasonalize(theta, adjusted, m);
  members.push_back(std::move(theta));

  std::vector<double> mean(static_cast<std::size_t>(horizon), 0.0);
  for (const auto& member : members) {
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += member[k];
  }
  for (double& v : mean) v /= static_cast<double>(members.size());
  return Forecast(std::move(mean));
}

EnsembleModel fit_stat_ensemble(std::span<const double> train, int season_length) {
  check_context(train, season_length);
  const int m = season_length;
  const bool seasonal = m > 1 && train.size() >= 2 * static_cast<std::size_t>(m);
  const Adjusted adjusted = deseasonalize(train, m, seasonal);
  const double ses_alpha = fit_ses(adjusted.values).alpha;
  HoltWintersParams hw;
  if (seasonal || m == 1) hw = fit_holt_winters(train, seasonal ? m : 1);
  const double theta_alpha = fit_theta(adjusted.values).alpha;
  return EnsembleModel(m, seasonal, ses_alpha, hw, theta_alpha);
}

Forecast stat_ensemble_light_forecast(std::span<const double> context, int season_length,
                                      int horizon) {
  return fit_stat_ensemble(context, season_length).forecast(context, horizon);
}

// ---- Forecaster implementations ---------------------------------------------

Forecast NaiveForecaster::predict(const ForecastQuery& query) {
  return naive_forecast(query.context, query.horizon);
}

Forecast SeasonalNaiveForecaster::predict(const ForecastQuery& query) {
  const int m = fixed_season_ > 0 ? fixed_season_ : query.season_length;
  return seasonal_naive_forecast(query.context, m, query.horizon);
}

int StatEnsembleForecaster::season_for(const ForecastQuery& query) const {
  return fixed_season_ > 0 ? fixed_season_ : query.frequency.default_season_length();
}

Forecast StatEnsembleForecaster::predict(const ForecastQuery& query) {
  return stat_ensemble_light_forecast(query.context, season_for(query), query.horizon);
}

std::unique_ptr<FittedModel> StatEnsembleForecaster::fit(const ForecastQuery& train) const {
  return std::make_unique<EnsembleModel>(fit_stat_ensemble(train.context, season_for(train)));
}

}  // namespace tscp::forecasters
