#include <gtest/gtest.h>

#include <cmath>

#include "tscp/forecasters.hpp"

using namespace tscp;
using namespace tscp::forecasters;

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

std::vector<double> square_wave(std::size_t n, int m) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = (static_cast<int>(i % m) < m / 2) ? 10.0 : -4.0;
  return v;
}

}  // namespace

TEST(Naive, Examples) {
  EXPECT_EQ(naive_forecast(std::vector<double>{1, 5, 7}, 3).point, (std::vector<double>{7, 7, 7}));
  EXPECT_EQ(naive_forecast(std::vector<double>{42}, 1).point, std::vector<double>{42});
  EXPECT_EQ(naive_forecast(std::vector<double>{1, 2, 3}, 5).point, (std::vector<double>{3, 3, 3, 3, 3}));
  EXPECT_EQ(kind_of([] { naive_forecast(std::vector<double>{}, 2); }), ErrorKind::EmptyContext);
}

TEST(SeasonalNaive, Examples) {
  EXPECT_EQ(seasonal_naive_forecast(std::vector<double>{9, 1, 2, 3, 4}, 4, 6).point,
            (std::vector<double>{1, 2, 3, 4, 1, 2}));
  EXPECT_EQ(seasonal_naive_forecast(std::vector<double>{9, 8, 7, 6, 5, 4}, 3, 3).point,
            (std::vector<double>{6, 5, 4}));
  const std::vector<double> ctx{3, 1, 4, 1, 5};
  EXPECT_EQ(seasonal_naive_forecast(ctx, 1, 4).point, naive_forecast(ctx, 4).point);
  EXPECT_EQ(kind_of([&] { seasonal_naive_forecast(ctx, 6, 2); }), ErrorKind::ContextShorterThanSeason);
}

TEST(SeasonalNaive, ForecasterUsesQuerySeasonUnlessFixed) {
  const std::vector<double> ctx{1, 2, 3, 4, 5, 6};
  ForecastQuery q;
  q.context = ctx;
  q.horizon = 2;
  q.season_length = 3;
  SeasonalNaiveForecaster from_query;
  EXPECT_EQ(from_query.predict(q).point, (std::vector<double>{4, 5}));
  SeasonalNaiveForecaster fixed("s", 2);
  EXPECT_EQ(fixed.predict(q).point, (std::vector<double>{5, 6}));
}

TEST(Handle, Validation) {
  EXPECT_EQ(parse_forecaster_kind("seasonal_naive"), ForecasterKind::SeasonalNaive);
  EXPECT_EQ(kind_of([] { ForecasterHandle::make("x", ForecasterKind::External); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { ForecasterHandle::make("x", ForecasterKind::SeasonalNaive, {{"season_length", "0"}}); }),
            ErrorKind::ConfigError);
  const auto h = ForecasterHandle::make("x", ForecasterKind::External, {{"endpoint", "cmd"}, {"timeout_ms", "50"}});
  EXPECT_EQ(h.int_param("timeout_ms", 1), 50);
  EXPECT_EQ(h.int_param("connections", 3), 3);
}

TEST(Ensemble, ConstantSeriesIsExact) {
  for (int m : {1, 4, 12}) {
    const std::vector<double> ctx(60, 17.5);
    const auto fc = stat_ensemble_light_forecast(ctx, m, 9);
    for (double v : fc.point) EXPECT_DOUBLE_EQ(v, 17.5) << "m=" << m;
  }
}

TEST(Ensemble, SquareWaveMatchesLastSeason) {
  for (int m : {4, 12}) {
    const auto ctx = square_wave(20 * static_cast<std::size_t>(m), m);
    const int h = 2 * m + 3;
    const auto fc = stat_ensemble_light_forecast(ctx, m, h);
    const auto oracle = seasonal_naive_forecast(ctx, m, h);
    for (int k = 0; k < h; ++k) EXPECT_NEAR(fc[k], oracle[k], 1e-6) << "m=" << m << " k=" << k;
  }
}

TEST(Ensemble, ThetaRecoversLinearSlope) {
  const double a = 3.0;
  const double b = 0.7;
  std::vector<double> ctx(100);
  for (std::size_t t = 0; t < ctx.size(); ++t) ctx[t] = a + b * static_cast<double>(t);
  const auto fit = fit_theta(ctx);
  EXPECT_NEAR(fit.drift, b, 0.05 * b);
  // The full Theta forecast keeps rising along the line.
  const auto fc = theta_forecast(fit, 5);
  for (std::size_t k = 1; k < fc.size(); ++k) EXPECT_GT(fc[k], fc[k - 1]);
}

TEST(Ensemble, ShortContexts) {
  EXPECT_EQ(kind_of([] { stat_ensemble_light_forecast(std::vector<double>(9, 1.0), 1, 3); }),
            ErrorKind::ContextTooShort);
  const auto fit = fit_stat_ensemble(std::vector<double>(15, 2.0), 12);
  EXPECT_TRUE(fit.holt_winters_dropped());
  const auto fit2 = fit_stat_ensemble(square_wave(48, 12), 12);
  EXPECT_FALSE(fit2.holt_winters_dropped());
}

TEST(Ensemble, SeasonalIndicesAreZeroMean) {
  std::vector<double> v(96);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 50 + 0.2 * static_cast<double>(i) + std::sin(2 * M_PI * static_cast<double>(i % 8) / 8);
  const auto idx = additive_seasonal_indices(v, 8);
  ASSERT_EQ(idx.size(), 8u);
  double sum = 0;
  for (double x : idx) sum += x;
  EXPECT_NEAR(sum, 0.0, 1e-9);
  for (int i = 0; i < 8; ++i) EXPECT_NEAR(idx[i], std::sin(2 * M_PI * i / 8), 0.05);
}

TEST(Ensemble, FittedModelIsDeterministic) {
  std::vector<double> v(120);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 20 + 5 * std::sin(2 * M_PI * static_cast<double>(i % 7) / 7) + 0.01 * static_cast<double>(i * i % 13);
  StatEnsembleForecaster ens("e", 7);
  ForecastQuery q;
  q.context = v;
  q.horizon = 7;
  q.season_length = 7;
  const auto a = ens.predict(q);
  const auto b = ens.predict(q);
  EXPECT_EQ(a.point, b.point);
  const auto model = ens.fit(q);
  EXPECT_EQ(model->forecast(v, 7).point, a.point);
}
