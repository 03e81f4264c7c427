#include <gtest/gtest.h>

#include "tscp/metrics.hpp"

using namespace tscp;
using namespace tscp::metrics;

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

PredictionInterval symmetric(std::vector<double> center, double q) {
  PredictionInterval iv;
  iv.center = Forecast(center);
  for (double c : center) {
    iv.lower.push_back(c - q);
    iv.upper.push_back(c + q);
  }
  return iv;
}

EvaluationRecord rec(std::string id, double cr, double iw, double mae) { return {std::move(id), cr, iw, mae}; }

}  // namespace

TEST(Coverage, Counting) {
  const auto iv = symmetric({0, 0, 0, 0, 0, 0, 0}, 1.0);
  EXPECT_EQ(coverage_rate(std::vector<double>{0, 0.5, -0.5, 0, 0, 0, 0}, iv), 1.0);
  EXPECT_DOUBLE_EQ(coverage_rate(std::vector<double>{0, 0, 0, 0, 0, 0, 5}, iv), 6.0 / 7.0);
  // Bounds are inclusive.
  EXPECT_EQ(coverage_rate(std::vector<double>{1, -1, 1, -1, 1, -1, 1}, iv), 1.0);
  EXPECT_EQ(kind_of([&] { coverage_rate(std::vector<double>{1}, iv); }), ErrorKind::LengthMismatch);
}

TEST(Width, MeanOfWidths) {
  EXPECT_EQ(interval_width(symmetric({1, 2, 3}, 2.0)), 4.0);
  EXPECT_EQ(interval_width(symmetric({1, 2, 3, 4, 5, 6}, 2.0)), 4.0);
  EXPECT_EQ(interval_width(symmetric({1}, 0.0)), 0.0);
  PredictionInterval mixed;
  mixed.center = Forecast({1, 2});
  mixed.lower = {0, 0};
  mixed.upper = {2, 4};
  EXPECT_EQ(interval_width(mixed), 3.0);
}

TEST(Aggregates, McrAndErrors) {
  EXPECT_DOUBLE_EQ(mean_coverage_rate(std::vector<EvaluationRecord>{rec("a", 1.0, 1, 1), rec("b", 0.8, 1, 1)}), 0.9);
  EXPECT_EQ(mean_coverage_rate(std::vector<EvaluationRecord>{rec("a", 0.75, 1, 1)}), 0.75);
  EXPECT_EQ(kind_of([] { mean_coverage_rate(std::vector<EvaluationRecord>{}); }), ErrorKind::EmptyTestSet);
}

TEST(Aggregates, MsiwIsMeanOfRatiosAndMaseIsRatioOfSums) {
  const std::vector<EvaluationRecord> model{rec("u1", 1, 1.0, 1.0), rec("u2", 1, 3.0, 30.0)};
  const std::vector<EvaluationRecord> naive{rec("u1", 1, 2.0, 2.0), rec("u2", 1, 2.0, 20.0)};
  EXPECT_EQ(msiw(model, naive), 1.0);
  EXPECT_EQ(mase(model, naive), 31.0 / 22.0);

  const std::vector<EvaluationRecord> half{rec("u1", 1, 1, 1.0), rec("u2", 1, 1, 10.0)};
  EXPECT_EQ(mase(half, naive), 0.5);
  const std::vector<EvaluationRecord> m13{rec("u1", 1, 1, 1.0), rec("u2", 1, 1, 3.0)};
  const std::vector<EvaluationRecord> n22{rec("u1", 1, 1, 2.0), rec("u2", 1, 1, 2.0)};
  EXPECT_EQ(mase(m13, n22), 1.0);

  EXPECT_EQ(msiw(naive, naive), 1.0);
  EXPECT_EQ(mase(naive, naive), 1.0);
}

TEST(Aggregates, PairingAndDegenerateBaselines) {
  const std::vector<EvaluationRecord> model{rec("u1", 1, 1, 1)};
  EXPECT_EQ(kind_of([&] { msiw(model, std::vector<EvaluationRecord>{rec("other", 1, 1, 1)}); }), ErrorKind::UnitMismatch);
  EXPECT_EQ(kind_of([&] { msiw(model, std::vector<EvaluationRecord>{rec("u1", 1, 0, 1)}); }), ErrorKind::NaiveZeroWidth);
  EXPECT_EQ(kind_of([&] { mase(model, std::vector<EvaluationRecord>{rec("u1", 1, 1, 0)}); }), ErrorKind::NaiveZeroError);
}

TEST(Aggregates, NormalizedGlobalWidth) {
  EXPECT_EQ(normalized_global_width(4, 4), 1.0);
  EXPECT_EQ(normalized_global_width(0, 4), 0.0);
  EXPECT_EQ(normalized_global_width(3, 4), 0.75);
  EXPECT_EQ(kind_of([] { normalized_global_width(1, 0); }), ErrorKind::NaiveZeroWidth);
}

TEST(Evaluate, Record) {
  const auto r = evaluate("x", std::vector<double>{1, 2, 10}, symmetric({1, 1, 1}, 1.0));
  EXPECT_EQ(r.unit_id, "x");
  EXPECT_DOUBLE_EQ(r.cr, 2.0 / 3.0);
  EXPECT_EQ(r.iw, 2.0);
  EXPECT_DOUBLE_EQ(r.mae, 10.0 / 3.0);
}
