#include "tscp/metrics.hpp"

#include <cmath>
#include <map>

namespace tscp::metrics {

double coverage_rate(std::span<const double> actual, const PredictionInterval& interval) {
  if (actual.size() != interval.size() || interval.lower.size() != interval.size() ||
      interval.upper.size() != interval.size()) {
    throw Error(ErrorKind::LengthMismatch,
                "interval has " + std::to_string(interval.size()) + " points, actuals " +
                    std::to_string(actual.size()));
  }
  if (actual.empty()) throw Error(ErrorKind::LengthMismatch, "empty horizon");
  std::size_t covered = 0;
  for (std::size_t k = 0; k < actual.size(); ++k) {
    if (interval.lower[k] <= actual[k] && actual[k] <= interval.upper[k]) ++covered;
  }
  return static_cast<double>(covered) / static_cast<double>(actual.size());
}

namespace {

// Neumaier-compensated mean; keeps long horizons within an ulp or two of the true mean.
template <class Term>
double compensated_mean(std::size_t n, Term term) {
  double sum = 0.0;
  double carry = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double x = term(k);
    const double t = sum + x;
    carry += std::fabs(sum) >= std::fabs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return (sum + carry) / static_cast<double>(n);
}

}  // namespace

double interval_width(const PredictionInterval& interval) {
  if (interval.lower.size() != interval.upper.size() || interval.lower.empty()) {
    throw Error(ErrorKind::LengthMismatch, "interval bounds differ in length or are empty");
  }
  return compensated_mean(interval.lower.size(),
                          [&](std::size_t k) { return interval.upper[k] - interval.lower[k]; });
}

double mean_absolute_error(std::span<const double> actual, const Forecast& forecast) {
  if (actual.size() != forecast.size() || actual.empty()) {
    throw Error(ErrorKind::LengthMismatch,
                "forecast has " + std::to_string(forecast.size()) + " points, actuals " +
                    std::to_string(actual.size()));
  }
  double total = 0.0;
  for (std::size_t k = 0; k < actual.size(); ++k) total += std::fabs(forecast[k] - actual[k]);
  return total / static_cast<double>(actual.size());
}

EvaluationRecord evaluate(std::string unit_id, std::span<const double> actual,
                          const PredictionInterval& interval) {
  return EvaluationRecord{std::move(unit_id), coverage_rate(actual, interval),
                          interval_width(interval), mean_absolute_error(actual, interval.center)};
}

double mean_coverage_rate(std::span<const EvaluationRecord> records) {
  if (records.empty()) throw Error(ErrorKind::EmptyTestSet, "no evaluation records");
  double total = 0.0;
  for (const auto& r : records) total += r.cr;
  return total / static_cast<double>(records.size());
}

namespace {

// Pairs each model record with the naive record of the same unit.
std::vector<std::pair<const EvaluationRecord*, const EvaluationRecord*>> pair_units(
    std::span<const EvaluationRecord> model, std::span<const EvaluationRecord> naive) {
  if (model.empty()) throw Error(ErrorKind::EmptyTestSet, "no evaluation records");
  if (model.size() != naive.size()) {
    throw Error(ErrorKind::UnitMismatch,
                std::to_string(model.size()) + " model units vs " + std::to_string(naive.size()) +
                    " naive units");
  }
  std::map<std::string_view, const EvaluationRecord*> by_id;
  for (const auto& r : naive) {
    if (!by_id.emplace(r.unit_id, &r).second) {
      throw Error(ErrorKind::UnitMismatch, "duplicate naive unit '" + r.unit_id + "'");
    }
  }
  std::vector<std::pair<const EvaluationRecord*, const EvaluationRecord*>> pairs;
  pairs.reserve(model.size());
  for (const auto& r : model) {
    const auto it = by_id.find(r.unit_id);
    if (it == by_id.end()) {
      throw Error(ErrorKind::UnitMismatch, "unit '" + r.unit_id + "' has no naive record");
    }
    pairs.emplace_back(&r, it->second);
  }
  return pairs;
}

}  // namespace

double msiw(std::span<const EvaluationRecord> model, std::span<const EvaluationRecord> naive) {
  double total = 0.0;
  const auto pairs = pair_units(model, naive);
  for (const auto& [m, n] : pairs) {
    if (!(n->iw > 0.0)) {
      throw Error(ErrorKind::NaiveZeroWidth, "naive interval width is zero for unit '" +
                                                 n->unit_id + "'");
    }
    total += m->iw / n->iw;
  }
  return total / static_cast<double>(pairs.size());
}

double mase(std::span<const EvaluationRecord> model, std::span<const EvaluationRecord> naive) {
  double model_total = 0.0;
  double naive_total = 0.0;
  for (const auto& [m, n] : pair_units(model, naive)) {
    model_total += m->mae;
    naive_total += n->mae;
  }
  if (!(naive_total > 0.0)) {
    throw Error(ErrorKind::NaiveZeroError, "naive model has zero total absolute error");
  }
  return model_total / naive_total;
}

double normalized_global_width(double model_iw, double naive_iw) {
  if (!(naive_iw > 0.0)) throw Error(ErrorKind::NaiveZeroWidth, "naive interval width is zero");
  return model_iw / naive_iw;
}

AggregateReport aggregate(std::span<const EvaluationRecord> model,
                          std::span<const EvaluationRecord> naive) {
  return AggregateReport{mean_coverage_rate(model), msiw(model, naive), mase(model, naive),
                         model.size()};
}

}  // namespace tscp::metrics
