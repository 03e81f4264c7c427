#include "tscp/domain.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace tscp {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::SeriesTooShort: return "SeriesTooShort";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::EmptyCalibration: return "EmptyCalibration";
    case ErrorKind::ContextTooLong: return "ContextTooLong";
    case ErrorKind::ForecasterFailure: return "ForecasterFailure";
    case ErrorKind::EmptyContext: return "EmptyContext";
    case ErrorKind::ContextShorterThanSeason: return "ContextShorterThanSeason";
    case ErrorKind::ContextTooShort: return "ContextTooShort";
    case ErrorKind::ProtocolMismatch: return "ProtocolMismatch";
    case ErrorKind::Unreachable: return "Unreachable";
    case ErrorKind::Timeout: return "Timeout";
    case ErrorKind::MalformedResponse: return "MalformedResponse";
    case ErrorKind::AdapterError: return "AdapterError";
    case ErrorKind::EmptyTestSet: return "EmptyTestSet";
    case ErrorKind::NaiveZeroWidth: return "NaiveZeroWidth";
    case ErrorKind::NaiveZeroError: return "NaiveZeroError";
    case ErrorKind::UnitMismatch: return "UnitMismatch";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::NonUniformSpacing: return "NonUniformSpacing";
    case ErrorKind::MissingValue: return "MissingValue";
    case ErrorKind::DownloadFailed: return "DownloadFailed";
    case ErrorKind::HashMismatch: return "HashMismatch";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::ScenarioDoesNotFit: return "ScenarioDoesNotFit";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

char Frequency::code() const {
  switch (kind_) {
    case FrequencyKind::Hourly: return 'H';
    case FrequencyKind::Daily: return 'D';
    case FrequencyKind::Weekly: return 'W';
    case FrequencyKind::Monthly: return 'M';
  }
  return '?';
}

std::string_view Frequency::name() const {
  switch (kind_) {
    case FrequencyKind::Hourly: return "hourly";
    case FrequencyKind::Daily: return "daily";
    case FrequencyKind::Weekly: return "weekly";
    case FrequencyKind::Monthly: return "monthly";
  }
  return "?";
}

Frequency Frequency::parse(std::string_view text) {
  if (text == "H" || text == "hourly" || text == "h") return Frequency(FrequencyKind::Hourly);
  if (text == "D" || text == "daily" || text == "d") return Frequency(FrequencyKind::Daily);
  if (text == "W" || text == "weekly" || text == "w") return Frequency(FrequencyKind::Weekly);
  if (text == "M" || text == "monthly" || text == "m") return Frequency(FrequencyKind::Monthly);
  throw Error(ErrorKind::InvalidArgument, "unknown frequency '" + std::string(text) + "'");
}

Timestamp Frequency::advance(Timestamp start, std::int64_t steps) const {
  using namespace std::chrono;
  switch (kind_) {
    case FrequencyKind::Hourly: return start + hours(steps);
    case FrequencyKind::Daily: return start + days(steps);
    case FrequencyKind::Weekly: return start + weeks(steps);
    case FrequencyKind::Monthly: {
      const auto day_point = floor<days>(start);
      const auto time_of_day = start - day_point;
      year_month_day ymd{day_point};
      ymd += months(steps);
      if (!ymd.ok()) ymd = ymd.year() / ymd.month() / last;
      return sys_days{ymd} + time_of_day;
    }
  }
  return start;
}

std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  const auto day_point = floor<days>(t);
  const year_month_day ymd{day_point};
  const hh_mm_ss hms{t - day_point};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()),
                static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

namespace {

int read_digits(std::string_view text, std::size_t pos, std::size_t count) {
  if (pos + count > text.size()) {
    throw Error(ErrorKind::ParseError, "truncated timestamp '" + std::string(text) + "'");
  }
  int value = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    const char c = text[i];
    if (c < '0' || c > '9') {
      throw Error(ErrorKind::ParseError, "bad timestamp '" + std::string(text) + "'");
    }
    value = value * 10 + (c - '0');
  }
  return value;
}

void expect_char(std::string_view text, std::size_t pos, char c) {
  if (pos >= text.size() || text[pos] != c) {
    throw Error(ErrorKind::ParseError, "bad timestamp '" + std::string(text) + "'");
  }
}

}  // namespace

// RFC 3339 date-time (YYYY-MM-DDTHH:MM:SS[.frac](Z|+HH:MM|-HH:MM)); a bare
// date or a space separator is accepted as well and read as UTC.
Timestamp parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  const int y = read_digits(text, 0, 4);
  expect_char(text, 4, '-');
  const int mo = read_digits(text, 5, 2);
  expect_char(text, 7, '-');
  const int d = read_digits(text, 8, 2);
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) {
    throw Error(ErrorKind::ParseError, "invalid date '" + std::string(text) + "'");
  }
  Timestamp result = sys_days{ymd};
  if (text.size() == 10) return result;

  if (text[10] != 'T' && text[10] != 't' && text[10] != ' ') {
    throw Error(ErrorKind::ParseError, "bad timestamp '" + std::string(text) + "'");
  }
  const int hh = read_digits(text, 11, 2);
  expect_char(text, 13, ':');
  const int mm = read_digits(text, 14, 2);
  expect_char(text, 16, ':');
  const int ss = read_digits(text, 17, 2);
  if (hh > 23 || mm > 59 || ss > 60) {
    throw Error(ErrorKind::ParseError, "invalid time '" + std::string(text) + "'");
  }
  result += hours(hh) + minutes(mm) + seconds(ss);

  std::size_t pos = 19;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
  }
  if (pos == text.size()) return result;
  if (text[pos] == 'Z' || text[pos] == 'z') {
    if (pos + 1 != text.size()) {
      throw Error(ErrorKind::ParseError, "trailing characters in '" + std::string(text) + "'");
    }
    return result;
  }
  if (text[pos] == '+' || text[pos] == '-') {
    const int sign = text[pos] == '+' ? 1 : -1;
    const int oh = read_digits(text, pos + 1, 2);
    expect_char(text, pos + 3, ':');
    const int om = read_digits(text, pos + 4, 2);
    if (pos + 6 != text.size()) {
      throw Error(ErrorKind::ParseError, "trailing characters in '" + std::string(text) + "'");
    }
    return result - sign * (hours(oh) + minutes(om));
  }
  throw Error(ErrorKind::ParseError, "bad offset in '" + std::string(text) + "'");
}

TimeSeries::TimeSeries(std::string id, Timestamp start, Frequency frequency,
                       std::vector<double> values)
    : id_(std::move(id)), start_(start), frequency_(frequency), values_(std::move(values)) {
  if (values_.empty()) {
    throw Error(ErrorKind::InvalidArgument, "series '" + id_ + "' is empty");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw Error(ErrorKind::MissingValue,
                  "series '" + id_ + "' has a non-finite value at index " + std::to_string(i));
    }
  }
}

Timestamp TimeSeries::timestamp(std::size_t i) const {
  return frequency_.advance(start_, static_cast<std::int64_t>(i));
}

TimeSeries TimeSeries::slice(std::size_t offset, std::size_t count) const {
  return slice(offset, count, id_);
}

TimeSeries TimeSeries::slice(std::size_t offset, std::size_t count, std::string new_id) const {
  if (offset + count > values_.size() || count == 0) {
    throw Error(ErrorKind::InvalidArgument,
                "slice [" + std::to_string(offset) + ", " + std::to_string(offset + count) +
                    ") out of range for series of length " + std::to_string(values_.size()));
  }
  std::vector<double> part(values_.begin() + static_cast<std::ptrdiff_t>(offset),
                           values_.begin() + static_cast<std::ptrdiff_t>(offset + count));
  return TimeSeries(std::move(new_id), timestamp(offset), frequency_, std::move(part));
}

std::string_view to_string(HorizonLabel label) {
  switch (label) {
    case HorizonLabel::S: return "S";
    case HorizonLabel::M: return "M";
    case HorizonLabel::L: return "L";
  }
  return "?";
}

HorizonLabel parse_horizon_label(std::string_view text) {
  if (text == "S") return HorizonLabel::S;
  if (text == "M") return HorizonLabel::M;
  if (text == "L") return HorizonLabel::L;
  throw Error(ErrorKind::InvalidArgument, "unknown horizon label '" + std::string(text) + "'");
}

HorizonSpec HorizonSpec::standard(Frequency frequency, HorizonLabel label) {
  static constexpr int table[4][3] = {
      {24, 72, 168},  // hourly
      {7, 21, 35},    // daily
      {4, 8, 12},     // weekly
      {3, 6, 9},      // monthly
  };
  const auto row = static_cast<std::size_t>(frequency.kind());
  const auto col = static_cast<std::size_t>(label);
  return HorizonSpec{label, table[row][col]};
}

HorizonSpec HorizonSpec::make(Frequency frequency, HorizonLabel label, int steps, bool strict) {
  if (steps <= 0) {
    throw Error(ErrorKind::InvalidArgument, "horizon steps must be positive");
  }
  if (strict) {
    const auto expected = standard(frequency, label);
    if (expected.steps != steps) {
      throw Error(ErrorKind::InvalidArgument,
                  std::string(frequency.name()) + " horizon " + std::string(to_string(label)) +
                      " is " + std::to_string(expected.steps) + " steps, got " +
                      std::to_string(steps));
    }
  }
  return HorizonSpec{label, steps};
}

Forecast::Forecast(std::vector<double> values) : point(std::move(values)) {
  for (double v : point) {
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::ForecasterFailure, "forecast contains a non-finite value");
    }
  }
}

ConformityScores::ConformityScores(std::vector<double> scores, std::vector<ScoreOrigin> origins)
    : scores_(std::move(scores)), origins_(std::move(origins)) {
  if (scores_.size() != origins_.size()) {
    throw Error(ErrorKind::LengthMismatch, "scores and provenance differ in length");
  }
  for (double s : scores_) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
      throw Error(ErrorKind::InvalidArgument, "conformity scores must be finite and nonnegative");
    }
  }
}

void ConformityScores::append(const ConformityScores& other) {
  scores_.insert(scores_.end(), other.scores_.begin(), other.scores_.end());
  origins_.insert(origins_.end(), other.origins_.begin(), other.origins_.end());
}

void ConformityScores::push_back(double score, ScoreOrigin origin) {
  if (!(score >= 0.0) || !std::isfinite(score)) {
    throw Error(ErrorKind::InvalidArgument, "conformity scores must be finite and nonnegative");
  }
  scores_.push_back(score);
  origins_.push_back(std::move(origin));
}

MiscoverageRate::MiscoverageRate(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "alpha must lie in (0, 1)");
  }
}

}  // namespace tscp
