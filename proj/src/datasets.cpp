#include "tscp/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <unordered_map>

namespace tscp::datasets {

DatasetSpec DatasetSpec::standard(std::string_view name) {
  if (name == "ercot") return {"ercot", Frequency(FrequencyKind::Hourly), 1, 17520};
  if (name == "nn5_daily") return {"nn5_daily", Frequency(FrequencyKind::Daily), 100, 791};
  if (name == "nn5_weekly") return {"nn5_weekly", Frequency(FrequencyKind::Weekly), 100, 105};
  if (name == "m3_monthly") return {"m3_monthly", Frequency(FrequencyKind::Monthly), 1428, 66};
  throw Error(ErrorKind::ConfigError, "no built-in spec for dataset '" + std::string(name) + "'");
}

std::vector<std::string> shape_discrepancies(const DatasetSpec& spec,
                                             const std::vector<TimeSeries>& series) {
  std::vector<std::string> out;
  if (series.size() != spec.expected_series) {
    out.push_back(spec.name + ": expected " + std::to_string(spec.expected_series) +
                  " series, found " + std::to_string(series.size()));
  }
  std::size_t off_length = 0;
  for (const auto& s : series) {
    if (s.size() != spec.expected_length) ++off_length;
    if (s.frequency() != spec.frequency) {
      out.push_back(spec.name + ": series '" + s.id() + "' has frequency " +
                    std::string(s.frequency().name()));
    }
  }
  if (off_length > 0) {
    out.push_back(spec.name + ": " + std::to_string(off_length) + " series differ from length " +
                  std::to_string(spec.expected_length));
  }
  return out;
}

// ---- long CSV ----------------------------------------------------------------

namespace {

// Splits one CSV record; supports double-quoted fields with "" escapes.
std::vector<std::string> split_csv(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && field.empty() && !was_quoted) {
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else {
      field.push_back(c);
    }
  }
  if (quoted) throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": unterminated quote");
  fields.push_back(std::move(field));
  return fields;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::optional<double> parse_value(const std::string& text) {
  if (text.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::vector<TimeSeries> read_long_csv(std::istream& in, Frequency frequency) {
  struct Row {
    Timestamp ts;
    std::optional<double> value;
    std::size_t line_no;
  };
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw Error(ErrorKind::ParseError, "line 1: missing header");
  ++line_no;
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
  const auto header = split_csv(line, line_no);
  if (header.size() != 3 || trim(header[0]) != "series_id" || trim(header[1]) != "timestamp" ||
      trim(header[2]) != "value") {
    throw Error(ErrorKind::ParseError, "line 1: header must be series_id,timestamp,value");
  }

  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<Row>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line, line_no);
    if (fields.size() != 3) {
      throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": expected 3 fields, got " +
                                             std::to_string(fields.size()));
    }
    const std::string id = fields[0];
    if (id.empty()) throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": empty series_id");
    Timestamp ts;
    try {
      ts = parse_timestamp(trim(fields[1]));
    } catch (const Error& e) {
      throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": " + e.what());
    }
    const std::string raw = trim(fields[2]);
    auto value = parse_value(raw);
    if (!value && !raw.empty() && raw != "NaN" && raw != "nan" && raw != "NA" && raw != "null" &&
        raw != "?" && raw != "inf" && raw != "-inf") {
      throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": bad value '" + raw + "'");
    }
    auto [it, inserted] = rows.try_emplace(id);
    if (inserted) order.push_back(id);
    it->second.push_back(Row{ts, value, line_no});
  }

  std::vector<TimeSeries> out;
  out.reserve(order.size());
  for (const auto& id : order) {
    auto& series_rows = rows[id];
    std::stable_sort(series_rows.begin(), series_rows.end(),
                     [](const Row& a, const Row& b) { return a.ts < b.ts; });
    std::vector<double> values;
    values.reserve(series_rows.size());
    const Timestamp start = series_rows.front().ts;
    for (std::size_t i = 0; i < series_rows.size(); ++i) {
      if (series_rows[i].ts != frequency.advance(start, static_cast<std::int64_t>(i))) {
        throw Error(ErrorKind::NonUniformSpacing,
                    "series '" + id + "' index " + std::to_string(i) + " (" +
                        format_timestamp(series_rows[i].ts) + ") breaks " +
                        std::string(frequency.name()) + " spacing");
      }
      if (!series_rows[i].value) {
        throw Error(ErrorKind::MissingValue,
                    "series '" + id + "' index " + std::to_string(i) + " (line " +
                        std::to_string(series_rows[i].line_no) + ")");
      }
      values.push_back(*series_rows[i].value);
    }
    out.emplace_back(id, start, frequency, std::move(values));
  }
  return out;
}

std::vector<TimeSeries> load_long_csv(const std::filesystem::path& path, Frequency frequency) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  return read_long_csv(in, frequency);
}

void write_long_csv(std::ostream& out, const std::vector<TimeSeries>& series) {
  out << "series_id,timestamp,value\n";
  char buf[64];
  for (const auto& s : series) {
    const std::string id = csv_quote(s.id());
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto res = std::to_chars(buf, buf + sizeof buf, s[i]);
      out << id << ',' << format_timestamp(s.timestamp(i)) << ','
          << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf)) << '\n';
    }
  }
}

void write_long_csv(const std::filesystem::path& path, const std::vector<TimeSeries>& series) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  write_long_csv(out, series);
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

// ---- windows -------------------------------------------------------------------

std::vector<SampledWindow> sample_windows(const TimeSeries& series, const WindowScenario& scenario) {
  const std::size_t n = series.size();
  const std::size_t h = static_cast<std::size_t>(scenario.horizon.steps);
  const std::size_t span = scenario.window_points + h;
  if (scenario.n_windows == 0 || scenario.window_points == 0 || scenario.horizon.steps <= 0) {
    throw Error(ErrorKind::ScenarioDoesNotFit, "scenario needs windows, points and a horizon");
  }
  if (scenario.start + span > n) {
    throw Error(ErrorKind::ScenarioDoesNotFit,
                "window of " + std::to_string(span) + " points starting at " +
                    std::to_string(scenario.start) + " exceeds series of length " +
                    std::to_string(n));
  }
  const std::size_t first = scenario.start;
  const std::size_t last = n - span;
  std::vector<std::size_t> offsets(scenario.n_windows, first);
  if (scenario.placement == Placement::Even) {
    if (scenario.n_windows > 1) {
      for (std::size_t i = 0; i < scenario.n_windows; ++i) {
        offsets[i] = first + (i * (last - first)) / (scenario.n_windows - 1);
      }
    }
  } else {
    std::mt19937_64 rng(scenario.seed);
    std::uniform_int_distribution<std::size_t> pick(first, last);
    for (auto& o : offsets) o = pick(rng);
    std::sort(offsets.begin(), offsets.end());
  }

  std::vector<SampledWindow> out;
  out.reserve(offsets.size());
  const auto values = series.values();
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    const std::size_t o = offsets[i];
    out.push_back(SampledWindow{
        series.slice(o, scenario.window_points, series.id() + "#w" + std::to_string(i)),
        std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(o + scenario.window_points),
                            values.begin() + static_cast<std::ptrdiff_t>(o + span)),
        o});
  }
  return out;
}

// ---- synthetic ---------------------------------------------------------------------

namespace {

Timestamp synthetic_start() {
  using namespace std::chrono;
  return sys_days{year{2018} / January / 1};
}

}  // namespace

TimeSeries synth_iid(std::size_t n, double mean, double sigma, std::uint64_t seed,
                     Frequency frequency, std::string id) {
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "n must be positive");
  if (!(sigma >= 0.0)) throw Error(ErrorKind::InvalidArgument, "sigma must be nonnegative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> values(n);
  for (auto& v : values) v = mean + sigma * noise(rng);
  return TimeSeries(std::move(id), synthetic_start(), frequency, std::move(values));
}

TimeSeries synth_seasonal(std::size_t n, int m, double amplitude, double noise, std::uint64_t seed,
                          Frequency frequency, std::string id) {
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "n must be positive");
  if (m <= 0) throw Error(ErrorKind::InvalidArgument, "season length must be positive");
  if (!(noise >= 0.0)) throw Error(ErrorKind::InvalidArgument, "noise must be nonnegative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double phase = static_cast<double>(i % static_cast<std::size_t>(m)) / m;
    values[i] = amplitude * std::sin(2.0 * std::numbers::pi * phase) + noise * gauss(rng);
  }
  return TimeSeries(std::move(id), synthetic_start(), frequency, std::move(values));
}

std::vector<TimeSeries> synth_dataset(const DatasetSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const int m = spec.frequency.default_season_length();
  std::vector<TimeSeries> out;
  out.reserve(spec.expected_series);
  for (std::size_t j = 0; j < spec.expected_series; ++j) {
    const double level = 50.0 + 100.0 * uniform(rng);
    const double amplitude = level * (0.05 + 0.25 * uniform(rng));
    const double sigma = level * (0.02 + 0.05 * uniform(rng));
    const double phase = uniform(rng);
    std::vector<double> values(spec.expected_length);
    double drift = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      drift += 0.1 * sigma * gauss(rng);
      const double season =
          std::sin(2.0 * std::numbers::pi * (static_cast<double>(i % static_cast<std::size_t>(m)) / m + phase));
      values[i] = level + drift + amplitude * season + sigma * gauss(rng);
    }
    out.emplace_back(spec.name + "_" + std::to_string(j), synthetic_start(), spec.frequency,
                     std::move(values));
  }
  return out;
}

}  // namespace tscp::datasets
