#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tscp/domain.hpp"

namespace tscp::datasets {

struct DatasetSpec {
  std::string name;
  Frequency frequency;
  std::size_t expected_series = 1;
  std::size_t expected_length = 1;

  // ercot, nn5_daily, nn5_weekly, m3_monthly.
  static DatasetSpec standard(std::string_view name);
};

// Human-readable differences between a loaded dataset and its spec; empty
// when the shape matches.
std::vector<std::string> shape_discrepancies(const DatasetSpec& spec,
                                             const std::vector<TimeSeries>& series);

// ---- long CSV ----------------------------------------------------------------
// Header series_id,timestamp,value; RFC 3339 timestamps; one row per point.

std::vector<TimeSeries> read_long_csv(std::istream& in, Frequency frequency);
std::vector<TimeSeries> load_long_csv(const std::filesystem::path& path, Frequency frequency);
void write_long_csv(std::ostream& out, const std::vector<TimeSeries>& series);
void write_long_csv(const std::filesystem::path& path, const std::vector<TimeSeries>& series);

// ---- source-format converters ------------------------------------------------

// Monash .tsf text (optionally the single .tsf inside a .zip archive).
std::vector<TimeSeries> read_tsf(std::istream& in, std::optional<Frequency> frequency = {});
std::vector<TimeSeries> load_tsf(const std::filesystem::path& path,
                                 std::optional<Frequency> frequency = {});

// Returns the bytes of the first entry whose name ends with `suffix`.
std::string extract_zip_entry(const std::filesystem::path& archive, std::string_view suffix);

// ---- manifest + fetch ----------------------------------------------------------

struct ManifestEntry {
  std::string name;
  std::string url;     // empty: no public source configured
  std::string sha256;  // lower-case hex; empty: not pinned yet
  Frequency frequency;
  std::string format = "long_csv";  // long_csv | tsf
  std::string note;
};

class Manifest {
 public:
  static Manifest load(const std::filesystem::path& path);
  static Manifest parse(std::string_view json_text);

  const ManifestEntry& at(std::string_view name) const;
  const ManifestEntry* find(std::string_view name) const;
  const std::map<std::string, ManifestEntry, std::less<>>& entries() const { return entries_; }

 private:
  std::map<std::string, ManifestEntry, std::less<>> entries_;
};

std::string sha256_file(const std::filesystem::path& path);

struct FetchResult {
  std::filesystem::path path;
  std::string sha256;
  bool from_cache = false;
};

// Downloads `url` (http, https or file) into cache_dir/name/ once. A cached
// copy is re-verified against `sha256` when one is configured.
FetchResult fetch_dataset(std::string_view name, std::string_view url,
                          const std::filesystem::path& cache_dir,
                          std::string_view sha256 = {});
FetchResult fetch_dataset(const Manifest& manifest, std::string_view name,
                          const std::filesystem::path& cache_dir);

// TSCP_CACHE_DIR, else $XDG_CACHE_HOME/tscp, else ~/.cache/tscp.
std::filesystem::path default_cache_dir();

// ---- window scenarios ------------------------------------------------------------

enum class Placement { Even, Random };

struct WindowScenario {
  std::size_t window_points = 1;
  HorizonSpec horizon;
  std::size_t n_windows = 20;
  std::uint64_t seed = 0;
  Placement placement = Placement::Even;
  std::size_t start = 0;  // first admissible offset
};

struct SampledWindow {
  TimeSeries window;
  std::vector<double> holdout;
  std::size_t offset = 0;
};

// n_windows segments of window_points followed by a horizon-long holdout.
// Even placement spreads start offsets evenly over [start, N - W - H];
// random placement draws them uniformly under the seed (sorted).
std::vector<SampledWindow> sample_windows(const TimeSeries& series, const WindowScenario& scenario);

// ---- synthetic data ------------------------------------------------------------------

TimeSeries synth_iid(std::size_t n, double mean, double sigma, std::uint64_t seed,
                     Frequency frequency = Frequency(FrequencyKind::Hourly),
                     std::string id = "iid");
// amplitude * sin(2*pi*(i mod m)/m) + noise * N(0, 1)
TimeSeries synth_seasonal(std::size_t n, int m, double amplitude, double noise, std::uint64_t seed,
                          Frequency frequency = Frequency(FrequencyKind::Hourly),
                          std::string id = "seasonal");

// A dataset with the shape of `spec`: positive level, seasonal cycle at the
// frequency's default season, random-walk drift and noise.
std::vector<TimeSeries> synth_dataset(const DatasetSpec& spec, std::uint64_t seed);

}  // namespace tscp::datasets
