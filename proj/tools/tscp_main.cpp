#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "tscp/harness.hpp"
#include "tscp/report.hpp"

namespace {

using namespace tscp;
namespace fs = std::filesystem;

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string threshold;
  std::optional<double> alpha;
  std::string out;
  std::string data;
  std::string formats = "csv,json,md,svg";
  std::size_t parallelism = 0;
};

int cmd_run(const RunArgs& args) {
  auto config = harness::ExperimentConfig::load(args.config);
  if (args.seed) config.override_seed(*args.seed);
  if (!args.threshold.empty()) config.threshold_mode = conformal::parse_threshold_mode(args.threshold);
  if (args.alpha) config.alpha = MiscoverageRate(*args.alpha);
  if (!args.out.empty()) config.output_dir = args.out;
  if (!args.data.empty()) config.dataset.path = fs::path(args.data);
  if (args.parallelism > 0) config.parallelism = args.parallelism;

  const auto result = harness::run_experiment(config);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';

  const double alpha = config.alpha.value();
  const auto written = report::emit_report(result.rows, config.output_dir,
                                           report::parse_formats(args.formats), alpha);
  report::write_text(config.output_dir / "failures.csv", report::failures_csv(result.cells));
  if (!result.latency.empty()) {
    report::write_text(config.output_dir / "timings.json", report::timings_json(result.latency));
  }
  if (config.plots) {
    for (const auto& cell : result.cells) {
      const auto it = std::find_if(cell.units.begin(), cell.units.end(),
                                   [](const harness::UnitOutcome& u) { return u.ok; });
      if (it == cell.units.end()) continue;
      report::SeriesPlot plot{cell.estimator + " / " + cell.dataset + " / " +
                                  std::string(to_string(cell.horizon.label)) + " / " + it->unit_id,
                              it->history_tail, it->actual, it->interval};
      const fs::path path = config.output_dir / "plots" /
                            (cell.dataset + "_" + std::string(to_string(cell.horizon.label)) + "_" +
                             cell.estimator + ".svg");
      report::write_text(path, report::series_svg(plot));
    }
  }

  std::cout << report::results_markdown(result.rows, alpha);
  std::size_t failures = 0;
  for (const auto& r : result.rows) failures += r.failures;
  std::cerr << "wrote " << written.size() << " report file(s) to " << config.output_dir.string();
  if (failures > 0) std::cerr << "; " << failures << " unit failure(s) in failures.csv";
  std::cerr << '\n';
  return 0;
}

int cmd_fetch(const std::string& dataset, const std::string& manifest_path, const std::string& cache) {
  const auto manifest = datasets::Manifest::load(manifest_path);
  const fs::path cache_dir = cache.empty() ? datasets::default_cache_dir() : fs::path(cache);
  const auto result = datasets::fetch_dataset(manifest, dataset, cache_dir);
  const auto& entry = manifest.at(dataset);
  std::cout << result.path.string() << '\n';
  std::cerr << "sha256 " << result.sha256 << (result.from_cache ? " (cached)" : "") << '\n';
  if (entry.sha256.empty()) {
    std::cerr << "warning: manifest does not pin a sha256 for '" << dataset << "'; record the value above\n";
  }
  return 0;
}

int cmd_plot(const std::string& results, const std::string& out, double alpha) {
  const auto rows = report::read_results_json(results);
  const auto written = report::emit_report(rows, out, {report::Format::Svg}, alpha);
  for (const auto& p : written) std::cout << p.string() << '\n';
  return 0;
}

int cmd_check(const std::string& endpoint, int timeout_ms) {
  bridge::ClientOptions options;
  options.timeout_ms = timeout_ms;
  bridge::ExternalForecaster adapter("check", bridge::Endpoint::parse(endpoint), options);
  const auto info = adapter.check();
  std::cout << "name " << info.name << "\nprotocol " << info.protocol_version << "\nmax_context "
            << info.max_context << "\nfreqs";
  for (const auto& f : info.supported_frequencies) std::cout << ' ' << f.code();
  std::cout << '\n';
  return 0;
}

int cmd_convert(const std::string& input, const std::string& output, const std::string& frequency) {
  std::optional<Frequency> freq;
  if (!frequency.empty()) freq = Frequency::parse(frequency);
  const auto series = datasets::load_tsf(input, freq);
  datasets::write_long_csv(fs::path(output), series);
  std::cerr << "wrote " << series.size() << " series to " << output << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conformal prediction intervals for time series forecasters"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment config and write the report");
  run_cmd->add_option("--config", run.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", run.seed, "Override the window-sampling seed");
  run_cmd->add_option("--threshold", run.threshold, "local | global")
      ->check(CLI::IsMember({"local", "global"}));
  run_cmd->add_option("--alpha", run.alpha, "Miscoverage rate in (0, 1)");
  run_cmd->add_option("--out", run.out, "Output directory");
  run_cmd->add_option("--data", run.data, "Long CSV to use instead of the configured source");
  run_cmd->add_option("--formats", run.formats, "Comma list of csv,json,md,svg");
  run_cmd->add_option("--parallelism", run.parallelism, "Worker threads (0: automatic)");

  std::string dataset;
  std::string manifest = "data/manifest.json";
  std::string cache;
  auto* fetch_cmd = app.add_subcommand("fetch", "Download a dataset into the local cache");
  fetch_cmd->add_option("--dataset", dataset, "Manifest entry name")->required();
  fetch_cmd->add_option("--manifest", manifest, "Manifest path");
  fetch_cmd->add_option("--cache", cache, "Cache directory (default: $TSCP_CACHE_DIR)");

  std::string results;
  std::string plot_out;
  double plot_alpha = 0.1;
  auto* plot_cmd = app.add_subcommand("plot", "Draw bubble charts from a results.json");
  plot_cmd->add_option("--results", results, "results.json")->required()->check(CLI::ExistingFile);
  plot_cmd->add_option("--out", plot_out, "Output directory")->required();
  plot_cmd->add_option("--alpha", plot_alpha, "Miscoverage rate for the target line");

  std::string endpoint;
  int timeout_ms = bridge::kDefaultTimeoutMs;
  auto* adapters_cmd = app.add_subcommand("adapters", "Inspect external forecast adapters");
  adapters_cmd->require_subcommand(1);
  auto* check_cmd = adapters_cmd->add_subcommand("check", "Handshake with an adapter and print its info");
  check_cmd->add_option("--endpoint", endpoint, "Command line or host:port")->required();
  check_cmd->add_option("--timeout-ms", timeout_ms, "Reply timeout");

  std::string input;
  std::string output;
  std::string frequency;
  auto* convert_cmd = app.add_subcommand("convert", "Convert a .tsf (or zipped .tsf) file to long CSV");
  convert_cmd->add_option("--input", input, ".tsf or .zip")->required()->check(CLI::ExistingFile);
  convert_cmd->add_option("--output", output, "Long CSV path")->required();
  convert_cmd->add_option("--frequency", frequency, "Override the file's frequency");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(run);
    if (*fetch_cmd) return cmd_fetch(dataset, manifest, cache);
    if (*plot_cmd) return cmd_plot(results, plot_out, plot_alpha);
    if (*check_cmd) return cmd_check(endpoint, timeout_ms);
    if (*convert_cmd) return cmd_convert(input, output, frequency);
  } catch (const tscp::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
