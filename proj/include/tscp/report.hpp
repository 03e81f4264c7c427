#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tscp/harness.hpp"

namespace tscp::report {

enum class Format { Csv, Json, Markdown, Svg };

std::vector<Format> parse_formats(std::string_view comma_list);

std::string results_csv(const std::vector<harness::ResultRow>& rows);
std::string results_json(const std::vector<harness::ResultRow>& rows, double alpha);
// One table per dataset: estimators down, MASE / MCR / MSIW per horizon across.
std::string results_markdown(const std::vector<harness::ResultRow>& rows, double alpha);
std::string failures_csv(const std::vector<harness::CellResult>& cells);
std::string timings_json(const std::map<std::string, bridge::LatencyStats>& latency);

std::vector<harness::ResultRow> parse_results_json(std::string_view text);
std::vector<harness::ResultRow> read_results_json(const std::filesystem::path& path);

struct Bubble {
  std::string estimator;
  double mcr = 0.0;
  double msiw = 0.0;
  double mase = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  double r = 0.0;
};

struct BubbleLayout {
  std::string title;
  double width = 640.0;
  double height = 480.0;
  double margin_left = 70.0;
  double margin_right = 30.0;
  double margin_top = 40.0;
  double margin_bottom = 60.0;
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;
  double target = 0.9;    // 1 - alpha, drawn as a dashed vertical line
  double target_x = 0.0;  // its pixel position
  double max_radius = 28.0;
  std::vector<Bubble> bubbles;  // rows with non-finite metrics are left out

  double px(double mcr) const;
  double py(double msiw) const;
};

// x = MCR, y = MSIW, radius proportional to MASE. Rows should share one
// dataset and horizon.
BubbleLayout bubble_layout(const std::vector<harness::ResultRow>& rows, double alpha,
                           std::string title = {});
std::string bubble_svg(const BubbleLayout& layout);

struct SeriesPlot {
  std::string title;
  std::vector<double> context;
  std::vector<double> actual;
  PredictionInterval interval;
};

// Context line, shaded interval band with light-blue bounds, and the realized
// values marked as inside or outside the band.
std::string series_svg(const SeriesPlot& plot);

// Writes results.{csv,json,md} and one bubble chart per (dataset, horizon)
// into dir. Returns the paths written, in a fixed order.
std::vector<std::filesystem::path> emit_report(const std::vector<harness::ResultRow>& rows,
                                               const std::filesystem::path& dir,
                                               const std::vector<Format>& formats, double alpha);

void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace tscp::report
