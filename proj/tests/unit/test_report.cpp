#include <gtest/gtest.h>

#include <unistd.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "tscp/report.hpp"

using namespace tscp;
using namespace tscp::report;
using harness::ResultRow;
namespace fs = std::filesystem;

namespace {

std::size_t count(const std::string& haystack, const std::string& needle) {
  std::size_t n = 0;
  for (auto at = haystack.find(needle); at != std::string::npos; at = haystack.find(needle, at + 1)) ++n;
  return n;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream b;
  b << in.rdbuf();
  return b.str();
}

std::vector<ResultRow> sample_rows() {
  return {
      {"ERCOT-2232", "S", "Naive", 1.0, 0.9, 120.5, 1.0, 20, 0},
      {"ERCOT-2232", "S", "ChronosBolt", 0.362, 0.913, 40.1, 0.312, 20, 0},
      {"ERCOT-2232", "M", "Naive", 1.0, 0.88, 150.0, 1.0, 19, 1},
      {"NN5", "S", "Naive", 1.0, 0.1 + 0.2, 3.0, 1.0, 100, 0},
  };
}

}  // namespace

TEST(Tables, CsvJsonMarkdown) {
  const auto rows = sample_rows();
  const auto csv = results_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "dataset,horizon,estimator,mase,mcr,iw,msiw,n_units,failures");
  EXPECT_NE(csv.find("ERCOT-2232,S,ChronosBolt,0.362,0.913,40.1,0.312,20,0"), std::string::npos);
  EXPECT_NE(csv.find("0.30000000000000004"), std::string::npos);

  const auto back = parse_results_json(results_json(rows, 0.1));
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_TRUE(back[i].identical(rows[i]));

  const auto md = results_markdown(rows, 0.1);
  EXPECT_NE(md.find("## ERCOT-2232"), std::string::npos);
  EXPECT_NE(md.find("| ChronosBolt | 0.362 | 0.913 | 0.312 |"), std::string::npos);
  EXPECT_NE(md.find("1 unit(s) failed"), std::string::npos);
}

TEST(Tables, NanSurvivesJson) {
  std::vector<ResultRow> rows{{"d", "S", "Broken", std::nan(""), std::nan(""), std::nan(""), std::nan(""), 0, 5}};
  const auto back = parse_results_json(results_json(rows, 0.1));
  EXPECT_TRUE(std::isnan(back[0].mase) && std::isnan(back[0].mcr) && std::isnan(back[0].msiw));
  EXPECT_TRUE(back[0].identical(rows[0]));
  EXPECT_EQ(back[0].failures, 5u);
}

TEST(Bubble, OneRowOneBubbleAndTargetLine) {
  std::vector<ResultRow> one{{"d", "S", "Naive", 1.0, 0.85, 2.0, 1.0, 1, 0}};
  const auto layout = bubble_layout(one, 0.1);
  ASSERT_EQ(layout.bubbles.size(), 1u);
  EXPECT_EQ(layout.target, 0.9);
  EXPECT_DOUBLE_EQ(layout.target_x, layout.px(0.9));
  const auto svg = bubble_svg(layout);
  EXPECT_EQ(count(svg, "class=\"bubble\""), 1u);
  EXPECT_EQ(count(svg, "class=\"target\""), 1u);
  EXPECT_NE(svg.find("stroke-dasharray"), std::string::npos);
}

TEST(Bubble, GeometryFollowsMetrics) {
  const auto rows = sample_rows();
  std::vector<ResultRow> cell(rows.begin(), rows.begin() + 2);
  const auto layout = bubble_layout(cell, 0.1);
  ASSERT_EQ(layout.bubbles.size(), 2u);
  const auto& naive = layout.bubbles[0];
  const auto& bolt = layout.bubbles[1];
  // MCR 0.913 sits right of the 90% line; lower MSIW draws lower (larger y).
  EXPECT_GT(bolt.cx, layout.target_x);
  EXPECT_GT(bolt.cy, naive.cy);
  EXPECT_NEAR(bolt.r / naive.r, 0.362, 1e-12);
}

TEST(Emit, ByteIdenticalOnRerun) {
  const fs::path dir = fs::temp_directory_path() / ("tscp_report_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  const auto rows = sample_rows();
  const std::vector<Format> all{Format::Csv, Format::Json, Format::Markdown, Format::Svg};
  const auto first = emit_report(rows, dir / "a", all, 0.1);
  const auto second = emit_report(rows, dir / "b", all, 0.1);
  ASSERT_EQ(first.size(), 6u);  // csv, json, md and three (dataset, horizon) charts
  for (std::size_t i = 0; i < first.size(); ++i) {
    EXPECT_EQ(first[i].filename(), second[i].filename());
    EXPECT_EQ(slurp(first[i]), slurp(second[i])) << first[i];
  }
  EXPECT_EQ(read_results_json(dir / "a" / "results.json").size(), rows.size());
  fs::remove_all(dir);
  EXPECT_EQ(parse_formats("csv,svg").size(), 2u);
}

TEST(SeriesPlot, BandMarkersAndDegenerateCases) {
  SeriesPlot p;
  p.context = {1, 2, 3, 4};
  p.actual = {4, 4.5, 9};
  p.interval.center = Forecast({4, 4, 4});
  p.interval.lower = {3, 3, 3};
  p.interval.upper = {5, 5, 5};
  auto svg = series_svg(p);
  EXPECT_EQ(count(svg, "class=\"inside\""), 2u);
  EXPECT_EQ(count(svg, "class=\"outside\""), 1u);
  EXPECT_EQ(count(svg, "class=\"band\""), 1u);
  EXPECT_NE(svg.find("#87cefa"), std::string::npos);

  p.actual = {4, 4, 4};
  EXPECT_EQ(count(series_svg(p), "class=\"outside\""), 0u);

  // q-hat = 0: bounds coincide with the forecast line.
  p.interval.lower = {4, 4, 4};
  p.interval.upper = {4, 4, 4};
  svg = series_svg(p);
  const auto line_of = [&](const std::string& cls) {
    const auto at = svg.find("class=\"" + cls + "\"");
    const auto start = svg.rfind("points=\"", at);
    return svg.substr(start, svg.find('"', start + 8) - start);
  };
  EXPECT_EQ(line_of("upper"), line_of("lower"));
  EXPECT_EQ(line_of("upper"), line_of("center"));

  SeriesPlot empty;
  empty.context = {1, 2, 3};
  svg = series_svg(empty);
  EXPECT_EQ(count(svg, "class=\"band\""), 0u);
  EXPECT_EQ(count(svg, "class=\"context\""), 1u);
}
