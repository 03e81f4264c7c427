#include "tscp/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace tscp::report {

namespace fs = std::filesystem;
using harness::ResultRow;
using nlohmann::ordered_json;

namespace {

std::string shortest(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fixed(double v, int digits) {
  if (!std::isfinite(v)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string file_slug(std::string_view s) {
  std::string out;
  for (char c : s) {
    const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                      c == '-' || c == '_' || c == '.';
    out.push_back(keep ? c : '_');
  }
  return out;
}

ordered_json number_or_null(double v) {
  return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
}

double number_field(const nlohmann::json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nan("");
  if (!it->is_number()) throw Error(ErrorKind::ParseError, std::string("results field '") + key + "' is not a number");
  return it->get<double>();
}

// Datasets, then horizons, in order of first appearance.
std::vector<std::pair<std::string, std::string>> cells_in_order(const std::vector<ResultRow>& rows) {
  std::vector<std::pair<std::string, std::string>> cells;
  for (const auto& r : rows) {
    std::pair<std::string, std::string> key{r.dataset, r.horizon_label};
    if (std::find(cells.begin(), cells.end(), key) == cells.end()) cells.push_back(key);
  }
  return cells;
}

class Svg {
 public:
  Svg(double width, double height) {
    out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(width, 0) << "\" height=\""
         << fixed(height, 0) << "\" viewBox=\"0 0 " << fixed(width, 0) << ' ' << fixed(height, 0)
         << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out_ << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  }

  Svg& raw(std::string_view s) {
    out_ << s;
    return *this;
  }
  void line(double x1, double y1, double x2, double y2, std::string_view attrs) {
    out_ << "<line x1=\"" << fixed(x1, 2) << "\" y1=\"" << fixed(y1, 2) << "\" x2=\"" << fixed(x2, 2)
         << "\" y2=\"" << fixed(y2, 2) << "\" " << attrs << "/>\n";
  }
  void text(double x, double y, std::string_view s, std::string_view attrs = {}) {
    out_ << "<text x=\"" << fixed(x, 2) << "\" y=\"" << fixed(y, 2) << '"';
    if (!attrs.empty()) out_ << ' ' << attrs;
    out_ << '>' << xml_escape(s) << "</text>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, std::string_view attrs) {
    if (pts.empty()) return;
    out_ << "<polyline points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i > 0) out_ << ' ';
      out_ << fixed(pts[i].first, 2) << ',' << fixed(pts[i].second, 2);
    }
    out_ << "\" fill=\"none\" " << attrs << "/>\n";
  }
  void polygon(const std::vector<std::pair<double, double>>& pts, std::string_view attrs) {
    if (pts.empty()) return;
    out_ << "<polygon points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i > 0) out_ << ' ';
      out_ << fixed(pts[i].first, 2) << ',' << fixed(pts[i].second, 2);
    }
    out_ << "\" " << attrs << "/>\n";
  }
  void circle(double x, double y, double r, std::string_view attrs) {
    out_ << "<circle cx=\"" << fixed(x, 2) << "\" cy=\"" << fixed(y, 2) << "\" r=\"" << fixed(r, 2)
         << "\" " << attrs << "/>\n";
  }
  std::string finish() {
    out_ << "</svg>\n";
    return out_.str();
  }

 private:
  std::ostringstream out_;
};

// A few round tick values covering [lo, hi].
std::vector<double> ticks(double lo, double hi, int target = 5) {
  const double span = hi - lo;
  if (!(span > 0.0)) return {lo};
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + step * 1e-9; t += step) {
    out.push_back(std::abs(t) < step * 1e-9 ? 0.0 : t);
  }
  return out;
}

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

}  // namespace

std::vector<Format> parse_formats(std::string_view comma_list) {
  std::vector<Format> out;
  std::string item;
  std::stringstream in{std::string(comma_list)};
  while (std::getline(in, item, ',')) {
    if (item == "csv") {
      out.push_back(Format::Csv);
    } else if (item == "json") {
      out.push_back(Format::Json);
    } else if (item == "md" || item == "markdown") {
      out.push_back(Format::Markdown);
    } else if (item == "svg") {
      out.push_back(Format::Svg);
    } else if (!item.empty()) {
      throw Error(ErrorKind::ConfigError, "unknown report format '" + item + "'");
    }
  }
  return out;
}

std::string results_csv(const std::vector<ResultRow>& rows) {
  std::string out = "dataset,horizon,estimator,mase,mcr,iw,msiw,n_units,failures\n";
  for (const auto& r : rows) {
    out += csv_field(r.dataset) + ',' + csv_field(r.horizon_label) + ',' + csv_field(r.estimator) + ',' +
           shortest(r.mase) + ',' + shortest(r.mcr) + ',' + shortest(r.iw) + ',' + shortest(r.msiw) + ',' +
           std::to_string(r.n_units) + ',' + std::to_string(r.failures) + '\n';
  }
  return out;
}

std::string results_json(const std::vector<ResultRow>& rows, double alpha) {
  ordered_json j;
  j["alpha"] = alpha;
  j["rows"] = ordered_json::array();
  for (const auto& r : rows) {
    ordered_json row;
    row["dataset"] = r.dataset;
    row["horizon"] = r.horizon_label;
    row["estimator"] = r.estimator;
    row["mase"] = number_or_null(r.mase);
    row["mcr"] = number_or_null(r.mcr);
    row["iw"] = number_or_null(r.iw);
    row["msiw"] = number_or_null(r.msiw);
    row["n_units"] = r.n_units;
    row["failures"] = r.failures;
    j["rows"].push_back(std::move(row));
  }
  return j.dump(2) + "\n";
}

std::string results_markdown(const std::vector<ResultRow>& rows, double alpha) {
  std::ostringstream out;
  out << "# Results (alpha = " << shortest(alpha) << ", target coverage " << shortest(1.0 - alpha) << ")\n";
  std::vector<std::string> datasets;
  for (const auto& r : rows) {
    if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end()) datasets.push_back(r.dataset);
  }
  for (const auto& ds : datasets) {
    std::vector<std::string> horizons;
    std::vector<std::string> estimators;
    for (const auto& r : rows) {
      if (r.dataset != ds) continue;
      if (std::find(horizons.begin(), horizons.end(), r.horizon_label) == horizons.end()) {
        horizons.push_back(r.horizon_label);
      }
      if (std::find(estimators.begin(), estimators.end(), r.estimator) == estimators.end()) {
        estimators.push_back(r.estimator);
      }
    }
    out << "\n## " << ds << "\n\n| Estimator |";
    for (const auto& h : horizons) out << ' ' << h << " MASE | " << h << " MCR | " << h << " MSIW |";
    out << "\n|---|";
    for (std::size_t i = 0; i < horizons.size(); ++i) out << "---:|---:|---:|";
    out << '\n';
    for (const auto& e : estimators) {
      out << "| " << e << " |";
      for (const auto& h : horizons) {
        const auto it = std::find_if(rows.begin(), rows.end(), [&](const ResultRow& r) {
          return r.dataset == ds && r.horizon_label == h && r.estimator == e;
        });
        if (it == rows.end()) {
          out << " | | |";
        } else {
          out << ' ' << fixed(it->mase, 3) << " | " << fixed(it->mcr, 3) << " | " << fixed(it->msiw, 3) << " |";
        }
      }
      out << '\n';
    }
    std::size_t failures = 0;
    for (const auto& r : rows) {
      if (r.dataset == ds) failures += r.failures;
    }
    if (failures > 0) out << "\n" << failures << " unit(s) failed; see failures.csv.\n";
  }
  return out.str();
}

std::string failures_csv(const std::vector<harness::CellResult>& cells) {
  std::string out = "dataset,horizon,estimator,unit_id,error\n";
  for (const auto& cell : cells) {
    for (const auto& u : cell.units) {
      if (u.ok) continue;
      out += csv_field(cell.dataset) + ',' + std::string(to_string(cell.horizon.label)) + ',' +
             csv_field(cell.estimator) + ',' + csv_field(u.unit_id) + ',' + csv_field(u.error) + '\n';
    }
  }
  return out;
}

std::string timings_json(const std::map<std::string, bridge::LatencyStats>& latency) {
  ordered_json j = ordered_json::object();
  for (const auto& [name, s] : latency) {
    ordered_json e;
    e["requests"] = s.requests;
    e["failures"] = s.failures;
    e["mean_ms"] = s.mean_ms();
    e["max_ms"] = s.max_ms;
    e["adapter_total_ms"] = s.adapter_total_ms;
    j[name] = std::move(e);
  }
  return j.dump(2) + "\n";
}

std::vector<ResultRow> parse_results_json(std::string_view text) {
  const auto j = nlohmann::json::parse(text.begin(), text.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("rows") || !j["rows"].is_array()) {
    throw Error(ErrorKind::ParseError, "results file must be an object with a 'rows' array");
  }
  std::vector<ResultRow> rows;
  for (const auto& e : j["rows"]) {
    if (!e.is_object()) throw Error(ErrorKind::ParseError, "results row is not an object");
    ResultRow r;
    try {
      r.dataset = e.at("dataset").get<std::string>();
      r.horizon_label = e.at("horizon").get<std::string>();
      r.estimator = e.at("estimator").get<std::string>();
      r.n_units = e.value("n_units", std::size_t{0});
      r.failures = e.value("failures", std::size_t{0});
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorKind::ParseError, std::string("results row: ") + ex.what());
    }
    r.mase = number_field(e, "mase");
    r.mcr = number_field(e, "mcr");
    r.iw = number_field(e, "iw");
    r.msiw = number_field(e, "msiw");
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ResultRow> read_results_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_results_json(buffer.str());
}

double BubbleLayout::px(double mcr) const {
  const double plot_w = width - margin_left - margin_right;
  return margin_left + (mcr - x_min) / (x_max - x_min) * plot_w;
}

double BubbleLayout::py(double msiw) const {
  const double plot_h = height - margin_top - margin_bottom;
  return height - margin_bottom - (msiw - y_min) / (y_max - y_min) * plot_h;
}

BubbleLayout bubble_layout(const std::vector<ResultRow>& rows, double alpha, std::string title) {
  BubbleLayout layout;
  layout.title = std::move(title);
  layout.target = 1.0 - alpha;

  double x_lo = layout.target;
  double x_hi = layout.target;
  double y_hi = 0.0;
  double mase_hi = 0.0;
  for (const auto& r : rows) {
    if (!std::isfinite(r.mcr) || !std::isfinite(r.msiw) || !std::isfinite(r.mase)) continue;
    Bubble b;
    b.estimator = r.estimator;
    b.mcr = r.mcr;
    b.msiw = r.msiw;
    b.mase = r.mase;
    layout.bubbles.push_back(b);
    x_lo = std::min(x_lo, r.mcr);
    x_hi = std::max(x_hi, r.mcr);
    y_hi = std::max(y_hi, r.msiw);
    mase_hi = std::max(mase_hi, r.mase);
  }
  const double x_pad = std::max(0.02, 0.1 * (x_hi - x_lo));
  layout.x_min = std::max(0.0, x_lo - x_pad);
  layout.x_max = std::min(1.0, x_hi + x_pad);
  if (layout.x_max <= layout.x_min) layout.x_max = layout.x_min + 0.05;
  layout.y_min = 0.0;
  layout.y_max = y_hi > 0.0 ? y_hi * 1.15 : 1.0;
  layout.target_x = layout.px(layout.target);

  for (auto& b : layout.bubbles) {
    b.cx = layout.px(b.mcr);
    b.cy = layout.py(b.msiw);
    b.r = mase_hi > 0.0 ? layout.max_radius * b.mase / mase_hi : 0.0;
  }
  return layout;
}

std::string bubble_svg(const BubbleLayout& layout) {
  Svg svg(layout.width, layout.height);
  const double left = layout.margin_left;
  const double right = layout.width - layout.margin_right;
  const double top = layout.margin_top;
  const double bottom = layout.height - layout.margin_bottom;

  if (!layout.title.empty()) svg.text(layout.width / 2, 22, layout.title, "text-anchor=\"middle\" font-size=\"14\"");
  for (double t : ticks(layout.x_min, layout.x_max)) {
    const double x = layout.px(t);
    svg.line(x, bottom, x, bottom + 5, "stroke=\"black\"");
    svg.text(x, bottom + 18, fixed(t, 2), "text-anchor=\"middle\"");
  }
  for (double t : ticks(layout.y_min, layout.y_max)) {
    const double y = layout.py(t);
    svg.line(left - 5, y, left, y, "stroke=\"black\"");
    svg.line(left, y, right, y, "stroke=\"#eeeeee\"");
    svg.text(left - 8, y + 4, fixed(t, 2), "text-anchor=\"end\"");
  }
  svg.line(left, bottom, right, bottom, "stroke=\"black\"");
  svg.line(left, top, left, bottom, "stroke=\"black\"");
  svg.text((left + right) / 2, layout.height - 15, "MCR", "text-anchor=\"middle\"");
  svg.text(18, (top + bottom) / 2, "MSIW",
           "text-anchor=\"middle\" transform=\"rotate(-90 18 " + fixed((top + bottom) / 2, 2) + ")\"");
  svg.line(layout.target_x, top, layout.target_x, bottom,
           "class=\"target\" stroke=\"#555555\" stroke-dasharray=\"6,4\"");

  for (std::size_t i = 0; i < layout.bubbles.size(); ++i) {
    const auto& b = layout.bubbles[i];
    const std::string color = kPalette[i % std::size(kPalette)];
    svg.circle(b.cx, b.cy, b.r,
               "class=\"bubble\" fill=\"" + color + "\" fill-opacity=\"0.45\" stroke=\"" + color + "\"");
    svg.text(b.cx + b.r + 3, b.cy + 4, b.estimator);
  }
  return svg.finish();
}

std::string series_svg(const SeriesPlot& plot) {
  const double width = 800.0;
  const double height = 360.0;
  const double left = 60.0;
  const double right = width - 20.0;
  const double top = 36.0;
  const double bottom = height - 40.0;

  const std::size_t n_ctx = plot.context.size();
  const std::size_t n_h = plot.actual.size();
  const std::size_t n = std::max<std::size_t>(n_ctx + n_h, 2);

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  const auto extend = [&](double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  };
  for (double v : plot.context) extend(v);
  for (double v : plot.actual) extend(v);
  if (n_h > 0) {
    for (double v : plot.interval.lower) extend(v);
    for (double v : plot.interval.upper) extend(v);
  }
  if (!(hi >= lo)) lo = 0.0, hi = 1.0;
  if (hi == lo) lo -= 1.0, hi += 1.0;
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  const auto px = [&](std::size_t i) { return left + (right - left) * static_cast<double>(i) / static_cast<double>(n - 1); };
  const auto py = [&](double v) { return bottom - (v - lo) / (hi - lo) * (bottom - top); };

  Svg svg(width, height);
  if (!plot.title.empty()) svg.text(width / 2, 22, plot.title, "text-anchor=\"middle\" font-size=\"14\"");
  svg.line(left, bottom, right, bottom, "stroke=\"black\"");
  svg.line(left, top, left, bottom, "stroke=\"black\"");
  for (double t : ticks(lo, hi)) {
    svg.line(left - 5, py(t), left, py(t), "stroke=\"black\"");
    svg.text(left - 8, py(t) + 4, fixed(t, 2), "text-anchor=\"end\"");
  }

  std::vector<std::pair<double, double>> ctx;
  for (std::size_t i = 0; i < n_ctx; ++i) ctx.emplace_back(px(i), py(plot.context[i]));
  svg.polyline(ctx, "class=\"context\" stroke=\"#333333\" stroke-width=\"1.2\"");

  const std::size_t m = std::min({n_h, plot.interval.lower.size(), plot.interval.upper.size()});
  if (m > 0) {
    std::vector<std::pair<double, double>> band;
    std::vector<std::pair<double, double>> lower;
    std::vector<std::pair<double, double>> upper;
    std::vector<std::pair<double, double>> center;
    for (std::size_t k = 0; k < m; ++k) {
      upper.emplace_back(px(n_ctx + k), py(plot.interval.upper[k]));
      lower.emplace_back(px(n_ctx + k), py(plot.interval.lower[k]));
      if (k < plot.interval.center.size()) center.emplace_back(px(n_ctx + k), py(plot.interval.center[k]));
    }
    band = upper;
    band.insert(band.end(), lower.rbegin(), lower.rend());
    svg.polygon(band, "class=\"band\" fill=\"#cfe8fc\" fill-opacity=\"0.7\" stroke=\"none\"");
    svg.polyline(upper, "class=\"upper\" stroke=\"#87cefa\" stroke-width=\"1.5\"");
    svg.polyline(lower, "class=\"lower\" stroke=\"#87cefa\" stroke-width=\"1.5\"");
    svg.polyline(center, "class=\"center\" stroke=\"#1f77b4\" stroke-dasharray=\"4,3\"");
    for (std::size_t k = 0; k < m; ++k) {
      const double a = plot.actual[k];
      const bool inside = a >= plot.interval.lower[k] && a <= plot.interval.upper[k];
      svg.circle(px(n_ctx + k), py(a), 3.0,
                 inside ? "class=\"inside\" fill=\"#2ca02c\"" : "class=\"outside\" fill=\"#d62728\"");
    }
  }
  return svg.finish();
}

void write_text(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

std::vector<fs::path> emit_report(const std::vector<ResultRow>& rows, const fs::path& dir,
                                  const std::vector<Format>& formats, double alpha) {
  std::vector<fs::path> written;
  const auto wants = [&](Format f) { return std::find(formats.begin(), formats.end(), f) != formats.end(); };
  if (wants(Format::Csv)) {
    written.push_back(dir / "results.csv");
    write_text(written.back(), results_csv(rows));
  }
  if (wants(Format::Json)) {
    written.push_back(dir / "results.json");
    write_text(written.back(), results_json(rows, alpha));
  }
  if (wants(Format::Markdown)) {
    written.push_back(dir / "results.md");
    write_text(written.back(), results_markdown(rows, alpha));
  }
  if (wants(Format::Svg)) {
    for (const auto& [dataset, horizon] : cells_in_order(rows)) {
      std::vector<ResultRow> cell;
      for (const auto& r : rows) {
        if (r.dataset == dataset && r.horizon_label == horizon) cell.push_back(r);
      }
      const auto layout = bubble_layout(cell, alpha, dataset + " / " + horizon);
      written.push_back(dir / ("bubble_" + file_slug(dataset) + "_" + file_slug(horizon) + ".svg"));
      write_text(written.back(), bubble_svg(layout));
    }
  }
  return written;
}

}  // namespace tscp::report
