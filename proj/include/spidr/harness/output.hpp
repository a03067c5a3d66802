#pragma once

// Report emission: metrics and summary CSV, self-contained SVG charts and
// heatmaps, config hashing and the build/host fingerprint.

#include "spidr/envs/heatmap.hpp"
#include "spidr/rng.hpp"
#include "spidr/solve/updates.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace spidr::harness {

/// Shortest round-trip decimal; NaN becomes an empty field.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline const char* kMetricsHeader =
    "iteration,J_train,C_train_raw,C_train_penalized,J_eval,C_eval,dual,mean_upsilon,max_upsilon";

inline void write_metrics_csv(std::ostream& os, const std::vector<MetricsRecord>& metrics) {
  os << kMetricsHeader << '\n';
  for (const auto& r : metrics)
    os << r.iteration << ',' << format_number(r.j_train) << ',' << format_number(r.c_train_raw) << ','
       << format_number(r.c_train_penalized) << ',' << format_number(r.j_eval) << ',' << format_number(r.c_eval) << ','
       << format_number(r.dual) << ',' << format_number(r.mean_upsilon) << ',' << format_number(r.max_upsilon) << '\n';
}

inline std::vector<MetricsRecord> read_metrics_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kMetricsHeader) throw std::runtime_error("metrics.csv: unexpected header");
  std::vector<MetricsRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream row(line);
    std::string field;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (fields.size() != 9) throw std::runtime_error("metrics.csv: expected 9 fields in '" + line + "'");
    auto num = [](const std::string& f) { return f.empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(f); };
    MetricsRecord r;
    r.iteration = std::stoi(fields[0]);
    r.j_train = num(fields[1]);
    r.c_train_raw = num(fields[2]);
    r.c_train_penalized = num(fields[3]);
    r.j_eval = num(fields[4]);
    r.c_eval = num(fields[5]);
    r.dual = num(fields[6]);
    r.mean_upsilon = num(fields[7]);
    r.max_upsilon = num(fields[8]);
    out.push_back(r);
  }
  return out;
}

/// Ordered key/value rows, rendered as a two-column CSV.
struct Summary {
  std::vector<std::pair<std::string, std::string>> rows;

  void add(const std::string& key, const std::string& value) { rows.emplace_back(key, value); }
  void add(const std::string& key, double value) { rows.emplace_back(key, format_number(value)); }

  [[nodiscard]] std::string get(const std::string& key) const {
    for (const auto& [k, v] : rows)
      if (k == key) return v;
    throw std::runtime_error("summary has no key '" + key + "'");
  }
};

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

inline void write_summary_csv(std::ostream& os, const Summary& summary) {
  os << "key,value\n";
  for (const auto& [k, v] : summary.rows) os << csv_escape(k) << ',' << csv_escape(v) << '\n';
}

inline Summary read_summary_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "key,value") throw std::runtime_error("summary.csv: unexpected header");
  Summary s;
  while (std::getline(is, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    std::string value = line.substr(comma + 1);
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    s.add(line.substr(0, comma), value);
  }
  return s;
}

inline std::uint64_t fnv1a(std::string_view text) { return tag_hash(text); }

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

inline std::string environment_fingerprint() {
  std::ostringstream os;
#if defined(__clang__)
  os << "clang " << __clang_major__ << '.' << __clang_minor__;
#elif defined(__GNUC__)
  os << "gcc " << __GNUC__ << '.' << __GNUC_MINOR__;
#else
  os << "unknown-compiler";
#endif
#ifdef NDEBUG
  os << "; release";
#else
  os << "; debug";
#endif
  os << "; eigen " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION;
  os << "; threads " << std::max(1u, std::thread::hardware_concurrency());
  return os.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

// ---------------------------------------------------------------------------
// SVG

struct Series {
  std::string label;
  std::string color;
  std::vector<double> x;
  std::vector<double> y;  // NaN entries are skipped
  std::vector<double> err;  // optional symmetric error bars
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  std::optional<double> budget;  // horizontal rule, unsafe region shaded red
  bool log_x = false;
};

namespace detail {

inline std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

inline std::string fmt_tick(double v) {
  std::ostringstream os;
  os << std::setprecision(3) << v;
  return os.str();
}

}  // namespace detail

inline std::string render_line_chart(const LineChart& chart) {
  constexpr double W = 640, H = 400, L = 70, R = 150, T = 40, B = 50;
  auto tx = [&](double x) { return chart.log_x ? std::log10(x) : x; };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : chart.series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (std::isnan(s.y[i]) || (chart.log_x && !(s.x[i] > 0.0))) continue;
      const double e = s.err.empty() || std::isnan(s.err[i]) ? 0.0 : s.err[i];
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, s.y[i] - e);
      y1 = std::max(y1, s.y[i] + e);
    }
  if (chart.budget) {
    y0 = std::min(y0, *chart.budget);
    y1 = std::max(y1, *chart.budget);
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return L + (tx(x) - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << detail::svg_escape(chart.title) << "</text>\n";
  if (chart.budget) {
    const double yb = py(*chart.budget);
    os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << std::max(0.0, yb - T)
       << "\" fill=\"#d62728\" fill-opacity=\"0.12\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << yb << "\" x2=\"" << W - R << "\" y2=\"" << yb
       << "\" stroke=\"black\" stroke-dasharray=\"6,4\"/>\n";
    os << "<text x=\"" << W - R + 4 << "\" y=\"" << yb + 4 << "\">budget</text>\n";
  }
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
     << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double yv = y0 + (y1 - y0) * k / 4.0;
    os << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << detail::fmt_tick(yv) << "</text>\n";
    const double xv = x0 + (x1 - x0) * k / 4.0;
    const double shown = chart.log_x ? std::pow(10.0, xv) : xv;
    os << "<text x=\"" << L + (xv - x0) / (x1 - x0) * (W - L - R) << "\" y=\"" << H - B + 16
       << "\" text-anchor=\"middle\">" << detail::fmt_tick(shown) << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">" << detail::svg_escape(chart.x_label) << "</text>\n";
  os << "<text transform=\"translate(16," << (T + H - B) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << detail::svg_escape(chart.y_label) << "</text>\n";
  for (std::size_t k = 0; k < chart.series.size(); ++k) {
    const Series& s = chart.series[k];
    std::ostringstream pts;
    pts << std::fixed << std::setprecision(2);
    int count = 0;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (std::isnan(s.y[i]) || (chart.log_x && !(s.x[i] > 0.0))) continue;
      pts << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
      ++count;
      if (!s.err.empty() && !std::isnan(s.err[i]) && s.err[i] > 0.0)
        os << "<line x1=\"" << px(s.x[i]) << "\" y1=\"" << py(s.y[i] - s.err[i]) << "\" x2=\"" << px(s.x[i]) << "\" y2=\""
           << py(s.y[i] + s.err[i]) << "\" stroke=\"" << s.color << "\"/>\n";
    }
    if (count > 1)
      os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.6\" points=\"" << pts.str() << "\"/>\n";
    if (count <= 25) {
      for (std::size_t i = 0; i < s.x.size(); ++i)
        if (!std::isnan(s.y[i]) && !(chart.log_x && !(s.x[i] > 0.0)))
          os << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"3\" fill=\"" << s.color << "\"/>\n";
    }
    const double ly = T + 14 + 18 * static_cast<double>(k);
    os << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 30 << "\" y2=\"" << ly << "\" stroke=\""
       << s.color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << W - R + 34 << "\" y=\"" << ly + 4 << "\">" << detail::svg_escape(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

/// Objective and constraint panels for one metrics series.
inline std::pair<LineChart, LineChart> metrics_charts(const std::vector<MetricsRecord>& metrics, double budget,
                                                      const std::string& title) {
  LineChart obj{title + ": objective", "iteration", "discounted return", {}, std::nullopt, false};
  LineChart con{title + ": constraint", "iteration", "discounted cost", {}, budget, false};
  Series jt{"J train", "#1f77b4", {}, {}, {}}, je{"J eval", "#ff7f0e", {}, {}, {}};
  Series cr{"C train", "#1f77b4", {}, {}, {}}, cp{"C train penalized", "#2ca02c", {}, {}, {}}, ce{"C eval", "#ff7f0e", {}, {}, {}};
  for (const auto& r : metrics) {
    const double it = r.iteration;
    jt.x.push_back(it), jt.y.push_back(r.j_train);
    je.x.push_back(it), je.y.push_back(r.j_eval);
    cr.x.push_back(it), cr.y.push_back(r.c_train_raw);
    cp.x.push_back(it), cp.y.push_back(r.c_train_penalized);
    ce.x.push_back(it), ce.y.push_back(r.c_eval);
  }
  obj.series = {jt, je};
  con.series = {cr, cp, ce};
  return {obj, con};
}

namespace detail {

/// Perceptually ordered ramp from dark blue to yellow.
inline std::string ramp(double t) {
  static const double stops[5][3] = {{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
  t = std::clamp(t, 0.0, 1.0) * 4.0;
  const int k = std::min(3, static_cast<int>(t));
  const double f = t - k;
  std::ostringstream os;
  os << "rgb(";
  for (int c = 0; c < 3; ++c) os << (c ? "," : "") << static_cast<int>(std::lround(stops[k][c] + f * (stops[k + 1][c] - stops[k][c])));
  os << ")";
  return os.str();
}

}  // namespace detail

/// One panel per action, shared colour scale.
inline std::string render_heatmap(const envs::HeatmapGrid& grid, const std::string& title) {
  constexpr double panel = 200, gap = 30, top = 50, left = 50;
  const std::size_t na = grid.actions.size();
  const std::size_t nx = grid.angles_from_bottom.size();
  const std::size_t ny = grid.angular_velocities.size();
  double vmax = 0.0;
  for (const auto& a : grid.values)
    for (const auto& row : a)
      for (double v : row) vmax = std::max(vmax, v);
  if (vmax <= 0.0) vmax = 1.0;
  const double width = left + na * (panel + gap) + 60;
  const double height = top + panel + 60;
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << detail::svg_escape(title) << "</text>\n";
  const double cw = panel / static_cast<double>(nx);
  const double ch = panel / static_cast<double>(ny);
  for (std::size_t a = 0; a < na; ++a) {
    const double ox = left + a * (panel + gap);
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < ny; ++j)
        os << "<rect x=\"" << ox + i * cw << "\" y=\"" << top + (ny - 1 - j) * ch << "\" width=\"" << cw + 0.3
           << "\" height=\"" << ch + 0.3 << "\" fill=\"" << detail::ramp(grid.values[a][i][j] / vmax) << "\"/>\n";
    os << "<text x=\"" << ox + panel / 2 << "\" y=\"" << top - 8 << "\" text-anchor=\"middle\">a = "
       << detail::fmt_tick(grid.actions[a]) << "</text>\n";
    os << "<text x=\"" << ox + panel / 2 << "\" y=\"" << top + panel + 18 << "\" text-anchor=\"middle\">angle from bottom</text>\n";
  }
  os << "<text transform=\"translate(20," << top + panel / 2 << ") rotate(-90)\" text-anchor=\"middle\">angular velocity</text>\n";
  const double bx = left + na * (panel + gap);
  for (int k = 0; k < 20; ++k)
    os << "<rect x=\"" << bx << "\" y=\"" << top + panel - (k + 1) * panel / 20 << "\" width=\"14\" height=\"" << panel / 20 + 0.3
       << "\" fill=\"" << detail::ramp((k + 0.5) / 20) << "\"/>\n";
  os << "<text x=\"" << bx + 18 << "\" y=\"" << top + 8 << "\">" << detail::fmt_tick(vmax) << "</text>\n";
  os << "<text x=\"" << bx + 18 << "\" y=\"" << top + panel << "\">0</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace spidr::harness
