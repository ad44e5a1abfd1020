#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sgfem/error.hpp"

namespace sgfem::cli {

/// Round-trip formatting with 17 significant digits.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

/// Comma-separated table held in memory and written once.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(std::vector<std::string> row) {
    if (row.size() != header_.size()) throw Error(ErrorCode::DimensionMismatch, "CSV row width");
    rows_.push_back(std::move(row));
  }

  [[nodiscard]] std::size_t size() const noexcept { return rows_.size(); }

  [[nodiscard]] std::string str() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
      }
      out += '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write '" + path.string() + "'");
  out << content;
}

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::optional<double> slope;
  bool dashed = false;
};

namespace detail {

inline std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace detail

/// Self-contained SVG 1.1 log-log plot with decade grid, markers, and a
/// legend carrying fitted slopes. Nonpositive points are skipped.
inline std::string loglog_svg(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                              const std::vector<PlotSeries>& series) {
  static constexpr std::array<const char*, 10> palette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                                       "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  const double width = 720, height = 520;
  const double left = 80, right = 250, top = 50, bottom = 70;
  const double pw = width - left - right;
  const double ph = height - top - bottom;
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!(s.x[i] > 0.0) || !(s.y[i] > 0.0)) continue;
      xmin = std::min(xmin, std::log10(s.x[i]));
      xmax = std::max(xmax, std::log10(s.x[i]));
      ymin = std::min(ymin, std::log10(s.y[i]));
      ymax = std::max(ymax, std::log10(s.y[i]));
    }
  }
  if (!std::isfinite(xmin)) {
    xmin = -1;
    xmax = 0;
    ymin = -1;
    ymax = 0;
  }
  xmin = std::floor(xmin);
  xmax = std::max(std::ceil(xmax), xmin + 1);
  ymin = std::floor(ymin);
  ymax = std::max(std::ceil(ymax), ymin + 1);
  auto px = [&](double lx) { return left + (lx - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double ly) { return top + (ymax - ly) / (ymax - ymin) * ph; };

  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width << "\" height=\"" << height
    << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << detail::num(left + pw / 2) << "\" y=\"28\" text-anchor=\"middle\" font-size=\"15\">"
    << detail::svg_escape(title) << "</text>\n";
  const int ystep = std::max(1, static_cast<int>((ymax - ymin) / 10) + 1);
  for (int d = static_cast<int>(xmin); d <= static_cast<int>(xmax); ++d) {
    const double x = px(d);
    o << "<line x1=\"" << detail::num(x) << "\" y1=\"" << detail::num(top) << "\" x2=\"" << detail::num(x)
      << "\" y2=\"" << detail::num(top + ph) << "\" stroke=\"#dddddd\"/>\n";
    o << "<text x=\"" << detail::num(x) << "\" y=\"" << detail::num(top + ph + 18)
      << "\" text-anchor=\"middle\">1e" << d << "</text>\n";
  }
  for (int d = static_cast<int>(ymin); d <= static_cast<int>(ymax); d += ystep) {
    const double y = py(d);
    o << "<line x1=\"" << detail::num(left) << "\" y1=\"" << detail::num(y) << "\" x2=\"" << detail::num(left + pw)
      << "\" y2=\"" << detail::num(y) << "\" stroke=\"#dddddd\"/>\n";
    o << "<text x=\"" << detail::num(left - 6) << "\" y=\"" << detail::num(y + 4) << "\" text-anchor=\"end\">1e" << d
      << "</text>\n";
  }
  o << "<rect x=\"" << detail::num(left) << "\" y=\"" << detail::num(top) << "\" width=\"" << detail::num(pw)
    << "\" height=\"" << detail::num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
  o << "<text x=\"" << detail::num(left + pw / 2) << "\" y=\"" << detail::num(height - 20)
    << "\" text-anchor=\"middle\">" << detail::svg_escape(xlabel) << "</text>\n";
  o << "<text transform=\"translate(22," << detail::num(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
    << detail::svg_escape(ylabel) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = palette[k % palette.size()];
    std::string points;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!(s.x[i] > 0.0) || !(s.y[i] > 0.0)) continue;
      points += detail::num(px(std::log10(s.x[i]))) + "," + detail::num(py(std::log10(s.y[i]))) + " ";
    }
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\""
      << (s.dashed ? " stroke-dasharray=\"5,3\"" : "") << " points=\"" << points << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!(s.x[i] > 0.0) || !(s.y[i] > 0.0)) continue;
      o << "<circle cx=\"" << detail::num(px(std::log10(s.x[i]))) << "\" cy=\""
        << detail::num(py(std::log10(s.y[i]))) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    const double ly = top + 10 + 20.0 * static_cast<double>(k);
    const double lx = left + pw + 15;
    o << "<line x1=\"" << detail::num(lx) << "\" y1=\"" << detail::num(ly) << "\" x2=\"" << detail::num(lx + 20)
      << "\" y2=\"" << detail::num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\""
      << (s.dashed ? " stroke-dasharray=\"5,3\"" : "") << "/>\n";
    std::string text = s.label;
    if (s.slope) text += " (slope " + detail::num(*s.slope) + ")";
    o << "<text x=\"" << detail::num(lx + 26) << "\" y=\"" << detail::num(ly + 4) << "\">" << detail::svg_escape(text)
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace sgfem::cli
