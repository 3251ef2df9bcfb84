#include "odl_cli/plot.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "odl/error.hpp"

namespace odl::cli {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 170, kTop = 40, kBottom = 60;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

double to_double(const std::string& s) {
  if (s == "nan" || s.empty()) return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw IngestionError("plot: bad number '" + s + "'");
  return v;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Round step of 1, 2 or 5 times a power of ten giving about `n` ticks.
double nice_step(double span, int n) {
  const double raw = span / n;
  const double p = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * p >= raw) return m * p;
  }
  return 10 * p;
}

struct Point {
  double x, mean, lo, hi;
};

}  // namespace

std::string render_svg(const Table& t, const PlotSpec& spec) {
  const auto cs = t.column("series"), cx = t.column("x"), cm = t.column("mean");
  const auto clo = t.column("ci_low"), chi = t.column("ci_high");
  const bool has_base = std::find(t.header.begin(), t.header.end(), "baseline") != t.header.end();

  std::vector<std::string> order;
  std::map<std::string, std::vector<Point>> series;
  double base_sum = 0;
  int base_n = 0;
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& r : t.rows) {
    const Point p{to_double(r[cx]), to_double(r[cm]), to_double(r[clo]), to_double(r[chi])};
    if (has_base) {
      const double b = to_double(r[t.column("baseline")]);
      if (std::isfinite(b)) {
        base_sum += b;
        ++base_n;
        ymin = std::min(ymin, b);
        ymax = std::max(ymax, b);
      }
    }
    if (!std::isfinite(p.x) || !std::isfinite(p.mean)) continue;  // infeasible points are left out
    if (spec.log_x && p.x <= 0) throw IngestionError("plot: log axis needs positive x");
    if (!series.count(r[cs])) order.push_back(r[cs]);
    series[r[cs]].push_back(p);
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    for (double v : {p.mean, p.lo, p.hi}) {
      if (std::isfinite(v)) {
        ymin = std::min(ymin, v);
        ymax = std::max(ymax, v);
      }
    }
  }
  if (order.empty()) {
    xmin = 0, xmax = 1;
    if (!std::isfinite(ymin)) ymin = 0, ymax = 1;
  }
  ymin = std::min(0.0, ymin);
  if (ymax <= ymin) ymax = ymin + 1;
  if (xmax <= xmin) xmax = xmin + (spec.log_x ? xmin : 1.0);
  const double ystep = nice_step(ymax - ymin, 5);
  ymax = std::ceil(ymax / ystep) * ystep;

  auto fx = [&](double x) {
    const double u = spec.log_x ? (std::log(x) - std::log(xmin)) / (std::log(xmax) - std::log(xmin))
                                : (x - xmin) / (xmax - xmin);
    return kLeft + u * (kWidth - kLeft - kRight);
  };
  auto fy = [&](double y) { return kHeight - kBottom - (y - ymin) / (ymax - ymin) * (kHeight - kTop - kBottom); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << fmt(kWidth / 2 - kRight / 2 + kLeft / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
    << escape(spec.title) << "</text>\n";

  // Axes, grid and ticks.
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  s << "<g stroke=\"#ccc\" stroke-width=\"0.5\">\n";
  for (double y = ymin; y <= ymax + 1e-9 * ystep; y += ystep) {
    s << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(fy(y)) << "\" x2=\"" << fmt(x1) << "\" y2=\"" << fmt(fy(y))
      << "\"/>\n";
  }
  s << "</g>\n";
  s << "<path d=\"M" << fmt(x0) << ' ' << fmt(y1) << " V" << fmt(y0) << " H" << fmt(x1)
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double y = ymin; y <= ymax + 1e-9 * ystep; y += ystep) {
    s << "<text x=\"" << fmt(x0 - 6) << "\" y=\"" << fmt(fy(y) + 4) << "\" text-anchor=\"end\">" << tick_label(y)
      << "</text>\n";
  }
  std::vector<double> xticks;
  for (const auto& name : order) {
    for (const auto& p : series[name]) xticks.push_back(p.x);
  }
  std::sort(xticks.begin(), xticks.end());
  xticks.erase(std::unique(xticks.begin(), xticks.end()), xticks.end());
  for (double x : xticks) {
    s << "<text x=\"" << fmt(fx(x)) << "\" y=\"" << fmt(y0 + 18) << "\" text-anchor=\"middle\">" << tick_label(x)
      << "</text>\n";
  }
  s << "<text x=\"" << fmt((x0 + x1) / 2) << "\" y=\"" << fmt(kHeight - 18) << "\" text-anchor=\"middle\">"
    << escape(spec.x_label) << "</text>\n";
  s << "<text transform=\"translate(18 " << fmt((y0 + y1) / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(spec.y_label) << "</text>\n";

  if (base_n > 0) {
    const double b = base_sum / base_n;
    s << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(fy(b)) << "\" x2=\"" << fmt(x1) << "\" y2=\"" << fmt(fy(b))
      << "\" stroke=\"black\" stroke-dasharray=\"6 4\"/>\n";
  }

  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& pts = series[order[k]];
    const char* color = kPalette[k % std::size(kPalette)];
    std::ostringstream band, line;
    bool band_ok = pts.size() > 1;
    for (const auto& p : pts) band_ok = band_ok && std::isfinite(p.lo) && std::isfinite(p.hi);
    if (band_ok) {
      band << "M";
      for (const auto& p : pts) band << fmt(fx(p.x)) << ' ' << fmt(fy(p.hi)) << ' ';
      for (auto it = pts.rbegin(); it != pts.rend(); ++it) band << "L" << fmt(fx(it->x)) << ' ' << fmt(fy(it->lo)) << ' ';
      band << "Z";
      s << "<path d=\"" << band.str() << "\" fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
    }
    for (std::size_t i = 0; i < pts.size(); ++i) line << (i ? " L" : "M") << fmt(fx(pts[i].x)) << ' ' << fmt(fy(pts[i].mean));
    s << "<path d=\"" << line.str() << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    for (const auto& p : pts) {
      s << "<circle cx=\"" << fmt(fx(p.x)) << "\" cy=\"" << fmt(fy(p.mean)) << "\" r=\"3\" fill=\"" << color
        << "\"/>\n";
    }
    const double ly = kTop + 10 + 18.0 * static_cast<double>(k);
    s << "<line x1=\"" << fmt(x1 + 12) << "\" y1=\"" << fmt(ly) << "\" x2=\"" << fmt(x1 + 32) << "\" y2=\"" << fmt(ly)
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << fmt(x1 + 38) << "\" y=\"" << fmt(ly + 4) << "\">" << escape(order[k]) << "</text>\n";
  }
  if (base_n > 0) {
    const double ly = kTop + 10 + 18.0 * static_cast<double>(order.size());
    s << "<line x1=\"" << fmt(x1 + 12) << "\" y1=\"" << fmt(ly) << "\" x2=\"" << fmt(x1 + 32) << "\" y2=\"" << fmt(ly)
      << "\" stroke=\"black\" stroke-dasharray=\"6 4\"/>\n";
    s << "<text x=\"" << fmt(x1 + 38) << "\" y=\"" << fmt(ly + 4) << "\">baseline</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

void render_svg_file(const std::string& csv_path, const std::string& svg_path, const PlotSpec& spec) {
  const auto svg = render_svg(read_csv_file(csv_path), spec);
  std::ofstream out(svg_path);
  if (!out) throw RunError("cannot write '" + svg_path + "'");
  out << svg;
}

}  // namespace odl::cli
