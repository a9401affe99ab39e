#pragma once

// Deterministic SVG line plots, written directly (no plotting dependency so
// output bytes are fully under our control). Non-finite samples break the
// polyline; a log-scale y axis drops non-positive values the same way.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "fedsim/errors.hpp"

namespace fedsim {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool log_y = false;
  int width = 880;
  int height = 560;
};

namespace detail {

inline std::string fmt_coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string fmt_tick(double v) {
  char buf[40];
  if (v != 0.0 && (std::fabs(v) < 1e-3 || std::fabs(v) >= 1e4))
    std::snprintf(buf, sizeof(buf), "%.1e", v);
  else
    std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

// Round tick spacing to 1/2/5 times a power of ten.
inline double nice_step(double span, int target_ticks) {
  if (!(span > 0.0)) return 1.0;
  const double raw = span / std::max(1, target_ticks);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double frac = raw / mag;
  double nice = 10.0;
  if (frac <= 1.0) nice = 1.0;
  else if (frac <= 2.0) nice = 2.0;
  else if (frac <= 5.0) nice = 5.0;
  return nice * mag;
}

}  // namespace detail

inline void emit_svg_lineplot(const std::vector<PlotSeries>& series, const PlotSpec& spec,
                              const std::string& path) {
  static const char* kPalette[] = {"#1b6ca8", "#d1495b", "#2e933c", "#8d6a9f",
                                   "#e08d2e", "#3bb2b8", "#6b4226", "#636363"};
  const double W = spec.width, H = spec.height;
  const double ml = 78, mr = 24, mt = 46, mb = 58;  // margins
  const double pw = W - ml - mr, ph = H - mt - mb;

  // Data ranges over finite (and, for log y, positive) samples.
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool any = false;
  for (const auto& s : series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      const double x = s.x[i], y = s.y[i];
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      if (spec.log_y && y <= 0.0) continue;
      const double yy = spec.log_y ? std::log10(y) : y;
      if (!any) {
        xmin = xmax = x;
        ymin = ymax = yy;
        any = true;
      } else {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, yy);
        ymax = std::max(ymax, yy);
      }
    }
  if (xmax - xmin < 1e-12) { xmin -= 0.5; xmax += 0.5; }
  if (ymax - ymin < 1e-12) { ymin -= 0.5; ymax += 0.5; }
  const double ypad = 0.04 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) {
    const double yy = spec.log_y ? std::log10(y) : y;
    return mt + ph - (yy - ymin) / (ymax - ymin) * ph;
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(spec.width) +
         "\" height=\"" + std::to_string(spec.height) + "\" viewBox=\"0 0 " +
         std::to_string(spec.width) + " " + std::to_string(spec.height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  svg += "<text x=\"" + detail::fmt_coord(W / 2) + "\" y=\"26\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\">" + detail::xml_escape(spec.title) +
         "</text>\n";

  // Axes frame.
  svg += "<rect x=\"" + detail::fmt_coord(ml) + "\" y=\"" + detail::fmt_coord(mt) +
         "\" width=\"" + detail::fmt_coord(pw) + "\" height=\"" + detail::fmt_coord(ph) +
         "\" fill=\"none\" stroke=\"#444444\" stroke-width=\"1\"/>\n";

  // X ticks.
  const double xstep = detail::nice_step(xmax - xmin, 6);
  for (double t = std::ceil(xmin / xstep) * xstep; t <= xmax + 1e-9 * xstep; t += xstep) {
    const double px = sx(t);
    svg += "<line x1=\"" + detail::fmt_coord(px) + "\" y1=\"" + detail::fmt_coord(mt) +
           "\" x2=\"" + detail::fmt_coord(px) + "\" y2=\"" + detail::fmt_coord(mt + ph) +
           "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + detail::fmt_coord(px) + "\" y=\"" + detail::fmt_coord(mt + ph + 18) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
           detail::fmt_tick(t) + "</text>\n";
  }
  // Y ticks (decades when log).
  if (spec.log_y) {
    for (double e = std::ceil(ymin); e <= std::floor(ymax) + 1e-9; e += 1.0) {
      const double py = mt + ph - (e - ymin) / (ymax - ymin) * ph;
      svg += "<line x1=\"" + detail::fmt_coord(ml) + "\" y1=\"" + detail::fmt_coord(py) +
             "\" x2=\"" + detail::fmt_coord(ml + pw) + "\" y2=\"" + detail::fmt_coord(py) +
             "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
      svg += "<text x=\"" + detail::fmt_coord(ml - 6) + "\" y=\"" + detail::fmt_coord(py + 4) +
             "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e" +
             detail::fmt_tick(e) + "</text>\n";
    }
  } else {
    const double ystep = detail::nice_step(ymax - ymin, 6);
    for (double t = std::ceil(ymin / ystep) * ystep; t <= ymax + 1e-9 * ystep; t += ystep) {
      const double py = mt + ph - (t - ymin) / (ymax - ymin) * ph;
      svg += "<line x1=\"" + detail::fmt_coord(ml) + "\" y1=\"" + detail::fmt_coord(py) +
             "\" x2=\"" + detail::fmt_coord(ml + pw) + "\" y2=\"" + detail::fmt_coord(py) +
             "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
      svg += "<text x=\"" + detail::fmt_coord(ml - 6) + "\" y=\"" + detail::fmt_coord(py + 4) +
             "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
             detail::fmt_tick(t) + "</text>\n";
    }
  }
  // Axis labels.
  svg += "<text x=\"" + detail::fmt_coord(ml + pw / 2) + "\" y=\"" +
         detail::fmt_coord(H - 14) + "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\">" + detail::xml_escape(spec.xlabel) + "</text>\n";
  svg += "<text x=\"20\" y=\"" + detail::fmt_coord(mt + ph / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
         "transform=\"rotate(-90 20 " + detail::fmt_coord(mt + ph / 2) + ")\">" +
         detail::xml_escape(spec.ylabel) + "</text>\n";

  // Series polylines, broken at gaps.
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
    std::string pts;
    auto flush = [&]() {
      if (pts.empty()) return;
      svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
             "\" stroke-width=\"1.8\" points=\"" + pts + "\"/>\n";
      pts.clear();
    };
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      const double x = s.x[i], y = s.y[i];
      if (!std::isfinite(x) || !std::isfinite(y) || (spec.log_y && y <= 0.0)) {
        flush();
        continue;
      }
      if (!pts.empty()) pts += ' ';
      pts += detail::fmt_coord(sx(x)) + ',' + detail::fmt_coord(sy(y));
    }
    flush();
    // Legend entry.
    const double ly = mt + 16 + 18 * static_cast<double>(si);
    svg += "<line x1=\"" + detail::fmt_coord(ml + pw - 150) + "\" y1=\"" +
           detail::fmt_coord(ly - 4) + "\" x2=\"" + detail::fmt_coord(ml + pw - 126) +
           "\" y2=\"" + detail::fmt_coord(ly - 4) + "\" stroke=\"" + color +
           "\" stroke-width=\"3\"/>\n";
    svg += "<text x=\"" + detail::fmt_coord(ml + pw - 120) + "\" y=\"" + detail::fmt_coord(ly) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" + detail::xml_escape(s.label) +
           "</text>\n";
  }
  svg += "</svg>\n";

  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os.write(svg.data(), static_cast<std::streamsize>(svg.size()));
  if (!os) throw IoError("short write to " + path);
}

}  // namespace fedsim
