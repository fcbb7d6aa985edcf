#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace cpd::cli {

namespace {

constexpr double kWidth = 720, kHeight = 480;
constexpr double kLeft = 80, kRight = 170, kTop = 40, kBottom = 60;

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

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// Roughly five "nice" ticks covering [lo, hi].
std::vector<double> nice_ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  std::vector<double> ticks;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) ticks.push_back(std::abs(t) < 1e-12 * span ? 0.0 : t);
  return ticks;
}

}  // namespace

std::string plot_svg(const PlotSpec& spec, const std::vector<Series>& series) {
  auto fy = [&](double y) { return spec.log_y ? std::log10(y) : y; };
  auto usable = [&](double x, double y) { return std::isfinite(x) && std::isfinite(y) && (!spec.log_y || y > 0); };

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k)
      if (usable(s.x[k], s.y[k])) {
        x0 = std::min(x0, s.x[k]);
        x1 = std::max(x1, s.x[k]);
        y0 = std::min(y0, fy(s.y[k]));
        y1 = std::max(y1, fy(s.y[k]));
      }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 <= 0) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 <= 0) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.04 * (y1 - y0);
  y0 -= pad;
  y1 += pad;

  double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  if (spec.equal_aspect) {
    const double scale = std::min(pw / (x1 - x0), ph / (y1 - y0));
    pw = scale * (x1 - x0);
    ph = scale * (y1 - y0);
  }
  auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + ph - (fy(y) - y0) / (y1 - y0) * ph; };
  auto py_raw = [&](double v) { return kTop + ph - (v - y0) / (y1 - y0) * ph; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(spec.title) << "</text>\n";
  out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
      << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (double t : nice_ticks(x0, x1)) {
    out << "<line x1=\"" << num(px(t)) << "\" y1=\"" << num(kTop + ph) << "\" x2=\"" << num(px(t)) << "\" y2=\""
        << num(kTop + ph + 5) << "\" stroke=\"black\"/>";
    out << "<text x=\"" << num(px(t)) << "\" y=\"" << num(kTop + ph + 18) << "\" text-anchor=\"middle\">" << tick_label(t) << "</text>\n";
  }
  for (double t : nice_ticks(y0, y1)) {
    const std::string label = spec.log_y ? "1e" + tick_label(t) : tick_label(t);
    if (spec.log_y && std::abs(t - std::round(t)) > 1e-9) continue;
    out << "<line x1=\"" << num(kLeft - 5) << "\" y1=\"" << num(py_raw(t)) << "\" x2=\"" << num(kLeft) << "\" y2=\""
        << num(py_raw(t)) << "\" stroke=\"black\"/>";
    out << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(py_raw(t) + 4) << "\" text-anchor=\"end\">" << label << "</text>\n";
  }
  out << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kTop + ph + 42) << "\" text-anchor=\"middle\">"
      << escape(spec.x_label) << "</text>\n";
  out << "<text transform=\"translate(20," << num(kTop + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(spec.y_label) << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const std::size_t n = std::min(s.x.size(), s.y.size());
    if (s.markers) {
      out << "<g fill=\"" << s.color << "\">";
      for (std::size_t k = 0; k < n; ++k)
        if (usable(s.x[k], s.y[k]))
          out << "<circle cx=\"" << num(px(s.x[k])) << "\" cy=\"" << num(py(s.y[k])) << "\" r=\"1.6\"/>";
      out << "</g>\n";
    } else {
      out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.6\""
          << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"";
      for (std::size_t k = 0; k < n; ++k)
        if (usable(s.x[k], s.y[k])) out << num(px(s.x[k])) << "," << num(py(s.y[k])) << " ";
      out << "\"/>\n";
    }
    const double ly = kTop + 12 + 18 * static_cast<double>(si), lx = kLeft + pw + 14;
    if (s.markers)
      out << "<circle cx=\"" << num(lx + 10) << "\" cy=\"" << num(ly - 4) << "\" r=\"3\" fill=\"" << s.color << "\"/>";
    else
      out << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(lx + 20) << "\" y2=\"" << num(ly - 4)
          << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>";
    out << "<text x=\"" << num(lx + 26) << "\" y=\"" << num(ly) << "\">" << escape(s.label) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string mesh_svg(const std::string& title, const std::vector<Vec2>& positions,
                     const std::vector<std::array<std::uint32_t, 3>>& triangles,
                     const std::vector<std::uint8_t>& alive) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& p : positions) {
    x0 = std::min(x0, p.x());
    x1 = std::max(x1, p.x());
    y0 = std::min(y0, p.y());
    y1 = std::max(y1, p.y());
  }
  const double size = 640, margin = 20;
  const double scale = (size - 2 * margin) / std::max(x1 - x0, y1 - y0);
  const double w = 2 * margin + scale * (x1 - x0), h = 2 * margin + scale * (y1 - y0) + 24;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w) << "\" height=\"" << num(h)
      << "\" font-family=\"sans-serif\" font-size=\"14\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << num(w / 2) << "\" y=\"18\" text-anchor=\"middle\">" << escape(title) << "</text>\n";
  auto pt = [&](const Vec2& p) { return num(margin + scale * (p.x() - x0)) + "," + num(24 + margin + scale * (y1 - p.y())); };
  for (int pass = 0; pass < 2; ++pass) {
    out << (pass == 0 ? "<g fill=\"#e8eef5\" stroke=\"#7a8ca3\" stroke-width=\"0.3\">\n" : "<g fill=\"#d62728\" stroke=\"#8b0000\" stroke-width=\"0.3\">\n");
    for (std::size_t t = 0; t < triangles.size(); ++t) {
      const bool dead = t < alive.size() && !alive[t];
      if (dead != (pass == 1)) continue;
      const auto& tri = triangles[t];
      out << "<polygon points=\"" << pt(positions[tri[0]]) << " " << pt(positions[tri[1]]) << " " << pt(positions[tri[2]]) << "\"/>\n";
    }
    out << "</g>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace cpd::cli
