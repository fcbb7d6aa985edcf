#pragma once

#include "cpd/geometry.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace cpd::cli {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool markers = false;  // dots instead of a polyline
  bool dashed = false;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  bool equal_aspect = false;
};

/// Axes, ticks, legend and one polyline or dot cloud per series. Non-finite points are skipped
/// (and non-positive ones on a log axis).
std::string plot_svg(const PlotSpec& spec, const std::vector<Series>& series);

/// Triangles drawn at `positions`; dead triangles are filled red.
std::string mesh_svg(const std::string& title, const std::vector<Vec2>& positions,
                     const std::vector<std::array<std::uint32_t, 3>>& triangles,
                     const std::vector<std::uint8_t>& alive);

}  // namespace cpd::cli
