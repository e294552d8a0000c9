#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace apexcvx {

struct Series {
  std::string label;
  std::vector<double> x, y;
  std::string color = "#1f77b4";
  bool markers = false;  // scatter instead of polyline
  double width = 1.5;
};

struct Plot {
  std::string title;
  std::string xlabel, ylabel;
  std::vector<Series> series;
  bool equal_aspect = false;
  int width = 800, height = 500;
};

// Self-contained SVG with axes, ticks and a legend.
std::string render_svg(const Plot& plot);
void write_svg(const Plot& plot, const std::filesystem::path& path);

// Fixed palette for overlays.
const std::string& palette(std::size_t i);

}  // namespace apexcvx
