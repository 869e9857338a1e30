#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace omda {

// Minimal self-contained SVG line plots for human inspection of experiment
// output; no styling beyond axes, ticks and a legend.
struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::vector<PlotSeries> series;
};

void write_svg_plot(const PlotSpec& spec, const std::filesystem::path& path);

}  // namespace omda
