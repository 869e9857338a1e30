#include "omda/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace omda {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 440;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 20;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 55;

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

struct Axis {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  bool log_scale = false;

  void include(double v) {
    if (log_scale && !(v > 0.0)) return;
    const double t = log_scale ? std::log10(v) : v;
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  void finalize() {
    if (!std::isfinite(lo) || !std::isfinite(hi)) { lo = 0.0; hi = 1.0; }
    if (hi - lo < 1e-12) { lo -= 0.5; hi += 0.5; }
    const double pad = 0.04 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  double fraction(double v) const {
    const double t = log_scale ? std::log10(std::max(v, 1e-300)) : v;
    return (t - lo) / (hi - lo);
  }
};

std::string tick_label(double t, bool log_scale) {
  std::ostringstream os;
  if (log_scale) {
    os << "1e" << static_cast<int>(std::lround(t));
  } else {
    os.precision(4);
    os << t;
  }
  return os.str();
}

}  // namespace

void write_svg_plot(const PlotSpec& spec, const std::filesystem::path& path) {
  Axis ax, ay;
  ax.log_scale = spec.log_x;
  ay.log_scale = spec.log_y;
  for (const auto& s : spec.series) {
    for (double v : s.x) ax.include(v);
    for (double v : s.y) ay.include(v);
  }
  ax.finalize();
  ay.finalize();

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  auto px = [&](double v) { return kMarginLeft + ax.fraction(v) * plot_w; };
  auto py = [&](double v) { return kMarginTop + (1.0 - ay.fraction(v)) * plot_h; };

  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth << "' height='" << kHeight
      << "' viewBox='0 0 " << kWidth << ' ' << kHeight << "'>\n"
      << "<rect width='100%' height='100%' fill='white'/>\n"
      << "<text x='" << kWidth / 2 << "' y='22' text-anchor='middle' font-size='15'>"
      << spec.title << "</text>\n";

  // frame
  svg << "<rect x='" << kMarginLeft << "' y='" << kMarginTop << "' width='" << plot_w
      << "' height='" << plot_h << "' fill='none' stroke='black'/>\n";

  // ~5 ticks per axis on the transformed scale
  for (int axis = 0; axis < 2; ++axis) {
    const Axis& a = axis == 0 ? ax : ay;
    const double span = a.hi - a.lo;
    const double raw_step = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw_step)));
    double step = mag;
    if (raw_step / mag > 5.0) step = 5.0 * mag;
    else if (raw_step / mag > 2.0) step = 2.0 * mag;
    if (a.log_scale) step = std::max(1.0, std::ceil(step));
    for (double t = std::ceil(a.lo / step) * step; t <= a.hi + 1e-12; t += step) {
      const double v = a.log_scale ? std::pow(10.0, t) : t;
      if (axis == 0) {
        const double x = px(v);
        svg << "<line x1='" << x << "' y1='" << kMarginTop + plot_h << "' x2='" << x << "' y2='"
            << kMarginTop + plot_h + 5 << "' stroke='black'/>\n"
            << "<text x='" << x << "' y='" << kMarginTop + plot_h + 20
            << "' text-anchor='middle' font-size='11'>" << tick_label(t, a.log_scale)
            << "</text>\n";
      } else {
        const double y = py(v);
        svg << "<line x1='" << kMarginLeft - 5 << "' y1='" << y << "' x2='" << kMarginLeft
            << "' y2='" << y << "' stroke='black'/>\n"
            << "<text x='" << kMarginLeft - 8 << "' y='" << y + 4
            << "' text-anchor='end' font-size='11'>" << tick_label(t, a.log_scale)
            << "</text>\n";
      }
    }
  }

  svg << "<text x='" << kMarginLeft + plot_w / 2 << "' y='" << kHeight - 12
      << "' text-anchor='middle' font-size='13'>" << spec.x_label << "</text>\n"
      << "<text x='16' y='" << kMarginTop + plot_h / 2
      << "' text-anchor='middle' font-size='13' transform='rotate(-90 16 "
      << kMarginTop + plot_h / 2 << ")'>" << spec.y_label << "</text>\n";

  for (std::size_t s = 0; s < spec.series.size(); ++s) {
    const auto& series = spec.series[s];
    const char* color = kColors[s % (sizeof(kColors) / sizeof(kColors[0]))];
    svg << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' points='";
    for (std::size_t i = 0; i < series.x.size(); ++i) {
      svg << px(series.x[i]) << ',' << py(series.y[i]) << ' ';
    }
    svg << "'/>\n";
    for (std::size_t i = 0; i < series.x.size(); ++i) {
      svg << "<circle cx='" << px(series.x[i]) << "' cy='" << py(series.y[i])
          << "' r='2.5' fill='" << color << "'/>\n";
    }
    if (!series.label.empty()) {
      const double ly = kMarginTop + 16 + 16 * static_cast<double>(s);
      svg << "<line x1='" << kMarginLeft + plot_w - 130 << "' y1='" << ly << "' x2='"
          << kMarginLeft + plot_w - 110 << "' y2='" << ly << "' stroke='" << color
          << "' stroke-width='2'/>\n"
          << "<text x='" << kMarginLeft + plot_w - 104 << "' y='" << ly + 4
          << "' font-size='12'>" << series.label << "</text>\n";
    }
  }
  svg << "</svg>\n";

  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("write_svg_plot: cannot open " + path.string());
  file << svg.str();
}

}  // namespace omda
