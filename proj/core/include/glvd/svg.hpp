#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace glvd {

struct BandSeries {
    std::vector<double> x;
    std::vector<double> lo95, lo50, median, hi50, hi95;
};

struct LineSeries {
    std::string label;
    std::string color;
    std::string dash;  ///< SVG stroke-dasharray, empty for solid
    std::vector<double> x, y;
};

struct PlotPanel {
    std::string title;
    std::optional<BandSeries> band;
    std::vector<LineSeries> lines;
    std::vector<double> points_x, points_y;
};

/// Self-contained SVG with panels stacked vertically.
std::string render_svg(std::span<const PlotPanel> panels, std::string_view title);

}  // namespace glvd
