#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace lqp {

struct PlotSeries {
    std::string label;
    std::string color;  // SVG color
    bool dashed = false;
    std::vector<std::pair<double, double>> points;  // (x, y)
};

// Self-contained SVG time-series plot with axes, tick labels and a legend.
void write_timeseries_svg(const std::filesystem::path& path, const std::string& title,
                          const std::string& x_label, const std::string& y_label,
                          const std::vector<PlotSeries>& series);

}  // namespace lqp
