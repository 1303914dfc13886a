#include "lqp/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "lqp/csv.hpp"

namespace lqp {

namespace {

constexpr int kWidth = 960;
constexpr int kHeight = 320;
constexpr int kMarginLeft = 64;
constexpr int kMarginRight = 16;
constexpr int kMarginTop = 28;
constexpr int kMarginBottom = 44;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// Round tick spacing to 1/2/5 * 10^k.
double nice_step(double span, int target_ticks) {
    const double raw = span / std::max(target_ticks, 1);
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (raw <= m * mag * (1 + 1e-12)) return m * mag;
    }
    return 10.0 * mag;
}

}  // namespace

void write_timeseries_svg(const std::filesystem::path& path, const std::string& title,
                          const std::string& x_label, const std::string& y_label,
                          const std::vector<PlotSeries>& series) {
    double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
    double y_lo = x_lo, y_hi = -x_lo;
    for (const PlotSeries& s : series) {
        for (const auto& [x, y] : s.points) {
            x_lo = std::min(x_lo, x);
            x_hi = std::max(x_hi, x);
            y_lo = std::min(y_lo, y);
            y_hi = std::max(y_hi, y);
        }
    }
    if (!(x_lo < x_hi)) x_hi = x_lo + 1.0;
    if (!(y_lo < y_hi)) y_hi = y_lo + 1.0;
    const double y_pad = 0.05 * (y_hi - y_lo);
    y_lo -= y_pad;
    y_hi += y_pad;

    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    const double plot_h = kHeight - kMarginTop - kMarginBottom;
    const auto px = [&](double x) { return kMarginLeft + (x - x_lo) / (x_hi - x_lo) * plot_w; };
    const auto py = [&](double y) { return kMarginTop + (y_hi - y) / (y_hi - y_lo) * plot_h; };

    auto out = open_output(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\" "
           "font-family=\"sans-serif\">"
        << title << "</text>\n";

    // Axes frame and ticks.
    out << "<rect x=\"" << kMarginLeft << "\" y=\"" << kMarginTop << "\" width=\"" << plot_w
        << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";
    const double x_step = nice_step(x_hi - x_lo, 8);
    for (double x = std::ceil(x_lo / x_step) * x_step; x <= x_hi + 1e-9; x += x_step) {
        out << "<line x1=\"" << fmt(px(x)) << "\" y1=\"" << kMarginTop + plot_h << "\" x2=\""
            << fmt(px(x)) << "\" y2=\"" << kMarginTop + plot_h + 4 << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << fmt(px(x)) << "\" y=\"" << kMarginTop + plot_h + 18
            << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">" << fmt(x)
            << "</text>\n";
    }
    const double y_step = nice_step(y_hi - y_lo, 6);
    for (double y = std::ceil(y_lo / y_step) * y_step; y <= y_hi + 1e-9; y += y_step) {
        out << "<line x1=\"" << kMarginLeft - 4 << "\" y1=\"" << fmt(py(y)) << "\" x2=\"" << kMarginLeft
            << "\" y2=\"" << fmt(py(y)) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << fmt(py(y) + 4)
            << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << fmt(y)
            << "</text>\n";
    }
    out << "<text x=\"" << kMarginLeft + plot_w / 2 << "\" y=\"" << kHeight - 8
        << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">" << x_label
        << "</text>\n";
    out << "<text x=\"14\" y=\"" << kMarginTop + plot_h / 2
        << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\" transform=\"rotate(-90 "
           "14 "
        << kMarginTop + plot_h / 2 << ")\">" << y_label << "</text>\n";

    for (const PlotSeries& s : series) {
        out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1\"";
        if (s.dashed) out << " stroke-dasharray=\"4 3\"";
        out << " points=\"";
        for (const auto& [x, y] : s.points) out << fmt(px(x)) << ',' << fmt(py(y)) << ' ';
        out << "\"/>\n";
    }

    int legend_x = kMarginLeft + 10;
    for (const PlotSeries& s : series) {
        out << "<line x1=\"" << legend_x << "\" y1=\"" << kMarginTop + 12 << "\" x2=\"" << legend_x + 22
            << "\" y2=\"" << kMarginTop + 12 << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"";
        if (s.dashed) out << " stroke-dasharray=\"4 3\"";
        out << "/>\n";
        out << "<text x=\"" << legend_x + 26 << "\" y=\"" << kMarginTop + 16
            << "\" font-size=\"11\" font-family=\"sans-serif\">" << s.label << "</text>\n";
        legend_x += 26 + 10 + static_cast<int>(s.label.size()) * 7;
    }
    out << "</svg>\n";
}

}  // namespace lqp
