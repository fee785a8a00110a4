#include "glvd/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace glvd {

namespace {

constexpr double kWidth = 640.0;
constexpr double kPanelHeight = 220.0;
constexpr double kMarginLeft = 60.0, kMarginRight = 120.0, kMarginTop = 30.0, kMarginBottom = 30.0;

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void add(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void add(const std::vector<double>& vs) {
        for (double v : vs) add(v);
    }
    void finish() {
        if (!(hi > lo)) {
            const double c = std::isfinite(lo) ? lo : 0.0;
            lo = c - 0.5;
            hi = c + 0.5;
        }
        const double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
    }
};

std::string escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string render_svg(std::span<const PlotPanel> panels, std::string_view title) {
    const double height = kMarginTop + kPanelHeight * static_cast<double>(panels.size()) + 10.0;
    std::string out = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" "
        "font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        "<text x=\"{:.0f}\" y=\"18\" font-size=\"14\">{}</text>\n",
        kWidth, height, kMarginLeft, escape(title));

    for (std::size_t p = 0; p < panels.size(); ++p) {
        const PlotPanel& panel = panels[p];
        const double top = kMarginTop + kPanelHeight * static_cast<double>(p);
        const double plot_h = kPanelHeight - kMarginBottom - 10.0;
        const double plot_w = kWidth - kMarginLeft - kMarginRight;

        Range xr, yr;
        if (panel.band) {
            xr.add(panel.band->x);
            yr.add(panel.band->lo95);
            yr.add(panel.band->hi95);
        }
        for (const LineSeries& l : panel.lines) {
            xr.add(l.x);
            yr.add(l.y);
        }
        xr.add(panel.points_x);
        yr.add(panel.points_y);
        xr.finish();
        yr.finish();

        auto sx = [&](double x) { return kMarginLeft + (x - xr.lo) / (xr.hi - xr.lo) * plot_w; };
        auto sy = [&](double y) { return top + plot_h - (y - yr.lo) / (yr.hi - yr.lo) * plot_h; };

        out += fmt::format("<g>\n<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"none\" "
                           "stroke=\"#444\"/>\n<text x=\"{:.1f}\" y=\"{:.1f}\">{}</text>\n",
                           kMarginLeft, top, plot_w, plot_h, kMarginLeft + 4.0, top + 12.0, escape(panel.title));
        for (int t = 0; t <= 4; ++t) {
            const double xv = xr.lo + (xr.hi - xr.lo) * t / 4.0;
            const double yv = yr.lo + (yr.hi - yr.lo) * t / 4.0;
            out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:.3g}</text>\n", sx(xv),
                               top + plot_h + 14.0, xv);
            out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.3g}</text>\n",
                               kMarginLeft - 4.0, sy(yv) + 4.0, yv);
        }

        auto band_path = [&](const std::vector<double>& lo, const std::vector<double>& hi) {
            const BandSeries& b = *panel.band;
            std::string d;
            for (std::size_t i = 0; i < b.x.size(); ++i) {
                d += fmt::format("{}{:.2f},{:.2f} ", i == 0 ? "M" : "L", sx(b.x[i]), sy(hi[i]));
            }
            for (std::size_t i = b.x.size(); i-- > 0;) d += fmt::format("L{:.2f},{:.2f} ", sx(b.x[i]), sy(lo[i]));
            return d + "Z";
        };
        if (panel.band && !panel.band->x.empty()) {
            out += fmt::format("<path d=\"{}\" fill=\"#9ecae1\" fill-opacity=\"0.5\" stroke=\"none\"/>\n",
                               band_path(panel.band->lo95, panel.band->hi95));
            out += fmt::format("<path d=\"{}\" fill=\"#3182bd\" fill-opacity=\"0.5\" stroke=\"none\"/>\n",
                               band_path(panel.band->lo50, panel.band->hi50));
        }

        double legend_y = top + 14.0;
        for (const LineSeries& l : panel.lines) {
            std::string pts;
            for (std::size_t i = 0; i < l.x.size() && i < l.y.size(); ++i) {
                pts += fmt::format("{:.2f},{:.2f} ", sx(l.x[i]), sy(l.y[i]));
            }
            out += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{}/>\n", pts,
                               l.color, l.dash.empty() ? "" : fmt::format(" stroke-dasharray=\"{}\"", l.dash));
            out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" fill=\"{}\">{}</text>\n", kWidth - kMarginRight + 8.0,
                               legend_y, l.color, escape(l.label));
            legend_y += 14.0;
        }
        for (std::size_t i = 0; i < panel.points_x.size() && i < panel.points_y.size(); ++i) {
            out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2.5\" fill=\"black\"/>\n", sx(panel.points_x[i]),
                               sy(panel.points_y[i]));
        }
        out += "</g>\n";
    }
    out += "</svg>\n";
    return out;
}

}  // namespace glvd
