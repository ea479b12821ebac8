#pragma once

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

#include "error.hpp"

namespace embodied {

struct CurveSeries {
    std::string label;
    std::string color;
    std::vector<double> values; // index 0 is epoch 1
};

struct CurvePanel {
    std::string title;
    std::vector<CurveSeries> series;
};

inline const char* curve_color(const std::string& model) {
    if (model == "embodied") return "#1f6fd6";  // blue
    if (model == "inception") return "#d62728"; // red
    if (model == "baseline") return "#e6b400";  // yellow
    return "#444444";
}

namespace detail {

inline std::string svg_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline void render_panel(std::string& out, const CurvePanel& panel, double ox, double oy,
                         double width, double height) {
    double lo = 1.0, hi = 0.0;
    std::size_t epochs = 0;
    for (const CurveSeries& s : panel.series) {
        epochs = std::max(epochs, s.values.size());
        for (double v : s.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (epochs == 0) throw EmptyDataset("curve panel has no data");
    lo = std::max(0.0, lo - 0.02);
    hi = std::min(1.0, hi + 0.02);
    if (hi - lo < 0.05) hi = std::min(1.0, lo + 0.05);
    const double plot_x = ox + 52, plot_y = oy + 28;
    const double plot_w = width - 68, plot_h = height - 64;
    const auto X = [&](double epoch) {
        return epochs > 1 ? plot_x + (epoch - 1) / double(epochs - 1) * plot_w : plot_x + plot_w / 2;
    };
    const auto Y = [&](double v) { return plot_y + (hi - v) / (hi - lo) * plot_h; };

    out += "<text x='" + svg_num(ox + width / 2) + "' y='" + svg_num(oy + 16) +
           "' text-anchor='middle' font-size='13' font-weight='bold'>" + panel.title + "</text>\n";
    out += "<rect x='" + svg_num(plot_x) + "' y='" + svg_num(plot_y) + "' width='" + svg_num(plot_w) +
           "' height='" + svg_num(plot_h) + "' fill='none' stroke='#333' stroke-width='1'/>\n";
    // horizontal gridlines at ~5 round accuracy levels
    const int ticks = 5;
    for (int k = 0; k <= ticks; ++k) {
        const double v = lo + (hi - lo) * k / ticks;
        const double y = Y(v);
        out += "<line x1='" + svg_num(plot_x) + "' y1='" + svg_num(y) + "' x2='" +
               svg_num(plot_x + plot_w) + "' y2='" + svg_num(y) +
               "' stroke='#ddd' stroke-width='0.5'/>\n";
        out += "<text x='" + svg_num(plot_x - 6) + "' y='" + svg_num(y + 3.5) +
               "' text-anchor='end' font-size='10'>" + svg_num(v) + "</text>\n";
    }
    for (std::size_t e = 1; e <= epochs; e += (epochs > 10 ? 5 : 1)) {
        out += "<text x='" + svg_num(X(double(e))) + "' y='" + svg_num(plot_y + plot_h + 14) +
               "' text-anchor='middle' font-size='10'>" + std::to_string(e) + "</text>\n";
    }
    out += "<text x='" + svg_num(plot_x + plot_w / 2) + "' y='" + svg_num(plot_y + plot_h + 28) +
           "' text-anchor='middle' font-size='11'>epoch</text>\n";
    for (const CurveSeries& s : panel.series) {
        std::string pts;
        for (std::size_t e = 0; e < s.values.size(); ++e) {
            if (!pts.empty()) pts += ' ';
            pts += svg_num(X(double(e + 1))) + "," + svg_num(Y(s.values[e]));
        }
        out += "<polyline fill='none' stroke='" + s.color + "' stroke-width='1.8' points='" + pts +
               "'/>\n";
    }
}

} // namespace detail

// One SVG with one panel per metric; series share the Figs. 3-4 color key.
inline std::string render_curves_svg(const std::vector<CurvePanel>& panels,
                                     const std::vector<CurveSeries>& legend) {
    const double pw = 380, ph = 280, legend_h = 26;
    const double width = pw * double(panels.size());
    const double height = ph + legend_h;
    std::string out;
    out += "<svg xmlns='http://www.w3.org/2000/svg' width='" + detail::svg_num(width) +
           "' height='" + detail::svg_num(height) + "' viewBox='0 0 " + detail::svg_num(width) + " " +
           detail::svg_num(height) + "'>\n";
    out += "<rect width='100%' height='100%' fill='white'/>\n";
    for (std::size_t i = 0; i < panels.size(); ++i)
        detail::render_panel(out, panels[i], double(i) * pw, 0, pw, ph);
    double lx = 60;
    const double ly = ph + 8;
    for (const CurveSeries& s : legend) {
        out += "<line x1='" + detail::svg_num(lx) + "' y1='" + detail::svg_num(ly + 5) + "' x2='" +
               detail::svg_num(lx + 24) + "' y2='" + detail::svg_num(ly + 5) + "' stroke='" + s.color +
               "' stroke-width='2.4'/>\n";
        out += "<text x='" + detail::svg_num(lx + 30) + "' y='" + detail::svg_num(ly + 9) +
               "' font-size='12'>" + s.label + "</text>\n";
        lx += 36 + 8.0 * double(s.label.size());
    }
    out += "</svg>\n";
    return out;
}

} // namespace embodied
