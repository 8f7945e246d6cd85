#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <string>

#include "voxeval/mme.hpp"

namespace voxeval {

/// Five-axis chart with one polyline per score kind. Axis order is fixed:
/// D, U, B, T, R, starting at the top and proceeding clockwise.
struct SpiderChartSpec {
    std::array<double, 5> precision{};  // D, U, B, T, R
    std::array<double, 5> recall{};
    std::string title;
    int canvas = 512;
};

inline SpiderChartSpec spider_spec_from(const MMEResult& result, std::string title = "") {
    SpiderChartSpec spec;
    spec.title = std::move(title);
    for (int i = 0; i < 5; ++i) {
        spec.precision[i] = result.scores[i].precision;
        spec.recall[i] = result.scores[i].recall;
    }
    return spec;
}

namespace detail {

inline constexpr double kPi = 3.14159265358979323846;

inline std::string svg_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

/// Vertex of axis k at fractional radius t of the chart radius.
inline std::pair<double, double> spider_point(int axis, double t, double cx, double cy,
                                              double radius) {
    const double angle = -kPi / 2.0 + axis * 2.0 * kPi / 5.0;
    return {cx + radius * t * std::cos(angle), cy + radius * t * std::sin(angle)};
}

inline std::string spider_ring(double t, double cx, double cy, double radius) {
    std::string pts;
    for (int k = 0; k < 5; ++k) {
        const auto [x, y] = spider_point(k, t, cx, cy, radius);
        if (k) pts += ' ';
        pts += svg_num(x) + "," + svg_num(y);
    }
    return pts;
}

inline std::string spider_polygon(const std::array<double, 5>& values, double cx, double cy,
                                  double radius) {
    std::string pts;
    for (int k = 0; k < 5; ++k) {
        const double t = std::min(1.0, std::max(0.0, values[k]));
        const auto [x, y] = spider_point(k, t, cx, cy, radius);
        if (k) pts += ' ';
        pts += svg_num(x) + "," + svg_num(y);
    }
    return pts;
}

}  // namespace detail

/// Standalone deterministic SVG; identical input yields byte-identical output.
inline std::string render_spider_chart(const SpiderChartSpec& spec) {
    static const char* axis_labels[5] = {"D", "U", "B", "T", "R"};
    const double size = static_cast<double>(spec.canvas);
    const double cx = size / 2.0, cy = size / 2.0;
    const double radius = size * 0.37;

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(spec.canvas) +
           "\" height=\"" + std::to_string(spec.canvas) + "\" viewBox=\"0 0 " +
           std::to_string(spec.canvas) + " " + std::to_string(spec.canvas) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    for (int ring = 1; ring <= 5; ++ring) {
        svg += "<polygon points=\"" + detail::spider_ring(ring / 5.0, cx, cy, radius) +
               "\" fill=\"none\" stroke=\"#cccccc\" stroke-width=\"1\"/>\n";
    }
    for (int k = 0; k < 5; ++k) {
        const auto [x, y] = detail::spider_point(k, 1.0, cx, cy, radius);
        svg += "<line x1=\"" + detail::svg_num(cx) + "\" y1=\"" + detail::svg_num(cy) +
               "\" x2=\"" + detail::svg_num(x) + "\" y2=\"" + detail::svg_num(y) +
               "\" stroke=\"#999999\" stroke-width=\"1\"/>\n";
        const auto [lx, ly] = detail::spider_point(k, 1.12, cx, cy, radius);
        svg += "<text x=\"" + detail::svg_num(lx) + "\" y=\"" + detail::svg_num(ly + 5.0) +
               "\" font-family=\"sans-serif\" font-size=\"18\" text-anchor=\"middle\">" +
               axis_labels[k] + "</text>\n";
    }

    svg += "<polygon points=\"" + detail::spider_polygon(spec.precision, cx, cy, radius) +
           "\" fill=\"#1f77b4\" fill-opacity=\"0.15\" stroke=\"#1f77b4\" "
           "stroke-width=\"2\"/>\n";
    svg += "<polygon points=\"" + detail::spider_polygon(spec.recall, cx, cy, radius) +
           "\" fill=\"#d62728\" fill-opacity=\"0.15\" stroke=\"#d62728\" "
           "stroke-width=\"2\"/>\n";

    if (!spec.title.empty()) {
        std::string title = spec.title;
        for (char& c : title) {
            if (c == '<' || c == '>' || c == '&') c = '_';
        }
        svg += "<text x=\"" + detail::svg_num(cx) +
               "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" "
               "text-anchor=\"middle\">" +
               title + "</text>\n";
    }

    char buf[160];
    auto legend_line = [&](const char* name, const char* color,
                           const std::array<double, 5>& vals, double y) {
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"16\" y=\"%.2f\" font-family=\"sans-serif\" font-size=\"13\" "
                      "fill=\"%s\">%s D=%.3f U=%.3f B=%.3f T=%.3f R=%.3f</text>\n",
                      y, color, name, vals[0], vals[1], vals[2], vals[3], vals[4]);
        svg += buf;
    };
    legend_line("precision", "#1f77b4", spec.precision, size - 34.0);
    legend_line("recall", "#d62728", spec.recall, size - 14.0);

    svg += "</svg>\n";
    return svg;
}

}  // namespace voxeval
