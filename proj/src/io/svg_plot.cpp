#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "propsim/regime.hpp"
#include "propsim/scenario_io.hpp"

namespace propsim {

namespace {

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

// 1, 2 or 5 times a power of ten, giving roughly `target` intervals.
double nice_step(double span, int target) {
    if (!(span > 0)) return 1.0;
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double norm = raw / mag;
    const double mult = norm <= 1.0 ? 1.0 : norm <= 2.0 ? 2.0 : norm <= 5.0 ? 5.0 : 10.0;
    return mult * mag;
}

}  // namespace

std::string render_capital_svg(const Trajectory& traj, int width, int height) {
    const auto capital = traj.capital_series();
    const std::size_t n = capital.size();
    const double left = 70, right = 20, top = 30, bottom = 45;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;

    double lo = 0.0;
    double hi = 0.0;
    for (double c : capital) {
        lo = std::min(lo, c);
        hi = std::max(hi, c);
    }
    const double y_step = nice_step(hi - lo, 5);
    const double y_min = std::floor(lo / y_step) * y_step;
    double y_max = std::ceil(hi / y_step) * y_step;
    if (y_max <= y_min) y_max = y_min + y_step;
    const double x_span = n > 1 ? static_cast<double>(n - 1) : 1.0;
    const double x_step = nice_step(x_span, 8);

    auto px = [&](double step) { return left + plot_w * step / x_span; };
    auto py = [&](double c) { return top + plot_h * (1.0 - (c - y_min) / (y_max - y_min)); };

    std::string svg;
    svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
           std::to_string(width) + "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " +
           std::to_string(width) + " " + std::to_string(height) + "\">\n";
    svg += "<rect x=\"0\" y=\"0\" width=\"" + std::to_string(width) + "\" height=\"" +
           std::to_string(height) + "\" fill=\"white\"/>\n";
    svg += "<text x=\"" + fmt("%.1f", left) + "\" y=\"18\" font-family=\"sans-serif\" "
           "font-size=\"13\">Capital (millions) by step, termination: " +
           std::string(to_string(traj.termination)) + "</text>\n";

    svg += "<g stroke=\"#999\" stroke-width=\"1\" font-family=\"sans-serif\" font-size=\"11\">\n";
    for (double y = y_min; y <= y_max + 0.5 * y_step; y += y_step) {
        svg += "<line x1=\"" + fmt("%.2f", left) + "\" y1=\"" + fmt("%.2f", py(y)) + "\" x2=\"" +
               fmt("%.2f", left + plot_w) + "\" y2=\"" + fmt("%.2f", py(y)) +
               "\" stroke=\"#eee\"/>\n";
        svg += "<text class=\"ytick\" x=\"" + fmt("%.2f", left - 6) + "\" y=\"" +
               fmt("%.2f", py(y) + 4) + "\" text-anchor=\"end\" stroke=\"none\">" +
               fmt("%.6g", y) + "</text>\n";
    }
    for (double x = 0; x <= x_span + 0.5 * x_step; x += x_step) {
        svg += "<text class=\"xtick\" x=\"" + fmt("%.2f", px(x)) + "\" y=\"" +
               fmt("%.2f", top + plot_h + 16) + "\" text-anchor=\"middle\" stroke=\"none\">" +
               fmt("%.6g", x) + "</text>\n";
    }
    svg += "<line x1=\"" + fmt("%.2f", left) + "\" y1=\"" + fmt("%.2f", top + plot_h) +
           "\" x2=\"" + fmt("%.2f", left + plot_w) + "\" y2=\"" + fmt("%.2f", top + plot_h) +
           "\"/>\n";
    svg += "<line x1=\"" + fmt("%.2f", left) + "\" y1=\"" + fmt("%.2f", top) + "\" x2=\"" +
           fmt("%.2f", left) + "\" y2=\"" + fmt("%.2f", top + plot_h) + "\"/>\n";
    svg += "<text x=\"" + fmt("%.2f", left + plot_w / 2) + "\" y=\"" +
           fmt("%.2f", static_cast<double>(height) - 8) +
           "\" text-anchor=\"middle\" stroke=\"none\">step</text>\n";
    svg += "</g>\n";

    for (const auto& g : detect_gaps(capital, traj.scenario.guards.gap_threshold)) {
        const double x = px(static_cast<double>(g.step) + 0.5);
        svg += "<line class=\"gap\" data-step=\"" + std::to_string(g.step) + "\" x1=\"" +
               fmt("%.2f", x) + "\" y1=\"" + fmt("%.2f", top) + "\" x2=\"" + fmt("%.2f", x) +
               "\" y2=\"" + fmt("%.2f", top + plot_h) +
               "\" stroke=\"#d62728\" stroke-dasharray=\"4 3\"/>\n";
    }

    svg += "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < n; ++i) {
        if (i) svg += ' ';
        svg += fmt("%.2f", px(static_cast<double>(i))) + "," + fmt("%.2f", py(capital[i]));
    }
    svg += "\"/>\n";
    svg += "</svg>\n";
    return svg;
}

}  // namespace propsim
