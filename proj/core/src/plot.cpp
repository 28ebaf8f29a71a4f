#include "spinramp/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "spinramp/errors.hpp"

namespace spinramp {

namespace {

constexpr std::array<const char*, 8> kColors = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 55.0;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buf;
}

// 1-2-5 tick spacing giving roughly `target` intervals.
double nice_step(double span, int target) {
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double f = raw / mag;
    return (f < 1.5 ? 1.0 : f < 3.5 ? 2.0 : f < 7.5 ? 5.0 : 10.0) * mag;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    void pad() {
        if (!(hi > lo)) {
            const double d = std::abs(lo) > 0 ? 0.1 * std::abs(lo) : 1.0;
            lo -= d;
            hi += d;
        }
    }
};

} // namespace

std::string xml_escape(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (const char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string render_svg(const PlotSpec& spec) {
    Range xr;
    Range yr;
    for (const auto& s : spec.series) {
        if (s.x.size() != s.y.size()) {
            throw InvalidArgument("plot series '" + s.label + "' has mismatched x and y");
        }
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) {
                xr.add(s.x[i]);
                yr.add(s.y[i]);
            }
        }
    }
    if (spec.series.empty() || !std::isfinite(xr.lo)) {
        throw InvalidArgument("plot: no finite points to draw");
    }
    xr.pad();
    yr.pad();

    const double w = spec.width;
    const double h = spec.height;
    const double pw = w - kLeft - kRight;
    const double ph = h - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
    auto py = [&](double y) { return kTop + (yr.hi - y) / (yr.hi - yr.lo) * ph; };

    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\""
       << spec.height << "\" viewBox=\"0 0 " << spec.width << ' ' << spec.height << "\">\n"
       << "<rect x=\"0\" y=\"0\" width=\"" << spec.width << "\" height=\"" << spec.height
       << "\" fill=\"white\"/>\n";
    if (!spec.title.empty()) {
        os << "<text x=\"" << num(w / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
           << xml_escape(spec.title) << "</text>\n";
    }

    // Axes box and ticks.
    os << "<g stroke=\"black\" stroke-width=\"1\" fill=\"none\">\n"
       << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(pw)
       << "\" height=\"" << num(ph) << "\"/>\n";
    const double xs = nice_step(xr.hi - xr.lo, 8);
    const double ys = nice_step(yr.hi - yr.lo, 6);
    std::ostringstream labels;
    for (double t = std::ceil(xr.lo / xs) * xs; t <= xr.hi + 1e-9 * xs; t += xs) {
        os << "<line x1=\"" << num(px(t)) << "\" y1=\"" << num(kTop + ph) << "\" x2=\""
           << num(px(t)) << "\" y2=\"" << num(kTop + ph + 5) << "\"/>\n";
        labels << "<text x=\"" << num(px(t)) << "\" y=\"" << num(kTop + ph + 18)
               << "\" text-anchor=\"middle\">" << tick_label(t) << "</text>\n";
    }
    for (double t = std::ceil(yr.lo / ys) * ys; t <= yr.hi + 1e-9 * ys; t += ys) {
        os << "<line x1=\"" << num(kLeft - 5) << "\" y1=\"" << num(py(t)) << "\" x2=\""
           << num(kLeft) << "\" y2=\"" << num(py(t)) << "\"/>\n";
        labels << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(py(t) + 4)
               << "\" text-anchor=\"end\">" << tick_label(t) << "</text>\n";
    }
    os << "</g>\n<g font-size=\"11\" font-family=\"sans-serif\">\n" << labels.str() << "</g>\n";

    if (!spec.x_label.empty()) {
        os << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(h - 12)
           << "\" text-anchor=\"middle\" font-size=\"13\">" << xml_escape(spec.x_label)
           << "</text>\n";
    }
    if (!spec.y_label.empty()) {
        os << "<text x=\"16\" y=\"" << num(kTop + ph / 2) << "\" text-anchor=\"middle\" "
           << "font-size=\"13\" transform=\"rotate(-90 16 " << num(kTop + ph / 2) << ")\">"
           << xml_escape(spec.y_label) << "</text>\n";
    }

    for (const double m : spec.markers) {
        if (m < xr.lo || m > xr.hi) {
            continue;
        }
        os << "<line x1=\"" << num(px(m)) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(px(m))
           << "\" y2=\"" << num(kTop + ph) << "\" stroke=\"#999999\" stroke-dasharray=\"4 3\"/>\n";
    }

    for (std::size_t k = 0; k < spec.series.size(); ++k) {
        const auto& s = spec.series[k];
        os << "<polyline fill=\"none\" stroke=\"" << kColors[k % kColors.size()]
           << "\" stroke-width=\"1.2\" points=\"";
        bool first = true;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
                continue;
            }
            os << (first ? "" : " ") << num(px(s.x[i])) << ',' << num(py(s.y[i]));
            first = false;
        }
        os << "\"/>\n";
    }

    // Legend, top right inside the plot area.
    const double lx = kLeft + pw - 170;
    double ly = kTop + 16;
    os << "<g font-size=\"12\" font-family=\"sans-serif\">\n";
    for (std::size_t k = 0; k < spec.series.size(); ++k) {
        os << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(lx + 24)
           << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << kColors[k % kColors.size()]
           << "\" stroke-width=\"2\"/>\n"
           << "<text x=\"" << num(lx + 30) << "\" y=\"" << num(ly) << "\">"
           << xml_escape(spec.series[k].label) << "</text>\n";
        ly += 16;
    }
    os << "</g>\n</svg>\n";
    return os.str();
}

void write_svg(const PlotSpec& spec, const std::string& path) {
    const std::string text = render_svg(spec);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    out << text;
    if (!out) {
        throw std::runtime_error("write failed for " + path);
    }
}

} // namespace spinramp
