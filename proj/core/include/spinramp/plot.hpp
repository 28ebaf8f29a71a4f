#pragma once

// Minimal SVG line charts. Output depends only on the input values, so
// identical inputs give byte-identical files.

#include <string>
#include <vector>

namespace spinramp {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
    std::vector<double> markers; // dashed vertical lines, e.g. region centres
    int width = 800;
    int height = 500;
};

/// One <polyline> per series, plus axes, ticks, labels and a legend.
/// Throws InvalidArgument when there is nothing to draw.
std::string render_svg(const PlotSpec& spec);
void write_svg(const PlotSpec& spec, const std::string& path);

std::string xml_escape(std::string_view text);

} // namespace spinramp
