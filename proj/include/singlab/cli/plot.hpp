#pragma once

// Standalone SVG 1.1 plots with a fixed 800x600 view box.

#include <string>

#include "singlab/cli/table.hpp"

namespace singlab::cli {

enum class PlotKind { loglog, series, histogram };

PlotKind parse_plot_kind(const std::string& s);

struct PlotSpec {
    PlotKind kind = PlotKind::series;
    std::string x;
    std::string y;
    std::string title;
};

// loglog draws the points, the least-squares line through them and its
// slope; series a polyline; histogram bars at the x values. A table without
// rows renders a "no data" placeholder. Throws DomainError on a missing column.
std::string render_svg(const Table& t, const PlotSpec& spec);

}  // namespace singlab::cli
