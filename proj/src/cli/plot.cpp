#include "singlab/cli/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "singlab/fit.hpp"
#include "singlab/types.hpp"

namespace singlab::cli {

PlotKind parse_plot_kind(const std::string& s) {
    if (s == "loglog") return PlotKind::loglog;
    if (s == "series") return PlotKind::series;
    if (s == "histogram") return PlotKind::histogram;
    throw DomainError("plot: unknown kind '" + s + "' (loglog, series, histogram)");
}

namespace {

constexpr double kW = 800.0, kH = 600.0;
constexpr double kLeft = 90.0, kRight = 30.0, kTop = 60.0, kBottom = 70.0;

std::string num(double v, const char* f = "%.2f") {
    char buf[48];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string header(const std::string& title) {
    std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"800\" height=\"600\" viewBox=\"0 0 800 600\">\n";
    s += "<rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" fill=\"white\"/>\n";
    if (!title.empty())
        s += "<text x=\"400\" y=\"32\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"18\">" +
             escape(title) + "</text>\n";
    return s;
}

std::string no_data(const std::string& title) {
    return header(title) +
           "<text x=\"400\" y=\"300\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"24\" "
           "fill=\"#666666\">no data</text>\n</svg>\n";
}

struct Axis {
    double lo, hi;
    void pad() {
        if (hi == lo) {
            lo -= 0.5;
            hi += 0.5;
        }
    }
};

}  // namespace

std::string render_svg(const Table& t, const PlotSpec& spec) {
    const std::string title = spec.title.empty() ? spec.y + " vs " + spec.x : spec.title;
    if (t.columns.empty() && t.rows.empty()) return no_data(title);
    std::vector<double> xs = t.numeric(spec.x), ys = t.numeric(spec.y);
    const bool log = spec.kind == PlotKind::loglog;
    std::vector<double> px, py;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double x = xs[i], y = ys[i];
        if (!std::isfinite(x) || !std::isfinite(y)) continue;
        if (log) {
            if (!(x > 0.0 && y > 0.0)) continue;
            x = std::log10(x);
            y = std::log10(y);
        }
        px.push_back(x);
        py.push_back(y);
    }
    if (px.empty()) return no_data(title);

    Axis ax{*std::min_element(px.begin(), px.end()), *std::max_element(px.begin(), px.end())};
    Axis ay{*std::min_element(py.begin(), py.end()), *std::max_element(py.begin(), py.end())};
    double bar = 0.0;
    if (spec.kind == PlotKind::histogram) {
        std::vector<double> sorted = px;
        std::sort(sorted.begin(), sorted.end());
        bar = sorted.size() > 1 ? (sorted.back() - sorted.front()) / static_cast<double>(sorted.size() - 1) : 1.0;
        ax.lo -= 0.5 * bar;
        ax.hi += 0.5 * bar;
        ay.lo = std::min(0.0, ay.lo);
    }
    ax.pad();
    ay.pad();
    const double w = kW - kLeft - kRight, h = kH - kTop - kBottom;
    auto X = [&](double x) { return kLeft + (x - ax.lo) / (ax.hi - ax.lo) * w; };
    auto Y = [&](double y) { return kTop + h - (y - ay.lo) / (ay.hi - ay.lo) * h; };

    std::string s = header(title);
    s += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(w) + "\" height=\"" + num(h) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double fx = ax.lo + (ax.hi - ax.lo) * k / 4.0, fy = ay.lo + (ay.hi - ay.lo) * k / 4.0;
        const std::string lx = log ? "1e" + num(fx, "%.2g") : num(fx, "%.4g");
        const std::string ly = log ? "1e" + num(fy, "%.2g") : num(fy, "%.4g");
        s += "<text x=\"" + num(X(fx)) + "\" y=\"" + num(kTop + h + 22) +
             "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + lx +
             "</text>\n";
        s += "<text x=\"" + num(kLeft - 8) + "\" y=\"" + num(Y(fy) + 4) +
             "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" + ly + "</text>\n";
    }
    s += "<text x=\"" + num(kLeft + w / 2) + "\" y=\"" + num(kH - 20) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" + escape(spec.x) + "</text>\n";
    s += "<text x=\"20\" y=\"" + num(kTop + h / 2) + "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\" transform=\"rotate(-90 20 " + num(kTop + h / 2) + ")\">" + escape(spec.y) + "</text>\n";

    switch (spec.kind) {
        case PlotKind::series: {
            s += "<polyline fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < px.size(); ++i) s += (i ? " " : "") + num(X(px[i])) + "," + num(Y(py[i]));
            s += "\"/>\n";
            break;
        }
        case PlotKind::histogram: {
            const double bw = std::max(1.0, bar / (ax.hi - ax.lo) * w * 0.9);
            for (std::size_t i = 0; i < px.size(); ++i) {
                const double top = Y(std::max(py[i], 0.0)), base = Y(std::min(py[i], 0.0));
                s += "<rect x=\"" + num(X(px[i]) - bw / 2) + "\" y=\"" + num(top) + "\" width=\"" + num(bw) +
                     "\" height=\"" + num(base - top) + "\" fill=\"#7a9cc6\"/>\n";
            }
            break;
        }
        case PlotKind::loglog: {
            for (std::size_t i = 0; i < px.size(); ++i)
                s += "<circle cx=\"" + num(X(px[i])) + "\" cy=\"" + num(Y(py[i])) + "\" r=\"3\" fill=\"#1f4e9c\"/>\n";
            if (px.size() >= 2) {
                const ScalingFit f = fit_line(px, py);
                const double y0 = f.intercept + f.slope * ax.lo, y1 = f.intercept + f.slope * ax.hi;
                s += "<line x1=\"" + num(X(ax.lo)) + "\" y1=\"" + num(Y(y0)) + "\" x2=\"" + num(X(ax.hi)) +
                     "\" y2=\"" + num(Y(y1)) + "\" stroke=\"#c0392b\" stroke-width=\"1.5\"/>\n";
                s += "<text x=\"" + num(kLeft + 12) + "\" y=\"" + num(kTop + 20) +
                     "\" font-family=\"sans-serif\" font-size=\"14\" fill=\"#c0392b\">slope " + num(f.slope, "%.4f") +
                     "  R2 " + num(f.r_squared, "%.4f") + "</text>\n";
            }
            break;
        }
    }
    s += "</svg>\n";
    return s;
}

}  // namespace singlab::cli
