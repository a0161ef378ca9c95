#include "singlab/fit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "singlab/types.hpp"

namespace singlab {

ScalingFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DomainError("fit_line: size mismatch");
    ScalingFit fit;
    const std::size_t n = x.size();
    fit.points = n;
    if (n < 2) return fit;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    fit.window_lo = *lo;
    fit.window_hi = *hi;
    if (!(sxx > 0.0)) {
        fit.points = 1;
        return fit;
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double sse = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = y[i] - (fit.slope * x[i] + fit.intercept);
        sse += e * e;
    }
    fit.residual_rms = std::sqrt(sse / n);
    fit.r_squared = syy > 0.0 ? std::clamp(1.0 - sse / syy, 0.0, 1.0) : 1.0;
    if (n > 2) fit.slope_half_width = 1.96 * std::sqrt(sse / (n - 2) / sxx);
    return fit;
}

ScalingFit fit_loglog(std::span<const double> x, std::span<const double> y) {
    std::vector<double> lx, ly;
    lx.reserve(x.size());
    ly.reserve(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw DomainError("fit_loglog: values must be positive");
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    ScalingFit fit = fit_line(lx, ly);
    if (!x.empty()) {
        const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
        fit.window_lo = *lo;
        fit.window_hi = *hi;
    }
    return fit;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw DomainError("quantile: empty sample");
    std::sort(values.begin(), values.end());
    const double pos = std::clamp(q, 0.0, 1.0) * (values.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    if (i + 1 >= values.size()) return values.back();
    const double frac = pos - i;
    return values[i] * (1 - frac) + values[i + 1] * frac;
}

}  // namespace singlab
