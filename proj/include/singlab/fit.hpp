#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace singlab {

// Result of a least-squares line fit y = slope * x + intercept. Used for
// log-log scaling laws (dimensions, hitting exponents) and log-linear rates
// (correlation decay, large deviations, escape).
struct ScalingFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    // Half-width of the 95% confidence interval of the slope (normal approx.).
    double slope_half_width = 0.0;
    double residual_rms = 0.0;
    // Range of the independent variable actually used, in the caller's units
    // (radii for dimension fits, lags or times for rates).
    double window_lo = 0.0;
    double window_hi = 0.0;
    std::size_t points = 0;

    bool valid() const { return points >= 2; }
};

// Ordinary least squares. Needs at least two distinct x values; otherwise the
// returned fit has points < 2.
ScalingFit fit_line(std::span<const double> x, std::span<const double> y);

// Slope of log(y) against log(x), window reported in x units.
ScalingFit fit_loglog(std::span<const double> x, std::span<const double> y);

// Quantile of a sample by linear interpolation of order statistics.
double quantile(std::vector<double> values, double q);

}  // namespace singlab
