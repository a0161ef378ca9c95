#pragma once

// Local dimension by ball counting, hitting and recurrence times for maps and
// flows, and log-law fits of both.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "singlab/fit.hpp"
#include "singlab/geolorenz.hpp"
#include "singlab/maps.hpp"
#include "singlab/types.hpp"

namespace singlab {

template <int D>
using Point = Eigen::Matrix<double, D, 1>;

// r_max, r_max / ratio, ... down to r_min (inclusive up to rounding); descending.
std::vector<double> geometric_radii(double r_max, double r_min, double ratio = std::sqrt(2.0));

struct BallStats {
    std::vector<double> radii;  // as supplied
    std::vector<std::size_t> counts;
    std::vector<double> masses;  // mu(B_r(x0)) estimates, counts / samples
    std::size_t samples = 0;
};

template <int D>
BallStats ball_masses(const std::vector<Point<D>>& cloud, const Point<D>& x0, const std::vector<double>& radii) {
    std::vector<double> dist(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) dist[i] = (cloud[i] - x0).norm();
    std::sort(dist.begin(), dist.end());
    BallStats b;
    b.radii = radii;
    b.samples = cloud.size();
    for (double r : radii) {
        const auto c = static_cast<std::size_t>(std::upper_bound(dist.begin(), dist.end(), r) - dist.begin());
        b.counts.push_back(c);
        b.masses.push_back(static_cast<double>(c) / static_cast<double>(cloud.size()));
    }
    return b;
}

BallStats ball_masses(const std::vector<double>& cloud, double x0, const std::vector<double>& radii);

struct LocalDimensionOptions {
    std::size_t min_samples = 100000;
    double min_decades = 1.5;
    std::size_t min_count = 30;
    double max_fraction = 0.5;
};

// Slope of log mu(B_r) against log r on the radii whose balls hold a count of
// at least min_count with mass at most max_fraction. Throws DomainError when the sample or the
// radius range is too small and NumericError when fewer than two radii
// qualify.
ScalingFit local_dimension(const BallStats& balls, const LocalDimensionOptions& opts = {});

template <int D>
ScalingFit local_dimension(const std::vector<Point<D>>& cloud, const Point<D>& x0, const std::vector<double>& radii,
                           const LocalDimensionOptions& opts = {}) {
    return local_dimension(ball_masses(cloud, x0, radii), opts);
}

// Averages log mu(B_r) over several centres on the radii where every centre
// has an admissible count, and fits the mean curve.
ScalingFit mean_local_dimension(const std::vector<BallStats>& balls, const LocalDimensionOptions& opts = {});

template <int D>
ScalingFit mean_local_dimension(const std::vector<Point<D>>& cloud, const std::vector<Point<D>>& centers,
                                const std::vector<double>& radii, const LocalDimensionOptions& opts = {}) {
    std::vector<BallStats> balls;
    for (const auto& c : centers) balls.push_back(ball_masses(cloud, c, radii));
    return mean_local_dimension(balls, opts);
}

// Reference clouds: uniform on [0, 1] and the middle-third Cantor measure.
std::vector<double> uniform_cloud(std::size_t n, std::uint64_t seed);
std::vector<double> cantor_cloud(std::size_t n, std::uint64_t seed);

// -- hitting and recurrence times ---------------------------------------------

struct HittingRecord {
    std::vector<double> radii;  // descending
    std::vector<double> times;  // first entry time per radius
    std::vector<bool> censored;
    // Throws NumericError unless uncensored times are nonincreasing in r.
    void check_monotone() const;
};

// Hitting times of the orbit of `x` under `step` into balls around the
// target, `dist(x)` being the distance to the target. Counts steps up to
// `budget`; censored radii keep time = budget.
template <typename State, typename Step, typename Dist>
HittingRecord hitting_time_steps(State x, Step&& step, Dist&& dist, const std::vector<double>& radii,
                                 std::uint64_t budget) {
    HittingRecord rec;
    rec.radii = radii;
    rec.times.assign(radii.size(), static_cast<double>(budget));
    rec.censored.assign(radii.size(), true);
    std::size_t next = 0;
    for (std::uint64_t n = 0; n <= budget && next < radii.size(); ++n) {
        const double d = dist(x);
        while (next < radii.size() && d <= radii[next]) {
            rec.times[next] = static_cast<double>(n);
            rec.censored[next] = false;
            ++next;
        }
        if (n < budget) x = step(x);
    }
    return rec;
}

// Second entrance times: for each radius the first n >= 1 with the orbit back
// in B_r(x_0) after having left it.
template <typename State, typename Step, typename Dist>
HittingRecord recurrence_time_steps(State x, Step&& step, Dist&& dist, const std::vector<double>& radii,
                                    std::uint64_t budget) {
    HittingRecord rec;
    rec.radii = radii;
    rec.times.assign(radii.size(), static_cast<double>(budget));
    rec.censored.assign(radii.size(), true);
    std::vector<bool> exited(radii.size(), false);
    std::size_t open = radii.size();
    for (std::uint64_t n = 1; n <= budget && open > 0; ++n) {
        x = step(x);
        const double d = dist(x);
        for (std::size_t i = 0; i < radii.size(); ++i) {
            if (!rec.censored[i]) continue;
            if (!exited[i]) {
                if (d > radii[i]) exited[i] = true;
            } else if (d <= radii[i]) {
                rec.times[i] = static_cast<double>(n);
                rec.censored[i] = false;
                --open;
            }
        }
    }
    return rec;
}

// Hitting time of the orbit of `start` into balls around `target` (map steps).
// With rng the dyadic refresh of map_step is used.
HittingRecord hitting_time(const IntervalMap& map, double start, double target, const std::vector<double>& radii,
                           std::uint64_t budget, Rng* rng);
HittingRecord recurrence_time(const IntervalMap& map, double x0, const std::vector<double>& radii,
                              std::uint64_t budget, Rng* rng);

// A flow known piecewise in closed form: between breaks its speed is bounded
// by speed_bound(), which lets the search skip ahead without missing a ball.
class FlowOrbit {
public:
    virtual ~FlowOrbit() = default;
    virtual Vec3 position() const = 0;
    virtual double speed_bound() const = 0;
    virtual double time_to_break() const = 0;
    // 0 < dt <= time_to_break().
    virtual void advance(double dt) = 0;
    virtual std::unique_ptr<FlowOrbit> clone() const = 0;
};

class GeoLorenzFlowOrbit : public FlowOrbit {
public:
    GeoLorenzFlowOrbit(const geolorenz::GeoLorenzParams& p, const geolorenz::FlowState& st) : p_(p), st_(st) {}
    Vec3 position() const override { return geolorenz::flow_position(p_, st_); }
    double speed_bound() const override { return geolorenz::flow_speed_bound(p_, st_); }
    double time_to_break() const override { return geolorenz::phase_remaining(p_, st_); }
    void advance(double dt) override { st_ = geolorenz::flow_advance(p_, st_, dt); }
    std::unique_ptr<FlowOrbit> clone() const override { return std::make_unique<GeoLorenzFlowOrbit>(*this); }
    const geolorenz::FlowState& state() const { return st_; }

private:
    geolorenz::GeoLorenzParams p_;
    geolorenz::FlowState st_;
};

struct FlowSearchOptions {
    // Censoring budget in time units.
    double budget = 1e6;
    // Smallest skip as a fraction of r / speed, so grazing approaches terminate.
    double min_step_fraction = 1e-3;
};

// First entry times of the flow into B_r(target) in ambient distance.
HittingRecord flow_hitting_time(FlowOrbit& orbit, const Vec3& target, const std::vector<double>& radii,
                                const FlowSearchOptions& opts = {});

// Recurrence to the orbit's own starting position after leaving each ball.
HittingRecord flow_recurrence_time(FlowOrbit& orbit, const std::vector<double>& radii,
                                   const FlowSearchOptions& opts = {});

// Ball masses of the flow's time average: the fraction of [0, T] the orbit
// spends in each ball around `target`. counts holds the number of separate
// visits, samples the elapsed time rounded down.
BallStats flow_ball_masses(FlowOrbit& orbit, const Vec3& target, const std::vector<double>& radii, double T,
                           const FlowSearchOptions& opts = {});

struct HittingExponentOptions {
    // Radii whose mean first-entry time is below this are outside the
    // asymptotic regime and skipped.
    double min_time = 10.0;
};

// Slope of the ensemble mean of log tau_r against -log r over the radii that
// no record censored.
ScalingFit hitting_exponent(const std::vector<HittingRecord>& records, const HittingExponentOptions& opts = {});

struct DimensionRelationReport {
    double d_map = 0.0;
    double d_flow = 0.0;
    double gap = 0.0;  // |d_flow - d_map - 1|
    bool applicable = false;  // both fits have R^2 >= 0.9
    bool pass = false;
};

DimensionRelationReport check_dimension_relation(const ScalingFit& map_fit, const ScalingFit& flow_fit,
                                                 double tolerance = 0.15);

}  // namespace singlab
