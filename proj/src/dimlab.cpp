#include "singlab/dimlab.hpp"

#include <cmath>

namespace singlab {

std::vector<double> geometric_radii(double r_max, double r_min, double ratio) {
    if (!(r_max > r_min && r_min > 0.0 && ratio > 1.0)) throw DomainError("geometric_radii: need r_max > r_min > 0, ratio > 1");
    std::vector<double> r;
    for (double x = r_max; x >= r_min * (1.0 - 1e-12); x /= ratio) r.push_back(x);
    return r;
}

BallStats ball_masses(const std::vector<double>& cloud, double x0, const std::vector<double>& radii) {
    std::vector<double> dist(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) dist[i] = std::abs(cloud[i] - x0);
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

ScalingFit local_dimension(const BallStats& balls, const LocalDimensionOptions& opts) {
    if (balls.samples < opts.min_samples) throw DomainError("local_dimension: too few samples");
    if (balls.radii.empty()) throw DomainError("local_dimension: no radii");
    const auto [lo, hi] = std::minmax_element(balls.radii.begin(), balls.radii.end());
    if (std::log10(*hi / *lo) < opts.min_decades) throw DomainError("local_dimension: radii span too few decades");
    for (std::size_t i = 0; i + 1 < balls.radii.size(); ++i) {
        const bool desc = balls.radii[i] > balls.radii[i + 1];
        if ((desc && balls.masses[i] < balls.masses[i + 1]) || (!desc && balls.masses[i] > balls.masses[i + 1]))
            throw NumericError("local_dimension: ball masses not monotone in r");
    }
    std::vector<double> r, m;
    for (std::size_t i = 0; i < balls.radii.size(); ++i) {
        if (balls.counts[i] < opts.min_count || balls.masses[i] > opts.max_fraction) continue;
        r.push_back(balls.radii[i]);
        m.push_back(balls.masses[i]);
    }
    if (r.size() < 2) throw NumericError("local_dimension: insufficient counts at all radii");
    return fit_loglog(r, m);
}

ScalingFit mean_local_dimension(const std::vector<BallStats>& balls, const LocalDimensionOptions& opts) {
    if (balls.empty()) throw DomainError("mean_local_dimension: no centres");
    const std::vector<double>& radii = balls.front().radii;
    std::vector<double> r, m;
    for (std::size_t i = 0; i < radii.size(); ++i) {
        bool ok = true;
        double sum_log = 0.0;
        for (const BallStats& b : balls) {
            if (b.radii != radii) throw DomainError("mean_local_dimension: centres use different radii");
            if (b.samples < opts.min_samples) throw DomainError("mean_local_dimension: too few samples");
            if (b.counts[i] < opts.min_count || b.masses[i] > opts.max_fraction || !(b.masses[i] > 0.0)) {
                ok = false;
                break;
            }
            sum_log += std::log(b.masses[i]);
        }
        if (!ok) continue;
        r.push_back(radii[i]);
        m.push_back(std::exp(sum_log / static_cast<double>(balls.size())));
    }
    if (r.size() < 2) throw NumericError("mean_local_dimension: fewer than two common radii");
    return fit_loglog(r, m);
}

std::vector<double> uniform_cloud(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> out(n);
    for (double& x : out) x = uniform01(rng);
    return out;
}

std::vector<double> cantor_cloud(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> out(n);
    for (double& x : out) {
        std::uint64_t bits = rng();
        double v = 0.0, scale = 1.0;
        for (int k = 0; k < 34; ++k) {
            scale /= 3.0;
            v += 2.0 * static_cast<double>(bits & 1u) * scale;
            bits >>= 1;
        }
        x = v;
    }
    return out;
}

void HittingRecord::check_monotone() const {
    double prev = -1.0;
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (i > 0 && !(radii[i] < radii[i - 1])) throw NumericError("HittingRecord: radii must be descending");
        if (censored[i]) continue;
        if (times[i] < prev) throw NumericError("HittingRecord: hitting times increase with r");
        prev = times[i];
    }
}

HittingRecord hitting_time(const IntervalMap& map, double start, double target, const std::vector<double>& radii,
                           std::uint64_t budget, Rng* rng) {
    return hitting_time_steps(
        start, [&](double x) { return map_step(map, x, rng); }, [&](double x) { return std::abs(x - target); },
        radii, budget);
}

HittingRecord recurrence_time(const IntervalMap& map, double x0, const std::vector<double>& radii,
                              std::uint64_t budget, Rng* rng) {
    return recurrence_time_steps(
        x0, [&](double x) { return map_step(map, x, rng); }, [&](double x) { return std::abs(x - x0); }, radii,
        budget);
}

HittingRecord flow_hitting_time(FlowOrbit& orbit, const Vec3& target, const std::vector<double>& radii,
                                const FlowSearchOptions& opts) {
    HittingRecord rec;
    rec.radii = radii;
    rec.times.assign(radii.size(), opts.budget);
    rec.censored.assign(radii.size(), true);
    std::size_t next = 0;
    double t = 0.0;
    while (next < radii.size() && t <= opts.budget) {
        const double d = (orbit.position() - target).norm();
        while (next < radii.size() && d <= radii[next]) {
            rec.times[next] = t;
            rec.censored[next] = false;
            ++next;
        }
        if (next == radii.size()) break;
        const double v = orbit.speed_bound();
        const double rk = radii[next];
        double dt = std::max((d - rk) / v, opts.min_step_fraction * rk / v);
        dt = std::min(dt, orbit.time_to_break());
        orbit.advance(dt);
        t += dt;
    }
    return rec;
}

HittingRecord flow_recurrence_time(FlowOrbit& orbit, const std::vector<double>& radii, const FlowSearchOptions& opts) {
    HittingRecord rec;
    rec.radii = radii;
    rec.times.assign(radii.size(), opts.budget);
    rec.censored.assign(radii.size(), true);
    const Vec3 origin = orbit.position();
    std::vector<bool> exited(radii.size(), false);
    std::size_t open = radii.size();
    double t = 0.0;
    while (open > 0 && t <= opts.budget) {
        const double d = (orbit.position() - origin).norm();
        double gap = std::numeric_limits<double>::infinity(), r_small = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < radii.size(); ++i) {
            if (!rec.censored[i]) continue;
            if (!exited[i] && d > radii[i]) exited[i] = true;
            else if (exited[i] && d <= radii[i]) {
                rec.times[i] = t;
                rec.censored[i] = false;
                --open;
                continue;
            }
            gap = std::min(gap, std::abs(d - radii[i]));
            r_small = std::min(r_small, radii[i]);
        }
        if (open == 0) break;
        const double v = orbit.speed_bound();
        double dt = std::max(gap / v, opts.min_step_fraction * r_small / v);
        dt = std::min(dt, orbit.time_to_break());
        orbit.advance(dt);
        t += dt;
    }
    return rec;
}

BallStats flow_ball_masses(FlowOrbit& orbit, const Vec3& target, const std::vector<double>& radii, double T,
                           const FlowSearchOptions& opts) {
    if (!(T > 0.0) || radii.empty()) throw DomainError("flow_ball_masses: need T > 0 and radii");
    const double r_max = *std::max_element(radii.begin(), radii.end());
    std::vector<double> time_in(radii.size(), 0.0);
    std::vector<std::size_t> visits(radii.size(), 0);
    std::vector<bool> inside(radii.size(), false);
    double t = 0.0;
    while (t < T) {
        const double d = (orbit.position() - target).norm();
        double gap = d - r_max, r_near = r_max;
        for (std::size_t i = 0; i < radii.size(); ++i) {
            const bool in = d <= radii[i];
            if (in && !inside[i]) ++visits[i];
            inside[i] = in;
            if (std::abs(d - radii[i]) < std::abs(gap)) {
                gap = std::abs(d - radii[i]);
                r_near = radii[i];
            }
        }
        const double v = orbit.speed_bound();
        double dt = std::max(std::abs(gap) / v, opts.min_step_fraction * r_near / v);
        dt = std::min({dt, orbit.time_to_break(), T - t});
        // No boundary is crossed unless dt is the floor step, so the step belongs wholly to the balls holding d.
        for (std::size_t i = 0; i < radii.size(); ++i)
            if (inside[i]) time_in[i] += dt;
        orbit.advance(dt);
        t += dt;
    }
    BallStats b;
    b.radii = radii;
    b.samples = static_cast<std::size_t>(T);
    b.counts = visits;
    for (double x : time_in) b.masses.push_back(x / T);
    return b;
}

ScalingFit hitting_exponent(const std::vector<HittingRecord>& records, const HittingExponentOptions& opts) {
    if (records.empty()) throw DomainError("hitting_exponent: no records");
    const std::size_t nr = records.front().radii.size();
    std::vector<double> lx, ly;
    double r_lo = std::numeric_limits<double>::infinity(), r_hi = 0.0;
    for (std::size_t i = 0; i < nr; ++i) {
        bool ok = true;
        double sum_log = 0.0, sum = 0.0;
        for (const HittingRecord& rec : records) {
            if (rec.radii.size() != nr) throw DomainError("hitting_exponent: records use different radii");
            if (rec.censored[i] || !(rec.times[i] > 0.0)) {
                ok = false;
                break;
            }
            sum_log += std::log(rec.times[i]);
            sum += rec.times[i];
        }
        if (!ok || sum / static_cast<double>(records.size()) < opts.min_time) continue;
        const double r = records.front().radii[i];
        lx.push_back(-std::log(r));
        ly.push_back(sum_log / static_cast<double>(records.size()));
        r_lo = std::min(r_lo, r);
        r_hi = std::max(r_hi, r);
    }
    bool any_uncensored = false;
    for (const HittingRecord& rec : records)
        for (bool c : rec.censored) any_uncensored = any_uncensored || !c;
    if (!any_uncensored) throw NumericError("hitting_exponent: all radii censored");
    ScalingFit fit = fit_line(lx, ly);
    if (!lx.empty()) {
        fit.window_lo = r_lo;
        fit.window_hi = r_hi;
    }
    return fit;
}

DimensionRelationReport check_dimension_relation(const ScalingFit& map_fit, const ScalingFit& flow_fit,
                                                 double tolerance) {
    DimensionRelationReport rep;
    rep.d_map = map_fit.slope;
    rep.d_flow = flow_fit.slope;
    rep.gap = std::abs(rep.d_flow - rep.d_map - 1.0);
    rep.applicable = map_fit.valid() && flow_fit.valid() && map_fit.r_squared >= 0.9 && flow_fit.r_squared >= 0.9;
    rep.pass = rep.applicable && rep.gap <= tolerance;
    return rep;
}

}  // namespace singlab
