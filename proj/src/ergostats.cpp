#include "singlab/ergostats.hpp"

#include <algorithm>
#include <cmath>

namespace singlab {

double birkhoff_average(const IntervalMap& map, const std::function<double(double)>& phi, double x0,
                        std::size_t n, Rng& rng) {
    if (n == 0) throw DomainError("birkhoff_average: n must be > 0");
    double sum = 0.0, x = x0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = phi(x);
        if (!std::isfinite(v)) throw NumericError("birkhoff_average: non-finite observable value");
        sum += v;
        if (i + 1 < n) x = map_step(map, x, &rng);
    }
    return sum / static_cast<double>(n);
}

double birkhoff_average(const Trajectory& traj, const std::function<double(const Vec3&)>& phi) {
    if (traj.size() < 2) throw DomainError("birkhoff_average: trajectory needs two nodes");
    double sum = 0.0;
    double left = phi(traj.states[0]);
    for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
        const double a = traj.times[k], b = traj.times[k + 1];
        const double mid = phi(traj.interpolate(k, 0.5 * (a + b)));
        const double right = phi(traj.states[k + 1]);
        if (!std::isfinite(left) || !std::isfinite(mid) || !std::isfinite(right))
            throw NumericError("birkhoff_average: non-finite observable value");
        sum += (b - a) * (left + 4.0 * mid + right) / 6.0;
        left = right;
    }
    return sum / (traj.end_time() - traj.start_time());
}

std::vector<double> EmpiricalMeasure::masses() const {
    std::vector<double> m(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) m[i] = mass(i);
    return m;
}

namespace {

std::size_t bin_of(double x, double lo, double hi, std::size_t bins) {
    const auto i = static_cast<std::ptrdiff_t>(std::floor((x - lo) / (hi - lo) * static_cast<double>(bins)));
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(bins) - 1));
}

}  // namespace

EmpiricalMeasure histogram(const std::vector<double>& samples, double lo, double hi, std::size_t bins) {
    if (bins == 0 || !(hi > lo)) throw DomainError("histogram: need bins > 0 and hi > lo");
    EmpiricalMeasure m;
    m.lo = lo;
    m.hi = hi;
    m.counts.assign(bins, 0);
    for (double x : samples) {
        if (!(x >= lo && x <= hi)) throw NumericError("histogram: sample outside domain bounds");
        ++m.counts[bin_of(x, lo, hi, bins)];
    }
    m.total = samples.size();
    return m;
}

EmpiricalMeasure estimate_measure(const IntervalMap& map, std::size_t n, std::size_t burn_in, std::size_t bins,
                                  std::uint64_t seed) {
    if (!(n > burn_in)) throw DomainError("estimate_measure: need n > burn_in");
    if (bins == 0) throw DomainError("estimate_measure: bins must be > 0");
    Rng rng(seed);
    EmpiricalMeasure m;
    m.lo = map.lo;
    m.hi = map.hi;
    m.counts.assign(bins, 0);
    m.burn_in = burn_in;
    m.seed = seed;
    double x = random_point(map, rng);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x >= map.lo && x <= map.hi)) throw NumericError("estimate_measure: orbit escaped the domain");
        if (i >= burn_in) ++m.counts[bin_of(x, map.lo, map.hi, bins)];
        x = map_step(map, x, &rng);
    }
    m.total = n - burn_in;
    return m;
}

double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw DomainError("total_variation: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
    return 0.5 * s;
}

LyapunovEstimate lyapunov_spectrum(const VectorField& field, const Vec3& x0, double T, const IntegratorConfig& cfg,
                                   std::uint64_t seed, const TangentOptions& opts) {
    if (!(T >= 100.0 * opts.reortho_interval))
        throw DomainError("lyapunov_spectrum: T must be at least 100 re-orthonormalisation intervals");
    Rng rng(seed);
    const Mat3 basis0 = random_orthonormal_basis(rng);
    const std::vector<TangentFrame> frames = integrate_with_tangent(field, x0, basis0, T, cfg, opts);
    auto rates = [&](const TangentFrame& fr) {
        Vec3 e = fr.log_norms / fr.time;
        std::sort(e.data(), e.data() + 3, std::greater<>());
        return e;
    };
    LyapunovEstimate est;
    est.time = frames.back().time;
    est.reortho_interval = opts.reortho_interval;
    est.exponents = rates(frames.back());
    const TangentFrame& half = frames[frames.size() / 2];
    est.spread = (est.exponents - rates(half)).cwiseAbs().maxCoeff();
    if (!est.exponents.allFinite()) throw NumericError("lyapunov_spectrum: non-finite exponents");
    return est;
}

double map_lyapunov(const IntervalMap& map, std::size_t n, std::uint64_t seed, std::size_t burn_in) {
    Rng rng(seed);
    double x = random_point(map, rng);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < burn_in; ++i) x = map_step(map, x, &rng, &hits);
    auto log_deriv = [&](double y) {
        for (double s : map.singular)
            if (y == s && !map.dyadic) y = s + 1e-15;
        return std::log(std::abs(map.derivative(y)));
    };
    return birkhoff_average(map, log_deriv, x, n, rng);
}

EntropyFormulaReport check_entropy_formula(const IntervalMap& map, std::size_t n, std::uint64_t seed1,
                                           std::uint64_t seed2, double tolerance) {
    EntropyFormulaReport rep;
    rep.entropy = map.entropy;
    rep.integral = map_lyapunov(map, n, seed1);
    rep.integral_second = map_lyapunov(map, n, seed2);
    rep.gap = rep.entropy ? std::abs(*rep.entropy - rep.integral) : std::abs(rep.integral - rep.integral_second);
    rep.pass = rep.gap < tolerance;
    return rep;
}

CorrelationEstimate correlation_decay(const IntervalMap& map, const std::function<double(double)>& f,
                                      const std::function<double(double)>& g, std::size_t max_lag, std::size_t n,
                                      std::uint64_t seed, std::size_t burn_in) {
    if (n < 2) throw DomainError("correlation_decay: n must be >= 2");
    Rng rng(seed);
    double x = random_point(map, rng);
    for (std::size_t i = 0; i < burn_in; ++i) x = map_step(map, x, &rng);
    const std::vector<double> orbit = map_orbit(map, x, n + max_lag, rng);
    std::vector<double> fv(n), gv(orbit.size());
    for (std::size_t i = 0; i < orbit.size(); ++i) {
        gv[i] = g(orbit[i]);
        if (i < n) fv[i] = f(orbit[i]);
    }
    double f_mean = 0.0;
    for (double v : fv) f_mean += v;
    f_mean /= static_cast<double>(n);

    CorrelationEstimate est;
    est.noise_floor = 3.0 / std::sqrt(static_cast<double>(n));
    for (std::size_t lag = 0; lag <= max_lag; ++lag) {
        double cross = 0.0, g_mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            cross += gv[i + lag] * fv[i];
            g_mean += gv[i + lag];
        }
        cross /= static_cast<double>(n);
        g_mean /= static_cast<double>(n);
        const double c = cross - g_mean * f_mean;
        est.lags.push_back(lag);
        est.signed_values.push_back(c);
        est.values.push_back(std::abs(c));
    }
    for (std::size_t i = 0; i < n; ++i) {
        est.variance_f += (fv[i] - f_mean) * (fv[i] - f_mean);
    }
    est.variance_f /= static_cast<double>(n);
    double g0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) g0 += gv[i];
    g0 /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) est.variance_g += (gv[i] - g0) * (gv[i] - g0);
    est.variance_g /= static_cast<double>(n);

    std::vector<double> lx, ly;
    for (std::size_t lag = 1; lag <= max_lag; ++lag) {
        if (!(est.values[lag] > est.noise_floor)) break;
        lx.push_back(static_cast<double>(lag));
        ly.push_back(std::log(est.values[lag]));
    }
    if (lx.empty()) {
        est.rate_is_floor = true;
        // Rate at least what a single lag below the floor implies.
        if (est.values[0] > 0.0) est.rate = std::log(est.values[0] / est.noise_floor);
        return est;
    }
    if (lx.size() == 1) {
        lx.insert(lx.begin(), 0.0);
        ly.insert(ly.begin(), std::log(est.values[0]));
    }
    est.fit = fit_line(lx, ly);
    est.rate = -est.fit.slope;
    return est;
}

}  // namespace singlab
