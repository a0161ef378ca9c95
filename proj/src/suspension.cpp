#include "singlab/suspension.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "singlab/parallel.hpp"

namespace singlab {

RoofFunction RoofFunction::constant(double value) {
    if (!(value > 0.0)) throw DomainError("RoofFunction: constant roof must be > 0");
    RoofFunction r;
    r.kind = Kind::constant;
    r.r0 = value;
    return r;
}

RoofFunction RoofFunction::log_singular(double r0, double lambda1, double singular_point) {
    if (!(r0 > 0.0) || !(lambda1 > 0.0)) throw DomainError("RoofFunction: need r0 > 0 and lambda1 > 0");
    RoofFunction r;
    r.kind = Kind::log_singular;
    r.r0 = r0;
    r.lambda1 = lambda1;
    r.singular_point = singular_point;
    return r;
}

double roof_eval(const RoofFunction& roof, double x) {
    if (roof.kind == RoofFunction::Kind::constant) return roof.r0;
    const double d = std::abs(x - roof.singular_point);
    if (d == 0.0) throw DomainError("roof_eval: x on the singular set");
    // Distances beyond 1 would push the roof below r0.
    return roof.r0 - std::log(std::min(d, 1.0)) / roof.lambda1;
}

Semiflow Semiflow::constant_roof(const IntervalMap& base, double value) {
    return Semiflow{base, RoofFunction::constant(value)};
}

Semiflow Semiflow::lorenz(double r0, double lambda1, const geolorenz::QuotientMapSpec& q) {
    return Semiflow{lorenz_quotient_map(q), RoofFunction::log_singular(r0, lambda1, 0.0)};
}

LapResult lap_number(const Semiflow& flow, double x, double s, double T, Rng* rng) {
    if (!(T >= 0.0)) throw DomainError("lap_number: T must be >= 0");
    if (!(s >= 0.0 && s < flow.r(x))) throw DomainError("lap_number: need 0 <= s < r(x)");
    LapResult out;
    out.x_n = x;
    const double target = s + T;
    while (true) {
        const double r = flow.r(out.x_n);
        if (!(out.partial_sum + r <= target)) break;
        out.partial_sum += r;
        out.x_n = map_step(flow.base, out.x_n, rng);
        if (std::abs(out.x_n - flow.roof.singular_point) == 0.0 && flow.roof.kind == RoofFunction::Kind::log_singular)
            throw DomainError("lap_number: orbit hit the singular set");
        ++out.n;
    }
    return out;
}

SuspensionState evolve(const Semiflow& flow, SuspensionState st, double t, Rng* rng, std::size_t* singular_hits) {
    if (!(t >= 0.0)) throw DomainError("evolve: t must be >= 0");
    double r = flow.r(st.x);
    if (!(st.s >= 0.0 && st.s < r)) throw DomainError("evolve: state violates 0 <= s < r(x)");
    st.s += t;
    while (st.s >= r) {
        st.s -= r;
        st.x = map_step(flow.base, st.x, rng, singular_hits);
        if (flow.roof.kind == RoofFunction::Kind::log_singular && st.x == flow.roof.singular_point) {
            if (singular_hits) ++*singular_hits;
            st.x = flow.roof.singular_point + 1e-15;
        }
        r = flow.r(st.x);
    }
    if (!(st.s >= 0.0 && st.s < r)) throw NumericError("evolve: fiber invariant violated");
    return st;
}

void SuspensionFlowOrbit::advance(double dt) {
    const double remaining = flow_->r(st_.x) - st_.s;
    if (dt >= remaining) {
        st_.x = map_step(flow_->base, st_.x, &rng_);
        if (flow_->roof.kind == RoofFunction::Kind::log_singular && st_.x == flow_->roof.singular_point)
            st_.x = flow_->roof.singular_point + 1e-15;
        st_.s = 0.0;
    } else {
        st_.s += dt;
    }
}

// ---------------------------------------------------------------------------

NueReport check_nue(const IntervalMap& map, std::size_t n, std::size_t ensemble, std::uint64_t seed) {
    if (n == 0 || ensemble == 0) throw DomainError("check_nue: n and ensemble must be > 0");
    NueReport rep;
    rep.averages.reserve(ensemble);
    for (std::size_t i = 0; i < ensemble; ++i) {
        Rng rng = substream(seed, i);
        double x = random_point(map, rng), sum = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            for (double s : map.singular)
                if (x == s && !map.dyadic) x = s + 1e-15;
            sum -= std::log(std::abs(map.derivative(x)));
            x = map_step(map, x, &rng);
        }
        rep.averages.push_back(sum / static_cast<double>(n));
    }
    rep.p99 = quantile(rep.averages, 0.99);
    rep.c = -rep.p99;
    rep.pass = rep.c > 0.0;
    return rep;
}

RateFit fit_rate(std::vector<double> grid, std::vector<double> fractions, std::size_t ensemble) {
    RateFit out;
    out.grid = std::move(grid);
    out.fractions = std::move(fractions);
    out.ensemble = ensemble;
    const double lo = 5.0 / static_cast<double>(ensemble);
    std::vector<double> gx, gy;
    for (std::size_t i = 0; i < out.grid.size(); ++i) {
        const double f = out.fractions[i];
        if (f >= lo && f <= 0.5) {
            gx.push_back(out.grid[i]);
            gy.push_back(std::log(f));
        }
    }
    if (gx.size() < 2) {
        gx.clear();
        gy.clear();
        for (std::size_t i = 0; i < out.grid.size(); ++i) {
            const double f = out.fractions[i];
            if (f > 0.0 && f < 1.0) {
                gx.push_back(out.grid[i]);
                gy.push_back(std::log(f));
            }
        }
    }
    if (gx.empty()) {
        out.rate_is_floor = true;
        out.rate = -std::numeric_limits<double>::infinity();
        return out;
    }
    if (gx.size() == 1) {
        // A single positive fraction: the rate is only bounded by the count floor.
        out.rate_is_floor = true;
        out.rate = std::log(lo) / out.grid.back();
        return out;
    }
    out.fit = fit_line(gx, gy);
    out.rate = out.fit.slope;
    return out;
}

SlowRecurrenceReport check_slow_recurrence(const IntervalMap& map, const std::vector<double>& singular, double delta,
                                           double epsilon, const std::vector<std::size_t>& n_grid,
                                           std::size_t ensemble, std::uint64_t seed) {
    if (!(delta > 0.0 && delta < map.width())) throw DomainError("check_slow_recurrence: delta must lie in (0, domain)");
    if (n_grid.empty() || ensemble == 0) throw DomainError("check_slow_recurrence: empty grid or ensemble");
    if (!std::is_sorted(n_grid.begin(), n_grid.end()) || n_grid.front() == 0)
        throw DomainError("check_slow_recurrence: n grid must be ascending and positive");
    auto log_d = [&](double x) {
        double d = std::numeric_limits<double>::infinity();
        for (double s : singular) d = std::min(d, std::abs(x - s));
        if (!(d < delta)) return 0.0;
        return std::abs(std::log(std::max(d, 1e-300)));
    };
    std::vector<std::size_t> exceed(n_grid.size(), 0);
    for (std::size_t i = 0; i < ensemble; ++i) {
        Rng rng = substream(seed, i);
        double x = random_point(map, rng), sum = 0.0;
        std::size_t g = 0;
        for (std::size_t k = 1; k <= n_grid.back(); ++k) {
            sum += log_d(x);
            if (k == n_grid[g]) {
                if (sum / static_cast<double>(k) > epsilon) ++exceed[g];
                ++g;
            }
            x = map_step(map, x, &rng);
        }
    }
    SlowRecurrenceReport rep;
    rep.delta = delta;
    rep.epsilon = epsilon;
    std::vector<double> grid, frac;
    for (std::size_t g = 0; g < n_grid.size(); ++g) {
        grid.push_back(static_cast<double>(n_grid[g]));
        frac.push_back(static_cast<double>(exceed[g]) / static_cast<double>(ensemble));
    }
    rep.curve = fit_rate(grid, frac, ensemble);
    rep.pass = rep.curve.rate_is_floor || rep.curve.rate < 0.0;
    return rep;
}

// ---------------------------------------------------------------------------

std::vector<SuspensionState> sample_induced_measure(const Semiflow& flow, const std::vector<double>& base_samples,
                                                    std::size_t n, Rng& rng) {
    if (base_samples.empty()) throw DomainError("sample_induced_measure: no base samples");
    std::vector<double> cum(base_samples.size());
    double total = 0.0, largest = 0.0;
    for (std::size_t i = 0; i < base_samples.size(); ++i) {
        const double r = flow.r(base_samples[i]);
        total += r;
        largest = std::max(largest, r);
        cum[i] = total;
    }
    if (base_samples.size() >= 1000 && largest > 0.1 * total)
        throw NumericError("sample_induced_measure: r-moment diverges empirically");
    std::vector<SuspensionState> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double u = uniform01(rng) * total;
        auto it = std::upper_bound(cum.begin(), cum.end(), u);
        if (it == cum.end()) --it;
        const double x = base_samples[static_cast<std::size_t>(it - cum.begin())];
        out.push_back({x, uniform01(rng) * flow.r(x)});
    }
    return out;
}

namespace {

constexpr double kGaussNodes[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                   0.9602898564975363};
constexpr double kGaussWeights[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                     0.1012285362903763};

// Composite 8-point Gauss-Legendre with panels no longer than `panel`.
template <typename F>
double gauss(F&& f, double a, double b, double panel = 0.125) {
    if (b <= a) return 0.0;
    const int m = std::max(1, static_cast<int>(std::ceil((b - a) / panel)));
    const double h = (b - a) / m;
    double sum = 0.0;
    for (int p = 0; p < m; ++p) {
        const double c = a + (p + 0.5) * h, half = 0.5 * h;
        for (int i = 0; i < 4; ++i)
            sum += kGaussWeights[i] * half * (f(c - half * kGaussNodes[i]) + f(c + half * kGaussNodes[i]));
    }
    return sum;
}

}  // namespace

double FiberObservable::integrate(double x, double a, double b) const {
    if (fiber_integral) return fiber_integral(x, a, b);
    return gauss([&](double u) { return value(x, u); }, a, b);
}

FiberObservable observable_of_base(std::string id, std::function<double(double)> g) {
    FiberObservable o;
    o.id = std::move(id);
    o.value = [g](double x, double) { return g(x); };
    o.fiber_integral = [g](double x, double a, double b) { return (b - a) * g(x); };
    return o;
}

TimeDecomposition check_time_decomposition(const Semiflow& flow, const FiberObservable& psi, SuspensionState z,
                                           double T) {
    if (!(T >= 0.0)) throw DomainError("check_time_decomposition: T must be >= 0");
    TimeDecomposition out;
    // Direct side: quadrature of t -> psi(X^t z), split where the orbit jumps fibers.
    SuspensionState cur = z;
    double t = 0.0;
    while (t < T) {
        const double seg = std::min(flow.r(cur.x) - cur.s, T - t);
        const double t0 = t;
        out.direct += gauss(
            [&](double u) {
                const SuspensionState st = evolve(flow, z, u);
                return psi.value(st.x, st.s);
            },
            t0, t0 + seg);
        t += seg;
        if (t < T) cur = SuspensionState{map_step(flow.base, cur.x, nullptr), 0.0};
    }
    if (!std::isfinite(out.direct)) throw NumericError("check_time_decomposition: quadrature failure");

    // Decomposed side: S_n phi(x) + I(x, s, T).
    const LapResult lap = lap_number(flow, z.x, z.s, T);
    out.laps = lap.n;
    double x = z.x, sum = 0.0;
    for (std::size_t k = 0; k < lap.n; ++k) {
        sum += gauss([&](double u) { return psi.value(x, u); }, 0.0, flow.r(x));
        x = map_step(flow.base, x, nullptr);
    }
    const double tail = gauss([&](double u) { return psi.value(lap.x_n, u); }, 0.0, z.s + T - lap.partial_sum);
    const double head = gauss([&](double u) { return psi.value(z.x, u); }, 0.0, z.s);
    out.decomposed = sum + tail - head;
    out.residual = std::abs(out.direct - out.decomposed);
    return out;
}

// ---------------------------------------------------------------------------

double space_average(const Semiflow& flow, const FiberObservable& psi, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw DomainError("space_average: n must be > 0");
    Rng rng(seed);
    double x = random_point(flow.base, rng);
    for (int i = 0; i < 1000; ++i) x = map_step(flow.base, x, &rng);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (flow.roof.kind == RoofFunction::Kind::log_singular && x == flow.roof.singular_point) x += 1e-15;
        const double r = flow.r(x);
        num += psi.integrate(x, 0.0, r);
        den += r;
        x = map_step(flow.base, x, &rng);
    }
    return num / den;
}

namespace {

struct LebesgueSampler {
    double cap = 0.0;
    double capped_mass = 0.0;

    LebesgueSampler(const Semiflow& flow, std::uint64_t seed, double q) {
        Rng rng = substream(seed, 0xcafe);
        std::vector<double> r(100000);
        for (double& v : r) {
            double x = random_point(flow.base, rng);
            while (flow.roof.kind == RoofFunction::Kind::log_singular && x == flow.roof.singular_point)
                x = random_point(flow.base, rng);
            v = flow.r(x);
        }
        cap = quantile(r, q);
        double above = 0.0, total = 0.0;
        for (double v : r) {
            total += v;
            above += std::max(0.0, v - cap);
        }
        capped_mass = above / total;
    }

    SuspensionState draw(const Semiflow& flow, Rng& rng) const {
        while (true) {
            const double x = random_point(flow.base, rng);
            const double u = uniform01(rng) * cap;
            if (flow.roof.kind == RoofFunction::Kind::log_singular && x == flow.roof.singular_point) continue;
            if (u < flow.r(x)) return {x, u};
        }
    }
};

}  // namespace

DeviationCurve estimate_deviation_rate(const Semiflow& flow, const FiberObservable& psi, double nu_psi,
                                       double epsilon, const std::vector<double>& T_grid, std::size_t ensemble,
                                       std::uint64_t seed, std::size_t threads, double cap_quantile) {
    if (T_grid.empty() || !std::is_sorted(T_grid.begin(), T_grid.end()) || !(T_grid.front() > 0.0))
        throw DomainError("estimate_deviation_rate: T grid must be ascending and positive");
    if (!(epsilon > 0.0) || ensemble == 0) throw DomainError("estimate_deviation_rate: need epsilon > 0 and ensemble > 0");
    const LebesgueSampler sampler(flow, seed, cap_quantile);
    std::vector<std::vector<char>> dev(ensemble);
    parallel_for(ensemble, threads, [&](std::size_t i) {
        Rng rng = substream(seed, i + 1);
        const SuspensionState z = sampler.draw(flow, rng);
        double x = z.x;
        double acc = -psi.integrate(x, 0.0, z.s);
        double fiber_start = -z.s;
        auto& out = dev[i];
        out.assign(T_grid.size(), 0);
        for (std::size_t g = 0; g < T_grid.size(); ++g) {
            const double T = T_grid[g];
            while (true) {
                const double r = flow.r(x);
                if (!(fiber_start + r <= T)) break;
                acc += psi.integrate(x, 0.0, r);
                fiber_start += r;
                x = map_step(flow.base, x, &rng);
                if (flow.roof.kind == RoofFunction::Kind::log_singular && x == flow.roof.singular_point) x += 1e-15;
            }
            const double avg = (acc + psi.integrate(x, 0.0, T - fiber_start)) / T;
            out[g] = std::abs(avg - nu_psi) > epsilon ? 1 : 0;
        }
    });
    std::vector<double> frac(T_grid.size(), 0.0);
    for (std::size_t i = 0; i < ensemble; ++i)
        for (std::size_t g = 0; g < T_grid.size(); ++g) frac[g] += dev[i][g];
    for (double& f : frac) f /= static_cast<double>(ensemble);
    DeviationCurve c;
    c.curve = fit_rate(T_grid, frac, ensemble);
    c.epsilon = epsilon;
    c.nu_psi = nu_psi;
    c.observable = psi.id;
    c.roof_cap = sampler.cap;
    c.capped_mass = sampler.capped_mass;
    c.pass = c.curve.rate_is_floor || c.curve.rate < 0.0;
    return c;
}

EscapeReport escape_rate(const IntervalMap& map, const EscapeBox& k, const std::vector<std::size_t>& n_grid,
                         std::size_t ensemble, std::uint64_t seed) {
    if (n_grid.empty() || !std::is_sorted(n_grid.begin(), n_grid.end()) || ensemble == 0)
        throw DomainError("escape_rate: grid must be ascending and ensemble > 0");
    EscapeReport rep;
    {
        Rng rng = substream(seed, 0xbeef);
        double x = random_point(map, rng);
        for (int i = 0; i < 1000; ++i) x = map_step(map, x, &rng);
        const std::size_t n_occ = 1000000;
        std::size_t inside = 0;
        for (std::size_t i = 0; i < n_occ; ++i) {
            inside += k.contains_x(x) ? 1 : 0;
            x = map_step(map, x, &rng);
        }
        rep.occupancy = static_cast<double>(inside) / static_cast<double>(n_occ);
    }
    rep.applicable = rep.occupancy < 0.999;
    std::vector<std::size_t> stay(n_grid.size(), 0);
    for (std::size_t i = 0; i < ensemble; ++i) {
        Rng rng = substream(seed, i + 1);
        double x = random_point(map, rng);
        std::size_t g = 0;
        for (std::size_t n = 0; g < n_grid.size(); ++n) {
            if (!k.contains_x(x)) break;
            while (g < n_grid.size() && n_grid[g] == n) {
                ++stay[g];
                ++g;
            }
            x = map_step(map, x, &rng);
        }
    }
    std::vector<double> grid, frac;
    for (std::size_t g = 0; g < n_grid.size(); ++g) {
        grid.push_back(static_cast<double>(n_grid[g]));
        frac.push_back(static_cast<double>(stay[g]) / static_cast<double>(ensemble));
    }
    rep.curve = fit_rate(grid, frac, ensemble);
    rep.pass = rep.applicable && (rep.curve.rate_is_floor || rep.curve.rate < 0.0);
    return rep;
}

EscapeReport escape_rate(const Semiflow& flow, const EscapeBox& k, const std::vector<double>& T_grid,
                         std::size_t ensemble, std::uint64_t seed, std::size_t threads) {
    if (T_grid.empty() || !std::is_sorted(T_grid.begin(), T_grid.end()) || ensemble == 0)
        throw DomainError("escape_rate: grid must be ascending and ensemble > 0");
    auto fiber_inside = [&](double x, double a, double b) {
        return k.contains_x(x) && a >= k.s_lo && b <= k.s_hi;
    };
    EscapeReport rep;
    {
        Rng rng = substream(seed, 0xbeef);
        double x = random_point(flow.base, rng);
        for (int i = 0; i < 1000; ++i) x = map_step(flow.base, x, &rng);
        double in = 0.0, total = 0.0;
        for (int i = 0; i < 200000; ++i) {
            if (flow.roof.kind == RoofFunction::Kind::log_singular && x == flow.roof.singular_point) x += 1e-15;
            const double r = flow.r(x);
            if (k.contains_x(x)) in += std::max(0.0, std::min(r, k.s_hi) - std::max(0.0, k.s_lo));
            total += r;
            x = map_step(flow.base, x, &rng);
        }
        rep.occupancy = in / total;
    }
    rep.applicable = rep.occupancy < 0.999;
    const LebesgueSampler sampler(flow, seed, 0.999);
    std::vector<std::vector<char>> stay(ensemble);
    parallel_for(ensemble, threads, [&](std::size_t i) {
        Rng rng = substream(seed, i + 1);
        SuspensionState z = sampler.draw(flow, rng);
        auto& out = stay[i];
        out.assign(T_grid.size(), 0);
        double x = z.x, a = z.s, fiber_start = -z.s;
        std::size_t g = 0;
        while (g < T_grid.size()) {
            const double r = flow.r(x);
            const double end = fiber_start + r;
            // Stays up to every grid time inside this fiber if the visited part is in K.
            while (g < T_grid.size() && T_grid[g] < end) {
                if (!fiber_inside(x, a, T_grid[g] - fiber_start)) return;
                out[g++] = 1;
            }
            if (g == T_grid.size() || !fiber_inside(x, a, r)) return;
            fiber_start = end;
            a = 0.0;
            x = map_step(flow.base, x, &rng);
            if (flow.roof.kind == RoofFunction::Kind::log_singular && x == flow.roof.singular_point) x += 1e-15;
        }
    });
    std::vector<double> frac(T_grid.size(), 0.0);
    for (std::size_t i = 0; i < ensemble; ++i)
        for (std::size_t g = 0; g < T_grid.size(); ++g) frac[g] += stay[i][g];
    for (double& f : frac) f /= static_cast<double>(ensemble);
    rep.curve = fit_rate(T_grid, frac, ensemble);
    rep.pass = rep.applicable && (rep.curve.rate_is_floor || rep.curve.rate < 0.0);
    return rep;
}

}  // namespace singlab
