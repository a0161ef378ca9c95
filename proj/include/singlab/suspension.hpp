#pragma once

// Suspension semiflows over interval maps: X^t(x, s) = (x_n, s + t - S_n r(x)),
// with roof r either constant or logarithmically singular at a point. Also
// non-uniform expansion and slow recurrence diagnostics of the base map, the
// induced invariant measure, and large-deviation / escape-rate estimates.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "singlab/dimlab.hpp"
#include "singlab/fit.hpp"
#include "singlab/maps.hpp"

namespace singlab {

struct RoofFunction {
    enum class Kind { constant, log_singular };
    Kind kind = Kind::constant;
    // Constant value, or the floor r0 of r(x) = r0 - log|x - singular_point| / lambda1.
    double r0 = 1.0;
    double lambda1 = 11.83;
    double singular_point = 0.0;

    static RoofFunction constant(double value);
    static RoofFunction log_singular(double r0, double lambda1, double singular_point = 0.0);

    // K_log in r <= K_log |log d(x, S)| near S.
    double k_log() const { return kind == Kind::log_singular ? 1.0 / lambda1 : 0.0; }
};

// Throws DomainError on the singular point of a log roof.
double roof_eval(const RoofFunction& roof, double x);

struct Semiflow {
    IntervalMap base;
    RoofFunction roof;

    double r(double x) const { return roof_eval(roof, x); }
    // Builds "doubling" with roof 1 or "geolorenz" with the log roof (r0, lambda1).
    static Semiflow constant_roof(const IntervalMap& base, double value = 1.0);
    static Semiflow lorenz(double r0 = 1.0, double lambda1 = 11.83, const geolorenz::QuotientMapSpec& q = {});
};

struct SuspensionState {
    double x = 0.0;
    double s = 0.0;
};

struct LapResult {
    std::size_t n = 0;
    double partial_sum = 0.0;  // S_n r(x)
    double x_n = 0.0;
};

// Largest n with S_n r(x) <= s + T; n = 0 for T = 0, s = 0.
LapResult lap_number(const Semiflow& flow, double x, double s, double T, Rng* rng = nullptr);

// X^t(state); the base step uses map_step (dyadic refresh only with rng).
// Throws DomainError for an invalid state, NumericError if the fiber
// invariant 0 <= s < r(x) fails on output.
SuspensionState evolve(const Semiflow& flow, SuspensionState state, double t, Rng* rng = nullptr,
                       std::size_t* singular_hits = nullptr);

// The semiflow drawn in the (x, s) plane (z = 0), for hitting-time searches.
class SuspensionFlowOrbit : public FlowOrbit {
public:
    SuspensionFlowOrbit(const Semiflow& flow, SuspensionState st, std::uint64_t seed)
        : flow_(&flow), st_(st), rng_(seed) {}
    Vec3 position() const override { return {st_.x, st_.s, 0.0}; }
    double speed_bound() const override { return 1.0; }
    double time_to_break() const override { return flow_->r(st_.x) - st_.s; }
    void advance(double dt) override;
    std::unique_ptr<FlowOrbit> clone() const override { return std::make_unique<SuspensionFlowOrbit>(*this); }
    const SuspensionState& state() const { return st_; }

private:
    const Semiflow* flow_;
    SuspensionState st_;
    Rng rng_;
};

// -- base-map diagnostics ----------------------------------------------------

struct NueReport {
    std::vector<double> averages;  // (1/n) S_n psi per orbit, psi = log |1/f'|
    double p99 = 0.0;
    double c = 0.0;  // -p99
    bool pass = false;
};

NueReport check_nue(const IntervalMap& map, std::size_t n, std::size_t ensemble, std::uint64_t seed);

struct RateFit {
    std::vector<double> grid;       // n or T values
    std::vector<double> fractions;  // measured fractions per grid value
    ScalingFit fit;                 // log fraction against grid value
    double rate = 0.0;              // slope
    bool rate_is_floor = false;     // no positive fraction to fit
    std::size_t ensemble = 0;
};

// Fits log(fraction) against the grid on fractions in [5/N, 0.5] (all positive
// fractions below 1 if fewer than two qualify).
RateFit fit_rate(std::vector<double> grid, std::vector<double> fractions, std::size_t ensemble);

struct SlowRecurrenceReport {
    RateFit curve;
    double delta = 0.0;
    double epsilon = 0.0;
    bool pass = false;
};

// Lebesgue measure of {(1/n) S_n |log d_delta(x, S)| > epsilon} per n, with
// d_delta = dist if dist < delta and 1 otherwise. An empty `singular` set gives
// d_delta = 1.
SlowRecurrenceReport check_slow_recurrence(const IntervalMap& map, const std::vector<double>& singular, double delta,
                                           double epsilon, const std::vector<std::size_t>& n_grid,
                                           std::size_t ensemble, std::uint64_t seed);

// -- induced measure and time decomposition ----------------------------------

// (x, s) with x drawn from `base_samples` with weight r(x) and s uniform on
// [0, r(x)). Throws NumericError if one sample carries over 10% of the total
// roof mass (empirically divergent r-moment).
std::vector<SuspensionState> sample_induced_measure(const Semiflow& flow, const std::vector<double>& base_samples,
                                                    std::size_t n, Rng& rng);

// Observable psi(x, s) on the suspension; `fiber_integral(x, a, b)` is
// int_a^b psi(x, u) du when known in closed form.
struct FiberObservable {
    std::string id;
    std::function<double(double, double)> value;
    std::function<double(double, double, double)> fiber_integral;

    double integrate(double x, double a, double b) const;
};

// psi(x, s) = g(x).
FiberObservable observable_of_base(std::string id, std::function<double(double)> g);

struct TimeDecomposition {
    double direct = 0.0;  // int_0^T psi(X^t z) dt by quadrature along evolve
    double decomposed = 0.0;  // S_n phi(x) + I(x, s, T)
    double residual = 0.0;
    std::size_t laps = 0;
};

TimeDecomposition check_time_decomposition(const Semiflow& flow, const FiberObservable& psi, SuspensionState z,
                                           double T);

// -- large deviations and escape ---------------------------------------------

// nu(psi) = int phi dmu / int r dmu along one orbit of n base steps.
double space_average(const Semiflow& flow, const FiberObservable& psi, std::size_t n, std::uint64_t seed);

struct DeviationCurve {
    RateFit curve;
    double epsilon = 0.0;
    double nu_psi = 0.0;
    std::string observable;
    double roof_cap = 0.0;
    double capped_mass = 0.0;  // Leb x Leb mass above the roof cap
    bool pass = false;
};

// Fraction of starts, drawn from Leb x Leb restricted under a roof cap at the
// cap_quantile of r, with |(1/T) int_0^T psi - nu_psi| > epsilon, per T.
DeviationCurve estimate_deviation_rate(const Semiflow& flow, const FiberObservable& psi, double nu_psi,
                                       double epsilon, const std::vector<double>& T_grid, std::size_t ensemble,
                                       std::uint64_t seed, std::size_t threads = 1, double cap_quantile = 0.999);

struct EscapeBox {
    double x_lo = 0.0;
    double x_hi = 1.0;
    double s_lo = 0.0;
    double s_hi = 1e300;
    // Test |x| instead of x against [x_lo, x_hi].
    bool symmetric = false;

    bool contains_x(double x) const {
        const double v = symmetric ? std::abs(x) : x;
        return x_lo <= v && v <= x_hi;
    }
};

struct EscapeReport {
    RateFit curve;
    double occupancy = 0.0;  // mu(K) or nu(K) from a long orbit
    bool applicable = false;
    bool pass = false;
};

// Map version: fraction of Lebesgue starts with x_0..x_n in K.
EscapeReport escape_rate(const IntervalMap& map, const EscapeBox& k, const std::vector<std::size_t>& n_grid,
                         std::size_t ensemble, std::uint64_t seed);

// Semiflow version: fraction of Leb x Leb starts (under the roof cap) whose
// orbit stays in K up to T.
EscapeReport escape_rate(const Semiflow& flow, const EscapeBox& k, const std::vector<double>& T_grid,
                         std::size_t ensemble, std::uint64_t seed, std::size_t threads = 1);

}  // namespace singlab
