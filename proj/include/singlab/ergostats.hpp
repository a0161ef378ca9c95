#pragma once

// Birkhoff averages, box-counted physical measures, Lyapunov exponents, the
// entropy formula on analytic references, and decay of correlations.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "singlab/fit.hpp"
#include "singlab/flowcore.hpp"
#include "singlab/maps.hpp"

namespace singlab {

// (1/n) sum phi(x_i) along the orbit of x0 (x_0 .. x_{n-1}).
double birkhoff_average(const IntervalMap& map, const std::function<double(double)>& phi, double x0,
                        std::size_t n, Rng& rng);

// (1/T) int_0^T phi(x(t)) dt over the whole trajectory, Simpson's rule on each
// step with the Hermite midpoint.
double birkhoff_average(const Trajectory& traj, const std::function<double(const Vec3&)>& phi);

struct EmpiricalMeasure {
    double lo = 0.0;
    double hi = 1.0;
    std::vector<std::size_t> counts;
    std::size_t total = 0;
    std::size_t burn_in = 0;
    std::uint64_t seed = 0;

    std::size_t bins() const { return counts.size(); }
    double box_size() const { return (hi - lo) / static_cast<double>(counts.size()); }
    double mass(std::size_t i) const { return static_cast<double>(counts[i]) / static_cast<double>(total); }
    std::vector<double> masses() const;
};

// Histogram of x_burn_in .. x_{n-1} started from a uniform random point.
// Throws NumericError if the orbit leaves [map.lo, map.hi].
EmpiricalMeasure estimate_measure(const IntervalMap& map, std::size_t n, std::size_t burn_in, std::size_t bins,
                                  std::uint64_t seed);

// Histogram of given samples on [lo, hi].
EmpiricalMeasure histogram(const std::vector<double>& samples, double lo, double hi, std::size_t bins);

// (1/2) sum |p_i - q_i|.
double total_variation(const std::vector<double>& p, const std::vector<double>& q);

struct LyapunovEstimate {
    Vec3 exponents = Vec3::Zero();  // descending
    double time = 0.0;
    double reortho_interval = 0.0;
    // max |exponents(T) - exponents(T/2)|
    double spread = 0.0;
};

// Benettin/QR estimate from integrate_with_tangent with a random initial
// basis drawn from `seed`. Requires T >= 100 reortho intervals.
LyapunovEstimate lyapunov_spectrum(const VectorField& field, const Vec3& x0, double T, const IntegratorConfig& cfg,
                                   std::uint64_t seed, const TangentOptions& opts = {});

// Birkhoff average of log|f'| after burn_in steps.
double map_lyapunov(const IntervalMap& map, std::size_t n, std::uint64_t seed, std::size_t burn_in = 1000);

struct EntropyFormulaReport {
    std::optional<double> entropy;  // analytic metric entropy, when known
    double integral = 0.0;          // int log|f'| dmu, first seed
    double integral_second = 0.0;   // same with the second seed
    double gap = 0.0;               // |entropy - integral| or the seed gap when no reference exists
    bool pass = false;
};

EntropyFormulaReport check_entropy_formula(const IntervalMap& map, std::size_t n, std::uint64_t seed1,
                                           std::uint64_t seed2, double tolerance = 0.01);

struct CorrelationEstimate {
    std::vector<std::size_t> lags;
    std::vector<double> values;  // |C(n)|
    std::vector<double> signed_values;
    double noise_floor = 0.0;
    double variance_f = 0.0;
    double variance_g = 0.0;
    ScalingFit fit;              // log C(n) against n on lags above the noise floor
    double rate = 0.0;           // decay rate lambda = -slope
    bool rate_is_floor = false;  // every positive lag was below the noise floor
};

// C(n) = |(1/N) sum g(x_{i+n}) f(x_i) - mean(g) mean(f)| along one orbit of N
// points after burn_in, for n = 0..max_lag.
CorrelationEstimate correlation_decay(const IntervalMap& map, const std::function<double(double)>& f,
                                      const std::function<double(double)>& g, std::size_t max_lag, std::size_t n,
                                      std::uint64_t seed, std::size_t burn_in = 1000);

}  // namespace singlab
