#pragma once

// Finite-sample evidence for sensitive dependence, future/past chaoticity with
// a constant r, and a falsifier for expansiveness under monotone time
// reparametrisations.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "singlab/flowcore.hpp"
#include "singlab/geolorenz.hpp"
#include "singlab/sections.hpp"
#include "singlab/types.hpp"

namespace singlab {

enum class Direction { future, past, both };

std::string to_string(Direction d);

struct ChaoticityConfig {
    double r = 0.2;  // separation constant, ambient distance
    double probe_radius = 1e-6;
    std::size_t probes = 8;
    double horizon = 200.0;
    Direction direction = Direction::both;
    // Grid on which pair distances are compared.
    double sample_dt = 0.01;

    // Throws DomainError unless everything is positive and probe_radius < r.
    void validate() const;
};

struct SeparationEvent {
    Vec3 x = Vec3::Zero();
    Vec3 y = Vec3::Zero();
    // Signed: negative for past events.
    double time = 0.0;
    double distance = 0.0;
    Direction direction = Direction::future;
    // Past events of the geometric model: number of laps back to the witness time.
    std::size_t laps = 0;
};

enum class Verdict { chaotic_evidence, fail, no_verdict };

std::string to_string(Verdict v);

struct SeedOutcome {
    std::optional<SeparationEvent> future;
    std::optional<SeparationEvent> past;
    // Every unseparated probe was still spreading at the horizon.
    bool censored = false;
    bool passed = false;
};

// Monte Carlo volume fractions of the forward-trapped set (orbits staying in
// U for all t > 0) and the backward-trapped set. Both below 1e-3 rules out
// the non-chaotic alternative.
struct TrappedVolume {
    double forward_fraction = 0.0;
    double backward_fraction = 0.0;
    std::size_t samples = 0;
    double horizon = 0.0;
    bool corroborates = false;
};

struct ChaoticityReport {
    Verdict verdict = Verdict::no_verdict;
    std::vector<SeedOutcome> seeds;
    std::vector<std::size_t> failures;  // indices of un-separated seeds
    double pass_fraction = 0.0;
    std::size_t probes_used = 0;
    ChaoticityConfig cfg;
    std::optional<TrappedVolume> volume;
};

// Probes of the flow of `field` from each seed; past probes follow -X.
ChaoticityReport test_chaoticity(const VectorField& field, const std::vector<Vec3>& seeds,
                                 const ChaoticityConfig& cfg, const IntegratorConfig& icfg, std::uint64_t seed,
                                 std::size_t threads = 1);

// Seeds are points of the cross-section S. Future probes are simulated
// directly; past probes are points on the stable leaf of an ancestor of the
// seed, pushed forward into the probe ball.
ChaoticityReport test_chaoticity(const geolorenz::GeoLorenzParams& p, const std::vector<Vec2>& seeds,
                                 const ChaoticityConfig& cfg, const IntegratorConfig& icfg, std::uint64_t seed,
                                 std::size_t threads = 1);

// Distance of the pair at the event time, recomputed from scratch.
double replay_separation(const VectorField& field, const SeparationEvent& ev, const IntegratorConfig& icfg);
double replay_separation(const geolorenz::GeoLorenzParams& p, const SeparationEvent& ev,
                         const IntegratorConfig& icfg);

// U is the box [lo, hi].
TrappedVolume trapped_volume(const VectorField& field, const Vec3& lo, const Vec3& hi, std::size_t samples,
                             double horizon, const IntegratorConfig& icfg, std::uint64_t seed);
// U is the cross-section; orbits are followed `laps` returns either way.
TrappedVolume trapped_volume(const geolorenz::GeoLorenzParams& p, std::size_t samples, std::size_t laps,
                             std::uint64_t seed);

// -- backward separation on stable leaves -------------------------------------

struct LeafPair {
    double x = 0.5;
    double y1 = 0.0;
    double y2 = 0.0;
};

struct BackwardSeparation {
    std::vector<std::size_t> steps;  // backward steps to reach r, horizon + 1 if never
    std::vector<double> rates;       // fitted growth rate of log leaf distance per step
    double min_rate = 0.0;
    double rate_bound = 0.0;  // log(1 / c_y) - 0.1
    bool all_separated = false;
    bool pass = false;
};

// Iterates the branch inverses of the return map backwards from each pair
// (the branch side drawn from `seed`) and tracks |y1 - y2|.
BackwardSeparation backward_separation_check(const geolorenz::GeoLorenzParams& p, const std::vector<LeafPair>& pairs,
                                             double r, std::size_t horizon, std::uint64_t seed);

// -- expansiveness ------------------------------------------------------------

// Increasing piecewise-linear h given by its breakpoints (t, h(t)).
struct ReparamPath {
    std::vector<std::pair<double, double>> breakpoints;

    // Strictly increasing with every slope in [1/L, L].
    bool valid(double L) const;
};

// An orbit segment cut at its section hits; hits[0] = 0 is the start.
struct SectionOrbit {
    std::vector<double> hits;
    std::function<Vec3(double)> position;
};

struct AlignmentOptions {
    double L = 4.0;
    std::size_t max_skip = 3;
    // Largest |i - j| of matched hit indices.
    std::size_t band = 8;
    std::size_t samples_per_segment = 16;
    std::uint64_t budget = 100'000'000;  // DP transitions
};

struct Alignment {
    double max_distance = 0.0;
    ReparamPath path;
    std::uint64_t transitions = 0;
    bool exhausted = false;
};

// Smallest achievable max_t dist(a(t), b(h(t))) over paths whose breakpoints
// match section hits of a and b; the path may start among the first and end
// among the last max_skip hits of each.
Alignment align_orbits(const SectionOrbit& a, const SectionOrbit& b, const AlignmentOptions& opts);

SectionOrbit geolorenz_orbit(const geolorenz::GeoLorenzParams& p, const geolorenz::FlowState& st, double horizon,
                             bool backward = false);
SectionOrbit field_orbit(const VectorField& field, const CrossSection& section, const Vec3& x0, double horizon,
                         const IntegratorConfig& icfg, bool backward = false);

struct ExpansivenessConfig {
    double epsilon = 0.05;  // time window of the same-orbit exclusion
    double delta = 1e-3;
    double horizon = 50.0;
    std::size_t pairs = 50;
    AlignmentOptions align{};

    void validate() const;
};

enum class PairClass { separation_certificate, near_counterexample, same_orbit };

std::string to_string(PairClass c);

struct PairResult {
    Vec3 x = Vec3::Zero();
    Vec3 y = Vec3::Zero();
    PairClass cls = PairClass::separation_certificate;
    double max_distance = 0.0;
    ReparamPath path;
    bool partial = false;  // the alignment budget ran out
};

struct ExpansivenessReport {
    std::vector<PairResult> pairs;
    std::size_t certificates = 0;
    std::size_t near_counterexamples = 0;
    std::size_t excluded = 0;
    double certificate_fraction = 0.0;  // over non-excluded pairs
    std::uint64_t transitions = 0;
    bool partial = false;
    ExpansivenessConfig cfg;
};

// Pairs (x, y) with x from `starts` and |y - x| = delta / 2.
ExpansivenessReport falsify_expansiveness(const VectorField& field, const CrossSection& section,
                                          const std::vector<Vec3>& starts, const ExpansivenessConfig& cfg,
                                          const IntegratorConfig& icfg, std::uint64_t seed, std::size_t threads = 1);

// Pairs on the cross-section S: x from the attractor, y a delta / 2 perturbation.
ExpansivenessReport falsify_expansiveness(const geolorenz::GeoLorenzParams& p, const ExpansivenessConfig& cfg,
                                          std::uint64_t seed, std::size_t threads = 1);

// Classifies one pair of orbits given forward and backward pieces of each.
PairResult classify_pair(const SectionOrbit& x_fwd, const SectionOrbit& x_bwd, const SectionOrbit& y_fwd,
                         const SectionOrbit& y_bwd, const ExpansivenessConfig& cfg, std::uint64_t* transitions = nullptr);

}  // namespace singlab
