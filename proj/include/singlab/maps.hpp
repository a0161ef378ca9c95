#pragma once

// One-dimensional interval maps used as base dynamics: the doubling and tent
// maps (analytic references), the quotient map of the geometric Lorenz model,
// and a contracting map with an attracting fixed point.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "singlab/geolorenz.hpp"
#include "singlab/types.hpp"

namespace singlab {

struct IntervalMap {
    std::string name;
    double lo = 0.0;
    double hi = 1.0;
    std::function<double(double)> f;
    std::function<double(double)> df;
    // Points where the map is undefined or discontinuous (the set S).
    std::vector<double> singular;
    // Piecewise-linear with slope 2: iterates stay on the 2^-53 grid and lose
    // one random bit per step in floating point, so orbits are refreshed.
    bool dyadic = false;
    std::optional<double> entropy;

    double apply(double x) const { return f(x); }
    double derivative(double x) const { return df(x); }
    double width() const { return hi - lo; }
    bool contains(double x) const { return lo <= x && x <= hi; }
    double distance_to_singular(double x) const;
};

// x -> 2x mod 1 on [0, 1).
IntervalMap doubling_map();
// x -> 1 - |2x - 1| on [0, 1].
IntervalMap tent_map();
// f of the geometric Lorenz model on [-1, 1], singular at 0.
IntervalMap lorenz_quotient_map(const geolorenz::QuotientMapSpec& spec = {});
// x -> rate * x on [0, 1], attracting fixed point at 0.
IntervalMap contracting_map(double rate = 0.5);

// Looks up a map by name ("doubling", "tent", "geolorenz", "contracting").
IntervalMap make_map(const std::string& name);

// One step of the map as iterated numerically. For dyadic maps a fresh random
// bit is appended at 2^-53; points on the singular set are nudged off it and
// counted. Without an rng the step is the plain map.
double map_step(const IntervalMap& map, double x, Rng* rng, std::size_t* singular_hits = nullptr);

// Uniform random point of the domain.
double random_point(const IntervalMap& map, Rng& rng);

// x_0 .. x_{n-1} starting from x0.
std::vector<double> map_orbit(const IntervalMap& map, double x0, std::size_t n, Rng& rng,
                              std::size_t* singular_hits = nullptr);

}  // namespace singlab
