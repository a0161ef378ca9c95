#include "singlab/maps.hpp"

#include <cmath>
#include <limits>

namespace singlab {

double IntervalMap::distance_to_singular(double x) const {
    double d = std::numeric_limits<double>::infinity();
    for (double s : singular) d = std::min(d, std::abs(x - s));
    return d;
}

IntervalMap doubling_map() {
    IntervalMap m;
    m.name = "doubling";
    m.lo = 0.0;
    m.hi = 1.0;
    m.f = [](double x) {
        const double y = 2.0 * x;
        return y >= 1.0 ? y - 1.0 : y;
    };
    m.df = [](double) { return 2.0; };
    m.singular = {0.5};
    m.dyadic = true;
    m.entropy = std::log(2.0);
    return m;
}

IntervalMap tent_map() {
    IntervalMap m;
    m.name = "tent";
    m.f = [](double x) { return 1.0 - std::abs(2.0 * x - 1.0); };
    m.df = [](double x) { return x < 0.5 ? 2.0 : -2.0; };
    m.singular = {0.5};
    m.dyadic = true;
    m.entropy = std::log(2.0);
    return m;
}

IntervalMap lorenz_quotient_map(const geolorenz::QuotientMapSpec& spec) {
    IntervalMap m;
    m.name = "geolorenz";
    m.lo = -1.0;
    m.hi = 1.0;
    m.f = [spec](double x) { return geolorenz::quotient_map(spec, x); };
    m.df = [spec](double x) { return geolorenz::quotient_deriv(spec, x); };
    m.singular = {0.0};
    return m;
}

IntervalMap contracting_map(double rate) {
    if (!(rate > 0.0 && rate < 1.0)) throw DomainError("contracting_map: rate must lie in (0, 1)");
    IntervalMap m;
    m.name = "contracting";
    m.f = [rate](double x) { return rate * x; };
    m.df = [rate](double) { return rate; };
    m.entropy = 0.0;
    return m;
}

IntervalMap make_map(const std::string& name) {
    if (name == "doubling") return doubling_map();
    if (name == "tent") return tent_map();
    if (name == "geolorenz") return lorenz_quotient_map();
    if (name == "contracting") return contracting_map();
    throw DomainError("unknown map '" + name + "'");
}

double map_step(const IntervalMap& map, double x, Rng* rng, std::size_t* singular_hits) {
    if (!map.dyadic) {
        for (double s : map.singular) {
            if (x == s) {
                if (singular_hits) ++*singular_hits;
                x = s + 1e-15;
            }
        }
        return map.f(x);
    }
    double y = map.f(x);
    if (rng) {
        const double refreshed = y + static_cast<double>((*rng)() >> 63) * 0x1.0p-53;
        if (refreshed < map.hi) y = refreshed;
    }
    return y;
}

double random_point(const IntervalMap& map, Rng& rng) {
    return map.lo + map.width() * uniform01(rng);
}

std::vector<double> map_orbit(const IntervalMap& map, double x0, std::size_t n, Rng& rng,
                              std::size_t* singular_hits) {
    std::vector<double> out;
    out.reserve(n);
    double x = x0;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(x);
        if (i + 1 < n) x = map_step(map, x, &rng, singular_hits);
    }
    return out;
}

}  // namespace singlab
