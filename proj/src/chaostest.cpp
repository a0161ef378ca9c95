#include "singlab/chaostest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "singlab/fit.hpp"
#include "singlab/parallel.hpp"

namespace singlab {

namespace gl = geolorenz;

std::string to_string(Direction d) {
    switch (d) {
        case Direction::future: return "future";
        case Direction::past: return "past";
        case Direction::both: return "both";
    }
    return "?";
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::chaotic_evidence: return "chaotic-evidence";
        case Verdict::fail: return "fail";
        case Verdict::no_verdict: return "no-verdict";
    }
    return "?";
}

std::string to_string(PairClass c) {
    switch (c) {
        case PairClass::separation_certificate: return "separation-certificate";
        case PairClass::near_counterexample: return "near-counterexample";
        case PairClass::same_orbit: return "same-orbit";
    }
    return "?";
}

void ChaoticityConfig::validate() const {
    if (!(r > 0.0 && probe_radius > 0.0 && horizon > 0.0 && sample_dt > 0.0) || probes == 0)
        throw DomainError("ChaoticityConfig: r, probe_radius, probes, horizon and sample_dt must be positive");
    if (!(probe_radius < r)) throw DomainError("ChaoticityConfig: probe_radius must be < r");
}

void ExpansivenessConfig::validate() const {
    if (!(epsilon > 0.0 && delta > 0.0 && horizon > 0.0) || pairs == 0)
        throw DomainError("ExpansivenessConfig: epsilon, delta, horizon and pairs must be positive");
    if (!(delta < epsilon)) throw DomainError("ExpansivenessConfig: delta must be < epsilon");
    if (!(align.L >= 1.0) || align.max_skip == 0 || align.samples_per_segment == 0)
        throw DomainError("ExpansivenessConfig: need L >= 1, max_skip >= 1, samples_per_segment >= 1");
}

namespace {

constexpr double kChunk = 1.0;
constexpr double kGeoChunk = 10.0;
constexpr double kEscape = 1e8;

bool wants_future(Direction d) { return d != Direction::past; }
bool wants_past(Direction d) { return d != Direction::future; }

void shift_times(Trajectory& tr, double offset) {
    for (double& t : tr.times) t += offset;
}

void extend_field(const VectorField& f, Trajectory& tr, const Vec3& x0, double until, const IntegratorConfig& icfg) {
    if (tr.empty()) {
        tr = integrate(f, x0, std::min(kChunk, until), icfg);
    }
    while (tr.end_time() < until) {
        Trajectory piece = integrate(f, tr.states.back(), std::min(kChunk, until - tr.end_time()), icfg);
        shift_times(piece, tr.end_time());
        tr.append(piece);
    }
}

void extend_geo(const gl::GeoLorenzParams& p, Trajectory& tr, const Vec2& base, double until,
                const IntegratorConfig& icfg) {
    if (tr.empty()) tr = gl::simulate_flow(p, base, kGeoChunk, icfg);
    while (tr.end_time() < until) {
        const Vec3& last = tr.states.back();
        Trajectory piece = gl::simulate_flow(p, Vec2(last.x(), last.y()), kGeoChunk, icfg);
        shift_times(piece, tr.end_time());
        tr.append(piece);
    }
}

struct ProbeResult {
    std::optional<SeparationEvent> event;
    bool spreading = false;
};

// Compares two lazily extended trajectories on the sample grid.
template <typename Extend>
ProbeResult compare_pair(Trajectory& tx, Trajectory& ty, Extend&& extend, const ChaoticityConfig& cfg,
                         double d0) {
    ProbeResult res;
    double d = d0;
    const auto n = static_cast<std::size_t>(std::floor(cfg.horizon / cfg.sample_dt + 1e-9));
    double covered = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
        const double t = static_cast<double>(k) * cfg.sample_dt;
        if (t > covered) {
            covered = std::min(cfg.horizon, covered + kChunk);
            if (covered < t) covered = t;
            extend(tx, ty, covered);
        }
        const Vec3 a = tx.at(t), b = ty.at(t);
        if (!a.allFinite() || !b.allFinite() || a.norm() > kEscape || b.norm() > kEscape) return res;
        d = (a - b).norm();
        if (d >= cfg.r) {
            SeparationEvent ev;
            ev.time = t;
            ev.distance = d;
            res.event = ev;
            return res;
        }
    }
    res.spreading = d > 2.0 * d0;
    return res;
}

Vec3 random_unit(Rng& rng) {
    Vec3 v(normal01(rng), normal01(rng), normal01(rng));
    return v / v.norm();
}

ProbeResult field_probe(const VectorField& f, const Vec3& x0, const Vec3& y0, const ChaoticityConfig& cfg,
                        const IntegratorConfig& icfg) {
    Trajectory tx, ty;
    auto extend = [&](Trajectory& a, Trajectory& b, double until) {
        extend_field(f, a, x0, until, icfg);
        extend_field(f, b, y0, until, icfg);
    };
    return compare_pair(tx, ty, extend, cfg, (x0 - y0).norm());
}

ProbeResult geo_future_probe(const gl::GeoLorenzParams& p, const Vec2& x0, const Vec2& y0,
                             const ChaoticityConfig& cfg, const IntegratorConfig& icfg) {
    Trajectory tx, ty;
    auto extend = [&](Trajectory& a, Trajectory& b, double until) {
        extend_geo(p, a, x0, until, icfg);
        extend_geo(p, b, y0, until, icfg);
    };
    return compare_pair(tx, ty, extend, cfg, (x0 - y0).norm());
}

// Walks back along the ancestors of `b`; at each depth k the point at leaf
// distance delta0 from the ancestor is pushed forward k laps, and accepted
// once it lands in the probe ball.
ProbeResult geo_past_probe(const gl::GeoLorenzParams& p, const Vec2& b, const ChaoticityConfig& cfg) {
    ProbeResult res;
    const double delta0 = std::max(0.25, 1.25 * cfg.r);
    if (delta0 > 1.0) return res;
    Vec2 a = b;
    double back = 0.0;
    for (std::size_t k = 1;; ++k) {
        const std::optional<Vec2> pre = gl::inverse_return_map(p, a);
        if (!pre) return res;
        a = *pre;
        back += gl::return_time(p, a);
        if (back > cfg.horizon) {
            res.spreading = true;
            return res;
        }
        const double dir = a.y() + delta0 <= 1.0 ? 1.0 : -1.0;
        Vec2 y(a.x(), a.y() + dir * delta0);
        for (std::size_t j = 0; j < k; ++j) y = gl::return_map(p, y);
        if ((y - b).norm() <= cfg.probe_radius) {
            SeparationEvent ev;
            ev.x = Vec3(b.x(), b.y(), 1.0);
            ev.y = Vec3(y.x(), y.y(), 1.0);
            ev.time = -back;
            ev.distance = delta0;
            ev.direction = Direction::past;
            ev.laps = k;
            res.event = ev;
            return res;
        }
    }
}

ChaoticityReport summarise(std::vector<SeedOutcome> outcomes, const ChaoticityConfig& cfg, std::size_t probes) {
    ChaoticityReport rep;
    rep.cfg = cfg;
    rep.probes_used = probes;
    std::size_t passed = 0;
    bool all_censored = true;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (outcomes[i].passed) {
            ++passed;
            all_censored = false;
        } else {
            rep.failures.push_back(i);
            all_censored = all_censored && outcomes[i].censored;
        }
    }
    rep.pass_fraction = outcomes.empty() ? 0.0 : static_cast<double>(passed) / static_cast<double>(outcomes.size());
    if (passed == 0 && all_censored) rep.verdict = Verdict::no_verdict;
    else rep.verdict = rep.failures.empty() ? Verdict::chaotic_evidence : Verdict::fail;
    rep.seeds = std::move(outcomes);
    return rep;
}

}  // namespace

ChaoticityReport test_chaoticity(const VectorField& field, const std::vector<Vec3>& seeds,
                                 const ChaoticityConfig& cfg, const IntegratorConfig& icfg, std::uint64_t seed,
                                 std::size_t threads) {
    cfg.validate();
    if (seeds.empty()) throw DomainError("test_chaoticity: no seed points");
    std::vector<SeedOutcome> out(seeds.size());
    std::vector<std::size_t> used(seeds.size(), 0);
    parallel_for(seeds.size(), threads, [&](std::size_t i) {
        Rng rng = substream(seed, i);
        SeedOutcome& o = out[i];
        bool censored = true;
        auto run = [&](const VectorField& f, Direction dir) -> std::optional<SeparationEvent> {
            bool spreading = true;
            for (std::size_t k = 0; k < cfg.probes; ++k) {
                ++used[i];
                const Vec3 y0 = seeds[i] + cfg.probe_radius * random_unit(rng);
                ProbeResult r = field_probe(f, seeds[i], y0, cfg, icfg);
                if (r.event) {
                    r.event->x = seeds[i];
                    r.event->y = y0;
                    r.event->direction = dir;
                    if (dir == Direction::past) r.event->time = -r.event->time;
                    return r.event;
                }
                spreading = spreading && r.spreading;
            }
            censored = censored && spreading;
            return std::nullopt;
        };
        if (wants_future(cfg.direction)) o.future = run(field, Direction::future);
        if (wants_past(cfg.direction)) o.past = run(field.reversed(), Direction::past);
        o.passed = (!wants_future(cfg.direction) || o.future) && (!wants_past(cfg.direction) || o.past);
        o.censored = !o.passed && censored;
    });
    std::size_t total = 0;
    for (std::size_t u : used) total += u;
    return summarise(std::move(out), cfg, total);
}

ChaoticityReport test_chaoticity(const gl::GeoLorenzParams& p, const std::vector<Vec2>& seeds,
                                 const ChaoticityConfig& cfg, const IntegratorConfig& icfg, std::uint64_t seed,
                                 std::size_t threads) {
    cfg.validate();
    p.validate();
    if (seeds.empty()) throw DomainError("test_chaoticity: no seed points");
    std::vector<SeedOutcome> out(seeds.size());
    std::vector<std::size_t> used(seeds.size(), 0);
    parallel_for(seeds.size(), threads, [&](std::size_t i) {
        Rng rng = substream(seed, i);
        const Vec2 b = seeds[i];
        SeedOutcome& o = out[i];
        bool censored = true;
        if (wants_future(cfg.direction)) {
            bool spreading = true;
            for (std::size_t k = 0; k < cfg.probes && !o.future; ++k) {
                ++used[i];
                const double th = 6.283185307179586 * uniform01(rng);
                const Vec2 y0 = b + cfg.probe_radius * Vec2(std::cos(th), std::sin(th));
                if (std::abs(y0.x()) > 1.0 || std::abs(y0.y()) > 1.0 || y0.x() == 0.0) continue;
                ProbeResult r = geo_future_probe(p, b, y0, cfg, icfg);
                if (r.event) {
                    r.event->x = Vec3(b.x(), b.y(), 1.0);
                    r.event->y = Vec3(y0.x(), y0.y(), 1.0);
                    o.future = r.event;
                }
                spreading = spreading && r.spreading;
            }
            if (!o.future) censored = censored && spreading;
        }
        if (wants_past(cfg.direction)) {
            ++used[i];
            ProbeResult r = geo_past_probe(p, b, cfg);
            o.past = r.event;
            if (!o.past) censored = censored && r.spreading;
        }
        o.passed = (!wants_future(cfg.direction) || o.future) && (!wants_past(cfg.direction) || o.past);
        o.censored = !o.passed && censored;
    });
    std::size_t total = 0;
    for (std::size_t u : used) total += u;
    return summarise(std::move(out), cfg, total);
}

double replay_separation(const VectorField& field, const SeparationEvent& ev, const IntegratorConfig& icfg) {
    const VectorField f = ev.direction == Direction::past ? field.reversed() : field;
    const double t = std::abs(ev.time);
    Trajectory tx, ty;
    for (double covered = 0.0; covered < t;) {
        covered = std::min(t, covered + kChunk);
        extend_field(f, tx, ev.x, covered, icfg);
        extend_field(f, ty, ev.y, covered, icfg);
    }
    return (tx.at(t) - ty.at(t)).norm();
}

double replay_separation(const gl::GeoLorenzParams& p, const SeparationEvent& ev, const IntegratorConfig& icfg) {
    Vec2 a(ev.x.x(), ev.x.y()), b(ev.y.x(), ev.y.y());
    if (ev.direction == Direction::past) {
        for (std::size_t k = 0; k < ev.laps; ++k) {
            const auto pa = gl::inverse_return_map(p, a);
            const auto pb = gl::inverse_return_map(p, b);
            if (!pa || !pb) return 0.0;
            a = *pa;
            b = *pb;
        }
        return (a - b).norm();
    }
    Trajectory tx, ty;
    extend_geo(p, tx, a, ev.time, icfg);
    extend_geo(p, ty, b, ev.time, icfg);
    return (tx.at(ev.time) - ty.at(ev.time)).norm();
}

TrappedVolume trapped_volume(const VectorField& field, const Vec3& lo, const Vec3& hi, std::size_t samples,
                             double horizon, const IntegratorConfig& icfg, std::uint64_t seed) {
    if (samples == 0 || !(horizon > 0.0) || !((hi - lo).minCoeff() > 0.0))
        throw DomainError("trapped_volume: need samples > 0, horizon > 0 and a non-degenerate box");
    const Vec3 c = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    EventSpec leave{[&](const Vec3& x) { return ((x - c).cwiseAbs() - half).maxCoeff(); }, 1};
    Rng rng(seed);
    std::size_t fwd = 0, bwd = 0;
    const VectorField rev = field.reversed();
    for (std::size_t i = 0; i < samples; ++i) {
        const Vec3 x(uniform(rng, lo.x(), hi.x()), uniform(rng, lo.y(), hi.y()), uniform(rng, lo.z(), hi.z()));
        if (!integrate_until(field, x, horizon, icfg, leave).event) ++fwd;
        if (!integrate_until(rev, x, horizon, icfg, leave).event) ++bwd;
    }
    TrappedVolume v;
    v.samples = samples;
    v.horizon = horizon;
    v.forward_fraction = static_cast<double>(fwd) / static_cast<double>(samples);
    v.backward_fraction = static_cast<double>(bwd) / static_cast<double>(samples);
    v.corroborates = v.forward_fraction < 1e-3 && v.backward_fraction < 1e-3;
    return v;
}

TrappedVolume trapped_volume(const gl::GeoLorenzParams& p, std::size_t samples, std::size_t laps,
                             std::uint64_t seed) {
    if (samples == 0 || laps == 0) throw DomainError("trapped_volume: need samples > 0 and laps > 0");
    Rng rng(seed);
    std::size_t fwd = 0, bwd = 0;
    for (std::size_t i = 0; i < samples; ++i) {
        const Vec2 x0(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0));
        Vec2 x = x0;
        bool inside = true;
        for (std::size_t k = 0; k < laps && inside; ++k) {
            if (x.x() == 0.0) {
                inside = false;
                break;
            }
            x = gl::return_map(p, x);
            inside = std::abs(x.x()) <= 1.0 && std::abs(x.y()) <= 1.0;
        }
        if (inside) ++fwd;
        x = x0;
        inside = true;
        for (std::size_t k = 0; k < laps && inside; ++k) {
            const auto pre = gl::inverse_return_map(p, x);
            inside = pre.has_value();
            if (inside) x = *pre;
        }
        if (inside) ++bwd;
    }
    TrappedVolume v;
    v.samples = samples;
    v.horizon = static_cast<double>(laps);
    v.forward_fraction = static_cast<double>(fwd) / static_cast<double>(samples);
    v.backward_fraction = static_cast<double>(bwd) / static_cast<double>(samples);
    v.corroborates = v.forward_fraction < 1e-3 && v.backward_fraction < 1e-3;
    return v;
}

BackwardSeparation backward_separation_check(const gl::GeoLorenzParams& p, const std::vector<LeafPair>& pairs,
                                             double r, std::size_t horizon, std::uint64_t seed) {
    p.validate();
    if (!(r > 0.0) || horizon == 0) throw DomainError("backward_separation_check: need r > 0 and horizon > 0");
    BackwardSeparation rep;
    rep.rate_bound = std::log(1.0 / p.c_y) - 0.1;
    rep.all_separated = !pairs.empty();
    rep.min_rate = std::numeric_limits<double>::infinity();
    Rng rng(seed);
    for (const LeafPair& lp : pairs) {
        double x = lp.x, y1 = lp.y1, y2 = lp.y2;
        std::vector<double> ks{0.0}, logs;
        double d = std::abs(y1 - y2);
        std::size_t steps = horizon + 1;
        if (d > 0.0) {
            logs.push_back(std::log(d));
            for (std::size_t k = 1; k <= horizon; ++k) {
                int side = (rng() >> 63) ? 1 : -1;
                double xp = gl::quotient_branch_inverse(p.quotient, side, x);
                if (xp == 0.0) {
                    side = -side;
                    xp = gl::quotient_branch_inverse(p.quotient, side, x);
                }
                const double scale = p.c_y * std::pow(std::abs(xp), p.beta());
                y1 = (y1 - side * p.off_y) / scale;
                y2 = (y2 - side * p.off_y) / scale;
                x = xp;
                d = std::abs(y1 - y2);
                ks.push_back(static_cast<double>(k));
                logs.push_back(std::log(d));
                if (d >= r) {
                    steps = k;
                    break;
                }
            }
        }
        rep.steps.push_back(steps);
        const double rate = logs.size() >= 2 ? fit_line(ks, logs).slope : 0.0;
        rep.rates.push_back(rate);
        rep.min_rate = std::min(rep.min_rate, rate);
        rep.all_separated = rep.all_separated && steps <= horizon;
    }
    if (pairs.empty()) rep.min_rate = 0.0;
    rep.pass = rep.all_separated && rep.min_rate >= rep.rate_bound;
    return rep;
}

bool ReparamPath::valid(double L) const {
    for (std::size_t k = 0; k + 1 < breakpoints.size(); ++k) {
        const double dt = breakpoints[k + 1].first - breakpoints[k].first;
        const double dh = breakpoints[k + 1].second - breakpoints[k].second;
        if (!(dt > 0.0 && dh > 0.0)) return false;
        const double slope = dh / dt;
        if (slope < 1.0 / L * (1.0 - 1e-12) || slope > L * (1.0 + 1e-12)) return false;
    }
    return true;
}

Alignment align_orbits(const SectionOrbit& a, const SectionOrbit& b, const AlignmentOptions& opts) {
    Alignment res;
    const std::size_t I = a.hits.size(), J = b.hits.size();
    if (I < 2 || J < 2) {
        res.max_distance = (a.position(0.0) - b.position(0.0)).norm();
        res.path.breakpoints = {{0.0, 0.0}};
        return res;
    }
    const std::size_t S = opts.samples_per_segment, M = opts.max_skip;
    // pos[i][s - 1][q]: orbit at hits[i] + q / S * (hits[i + s] - hits[i]).
    auto tabulate = [&](const SectionOrbit& o) {
        const std::size_t n = o.hits.size();
        std::vector<std::vector<std::vector<Vec3>>> pos(n, std::vector<std::vector<Vec3>>(M));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t s = 1; s <= M && i + s < n; ++s) {
                auto& row = pos[i][s - 1];
                row.resize(S + 1);
                const double t0 = o.hits[i], t1 = o.hits[i + s];
                for (std::size_t q = 0; q <= S; ++q)
                    row[q] = o.position(q == S ? t1 : t0 + (t1 - t0) * static_cast<double>(q) / static_cast<double>(S));
            }
        return pos;
    };
    const auto pa = tabulate(a), pb = tabulate(b);
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> best(I * J, inf);
    std::vector<std::ptrdiff_t> pred(I * J, -1);
    auto cell = [&](std::size_t i, std::size_t j) { return i * J + j; };
    for (std::size_t i = 0; i <= M && i < I; ++i)
        for (std::size_t j = 0; j <= M && j < J; ++j)
            best[cell(i, j)] = (a.position(a.hits[i]) - b.position(b.hits[j])).norm();
    for (std::size_t i = 0; i < I && !res.exhausted; ++i) {
        for (std::size_t j = 0; j < J && !res.exhausted; ++j) {
            const double here = best[cell(i, j)];
            if (here == inf) continue;
            for (std::size_t sa = 1; sa <= M && i + sa < I; ++sa) {
                for (std::size_t sb = 1; sb <= M && j + sb < J; ++sb) {
                    const std::size_t ni = i + sa, nj = j + sb;
                    if ((ni > nj ? ni - nj : nj - ni) > opts.band) continue;
                    const double dt = a.hits[ni] - a.hits[i], du = b.hits[nj] - b.hits[j];
                    if (du < dt / opts.L || du > dt * opts.L) continue;
                    if (++res.transitions > opts.budget) {
                        res.exhausted = true;
                        break;
                    }
                    double& target = best[cell(ni, nj)];
                    if (here >= target) continue;
                    double worst = here;
                    const auto& ra = pa[i][sa - 1];
                    const auto& rb = pb[j][sb - 1];
                    for (std::size_t q = 0; q <= S && worst < target; ++q)
                        worst = std::max(worst, (ra[q] - rb[q]).norm());
                    if (worst < target) {
                        target = worst;
                        pred[cell(ni, nj)] = static_cast<std::ptrdiff_t>(cell(i, j));
                    }
                }
                if (res.exhausted) break;
            }
        }
    }
    std::size_t end = I * J;
    double end_cost = inf;
    for (std::size_t i = 0; i < I; ++i)
        for (std::size_t j = 0; j < J; ++j) {
            const bool at_end = (i + 1 + M >= I && j + 1 + M >= J) && (i == I - 1 || j == J - 1);
            if (at_end && best[cell(i, j)] < end_cost) {
                end_cost = best[cell(i, j)];
                end = cell(i, j);
            }
        }
    res.max_distance = end_cost;
    if (end < I * J) {
        for (std::ptrdiff_t c = static_cast<std::ptrdiff_t>(end); c >= 0; c = pred[static_cast<std::size_t>(c)]) {
            const auto uc = static_cast<std::size_t>(c);
            res.path.breakpoints.emplace_back(a.hits[uc / J], b.hits[uc % J]);
        }
        std::reverse(res.path.breakpoints.begin(), res.path.breakpoints.end());
    }
    return res;
}

namespace {

struct GeoSegment {
    Vec2 base;
    double s_start;  // phase at the segment's first hit
};

Vec2 safe_return(const gl::GeoLorenzParams& p, Vec2 x) {
    std::size_t hits = 0;
    x.x() = gl::nudge_off_singular(x.x(), hits);
    return gl::return_map(p, x);
}

}  // namespace

SectionOrbit geolorenz_orbit(const gl::GeoLorenzParams& p, const gl::FlowState& st, double horizon, bool backward) {
    auto segs = std::make_shared<std::vector<GeoSegment>>();
    auto hits = std::vector<double>{0.0};
    if (!backward) {
        Vec2 base = st.base;
        double s = st.s;
        while (hits.back() < horizon) {
            segs->push_back({base, s});
            hits.push_back(hits.back() + gl::return_time(p, base) - s);
            base = safe_return(p, base);
            s = 0.0;
        }
    } else {
        // Going back, segment k runs its phase downwards from s_start.
        if (st.s > 0.0) {
            segs->push_back({st.base, st.s});
            hits.push_back(st.s);
        }
        Vec2 base = st.base;
        while (hits.back() < horizon) {
            const auto pre = gl::inverse_return_map(p, base);
            if (!pre) break;
            base = *pre;
            const double rt = gl::return_time(p, base);
            segs->push_back({base, rt});
            hits.push_back(hits.back() + rt);
        }
    }
    auto shared_hits = std::make_shared<std::vector<double>>(hits);
    SectionOrbit o;
    o.hits = hits;
    o.position = [p, segs, shared_hits, backward](double t) -> Vec3 {
        const auto& h = *shared_hits;
        if (segs->empty()) return Vec3::Zero();
        std::size_t k = static_cast<std::size_t>(std::upper_bound(h.begin(), h.end(), t) - h.begin());
        k = std::min(k == 0 ? 0 : k - 1, segs->size() - 1);
        const GeoSegment& g = (*segs)[k];
        const double local = t - h[k];
        const double s = backward ? std::max(0.0, g.s_start - local) : g.s_start + local;
        return gl::flow_position(p, gl::FlowState{g.base, s});
    };
    if (backward && segs->empty()) {
        const Vec3 x = gl::flow_position(p, st);
        o.position = [x](double) { return x; };
    }
    return o;
}

SectionOrbit field_orbit(const VectorField& field, const CrossSection& section, const Vec3& x0, double horizon,
                         const IntegratorConfig& icfg, bool backward) {
    const VectorField f = backward ? field.reversed() : field;
    auto traj = std::make_shared<Trajectory>(integrate(f, x0, horizon, icfg));
    CrossSection sec = section;
    if (backward) sec.orientation = -sec.orientation;
    CrossingOptions copt;
    copt.field = &f;
    copt.cfg = icfg;
    const CrossingReport cr = detect_crossings(*traj, sec, copt);
    SectionOrbit o;
    o.hits.push_back(0.0);
    for (const SectionHit& h : cr.hits)
        if (h.time > o.hits.back() + 1e-12) o.hits.push_back(h.time);
    o.position = [traj](double t) { return traj->at(std::clamp(t, traj->start_time(), traj->end_time())); };
    return o;
}

namespace {

// Smallest distance from y to the orbit piece, by a grid scan refined with
// golden-section search around each local minimum.
double distance_to_orbit(const SectionOrbit& o, const Vec3& y, double step) {
    if (o.hits.size() < 2) return (o.position(0.0) - y).norm();
    const double T = o.hits.back();
    const auto n = static_cast<std::size_t>(std::ceil(T / step));
    auto dist = [&](double t) { return (o.position(std::clamp(t, 0.0, T)) - y).norm(); };
    std::vector<double> d(n + 1);
    for (std::size_t k = 0; k <= n; ++k) d[k] = dist(std::min(T, static_cast<double>(k) * step));
    double best = *std::min_element(d.begin(), d.end());
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (std::size_t k = 0; k <= n; ++k) {
        if ((k > 0 && d[k - 1] < d[k]) || (k < n && d[k + 1] < d[k])) continue;
        double lo = std::max(0.0, (static_cast<double>(k) - 1.0) * step);
        double hi = std::min(T, (static_cast<double>(k) + 1.0) * step);
        double c = hi - g * (hi - lo), e = lo + g * (hi - lo);
        double fc = dist(c), fe = dist(e);
        for (int it = 0; it < 80; ++it) {
            if (fc < fe) {
                hi = e;
                e = c;
                fe = fc;
                c = hi - g * (hi - lo);
                fc = dist(c);
            } else {
                lo = c;
                c = e;
                fc = fe;
                e = lo + g * (hi - lo);
                fe = dist(e);
            }
        }
        best = std::min({best, fc, fe});
    }
    return best;
}

constexpr double kSameOrbitTol = 1e-8;

}  // namespace

PairResult classify_pair(const SectionOrbit& x_fwd, const SectionOrbit& x_bwd, const SectionOrbit& y_fwd,
                         const SectionOrbit& y_bwd, const ExpansivenessConfig& cfg, std::uint64_t* transitions) {
    PairResult res;
    res.x = x_fwd.position(0.0);
    res.y = y_fwd.position(0.0);
    const Alignment fwd = align_orbits(x_fwd, y_fwd, cfg.align);
    Alignment bwd;
    const bool has_bwd = x_bwd.hits.size() >= 2 && y_bwd.hits.size() >= 2;
    if (has_bwd) bwd = align_orbits(x_bwd, y_bwd, cfg.align);
    if (transitions) *transitions += fwd.transitions + bwd.transitions;
    res.max_distance = has_bwd ? std::max(fwd.max_distance, bwd.max_distance) : fwd.max_distance;
    for (auto it = bwd.path.breakpoints.rbegin(); it != bwd.path.breakpoints.rend(); ++it)
        if (it->first > 0.0 || it->second > 0.0) res.path.breakpoints.emplace_back(-it->first, -it->second);
    for (const auto& bp : fwd.path.breakpoints) res.path.breakpoints.push_back(bp);
    // Halves that skip hits next to t = 0 need not join into one monotone path; keep the forward one then.
    if (!res.path.valid(cfg.align.L)) res.path = fwd.path;

    const double step = cfg.epsilon / 8.0;
    const double d_orbit = std::min(distance_to_orbit(x_fwd, res.y, step), distance_to_orbit(x_bwd, res.y, step));
    if (d_orbit <= kSameOrbitTol) res.cls = PairClass::same_orbit;
    else if (res.max_distance <= cfg.delta) res.cls = PairClass::near_counterexample;
    else res.cls = PairClass::separation_certificate;
    res.partial = fwd.exhausted || bwd.exhausted;
    return res;
}

namespace {

ExpansivenessReport merge(std::vector<PairResult> results, const std::vector<std::uint64_t>& transitions,
                          const ExpansivenessConfig& cfg) {
    ExpansivenessReport rep;
    rep.cfg = cfg;
    for (std::size_t i = 0; i < results.size(); ++i) {
        rep.transitions += transitions[i];
        rep.partial = rep.partial || results[i].partial;
        switch (results[i].cls) {
            case PairClass::separation_certificate: ++rep.certificates; break;
            case PairClass::near_counterexample: ++rep.near_counterexamples; break;
            case PairClass::same_orbit: ++rep.excluded; break;
        }
    }
    const std::size_t tested = rep.certificates + rep.near_counterexamples;
    rep.certificate_fraction = tested ? static_cast<double>(rep.certificates) / static_cast<double>(tested) : 0.0;
    rep.pairs = std::move(results);
    return rep;
}

}  // namespace

ExpansivenessReport falsify_expansiveness(const VectorField& field, const CrossSection& section,
                                          const std::vector<Vec3>& starts, const ExpansivenessConfig& cfg,
                                          const IntegratorConfig& icfg, std::uint64_t seed, std::size_t threads) {
    cfg.validate();
    if (starts.empty()) throw DomainError("falsify_expansiveness: no start points");
    std::vector<PairResult> results(cfg.pairs);
    std::vector<std::uint64_t> transitions(cfg.pairs, 0);
    parallel_for(cfg.pairs, threads, [&](std::size_t i) {
        Rng rng = substream(seed, i);
        const Vec3 x = starts[i % starts.size()];
        const Vec3 y = x + 0.5 * cfg.delta * random_unit(rng);
        const SectionOrbit xf = field_orbit(field, section, x, cfg.horizon, icfg);
        const SectionOrbit xb = field_orbit(field, section, x, cfg.horizon, icfg, true);
        const SectionOrbit yf = field_orbit(field, section, y, cfg.horizon, icfg);
        const SectionOrbit yb = field_orbit(field, section, y, cfg.horizon, icfg, true);
        results[i] = classify_pair(xf, xb, yf, yb, cfg, &transitions[i]);
    });
    return merge(std::move(results), transitions, cfg);
}

ExpansivenessReport falsify_expansiveness(const gl::GeoLorenzParams& p, const ExpansivenessConfig& cfg,
                                          std::uint64_t seed, std::size_t threads) {
    cfg.validate();
    p.validate();
    const gl::AttractorSample att = gl::sample_attractor(p, 1000 + 97 * cfg.pairs, 1000, seed);
    std::vector<PairResult> results(cfg.pairs);
    std::vector<std::uint64_t> transitions(cfg.pairs, 0);
    parallel_for(cfg.pairs, threads, [&](std::size_t i) {
        Rng rng = substream(seed, i);
        const Vec2 x = att.points[97 * i];
        Vec2 y;
        do {
            const double th = 6.283185307179586 * uniform01(rng);
            y = x + 0.5 * cfg.delta * Vec2(std::cos(th), std::sin(th));
        } while (std::abs(y.x()) > 1.0 || std::abs(y.y()) > 1.0 || y.x() == 0.0);
        const gl::FlowState sx{x, 0.0}, sy{y, 0.0};
        results[i] = classify_pair(geolorenz_orbit(p, sx, cfg.horizon), geolorenz_orbit(p, sx, cfg.horizon, true),
                                   geolorenz_orbit(p, sy, cfg.horizon), geolorenz_orbit(p, sy, cfg.horizon, true),
                                   cfg, &transitions[i]);
    });
    return merge(std::move(results), transitions, cfg);
}

}  // namespace singlab
