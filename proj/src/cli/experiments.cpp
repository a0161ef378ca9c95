#include "singlab/cli/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "singlab/chaostest.hpp"
#include "singlab/dimlab.hpp"
#include "singlab/ergostats.hpp"
#include "singlab/parallel.hpp"
#include "singlab/sections.hpp"
#include "singlab/suspension.hpp"

namespace singlab::cli {

namespace gl = geolorenz;

Params::Params(const std::vector<ParamSpec>& specs, const ExperimentConfig& cfg) : section_(cfg.name) {
    for (const ParamSpec& s : specs) values_[s.name] = s.fallback;
    for (const auto& [k, v] : cfg.params) values_[k] = v;
}

double Params::number(const std::string& name) const { return parse_number(section_ + "." + name, values_.at(name)); }

double Params::number_or(const std::string& name, double fallback) const {
    return values_.at(name) == "auto" ? fallback : number(name);
}

std::size_t Params::count(const std::string& name) const {
    return static_cast<std::size_t>(parse_count(section_ + "." + name, values_.at(name)));
}

const std::string& Params::text(const std::string& name) const { return values_.at(name); }

namespace {

using Type = ParamSpec::Type;

std::string str(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

Table make_table(std::string name, std::vector<std::string> columns) {
    Table t;
    t.name = std::move(name);
    t.columns = std::move(columns);
    return t;
}

// Numbers given as "a, b, c".
std::vector<double> number_list(const std::string& key, const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t"), e = item.find_last_not_of(" \t");
        if (b == std::string::npos) throw ConfigError(key, key + ": empty list entry");
        out.push_back(parse_number(key, item.substr(b, e - b + 1)));
    }
    return out;
}

std::vector<double> linspace_grid(double lo, double hi, double step) {
    std::vector<double> g;
    for (double t = lo; t <= hi * (1.0 + 1e-12); t += step) g.push_back(t);
    return g;
}

VectorField field_of(const std::string& system, const Params& p) {
    if (system == "lorenz") return make_field("lorenz", {{"a", p.number("a")}, {"r", p.number("r")}, {"b", p.number("b")}});
    return make_field(system);
}

Vec3 start_of(const std::string& system, const Params& p) {
    if (p.text("x0") != "auto") {
        const auto v = number_list("x0", p.text("x0"));
        if (v.size() != 3) throw ConfigError("x0", "x0: expected three numbers");
        return {v[0], v[1], v[2]};
    }
    return system == "lorenz" ? Vec3(1.0, 1.0, 20.0) : Vec3::Zero();
}

IntegratorConfig integrator_of(const Params& p) {
    IntegratorConfig c;
    c.abs_tol = c.rel_tol = p.number("ode_tol");
    return c;
}

const std::vector<ParamSpec> kFieldParams = {
    {"a", Type::number, "10", "Lorenz a", {}},
    {"r", Type::number, "28", "Lorenz r", {}},
    {"b", Type::number, "2.6666666666666665", "Lorenz b", {}},
    {"x0", Type::text, "auto", "start point 'x, y, z'; auto is (1, 1, 20) for lorenz, the origin otherwise", {}},
    {"ode_tol", Type::number, "1e-10", "absolute and relative integrator tolerance", {}},
};

std::vector<ParamSpec> with(std::vector<ParamSpec> a, const std::vector<ParamSpec>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

IntervalMap base_map(const std::string& system) {
    if (system == "geolorenz" || system == "suspension:geolorenz") return lorenz_quotient_map();
    if (system == "suspension:doubling") return doubling_map();
    if (system == "suspension:tent") return tent_map();
    return make_map(system);
}

Semiflow semiflow_of(const std::string& system) {
    if (system == "suspension:geolorenz") return Semiflow::lorenz();
    return Semiflow::constant_roof(base_map(system), 1.0);
}

// -- flows ---------------------------------------------------------------------

ExperimentResult run_lyapunov(const std::string& system, const Params& p, const RunContext& ctx) {
    const VectorField f = field_of(system, p);
    TangentOptions opts;
    opts.reortho_interval = p.number("reortho");
    const LyapunovEstimate est = lyapunov_spectrum(f, start_of(system, p), p.number("T"), integrator_of(p), ctx.seed, opts);
    ExperimentResult r;
    Table t = make_table("exponents", {"index", "exponent"});
    for (int i = 0; i < 3; ++i) t.add_row({fmt(i + 1), fmt(est.exponents[i])});
    r.tables.push_back(t);
    Table s = make_table("summary", {"time", "spread", "sum"});
    s.add_row({fmt(est.time), fmt(est.spread), fmt(est.exponents.sum())});
    r.tables.push_back(s);
    if (system == "linear") {
        const auto ev = check_lorenz_like(linearization_eigenvalues(f, Vec3::Zero()));
        double err = 0.0;
        std::array<double, 3> desc = ev.lambda;
        std::sort(desc.begin(), desc.end(), std::greater<>());
        for (int i = 0; i < 3; ++i) err = std::max(err, std::abs(est.exponents[i] - desc[i]));
        r.pass = err <= p.number("tol");
        r.summary = "max deviation from eigenvalues " + str(err);
    } else {
        r.pass = est.exponents[0] > 0.0;
        r.summary = "top exponent " + str(est.exponents[0]) + ", spread " + str(est.spread);
    }
    return r;
}

ExperimentResult run_lorenz_like(const std::string& system, const Params& p, const RunContext&) {
    const VectorField f = field_of(system, p);
    const auto ev = linearization_eigenvalues(f, Vec3::Zero());
    const LorenzLikeVerdict v = check_lorenz_like(ev);
    ExperimentResult r;
    Table t = make_table("eigenvalues", {"index", "real", "imag"});
    for (int i = 0; i < 3; ++i) t.add_row({fmt(i + 1), fmt(ev[i].real()), fmt(ev[i].imag())});
    r.tables.push_back(t);
    r.pass = v.pass;
    r.summary = v.applicable ? "lambda = (" + str(v.lambda[0]) + ", " + str(v.lambda[1]) + ", " + str(v.lambda[2]) + ")"
                             : "complex eigenvalues";
    return r;
}

ExperimentResult run_singular_hyperbolicity(const std::string& system, const Params& p, const RunContext& ctx) {
    const VectorField f = field_of(system, p);
    Rng rng(ctx.seed);
    TangentOptions topts;
    topts.reortho_interval = p.number("reortho");
    const auto frames =
        integrate_with_tangent(f, start_of(system, p), random_orthonormal_basis(rng), p.number("T"), integrator_of(p), topts);
    SingularHyperbolicityOptions opts;
    opts.window = p.number("window");
    opts.transient = p.number("transient");
    const SplittingEstimate est = check_singular_hyperbolicity(frames, opts);
    ExperimentResult r;
    Table t = make_table("curves", {"lag", "log_domination", "log_jc"});
    for (std::size_t i = 0; i < est.lags.size(); ++i)
        t.add_row({fmt(est.lags[i]), fmt(est.log_domination[i]), fmt(est.log_jc[i])});
    r.tables.push_back(t);
    Table s = make_table("rates", {"domination_rate", "domination_K", "volume_rate", "volume_K", "min_angle"});
    s.add_row({fmt(est.domination_rate), fmt(est.domination_K), fmt(est.volume_rate), fmt(est.volume_K), fmt(est.min_angle)});
    r.tables.push_back(s);
    r.plots.push_back({"curves", {PlotKind::series, "lag", "log_jc", "central volume expansion"}});
    r.pass = est.pass;
    r.summary = "volume rate " + str(est.volume_rate) + ", domination rate " + str(est.domination_rate) +
                (est.reason.empty() ? "" : " (" + est.reason + ")");
    return r;
}

// -- the geometric model -------------------------------------------------------

ExperimentResult run_section_hyperbolicity(const std::string&, const Params& p, const RunContext& ctx) {
    const gl::GeoLorenzParams gp;
    const auto samples = geolorenz_section_samples(gp, p.count("samples"), static_cast<int>(p.count("iterate")), ctx.seed);
    const auto rep = check_section_hyperbolicity(samples, p.number("lambda"), p.number("rho"));
    ExperimentResult r;
    Table t = make_table("samples", {"x", "y", "pass"});
    for (std::size_t i = 0; i < samples.size(); ++i)
        t.add_row({fmt(samples[i].point.x()), fmt(samples[i].point.y()), fmt(static_cast<bool>(rep.sample_pass[i]))});
    r.tables.push_back(t);
    Table s = make_table("margins", {"max_stable", "min_cu_expansion", "min_cone_stretch", "max_cone_ratio",
                                     "adaptedness_margin", "stable_failures", "unstable_failures", "cone_failures"});
    s.add_row({fmt(rep.max_stable), fmt(rep.min_cu_expansion), fmt(rep.min_cone_stretch), fmt(rep.max_cone_ratio),
               fmt(rep.adaptedness_margin), fmt(std::uint64_t(rep.stable_failures)),
               fmt(std::uint64_t(rep.unstable_failures)), fmt(std::uint64_t(rep.cone_failures))});
    r.tables.push_back(s);
    r.pass = rep.pass();
    r.summary = "max stable " + str(rep.max_stable) + ", min cu expansion " + str(rep.min_cu_expansion);
    return r;
}

ExperimentResult run_return_map(const std::string&, const Params& p, const RunContext& ctx) {
    const gl::GeoLorenzParams gp;
    Rng rng(ctx.seed);
    std::vector<Vec2> seeds;
    for (std::size_t i = 0; i < p.count("seeds"); ++i) {
        Vec2 s(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0));
        if (s.x() == 0.0) s.x() = 0.5;
        seeds.push_back(s);
    }
    IntegratorConfig icfg;
    icfg.abs_tol = icfg.rel_tol = p.number("ode_tol");
    const ReturnMapData data = build_geolorenz_return_map(gp, seeds, icfg);
    ExperimentResult r;
    Table t = make_table("returns", {"entry_x", "entry_y", "return_x", "return_y", "return_time", "error"});
    double worst = 0.0;
    for (const ReturnRecord& rec : data.records) {
        const double err = (rec.ret - gl::return_map(gp, rec.entry)).norm();
        worst = std::max(worst, err);
        t.add_row({fmt(rec.entry.x()), fmt(rec.entry.y()), fmt(rec.ret.x()), fmt(rec.ret.y()), fmt(rec.return_time), fmt(err)});
    }
    r.tables.push_back(t);
    r.pass = !data.records.empty() && worst <= p.number("tol");
    r.summary = std::to_string(data.records.size()) + " returns, max error against the closed form " + str(worst);
    return r;
}

ExperimentResult run_backward_separation(const std::string&, const Params& p, const RunContext& ctx) {
    const gl::GeoLorenzParams gp;
    Rng rng(ctx.seed);
    std::vector<LeafPair> pairs;
    const double d = p.number("distance");
    for (std::size_t i = 0; i < p.count("pairs"); ++i) {
        const double x = uniform(rng, -1.0, 1.0), y = uniform(rng, -1.0, 1.0 - d);
        pairs.push_back({x == 0.0 ? 0.5 : x, y, y + d});
    }
    const BackwardSeparation rep = backward_separation_check(gp, pairs, p.number("r"), p.count("horizon"), ctx.seed);
    ExperimentResult r;
    Table t = make_table("pairs", {"x", "y1", "y2", "steps", "rate"});
    for (std::size_t i = 0; i < pairs.size(); ++i)
        t.add_row({fmt(pairs[i].x), fmt(pairs[i].y1), fmt(pairs[i].y2), fmt(std::uint64_t(rep.steps[i])), fmt(rep.rates[i])});
    r.tables.push_back(t);
    r.pass = rep.pass;
    r.summary = "min rate " + str(rep.min_rate) + " against bound " + str(rep.rate_bound);
    return r;
}

// -- interval maps ---------------------------------------------------------------

ExperimentResult run_invariant_measure(const std::string& system, const Params& p, const RunContext& ctx) {
    const IntervalMap m = base_map(system);
    const EmpiricalMeasure mu = estimate_measure(m, p.count("n"), p.count("burn_in"), p.count("bins"), ctx.seed);
    ExperimentResult r;
    Table t = make_table("measure", {"bin_lo", "bin_hi", "mass", "density"});
    for (std::size_t i = 0; i < mu.bins(); ++i) {
        const double lo = mu.lo + mu.box_size() * static_cast<double>(i);
        t.add_row({fmt(lo), fmt(lo + mu.box_size()), fmt(mu.mass(i)), fmt(mu.mass(i) / mu.box_size())});
    }
    r.tables.push_back(t);
    r.plots.push_back({"measure", {PlotKind::histogram, "bin_lo", "density", "invariant density of " + system}});
    if (system == "doubling" || system == "tent") {
        const double tv = total_variation(mu.masses(), std::vector<double>(mu.bins(), 1.0 / static_cast<double>(mu.bins())));
        r.pass = tv <= p.number("tol");
        r.summary = "total variation to Lebesgue " + str(tv);
    } else {
        r.summary = "no reference density";
    }
    return r;
}

ExperimentResult run_correlation(const std::string& system, const Params& p, const RunContext& ctx) {
    const IntervalMap m = base_map(system);
    const double c = 0.5 * (m.lo + m.hi);
    auto f = [c](double x) { return x - c; };
    const CorrelationEstimate est = correlation_decay(m, f, f, p.count("max_lag"), p.count("n"), ctx.seed, p.count("burn_in"));
    ExperimentResult r;
    Table t = make_table("correlation", {"lag", "abs_correlation", "correlation", "noise_floor"});
    for (std::size_t i = 0; i < est.lags.size(); ++i)
        t.add_row({fmt(std::uint64_t(est.lags[i])), fmt(est.values[i]), fmt(est.signed_values[i]), fmt(est.noise_floor)});
    r.tables.push_back(t);
    r.plots.push_back({"correlation", {PlotKind::series, "lag", "abs_correlation", "decay of correlations, " + system}});
    r.pass = est.rate_is_floor || est.rate > 0.0;
    r.summary = (est.rate_is_floor ? "below the noise floor from lag 1, rate >= " : "rate ") + str(est.rate) +
                ", R2 " + str(est.fit.r_squared);
    return r;
}

ExperimentResult run_entropy(const std::string& system, const Params& p, const RunContext& ctx) {
    const IntervalMap m = base_map(system);
    const EntropyFormulaReport rep = check_entropy_formula(m, p.count("n"), ctx.seed, ctx.seed + 1, p.number("tol"));
    ExperimentResult r;
    Table t = make_table("entropy", {"entropy", "integral", "integral_second_seed", "gap"});
    t.add_row({rep.entropy ? fmt(*rep.entropy) : "", fmt(rep.integral), fmt(rep.integral_second), fmt(rep.gap)});
    r.tables.push_back(t);
    r.pass = rep.pass;
    r.summary = "integral of log|f'| " + str(rep.integral) + ", gap " + str(rep.gap);
    return r;
}

ExperimentResult run_nue(const std::string& system, const Params& p, const RunContext& ctx) {
    const NueReport rep = check_nue(base_map(system), p.count("n"), p.count("ensemble"), ctx.seed);
    ExperimentResult r;
    Table t = make_table("averages", {"orbit", "average"});
    for (std::size_t i = 0; i < rep.averages.size(); ++i) t.add_row({fmt(std::uint64_t(i)), fmt(rep.averages[i])});
    r.tables.push_back(t);
    r.pass = rep.pass;
    r.summary = "c = " + str(rep.c);
    return r;
}

Table rate_table(const RateFit& c, const std::string& grid_name) {
    Table t = make_table("curve", {grid_name, "fraction"});
    for (std::size_t i = 0; i < c.grid.size(); ++i) t.add_row({fmt(c.grid[i]), fmt(c.fractions[i])});
    return t;
}

ExperimentResult run_slow_recurrence(const std::string& system, const Params& p, const RunContext& ctx) {
    const IntervalMap m = base_map(system);
    std::vector<std::size_t> grid;
    for (std::size_t n = p.count("n_step"); n <= p.count("n_max"); n += p.count("n_step")) grid.push_back(n);
    // The doubling map's discontinuity is the point 0 of the circle; the
    // two-sided tent singularity needs a larger epsilon.
    const std::vector<double> singular = system == "doubling" ? std::vector<double>{0.0} : m.singular;
    const double delta = p.number_or("delta", system == "geolorenz" ? 0.05 : 0.1);
    const double eps = p.number_or("epsilon", system == "doubling" ? 0.5 : 1.0);
    const SlowRecurrenceReport rep = check_slow_recurrence(m, singular, delta, eps, grid, p.count("ensemble"), ctx.seed);
    ExperimentResult r;
    r.tables.push_back(rate_table(rep.curve, "n"));
    r.pass = rep.pass;
    r.summary = rep.curve.rate_is_floor ? "no exceedances" : "rate " + str(rep.curve.rate);
    return r;
}

// -- dimensions and hitting times ------------------------------------------------

ExperimentResult run_local_dimension(const std::string& system, const Params& p, const RunContext& ctx) {
    const auto radii = geometric_radii(p.number("r_max"), p.number("r_min"));
    const std::size_t n = p.count("n"), nc = p.count("centers");
    ExperimentResult r;
    if (system != "geolorenz") {
        const IntervalMap m = base_map(system);
        Rng rng(ctx.seed);
        std::vector<double> cloud = map_orbit(m, random_point(m, rng), n + 1000, rng);
        cloud.erase(cloud.begin(), cloud.begin() + 1000);
        std::vector<BallStats> balls;
        for (std::size_t k = 0; k < nc; ++k) balls.push_back(ball_masses(cloud, cloud[(k * 7919) % cloud.size()], radii));
        const ScalingFit fit = mean_local_dimension(balls);
        Table t = make_table("balls", {"radius", "mass"});
        for (std::size_t i = 0; i < radii.size(); ++i) t.add_row({fmt(radii[i]), fmt(balls[0].masses[i])});
        r.tables.push_back(t);
        r.plots.push_back({"balls", {PlotKind::loglog, "radius", "mass", "ball masses, " + system}});
        r.pass = std::abs(fit.slope - 1.0) <= p.number("tol");
        r.summary = "local dimension " + str(fit.slope) + ", R2 " + str(fit.r_squared);
        return r;
    }
    const gl::GeoLorenzParams gp;
    const auto att = gl::sample_attractor(gp, n + 1000, 1000, ctx.seed);
    std::vector<Point<2>> cloud(att.points.begin(), att.points.end());
    std::vector<BallStats> map_balls(nc), flow_balls(nc);
    const double T = p.number("flow_time");
    parallel_for(nc, ctx.threads, [&](std::size_t k) {
        const Vec2 b = att.points[(k * 7919 + 17) % att.points.size()];
        map_balls[k] = ball_masses(cloud, Point<2>(b), radii);
        const Vec3 target = gl::flow_position(gp, {b, 0.5 * gl::exit_time(gp, b.x())});
        GeoLorenzFlowOrbit orbit(gp, gl::FlowState{att.points[(k * 104729 + 5) % att.points.size()], 0.0});
        flow_balls[k] = flow_ball_masses(orbit, target, radii, T);
    });
    const ScalingFit fm = mean_local_dimension(map_balls), ff = mean_local_dimension(flow_balls);
    const DimensionRelationReport rel = check_dimension_relation(fm, ff, p.number("tol"));
    Table t = make_table("balls", {"radius", "map_mass", "flow_mass"});
    for (std::size_t i = 0; i < radii.size(); ++i) t.add_row({fmt(radii[i]), fmt(map_balls[0].masses[i]), fmt(flow_balls[0].masses[i])});
    r.tables.push_back(t);
    Table s = make_table("dimensions", {"d_map", "d_flow", "gap", "map_r2", "flow_r2"});
    s.add_row({fmt(rel.d_map), fmt(rel.d_flow), fmt(rel.gap), fmt(fm.r_squared), fmt(ff.r_squared)});
    r.tables.push_back(s);
    r.plots.push_back({"balls", {PlotKind::loglog, "radius", "flow_mass", "flow ball masses"}});
    r.pass = rel.pass;
    r.summary = "d_map " + str(rel.d_map) + ", d_flow " + str(rel.d_flow) + ", |d_flow - d_map - 1| = " + str(rel.gap);
    return r;
}

Table hitting_table(const std::vector<HittingRecord>& recs, const std::string& col) {
    Table t = make_table("hitting", {"radius", col, "censored"});
    for (std::size_t i = 0; i < recs.front().radii.size(); ++i) {
        double s = 0.0;
        std::size_t c = 0;
        for (const auto& rec : recs) {
            s += std::log(std::max(rec.times[i], 1e-300));
            c += rec.censored[i] ? 1 : 0;
        }
        t.add_row({fmt(recs.front().radii[i]), fmt(std::exp(s / static_cast<double>(recs.size()))), fmt(std::uint64_t(c))});
    }
    return t;
}

ExperimentResult run_hitting_time(const std::string& system, const Params& p, const RunContext& ctx) {
    const auto radii = geometric_radii(p.number("r_max"), p.number("r_min"));
    const std::size_t starts = p.count("starts");
    const auto budget = static_cast<std::uint64_t>(p.number("budget"));
    ExperimentResult r;
    std::vector<HittingRecord> recs(starts), flow(starts);
    if (system == "geolorenz") {
        const gl::GeoLorenzParams gp;
        const Vec2 p0 = gl::sample_attractor(gp, 2000, 1000, ctx.seed).points.back();
        const Vec3 target = gl::flow_position(gp, {p0, 0.3 * gl::exit_time(gp, p0.x())});
        parallel_for(starts, ctx.threads, [&](std::size_t i) {
            Rng rng = substream(ctx.seed, i);
            Vec2 z(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0));
            std::size_t nh = 0;
            auto step = [&](Vec2 w) {
                w.x() = gl::nudge_off_singular(w.x(), nh);
                return gl::return_map(gp, w);
            };
            for (int k = 0; k < 50; ++k) z = step(z);
            recs[i] = hitting_time_steps(z, step, [&](const Vec2& w) { return (w - p0).norm(); }, radii, budget);
            GeoLorenzFlowOrbit orbit(gp, {z, 0.0});
            FlowSearchOptions fo;
            fo.budget = static_cast<double>(budget);
            flow[i] = flow_hitting_time(orbit, target, radii, fo);
        });
        const ScalingFit fm = hitting_exponent(recs), ff = hitting_exponent(flow);
        Table t = hitting_table(recs, "map_time");
        const Table tf = hitting_table(flow, "flow_time");
        t.columns.push_back("flow_time");
        for (std::size_t i = 0; i < t.rows.size(); ++i) t.rows[i].push_back(tf.rows[i][1]);
        r.tables.push_back(t);
        r.plots.push_back({"hitting", {PlotKind::loglog, "radius", "flow_time", "flow hitting times"}});
        const double gap = std::abs(fm.slope - ff.slope);
        r.pass = gap <= p.number("tol");
        r.summary = "map exponent " + str(fm.slope) + ", flow exponent " + str(ff.slope) + ", gap " + str(gap);
        return r;
    }
    const double target = p.number("target");
    if (system.rfind("suspension:", 0) == 0) {
        const Semiflow sf = semiflow_of(system);
        parallel_for(starts, ctx.threads, [&](std::size_t i) {
            Rng rng = substream(ctx.seed, i);
            SuspensionFlowOrbit orbit(sf, {random_point(sf.base, rng), 0.0}, ctx.seed + 1000 + i);
            FlowSearchOptions fo;
            fo.budget = static_cast<double>(budget);
            recs[i] = flow_hitting_time(orbit, Vec3(target, 0.5, 0.0), radii, fo);
        });
    } else {
        const IntervalMap m = base_map(system);
        parallel_for(starts, ctx.threads, [&](std::size_t i) {
            Rng rng = substream(ctx.seed, i);
            recs[i] = hitting_time(m, random_point(m, rng), target, radii, budget, &rng);
        });
    }
    const ScalingFit fit = hitting_exponent(recs);
    r.tables.push_back(hitting_table(recs, "time"));
    r.plots.push_back({"hitting", {PlotKind::loglog, "radius", "time", "hitting times, " + system}});
    r.pass = std::abs(fit.slope - 1.0) <= p.number("tol");
    r.summary = "hitting exponent " + str(fit.slope) + ", R2 " + str(fit.r_squared);
    return r;
}

// -- suspensions -----------------------------------------------------------------

double digit_rate_oracle(double eps) {
    const double q = 0.5 + eps;
    return -(q * std::log(2.0 * q) + (1.0 - q) * std::log(2.0 * (1.0 - q)));
}

ExperimentResult run_large_deviations(const std::string& system, const Params& p, const RunContext& ctx) {
    const Semiflow sf = semiflow_of(system);
    const bool lorenz = system == "suspension:geolorenz";
    const FiberObservable psi =
        lorenz ? observable_of_base("bump", [](double x) { return std::exp(-(x - 0.3) * (x - 0.3) / 0.08); })
               : observable_of_base("digit", [](double x) { return x >= 0.5 ? 1.0 : 0.0; });
    const double nu = lorenz ? space_average(sf, psi, 2'000'000, ctx.seed) : 0.5;
    const auto grid = linspace_grid(p.number("T_min"), p.number("T_max"), p.number("T_step"));
    ExperimentResult r;
    Table t = make_table("curve", {"T", "fraction", "seed"});
    Table s = make_table("rates", {"seed", "rate", "r_squared"});
    bool ok = true;
    std::string summary;
    for (std::size_t k = 0; k < p.count("seeds"); ++k) {
        const DeviationCurve c = estimate_deviation_rate(sf, psi, nu, p.number("epsilon"), grid, p.count("ensemble"),
                                                         ctx.seed + 100 * k, ctx.threads);
        for (std::size_t i = 0; i < grid.size(); ++i) t.add_row({fmt(grid[i]), fmt(c.curve.fractions[i]), fmt(std::uint64_t(k))});
        s.add_row({fmt(std::uint64_t(k)), fmt(c.curve.rate), fmt(c.curve.fit.r_squared)});
        if (lorenz) {
            ok = ok && !c.curve.rate_is_floor && c.curve.rate < 0.0;
        } else {
            const double oracle = digit_rate_oracle(p.number("epsilon"));
            ok = ok && std::abs(c.curve.rate - oracle) <= 0.5 * std::abs(oracle);
        }
        summary += (summary.empty() ? "rates " : ", ") + str(c.curve.rate);
    }
    r.tables.push_back(t);
    r.tables.push_back(s);
    r.pass = ok;
    r.summary = summary + (lorenz ? "" : " against " + str(digit_rate_oracle(p.number("epsilon"))));
    return r;
}

ExperimentResult run_escape_rate(const std::string& system, const Params& p, const RunContext& ctx) {
    EscapeBox box{p.number("k_lo"), p.number("k_hi"), 0.0, 1e300, p.text("symmetric") == "true"};
    EscapeReport rep;
    std::string grid_name;
    if (system.rfind("suspension:", 0) == 0) {
        rep = escape_rate(semiflow_of(system), box, linspace_grid(p.number("T_step"), p.number("T_max"), p.number("T_step")),
                          p.count("ensemble"), ctx.seed, ctx.threads);
        grid_name = "T";
    } else {
        std::vector<std::size_t> grid;
        for (std::size_t n = 0; n <= p.count("n_max"); ++n) grid.push_back(n);
        rep = escape_rate(base_map(system), box, grid, p.count("ensemble"), ctx.seed);
        grid_name = "n";
    }
    ExperimentResult r;
    r.tables.push_back(rate_table(rep.curve, grid_name));
    r.pass = rep.pass;
    r.summary = (rep.applicable ? "rate " + str(rep.curve.rate) : "not applicable, K has full measure") +
                ", occupancy " + str(rep.occupancy);
    return r;
}

ExperimentResult run_time_decomposition(const std::string& system, const Params& p, const RunContext& ctx) {
    const Semiflow sf = semiflow_of(system);
    FiberObservable psi;
    psi.id = "sin3x_plus_sx";
    psi.value = [](double x, double s) { return std::sin(3.0 * x) + s * x; };
    psi.fiber_integral = [](double x, double a, double b) { return std::sin(3.0 * x) * (b - a) + 0.5 * x * (b * b - a * a); };
    Rng rng(ctx.seed);
    ExperimentResult r;
    Table t = make_table("cases", {"x", "s", "T", "laps", "direct", "decomposed", "residual"});
    double worst = 0.0;
    for (std::size_t i = 0; i < p.count("cases"); ++i) {
        double x = random_point(sf.base, rng);
        for (double sp : sf.base.singular)
            if (x == sp) x = sp + 1e-9;
        const double s = uniform01(rng) * sf.r(x);
        const double T = uniform(rng, 0.0, p.number("T_max"));
        const TimeDecomposition d = check_time_decomposition(sf, psi, {x, s}, T);
        worst = std::max(worst, d.residual / std::max(T, 1e-300));
        t.add_row({fmt(x), fmt(s), fmt(T), fmt(std::uint64_t(d.laps)), fmt(d.direct), fmt(d.decomposed), fmt(d.residual)});
    }
    r.tables.push_back(t);
    r.pass = worst < p.number("tol");
    r.summary = "max residual / T = " + str(worst);
    return r;
}

// -- chaoticity and expansiveness ------------------------------------------------

std::vector<Vec3> field_seeds(const std::string& system, const VectorField& f, std::size_t n, Rng& rng) {
    std::vector<Vec3> out;
    if (system == "lorenz") {
        const Trajectory tr = integrate(f, Vec3(1.0, 1.0, 20.0), 50.0 + static_cast<double>(n), IntegratorConfig{});
        for (std::size_t i = 0; i < n; ++i) out.push_back(tr.at(50.0 + static_cast<double>(i)));
        return out;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (system == "torus") {
            const double a = uniform(rng, 0.0, 6.283185307179586), b = uniform(rng, 0.0, 6.283185307179586);
            const double rho = 2.0 + 0.5 * std::cos(b);
            out.emplace_back(rho * std::cos(a), rho * std::sin(a), 0.5 * std::sin(b));
        } else {
            out.emplace_back(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0));
        }
    }
    return out;
}

Direction direction_of(const std::string& s) {
    if (s == "future") return Direction::future;
    if (s == "past") return Direction::past;
    return Direction::both;
}

ExperimentResult run_chaoticity(const std::string& system, const Params& p, const RunContext& ctx) {
    ChaoticityConfig cfg;
    cfg.r = p.number("r");
    cfg.probe_radius = p.number("probe_radius");
    cfg.probes = p.count("probes");
    cfg.horizon = p.number("horizon");
    cfg.direction = direction_of(p.text("direction"));
    const std::size_t n = p.count("seeds");
    Rng rng(ctx.seed);
    ChaoticityReport rep;
    if (system == "geolorenz") {
        const gl::GeoLorenzParams gp;
        const auto att = gl::sample_attractor(gp, 1000 + 50 * n, 1000, ctx.seed);
        std::vector<Vec2> seeds;
        for (std::size_t i = 0; i < n; ++i) seeds.push_back(att.points[50 * i]);
        rep = test_chaoticity(gp, seeds, cfg, IntegratorConfig{}, ctx.seed, ctx.threads);
        rep.volume = trapped_volume(gp, 10000, 20, ctx.seed);
    } else {
        const VectorField f = make_field(system);
        rep = test_chaoticity(f, field_seeds(system, f, n, rng), cfg, IntegratorConfig{}, ctx.seed, ctx.threads);
    }
    ExperimentResult r;
    Table t = make_table("seeds", {"seed", "future_time", "future_distance", "past_time", "past_distance", "passed"});
    for (std::size_t i = 0; i < rep.seeds.size(); ++i) {
        const SeedOutcome& o = rep.seeds[i];
        t.add_row({fmt(std::uint64_t(i)), o.future ? fmt(o.future->time) : "", o.future ? fmt(o.future->distance) : "",
                   o.past ? fmt(o.past->time) : "", o.past ? fmt(o.past->distance) : "", fmt(o.passed)});
    }
    r.tables.push_back(t);
    r.pass = rep.verdict != Verdict::no_verdict && rep.pass_fraction >= p.number("min_fraction");
    r.summary = to_string(rep.verdict) + ", witnesses for " + str(100.0 * rep.pass_fraction) + "% of seeds, " +
                std::to_string(rep.probes_used) + " probes";
    if (rep.volume)
        r.summary += ", trapped volume fractions " + str(rep.volume->forward_fraction) + " / " + str(rep.volume->backward_fraction);
    return r;
}

ExperimentResult run_expansiveness(const std::string& system, const Params& p, const RunContext& ctx) {
    ExpansivenessConfig cfg;
    cfg.epsilon = p.number("epsilon");
    cfg.delta = p.number("delta");
    cfg.horizon = p.number("horizon");
    cfg.pairs = p.count("pairs");
    cfg.align.L = p.number("L");
    ExpansivenessReport rep;
    if (system == "geolorenz") {
        rep = falsify_expansiveness(gl::GeoLorenzParams{}, cfg, ctx.seed, ctx.threads);
    } else {
        Rng rng(ctx.seed);
        std::vector<Vec3> starts;
        for (std::size_t i = 0; i < cfg.pairs; ++i) starts.emplace_back(uniform(rng, 0.5, 1.5), 0.0, uniform(rng, -1.0, 1.0));
        const CrossSection sec = CrossSection::make(Vec3::Zero(), Vec3::UnitY(), Vec3::UnitX(), 1e9, 1e9, 1);
        rep = falsify_expansiveness(make_field(system), sec, starts, cfg, IntegratorConfig{}, ctx.seed, ctx.threads);
    }
    ExperimentResult r;
    Table t = make_table("pairs", {"pair", "class", "max_distance"});
    for (std::size_t i = 0; i < rep.pairs.size(); ++i)
        t.add_row({fmt(std::uint64_t(i)), to_string(rep.pairs[i].cls), fmt(rep.pairs[i].max_distance)});
    r.tables.push_back(t);
    r.pass = !rep.partial && rep.certificate_fraction >= p.number("min_fraction");
    r.summary = std::to_string(rep.certificates) + " certificates, " + std::to_string(rep.near_counterexamples) +
                " near-counterexamples, " + std::to_string(rep.excluded) + " same-orbit" + (rep.partial ? " (partial)" : "");
    return r;
}

const std::vector<std::string> kMaps = {"doubling", "tent", "geolorenz"};
const std::vector<std::string> kSuspensions = {"suspension:doubling", "suspension:tent", "suspension:geolorenz"};

std::vector<ExperimentKind> build_registry() {
    std::vector<ExperimentKind> k;
    k.push_back({"lyapunov", "Lyapunov spectrum by QR re-orthonormalisation", {"lorenz", "linear"},
                 with({{"T", Type::number, "1000", "integration time", {}},
                       {"reortho", Type::number, "0.5", "re-orthonormalisation interval", {}},
                       {"tol", Type::number, "0.01", "linear: allowed deviation from the eigenvalues", {}}},
                      kFieldParams),
                 run_lyapunov});
    k.push_back({"lorenz-like", "eigenvalues at the origin and the Lorenz-like inequalities", {"lorenz", "linear"},
                 kFieldParams, run_lorenz_like});
    k.push_back({"singular-hyperbolicity", "domination and central volume expansion along an orbit", {"linear", "lorenz"},
                 with({{"T", Type::number, "250", "integration time, at least ten windows", {}},
                       {"reortho", Type::number, "0.5", "re-orthonormalisation interval", {}},
                       {"window", Type::number, "20", "length of the fitted curves", {}},
                       {"transient", Type::number, "10", "discarded time at both ends", {}}},
                      kFieldParams),
                 run_singular_hyperbolicity});
    k.push_back({"section-hyperbolicity", "contraction, expansion and cone tests on the return map", {"geolorenz"},
                 {{"samples", Type::count, "1000", "sample points", {}},
                  {"iterate", Type::count, "3", "iterate of the return map", {}},
                  {"lambda", Type::number, "0.3333333333333333", "contraction bound", {}},
                  {"rho", Type::number, "0.5", "cone width", {}}},
                 run_section_hyperbolicity});
    k.push_back({"return-map", "first returns of the simulated flow against the closed form", {"geolorenz"},
                 {{"seeds", Type::count, "200", "seed points on S", {}},
                  {"ode_tol", Type::number, "1e-12", "integrator tolerance", {}},
                  {"tol", Type::number, "1e-6", "allowed error", {}}},
                 run_return_map});
    k.push_back({"backward-separation", "separation of stable-leaf pairs under backward iteration", {"geolorenz"},
                 {{"pairs", Type::count, "100", "leaf pairs", {}},
                  {"distance", Type::number, "1e-8", "initial leaf distance", {}},
                  {"r", Type::number, "0.1", "separation constant", {}},
                  {"horizon", Type::count, "40", "backward steps", {}}},
                 run_backward_separation});
    k.push_back({"invariant-measure", "histogram of a long orbit", kMaps,
                 {{"n", Type::count, "1000000", "orbit length", {}},
                  {"burn_in", Type::count, "1000", "discarded steps", {}},
                  {"bins", Type::count, "100", "histogram bins", {}},
                  {"tol", Type::number, "0.02", "total variation to Lebesgue (doubling, tent)", {}}},
                 run_invariant_measure});
    k.push_back({"correlation", "decay of correlations of x - centre", kMaps,
                 {{"n", Type::count, "1000000", "orbit length", {}},
                  {"max_lag", Type::count, "10", "largest lag", {}},
                  {"burn_in", Type::count, "1000", "discarded steps", {}}},
                 run_correlation});
    k.push_back({"entropy", "integral of log|f'| against the metric entropy", kMaps,
                 {{"n", Type::count, "1000000", "orbit length", {}},
                  {"tol", Type::number, "0.01", "allowed gap", {}}},
                 run_entropy});
    k.push_back({"nue", "non-uniform expansion of the base map", kMaps,
                 {{"n", Type::count, "1000", "orbit length", {}}, {"ensemble", Type::count, "1000", "orbits", {}}},
                 run_nue});
    k.push_back({"slow-recurrence", "deviation of the log distance to the singular set", kMaps,
                 {{"delta", Type::number, "auto", "truncation distance; auto is 0.05 for geolorenz, 0.1 otherwise", {}},
                  {"epsilon", Type::number, "auto", "threshold; auto is 0.5 for doubling, 1 otherwise", {}},
                  {"n_step", Type::count, "10", "grid step", {}},
                  {"n_max", Type::count, "200", "largest n", {}},
                  {"ensemble", Type::count, "100000", "starting points", {}}},
                 run_slow_recurrence});
    k.push_back({"local-dimension", "ball-mass scaling; for geolorenz the map and flow relation", kMaps,
                 {{"n", Type::count, "1000000", "cloud size", {}},
                  {"centers", Type::count, "10", "ball centres", {}},
                  {"r_max", Type::number, "0.1", "largest radius", {}},
                  {"r_min", Type::number, "0.001", "smallest radius", {}},
                  {"flow_time", Type::number, "400000", "geolorenz: time average length", {}},
                  {"tol", Type::number, "0.15", "allowed deviation", {}}},
                 run_local_dimension});
    k.push_back({"hitting-time", "log-law of first entry times", {"doubling", "tent", "geolorenz", "suspension:doubling", "suspension:tent"},
                 {{"starts", Type::count, "20", "starting points", {}},
                  {"r_max", Type::number, "0.1", "largest radius", {}},
                  {"r_min", Type::number, "1e-5", "smallest radius", {}},
                  {"target", Type::number, "0.3141592653589793", "target point (maps, suspensions)", {}},
                  {"budget", Type::number, "1e8", "censoring budget", {}},
                  {"tol", Type::number, "0.1", "allowed deviation", {}}},
                 run_hitting_time});
    k.push_back({"large-deviations", "deviation probabilities of time averages", {"suspension:doubling", "suspension:geolorenz"},
                 {{"epsilon", Type::number, "0.1", "deviation", {}},
                  {"T_min", Type::number, "20", "first time", {}},
                  {"T_max", Type::number, "400", "last time", {}},
                  {"T_step", Type::number, "20", "time step", {}},
                  {"ensemble", Type::count, "200000", "starting points", {}},
                  {"seeds", Type::count, "2", "independent repetitions", {}}},
                 run_large_deviations});
    k.push_back({"escape-rate", "survival in a compact set", {"doubling", "tent", "suspension:doubling", "suspension:geolorenz"},
                 {{"k_lo", Type::number, "0", "lower end of K", {}},
                  {"k_hi", Type::number, "0.5", "upper end of K", {}},
                  {"symmetric", Type::text, "false", "test |x| against K", {"true", "false"}},
                  {"n_max", Type::count, "12", "maps: largest n", {}},
                  {"T_step", Type::number, "1", "suspensions: time step", {}},
                  {"T_max", Type::number, "12", "suspensions: largest time", {}},
                  {"ensemble", Type::count, "200000", "starting points", {}}},
                 run_escape_rate});
    k.push_back({"time-decomposition", "Birkhoff integral against the lap decomposition", kSuspensions,
                 {{"cases", Type::count, "100", "random (z, T)", {}},
                  {"T_max", Type::number, "50", "largest T", {}},
                  {"tol", Type::number, "1e-6", "allowed residual / T", {}}},
                 run_time_decomposition});
    k.push_back({"chaoticity", "separation witnesses in the future and the past", {"geolorenz", "lorenz", "sink", "rotation", "torus"},
                 {{"r", Type::number, "0.2", "separation constant", {}},
                  {"probe_radius", Type::number, "1e-6", "probe ball radius", {}},
                  {"probes", Type::count, "8", "probes per seed and direction", {}},
                  {"horizon", Type::number, "200", "time horizon", {}},
                  {"direction", Type::text, "both", "future, past or both", {"future", "past", "both"}},
                  {"seeds", Type::count, "100", "seed points", {}},
                  {"min_fraction", Type::number, "0.99", "required fraction of seeds with witnesses", {}}},
                 run_chaoticity});
    k.push_back({"expansiveness", "reparametrised shadowing search over section hits", {"geolorenz", "rotation", "torus"},
                 {{"epsilon", Type::number, "0.05", "same-orbit window", {}},
                  {"delta", Type::number, "0.001", "shadowing distance", {}},
                  {"horizon", Type::number, "50", "time horizon each way", {}},
                  {"pairs", Type::count, "50", "sampled pairs", {}},
                  {"L", Type::number, "4", "slope bound of h", {}},
                  {"min_fraction", Type::number, "0.95", "required certificate fraction", {}}},
                 run_expansiveness});
    return k;
}

}  // namespace

const std::vector<ExperimentKind>& experiment_kinds() {
    static const std::vector<ExperimentKind> registry = build_registry();
    return registry;
}

const ExperimentKind& find_kind(const std::string& kind, const std::string& key) {
    for (const ExperimentKind& k : experiment_kinds())
        if (k.kind == kind) return k;
    throw ConfigError(key, key + ": unknown experiment kind '" + kind + "'");
}

void validate_experiment(const ExperimentConfig& cfg) {
    const ExperimentKind& k = find_kind(cfg.kind, cfg.name + ".kind");
    if (std::find(k.systems.begin(), k.systems.end(), cfg.system) == k.systems.end()) {
        std::string allowed;
        for (const auto& s : k.systems) allowed += (allowed.empty() ? "" : ", ") + s;
        throw ConfigError(cfg.name + ".system", cfg.name + ".system: '" + cfg.system + "' not supported by " + cfg.kind +
                                                    " (" + allowed + ")");
    }
    for (const auto& [key, value] : cfg.params) {
        const std::string full = cfg.name + "." + key;
        const auto it = std::find_if(k.params.begin(), k.params.end(), [&](const ParamSpec& s) { return s.name == key; });
        if (it == k.params.end()) throw ConfigError(full, full + ": unknown key for " + cfg.kind);
        switch (it->type) {
            case Type::number:
                if (!(value == "auto" && it->fallback == "auto")) parse_number(full, value);
                break;
            case Type::count: parse_count(full, value); break;
            case Type::text:
                if (!it->choices.empty() && std::find(it->choices.begin(), it->choices.end(), value) == it->choices.end())
                    throw ConfigError(full, full + ": '" + value + "' is not one of the allowed values");
                break;
        }
    }
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunContext& ctx) {
    validate_experiment(cfg);
    const ExperimentKind& k = find_kind(cfg.kind);
    const Params params(k.params, cfg);
    ExperimentResult r = k.run(cfg.system, params, ctx);
    for (Table& t : r.tables) t.name = cfg.name + (r.tables.size() > 1 || t.name.empty() ? "_" + t.name : "");
    for (PlotRequest& pr : r.plots) pr.table = cfg.name + (r.tables.size() > 1 ? "_" + pr.table : "");
    return r;
}

}  // namespace singlab::cli
