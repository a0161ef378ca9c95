#include <gtest/gtest.h>

#include <cmath>

#include "singlab/chaostest.hpp"

using namespace singlab;
namespace gl = singlab::geolorenz;

namespace {

std::vector<Vec3> box_seeds(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Vec3> out;
    for (std::size_t i = 0; i < n; ++i) out.emplace_back(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
    return out;
}

std::vector<Vec3> torus_seeds(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Vec3> out;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = uniform(rng, 0.0, 6.283185307179586), b = uniform(rng, 0.0, 6.283185307179586);
        const double rho = 2.0 + 0.5 * std::cos(b);
        out.emplace_back(rho * std::cos(a), rho * std::sin(a), 0.5 * std::sin(b));
    }
    return out;
}

std::vector<Vec2> attractor_seeds(const gl::GeoLorenzParams& p, std::size_t n) {
    const auto att = gl::sample_attractor(p, 1000 + 50 * n, 1000, 3);
    std::vector<Vec2> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(att.points[50 * i]);
    return out;
}

SectionOrbit circle_orbit(double shift, std::size_t laps) {
    SectionOrbit o;
    for (std::size_t k = 0; k <= laps; ++k) o.hits.push_back(static_cast<double>(k));
    o.position = [shift](double t) {
        const double a = 6.283185307179586 * (t + shift);
        return Vec3(std::cos(a), std::sin(a), 0.3 * std::sin(2.0 * a));
    };
    return o;
}

}  // namespace

TEST(ChaoticityConfig, Validation) {
    ChaoticityConfig c;
    EXPECT_NO_THROW(c.validate());
    c.probe_radius = 0.5;
    EXPECT_THROW(c.validate(), DomainError);
    c = ChaoticityConfig{};
    c.horizon = 0.0;
    EXPECT_THROW(c.validate(), DomainError);
    c = ChaoticityConfig{};
    c.probes = 0;
    EXPECT_THROW(c.validate(), DomainError);
}

TEST(Chaoticity, SinkFailsFuture) {
    ChaoticityConfig cfg;
    cfg.direction = Direction::future;
    cfg.horizon = 20.0;
    const auto rep = test_chaoticity(make_field("sink"), box_seeds(10, 1), cfg, IntegratorConfig{}, 1);
    EXPECT_EQ(rep.verdict, Verdict::fail);
    EXPECT_EQ(rep.failures.size(), 10u);
    for (const auto& s : rep.seeds) EXPECT_FALSE(s.future);
}

TEST(Chaoticity, TorusFailsBothDirections) {
    ChaoticityConfig cfg;
    cfg.horizon = 50.0;
    const auto rep = test_chaoticity(make_field("torus"), torus_seeds(10, 2), cfg, IntegratorConfig{}, 1);
    EXPECT_EQ(rep.verdict, Verdict::fail);
    for (const auto& s : rep.seeds) {
        EXPECT_FALSE(s.future);
        EXPECT_FALSE(s.past);
    }
}

TEST(Chaoticity, RotationFails) {
    ChaoticityConfig cfg;
    cfg.horizon = 50.0;
    const auto rep = test_chaoticity(make_field("rotation"), box_seeds(10, 3), cfg, IntegratorConfig{}, 1);
    EXPECT_NE(rep.verdict, Verdict::chaotic_evidence);
    EXPECT_EQ(rep.pass_fraction, 0.0);
}

TEST(Chaoticity, GeoLorenzWitnessesBothWays) {
    const gl::GeoLorenzParams p;
    const auto rep = test_chaoticity(p, attractor_seeds(p, 30), ChaoticityConfig{}, IntegratorConfig{}, 5);
    EXPECT_GE(rep.pass_fraction, 0.99);
    EXPECT_EQ(rep.verdict, Verdict::chaotic_evidence);
    for (const auto& s : rep.seeds) {
        ASSERT_TRUE(s.future && s.past);
        EXPECT_GE(s.future->distance, 0.2);
        EXPECT_GE(s.past->distance, 0.2);
        EXPECT_GT(s.future->time, 0.0);
        EXPECT_LT(s.past->time, 0.0);
    }
}

TEST(Chaoticity, GeoLorenzEventsReplay) {
    const gl::GeoLorenzParams p;
    const auto rep = test_chaoticity(p, attractor_seeds(p, 10), ChaoticityConfig{}, IntegratorConfig{}, 7);
    for (const auto& s : rep.seeds) {
        for (const auto& ev : {s.future, s.past}) {
            if (!ev) continue;
            const double d = replay_separation(p, *ev, IntegratorConfig{});
            EXPECT_NEAR(d, ev->distance, 0.01 * ev->distance);
            EXPECT_GE(d, 0.2 * 0.99);
        }
    }
}

TEST(Chaoticity, LorenzEventsReplay) {
    const VectorField f = make_field("lorenz");
    const Trajectory tr = integrate(f, Vec3(1, 1, 20), 60.0, IntegratorConfig{});
    std::vector<Vec3> seeds;
    for (int i = 0; i < 5; ++i) seeds.push_back(tr.at(50.0 + 2.0 * i));
    ChaoticityConfig cfg;
    cfg.direction = Direction::future;
    cfg.horizon = 50.0;
    const auto rep = test_chaoticity(f, seeds, cfg, IntegratorConfig{}, 2);
    EXPECT_EQ(rep.verdict, Verdict::chaotic_evidence);
    for (const auto& s : rep.seeds) {
        ASSERT_TRUE(s.future);
        EXPECT_NEAR(replay_separation(f, *s.future, IntegratorConfig{}), s.future->distance, 0.01 * s.future->distance);
    }
}

TEST(Chaoticity, Deterministic) {
    const gl::GeoLorenzParams p;
    const auto seeds = attractor_seeds(p, 5);
    const auto a = test_chaoticity(p, seeds, ChaoticityConfig{}, IntegratorConfig{}, 9, 1);
    const auto b = test_chaoticity(p, seeds, ChaoticityConfig{}, IntegratorConfig{}, 9, 3);
    ASSERT_EQ(a.seeds.size(), b.seeds.size());
    for (std::size_t i = 0; i < a.seeds.size(); ++i) {
        ASSERT_EQ(a.seeds[i].future.has_value(), b.seeds[i].future.has_value());
        if (a.seeds[i].future) EXPECT_EQ(a.seeds[i].future->time, b.seeds[i].future->time);
    }
}

TEST(TrappedVolume, GeoLorenzBackwardNull) {
    // S is forward invariant, so only the backward-trapped set can be thin.
    const TrappedVolume v = trapped_volume(gl::GeoLorenzParams{}, 5000, 20, 1);
    EXPECT_EQ(v.forward_fraction, 1.0);
    EXPECT_LT(v.backward_fraction, 1e-3);
    EXPECT_FALSE(v.corroborates);
}

TEST(TrappedVolume, SinkTrapsEverything) {
    const TrappedVolume v =
        trapped_volume(make_field("sink"), Vec3(-1, -1, -1), Vec3(1, 1, 1), 200, 10.0, IntegratorConfig{}, 1);
    EXPECT_EQ(v.forward_fraction, 1.0);
    EXPECT_FALSE(v.corroborates);
}

TEST(BackwardSeparation, TwelveSteps) {
    const gl::GeoLorenzParams p;
    ASSERT_LE(p.c_y, 0.25);
    std::vector<LeafPair> pairs{{0.5, 0.1, 0.1 + 1e-8}, {-0.7, -0.3, -0.3 + 1e-8}, {0.99, 0.0, 1e-8}};
    const auto rep = backward_separation_check(p, pairs, 0.1, 40, 1);
    for (std::size_t s : rep.steps) EXPECT_LE(s, 12u);
    EXPECT_TRUE(rep.all_separated);
    EXPECT_TRUE(rep.pass);
}

TEST(BackwardSeparation, IdenticalPointsNeverSeparate) {
    const auto rep = backward_separation_check(gl::GeoLorenzParams{}, {{0.5, 0.2, 0.2}}, 0.1, 40, 1);
    EXPECT_EQ(rep.steps[0], 41u);
    EXPECT_FALSE(rep.all_separated);
    EXPECT_FALSE(rep.pass);
}

TEST(BackwardSeparation, RandomPairsRate) {
    const gl::GeoLorenzParams p;
    Rng rng(4);
    std::vector<LeafPair> pairs;
    for (int i = 0; i < 100; ++i) {
        const double y = uniform(rng, -0.5, 0.5);
        pairs.push_back({uniform(rng, -1, 1), y, y + 1e-8});
    }
    const auto rep = backward_separation_check(p, pairs, 0.1, 40, 2);
    EXPECT_NEAR(rep.rate_bound, std::log(1.0 / p.c_y) - 0.1, 1e-12);
    EXPECT_GE(rep.min_rate, std::log(4.0) - 0.1);
    EXPECT_TRUE(rep.pass);
}

TEST(ReparamPath, Validity) {
    ReparamPath id{{{0, 0}, {1, 1}, {2, 2}}};
    EXPECT_TRUE(id.valid(1.0));
    ReparamPath steep{{{0, 0}, {1, 3}}};
    EXPECT_FALSE(steep.valid(2.0));
    EXPECT_TRUE(steep.valid(3.0));
    ReparamPath flat{{{0, 0}, {1, 1}, {2, 1}}};
    EXPECT_FALSE(flat.valid(100.0));
    ReparamPath back{{{0, 0}, {1, 1}, {0.5, 2}}};
    EXPECT_FALSE(back.valid(100.0));
}

TEST(Alignment, TimeShiftedCopyRecovered) {
    const SectionOrbit a = circle_orbit(0.0, 12), b = circle_orbit(1.0, 12);
    const Alignment al = align_orbits(a, b, AlignmentOptions{});
    EXPECT_LT(al.max_distance, 1e-9);
    EXPECT_TRUE(al.path.valid(AlignmentOptions{}.L));
    EXPECT_FALSE(al.exhausted);
}

TEST(Alignment, MonotoneInL) {
    // b runs at a different speed: fewer slopes fit under small L.
    SectionOrbit a = circle_orbit(0.0, 10), b;
    for (std::size_t k = 0; k <= 10; ++k) b.hits.push_back(1.7 * static_cast<double>(k));
    b.position = [](double t) {
        const double a = 6.283185307179586 * t / 1.7;
        return Vec3(1.001 * std::cos(a), std::sin(a), 0.3 * std::sin(2.0 * a));
    };
    double prev = 1e300;
    for (double L : {1.2, 1.5, 2.0, 4.0, 8.0}) {
        AlignmentOptions o;
        o.L = L;
        const double d = align_orbits(a, b, o).max_distance;
        EXPECT_LE(d, prev + 1e-12) << L;
        prev = d;
    }
    EXPECT_LT(prev, 0.01);
}

TEST(Alignment, BudgetExhaustion) {
    AlignmentOptions o;
    o.budget = 10;
    EXPECT_TRUE(align_orbits(circle_orbit(0.0, 12), circle_orbit(0.0, 12), o).exhausted);
}

TEST(Expansiveness, ConfigValidation) {
    ExpansivenessConfig c;
    EXPECT_NO_THROW(c.validate());
    c.delta = 0.1;
    EXPECT_THROW(c.validate(), DomainError);
    c = ExpansivenessConfig{};
    c.align.L = 0.5;
    EXPECT_THROW(c.validate(), DomainError);
}

TEST(Expansiveness, RotationNearCounterexamples) {
    ExpansivenessConfig cfg;
    cfg.pairs = 10;
    cfg.horizon = 20.0;
    Rng rng(1);
    std::vector<Vec3> starts;
    for (std::size_t i = 0; i < cfg.pairs; ++i) starts.emplace_back(uniform(rng, 0.5, 1.5), 0.0, uniform(rng, -1.0, 1.0));
    const CrossSection sec = CrossSection::make(Vec3::Zero(), Vec3::UnitY(), Vec3::UnitX(), 1e9, 1e9, 1);
    const auto rep = falsify_expansiveness(make_field("rotation"), sec, starts, cfg, IntegratorConfig{}, 1);
    EXPECT_EQ(rep.certificates, 0u);
    EXPECT_EQ(rep.near_counterexamples + rep.excluded, cfg.pairs);
    EXPECT_GT(rep.near_counterexamples, 0u);
}

TEST(Expansiveness, GeoLorenzCertificates) {
    ExpansivenessConfig cfg;
    cfg.pairs = 20;
    const auto rep = falsify_expansiveness(gl::GeoLorenzParams{}, cfg, 3);
    EXPECT_FALSE(rep.partial);
    EXPECT_GE(rep.certificate_fraction, 0.95);
    for (const auto& pr : rep.pairs)
        EXPECT_TRUE(pr.path.valid(cfg.align.L));
}

TEST(Expansiveness, ShiftedOrbitIsSameOrbit) {
    const gl::GeoLorenzParams p;
    const Vec2 z = attractor_seeds(p, 1)[0];
    const gl::FlowState x{z, 0.0}, y = gl::flow_advance(p, x, 0.01);
    ExpansivenessConfig cfg;
    const PairResult r = classify_pair(geolorenz_orbit(p, x, cfg.horizon), geolorenz_orbit(p, x, cfg.horizon, true),
                                       geolorenz_orbit(p, y, cfg.horizon), geolorenz_orbit(p, y, cfg.horizon, true), cfg);
    EXPECT_EQ(r.cls, PairClass::same_orbit);
    EXPECT_LT(r.max_distance, 1e-9);
}
