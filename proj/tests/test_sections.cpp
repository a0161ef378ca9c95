#include <gtest/gtest.h>

#include <cmath>

#include "singlab/sections.hpp"

using namespace singlab;

namespace {

const double kTwoPi = 6.283185307179586;

CrossSection half_plane() {
    // {y = 0, 0 <= x <= 1}, crossed upward
    return CrossSection::make(Vec3(0.5, 0, 0), Vec3::UnitY(), Vec3::UnitX(), 0.5, 1.0, +1);
}

std::vector<TangentFrame> frames_of(const VectorField& f, const Vec3& x0, double T, std::uint64_t seed,
                                    const IntegratorConfig& cfg = {}) {
    Rng rng(seed);
    return integrate_with_tangent(f, x0, random_orthonormal_basis(rng), T, cfg);
}

SectionSample diag_sample(double s, double u) {
    SectionSample smp;
    smp.dr << u, 0.0, 0.0, s;
    return smp;
}

}  // namespace

TEST(CrossSection, MakeOrthonormal) {
    const CrossSection s = CrossSection::make(Vec3(1, 2, 3), Vec3(0, 0, 2), Vec3(1, 0, 1), 1, 1, 0);
    EXPECT_NEAR(s.normal.norm(), 1.0, 1e-15);
    EXPECT_NEAR(s.e1.dot(s.normal), 0.0, 1e-15);
    EXPECT_NEAR(s.e2.dot(s.normal), 0.0, 1e-15);
    EXPECT_NEAR(s.e1.dot(s.e2), 0.0, 1e-15);
    EXPECT_THROW(CrossSection::make(Vec3::Zero(), Vec3::Zero(), Vec3::UnitX(), 1, 1, 0), DomainError);
    EXPECT_THROW(CrossSection::make(Vec3::Zero(), Vec3::UnitX(), Vec3::UnitX(), 1, 1, 0), DomainError);
}

TEST(DetectCrossings, CircularPeriod) {
    const double phase = 0.3;
    IntegratorConfig cfg;
    cfg.abs_tol = cfg.rel_tol = 1e-12;
    const Trajectory tr = integrate(make_field("rotation"), Vec3(std::cos(phase), std::sin(phase), 0), 40.0, cfg);
    const CrossingReport r = detect_crossings(tr, half_plane());
    ASSERT_EQ(r.hits.size(), 6u);
    for (std::size_t k = 0; k < r.hits.size(); ++k) {
        EXPECT_NEAR(r.hits[k].time, kTwoPi * (k + 1) - phase, 1e-6);
        EXPECT_LT(std::abs(half_plane().signed_distance(r.hits[k].state)), 1e-10);
        EXPECT_EQ(r.hits[k].orientation, 1);
        if (k) EXPECT_NEAR(r.hits[k].time - r.hits[k - 1].time, kTwoPi, 1e-6);
    }
}

TEST(DetectCrossings, OneSideIsEmpty) {
    const Trajectory tr = integrate(make_field("sink"), Vec3(1, 1, 1), 5.0, IntegratorConfig{});
    EXPECT_TRUE(detect_crossings(tr, CrossSection::make(Vec3(0, 0, -1), Vec3::UnitZ(), Vec3::UnitX(), 1e9, 1e9, 0))
                    .hits.empty());
}

TEST(DetectCrossings, LorenzAgreesWithSignChanges) {
    const Trajectory tr = integrate(make_field("lorenz"), Vec3(1, 1, 20), 100.0, IntegratorConfig{});
    const CrossSection s = CrossSection::make(Vec3(0, 0, 27), Vec3::UnitZ(), Vec3::UnitX(), 1e9, 1e9, 0);
    const CrossingReport r = detect_crossings(tr, s);
    std::size_t changes = 0;
    double prev = tr.at(0.0).z() - 27.0;
    for (double t = 1e-3; t <= tr.end_time(); t += 1e-3) {
        const double d = tr.at(t).z() - 27.0;
        if ((d > 0) != (prev > 0)) ++changes;
        prev = d;
    }
    EXPECT_GT(r.hits.size(), 0u);
    EXPECT_NEAR(static_cast<double>(r.hits.size() + r.grazing), static_cast<double>(changes), 2.0);
}

TEST(DetectCrossings, OrientationFilter) {
    const Trajectory tr = integrate(make_field("rotation"), Vec3(1, 0.1, 0), 20.0, IntegratorConfig{});
    const CrossSection both = CrossSection::make(Vec3::Zero(), Vec3::UnitY(), Vec3::UnitX(), 1e9, 1e9, 0);
    const CrossSection down = CrossSection::make(Vec3::Zero(), Vec3::UnitY(), Vec3::UnitX(), 1e9, 1e9, -1);
    const auto a = detect_crossings(tr, both), b = detect_crossings(tr, down);
    EXPECT_EQ(a.hits.size(), 6u);
    EXPECT_EQ(b.hits.size(), 3u);
    for (const auto& h : b.hits) EXPECT_LT(h.state.x(), 0.0);
}

TEST(ReturnMap, CircularIdentity) {
    IntegratorConfig cfg;
    cfg.abs_tol = cfg.rel_tol = 1e-12;
    const ReturnMapData d = build_return_map(make_field("rotation"), half_plane(),
                                             {Vec3(0.3, 0, 0), Vec3(0.6, 0, 0.2), Vec3(0.9, 0, -0.4)}, 15.0, cfg);
    ASSERT_GE(d.records.size(), 3u);
    for (const auto& r : d.records) {
        EXPECT_LT((r.ret - r.entry).norm(), 1e-6);
        EXPECT_NEAR(r.return_time, kTwoPi, 1e-6);
    }
}

TEST(ReturnMap, NoReturnsWarns) {
    const ReturnMapData d = build_return_map(make_field("sink"), half_plane(), {Vec3(2, 2, 2)}, 5.0, IntegratorConfig{});
    EXPECT_TRUE(d.records.empty());
    EXPECT_FALSE(d.warnings.empty());
}

TEST(ReturnMap, LorenzSpread) {
    const CrossSection s = CrossSection::make(Vec3(0, 0, 27), Vec3::UnitZ(), Vec3::UnitX(), 1e9, 1e9, -1);
    const ReturnMapData d = build_return_map(make_field("lorenz"), s, {Vec3(1, 1, 20), Vec3(-3, 2, 25)}, 60.0,
                                             IntegratorConfig{});
    ASSERT_GT(d.records.size(), 10u);
    double lo = 1e9, hi = -1e9;
    for (const auto& r : d.records) {
        EXPECT_GT(r.return_time, 0.0);
        lo = std::min(lo, r.ret.x());
        hi = std::max(hi, r.ret.x());
    }
    EXPECT_GT(hi - lo, 0.1);
}

TEST(ReturnMap, GeoLorenzSimulationMatchesModel) {
    const geolorenz::GeoLorenzParams p;
    Rng rng(4);
    std::vector<Vec2> seeds;
    for (int i = 0; i < 100; ++i) seeds.emplace_back(uniform(rng, 0.01, 1.0) * (i % 2 ? 1 : -1), uniform(rng, -1, 1));
    const ReturnMapData d = build_geolorenz_return_map(p, seeds, IntegratorConfig{});
    ASSERT_EQ(d.records.size(), 100u);
    double worst = 0.0;
    for (const auto& r : d.records) {
        worst = std::max(worst, (r.ret - geolorenz::return_map(p, r.entry)).cwiseAbs().maxCoeff());
        EXPECT_NEAR(r.return_time, geolorenz::return_time(p, r.entry), 1e-6);
    }
    EXPECT_LT(worst, 1e-3);
}

TEST(EstimateDR, IdentityAndShear) {
    const DREstimate id = estimate_DR_local([](const Vec2& z) { return z; }, Vec2(0.2, 0.4), 1e-3);
    EXPECT_LT((id.dr - Mat2::Identity()).norm(), 1e-9);
    Mat2 shear;
    shear << 1.0, 0.7, 0.0, 1.0;
    const DREstimate sh = estimate_DR_local([&](const Vec2& z) { return Vec2(shear * z); }, Vec2(-1, 3), 1e-2);
    EXPECT_LT((sh.dr - shear).norm(), 1e-6);
    EXPECT_LT(sh.residual, 1e-9);
}

TEST(EstimateDR, GeoLorenzNearBoundary) {
    const geolorenz::GeoLorenzParams p;
    auto F = [&](const Vec2& z) { return geolorenz::return_map(p, z); };
    for (double x : {0.999, -0.999}) {
        const DREstimate e = estimate_DR_local(F, Vec2(x, 0.2), 1e-6);
        EXPECT_GE(std::abs(e.dr(0, 0)), 1.5);
        EXPECT_LE(std::abs(e.dr(1, 1)), 0.25);
        EXPECT_LT((e.dr - geolorenz::return_map_jacobian(p, Vec2(x, 0.2))).norm(), 1e-4);
    }
}

TEST(EstimateDR, DegenerateThrows) {
    std::vector<Vec2> entries, returns;
    for (int i = 0; i < 9; ++i) {
        entries.emplace_back(0.1 * i, 0.0);
        returns.emplace_back(0.1 * i, 0.0);
    }
    EXPECT_THROW(estimate_DR(entries, returns, 0, 8), NumericError);
    EXPECT_THROW(estimate_DR(entries, returns, 0, 3), DomainError);
}

TEST(SectionHyperbolicity, Synthetic) {
    const auto good = check_section_hyperbolicity({diag_sample(0.1, 4.0)}, 1.0 / 3.0, 0.5);
    EXPECT_TRUE(good.pass());
    const auto bad = check_section_hyperbolicity({diag_sample(0.5, 4.0)}, 1.0 / 3.0, 0.5);
    EXPECT_FALSE(bad.pass());
    EXPECT_FALSE(bad.stable_pass());
    EXPECT_TRUE(bad.unstable_pass());
}

TEST(SectionHyperbolicity, GeoLorenzIterates) {
    const geolorenz::GeoLorenzParams p;
    const auto one = check_section_hyperbolicity(geolorenz_section_samples(p, 1000, 1, 5), 1.0 / 3.0, 0.5);
    EXPECT_FALSE(one.unstable_pass());
    const auto three = check_section_hyperbolicity(geolorenz_section_samples(p, 1000, 3, 5), 1.0 / 3.0, 0.5);
    EXPECT_TRUE(three.pass());
    EXPECT_GE(three.min_cu_expansion, 3.375 - 1e-9);
    EXPECT_GE(three.adaptedness_margin, 1.0 - (p.off_y + p.c_y) - 1e-12);
    EXPECT_EQ(three.sample_pass.size(), 1000u);
}

TEST(SingularHyperbolicity, LinearSaddleRates) {
    const auto frames = frames_of(make_field("linear"), Vec3::Zero(), 250.0, 3);
    const SplittingEstimate e = check_singular_hyperbolicity(frames);
    EXPECT_TRUE(e.pass) << e.reason;
    EXPECT_NEAR(e.volume_rate, 9.16105, 0.01);
    EXPECT_NEAR(e.domination_rate, (-8.0 / 3.0) - (-11.0 - std::sqrt(1201.0)) / 2.0, 0.01 * 20.16);
    EXPECT_GE(e.volume_fit.r_squared, 0.9);
}

TEST(SingularHyperbolicity, ContractingFails) {
    const VectorField f = make_field("linear", {{"lambda1", -1.0}, {"lambda2", -3.0}, {"lambda3", -2.0}});
    const SplittingEstimate e = check_singular_hyperbolicity(frames_of(f, Vec3::Zero(), 250.0, 3));
    EXPECT_FALSE(e.pass);
    EXPECT_LT(e.volume_rate, 0.0);
}

TEST(SingularHyperbolicity, LorenzStableAcrossStepSizes) {
    IntegratorConfig fine;
    fine.abs_tol = fine.rel_tol = 1e-11;
    IntegratorConfig coarse;
    coarse.abs_tol = coarse.rel_tol = 1e-8;
    const auto a = check_singular_hyperbolicity(frames_of(make_field("lorenz"), Vec3(1, 1, 20), 400.0, 3, fine));
    const auto b = check_singular_hyperbolicity(frames_of(make_field("lorenz"), Vec3(1, 1, 20), 400.0, 3, coarse));
    EXPECT_TRUE(a.pass) << a.reason;
    EXPECT_GT(a.volume_rate, 0.0);
    EXPECT_NEAR(a.volume_rate, b.volume_rate, 0.05 * a.volume_rate);
}

TEST(SingularHyperbolicity, WindowTooShort) {
    const auto frames = frames_of(make_field("linear"), Vec3::Zero(), 100.0, 3);
    EXPECT_THROW(check_singular_hyperbolicity(frames), DomainError);
}

TEST(LorenzLike, Verdicts) {
    EXPECT_TRUE(check_lorenz_like(std::array<double, 3>{11.82772, -22.82772, -2.66667}).pass);
    EXPECT_FALSE(check_lorenz_like(std::array<double, 3>{1, -3, -2}).pass);
    EXPECT_TRUE(check_lorenz_like(std::array<double, 3>{3, -2, -1}).pass);
    EXPECT_TRUE(check_lorenz_like(std::array<double, 3>{-1, 3, -2}).pass);  // order of input irrelevant
    const auto c = check_lorenz_like(std::array<std::complex<double>, 3>{{{1, 2}, {1, -2}, {-3, 0}}});
    EXPECT_FALSE(c.applicable);
    EXPECT_FALSE(c.pass);
}

TEST(LorenzLike, LinearisationEigenvalues) {
    const auto ev = linearization_eigenvalues(make_field("lorenz"), Vec3::Zero());
    const LorenzLikeVerdict v = check_lorenz_like(ev);
    ASSERT_TRUE(v.applicable);
    EXPECT_TRUE(v.pass);
    EXPECT_NEAR(v.lambda[0], (-11.0 + std::sqrt(1201.0)) / 2.0, 1e-10);
    EXPECT_NEAR(v.lambda[1], (-11.0 - std::sqrt(1201.0)) / 2.0, 1e-10);
    EXPECT_NEAR(v.lambda[2], -8.0 / 3.0, 1e-10);
}
