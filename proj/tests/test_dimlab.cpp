#include <gtest/gtest.h>

#include <cmath>

#include "singlab/dimlab.hpp"
#include "singlab/parallel.hpp"
#include "singlab/suspension.hpp"

using namespace singlab;
namespace gl = singlab::geolorenz;

TEST(Radii, GeometricGrid) {
    const auto r = geometric_radii(0.1, 1e-3);
    EXPECT_DOUBLE_EQ(r.front(), 0.1);
    EXPECT_NEAR(r.back(), 1e-3, 1e-3 * 0.42);
    for (std::size_t i = 1; i < r.size(); ++i) EXPECT_NEAR(r[i - 1] / r[i], std::sqrt(2.0), 1e-12);
    EXPECT_THROW(geometric_radii(1e-3, 0.1), DomainError);
}

TEST(BallMasses, MonotoneAndBounded) {
    const auto cloud = uniform_cloud(100000, 3);
    const BallStats b = ball_masses(cloud, 0.5, geometric_radii(0.4, 1e-3));
    for (std::size_t i = 1; i < b.masses.size(); ++i) EXPECT_LE(b.masses[i], b.masses[i - 1]);
    for (double m : b.masses) {
        EXPECT_GE(m, 0.0);
        EXPECT_LE(m, 1.0);
    }
    EXPECT_NEAR(b.masses.front(), 0.8, 0.01);
}

TEST(LocalDimension, Uniform) {
    const auto cloud = uniform_cloud(1'000'000, 1);
    const ScalingFit f = local_dimension(ball_masses(cloud, 0.4321, geometric_radii(0.1, 1e-4)));
    EXPECT_NEAR(f.slope, 1.0, 0.05);
    EXPECT_GE(f.window_lo, 1e-4 * 0.99);
    EXPECT_LE(f.window_hi, 0.1 * 1.01);
}

TEST(LocalDimension, Cantor) {
    const auto cloud = cantor_cloud(1'000'000, 2);
    std::vector<BallStats> balls;
    for (std::size_t k = 0; k < 10; ++k) balls.push_back(ball_masses(cloud, cloud[k * 99991], geometric_radii(0.1, 1e-4)));
    EXPECT_NEAR(mean_local_dimension(balls).slope, std::log(2.0) / std::log(3.0), 0.05);
}

TEST(LocalDimension, CantorTimesUniform) {
    const auto c = cantor_cloud(1'000'000, 5), u = uniform_cloud(1'000'000, 6);
    std::vector<Point<2>> cloud;
    for (std::size_t i = 0; i < c.size(); ++i) cloud.emplace_back(c[i], u[i]);
    std::vector<Point<2>> centers;
    for (std::size_t k = 0; k < 10; ++k) centers.push_back(Point<2>(cloud[k * 77777].x(), 0.3 + 0.04 * k));
    EXPECT_NEAR(mean_local_dimension(cloud, centers, geometric_radii(0.1, 3e-3)).slope, 1.0 + std::log(2.0) / std::log(3.0),
                0.07);
}

TEST(LocalDimension, Preconditions) {
    EXPECT_THROW(local_dimension(ball_masses(uniform_cloud(1000, 1), 0.5, geometric_radii(0.1, 1e-3))), DomainError);
    EXPECT_THROW(local_dimension(ball_masses(uniform_cloud(200000, 1), 0.5, geometric_radii(0.1, 0.05))), DomainError);
    // Every ball too small to hold 30 points.
    EXPECT_THROW(local_dimension(ball_masses(uniform_cloud(200000, 1), 0.5, geometric_radii(1e-6, 1e-8))), NumericError);
}

TEST(Hitting, DoublingExponent) {
    const IntervalMap d = doubling_map();
    std::vector<HittingRecord> recs;
    for (std::uint64_t i = 0; i < 30; ++i) {
        Rng rng = substream(11, i);
        recs.push_back(hitting_time(d, random_point(d, rng), 0.3141592653589793, geometric_radii(0.1, 1e-5), 100'000'000, &rng));
        recs.back().check_monotone();
    }
    EXPECT_NEAR(hitting_exponent(recs).slope, 1.0, 0.1);
}

TEST(Hitting, CensoringRecorded) {
    const IntervalMap d = doubling_map();
    Rng rng(1);
    const HittingRecord r = hitting_time(d, 0.7, 0.3, geometric_radii(0.1, 1e-6), 100, &rng);
    EXPECT_TRUE(r.censored.back());
    EXPECT_EQ(r.times.back(), 100.0);
    HittingRecord bad = r;
    bad.times = {1.0, 5.0};
    bad.censored = {false, false};
    bad.radii = {0.1, 0.2};
    EXPECT_THROW(bad.check_monotone(), NumericError);
    HittingRecord all;
    all.radii = {0.1};
    all.times = {1.0};
    all.censored = {true};
    EXPECT_THROW(hitting_exponent({all}), NumericError);
}

TEST(Recurrence, DoublingExponent) {
    const IntervalMap d = doubling_map();
    std::vector<HittingRecord> recs;
    for (std::uint64_t i = 0; i < 30; ++i) {
        Rng rng = substream(5, i);
        recs.push_back(recurrence_time(d, random_point(d, rng), geometric_radii(0.1, 1e-5), 100'000'000, &rng));
    }
    EXPECT_NEAR(hitting_exponent(recs).slope, 1.0, 0.1);
}

TEST(Recurrence, PeriodicOrbitConstant) {
    auto step = [](double x) { return std::fmod(x + 0.25, 1.0); };
    auto dist = [](double x) { return std::abs(x - 0.125); };
    const HittingRecord r = recurrence_time_steps(0.125, step, dist, geometric_radii(0.2, 1e-6), 1000);
    for (std::size_t i = 0; i < r.radii.size(); ++i) {
        EXPECT_FALSE(r.censored[i]);
        EXPECT_EQ(r.times[i], 4.0);
    }
}

TEST(FlowHitting, ConstantRoofSuspension) {
    const Semiflow sf = Semiflow::constant_roof(doubling_map(), 1.0);
    std::vector<HittingRecord> recs(30);
    parallel_for(30, 1, [&](std::size_t i) {
        Rng rng = substream(3, i);
        SuspensionFlowOrbit orbit(sf, {random_point(sf.base, rng), 0.0}, 100 + i);
        recs[i] = flow_hitting_time(orbit, Vec3(0.3141592653589793, 0.5, 0.0), geometric_radii(0.1, 1e-5));
        recs[i].check_monotone();
    });
    EXPECT_NEAR(hitting_exponent(recs).slope, 1.0, 0.1);
}

TEST(FlowHitting, ExactEntryOnLine) {
    // Straight line at unit speed along x: entry into B_r(target) at distance d is t = d - r.
    class Line : public FlowOrbit {
    public:
        Vec3 position() const override { return {t_, 0.0, 0.0}; }
        double speed_bound() const override { return 1.0; }
        double time_to_break() const override { return 1e300; }
        void advance(double dt) override { t_ += dt; }
        std::unique_ptr<FlowOrbit> clone() const override { return std::make_unique<Line>(*this); }

    private:
        double t_ = 0.0;
    };
    Line line;
    const HittingRecord r = flow_hitting_time(line, Vec3(5.0, 0.0, 0.0), {1.0, 0.1, 0.01});
    EXPECT_NEAR(r.times[0], 4.0, 1e-3 * 1.0 + 1e-9);
    EXPECT_NEAR(r.times[1], 4.9, 1e-3 * 0.1 + 1e-9);
    EXPECT_NEAR(r.times[2], 4.99, 1e-3 * 0.01 + 1e-9);
}

TEST(FlowBallMasses, LineOccupation) {
    // A circle of unit speed: time fraction in B_r(point on the circle) is 2 asin(r/2) / pi.
    class Circle : public FlowOrbit {
    public:
        Vec3 position() const override { return {std::cos(t_), std::sin(t_), 0.0}; }
        double speed_bound() const override { return 1.0; }
        double time_to_break() const override { return 1e300; }
        void advance(double dt) override { t_ += dt; }
        std::unique_ptr<FlowOrbit> clone() const override { return std::make_unique<Circle>(*this); }

    private:
        double t_ = 0.0;
    };
    Circle c;
    const std::vector<double> radii{0.5, 0.1, 0.01};
    const BallStats b = flow_ball_masses(c, Vec3(1, 0, 0), radii, 6.283185307179586 * 200);
    for (std::size_t i = 0; i < radii.size(); ++i)
        EXPECT_NEAR(b.masses[i], 2.0 * std::asin(radii[i] / 2.0) / 3.141592653589793, 1e-3 * b.masses[i]) << i;
    EXPECT_GE(b.counts.back(), 199u);
}

TEST(DimensionRelation, Verdicts) {
    ScalingFit m, f;
    m.slope = 1.0;
    f.slope = 2.0;
    m.r_squared = f.r_squared = 0.99;
    m.points = f.points = 5;
    EXPECT_TRUE(check_dimension_relation(m, f).pass);
    ScalingFit cantor = m;
    cantor.slope = 0.6309;
    ScalingFit uniform = m;
    uniform.slope = 1.0;
    EXPECT_FALSE(check_dimension_relation(cantor, uniform).pass);
    f.r_squared = 0.5;
    const auto r = check_dimension_relation(m, f);
    EXPECT_FALSE(r.applicable);
    EXPECT_FALSE(r.pass);
}

TEST(DimensionRelation, ConstantRoofSuspension) {
    // Time averages of the suspension flow are Lebesgue on the unit square.
    const Semiflow sf = Semiflow::constant_roof(doubling_map(), 1.0);
    const auto radii = geometric_radii(0.1, 3e-3);
    std::vector<BallStats> map_balls, flow_balls;
    const auto cloud = uniform_cloud(1'000'000, 2);
    for (std::size_t k = 0; k < 5; ++k) {
        const double c = 0.2 + 0.13 * static_cast<double>(k);
        map_balls.push_back(ball_masses(cloud, c, radii));
        SuspensionFlowOrbit orbit(sf, {0.1234567, 0.0}, 40 + k);
        flow_balls.push_back(flow_ball_masses(orbit, Vec3(c, 0.5, 0.0), radii, 2e5));
    }
    const auto rel = check_dimension_relation(mean_local_dimension(map_balls), mean_local_dimension(flow_balls));
    EXPECT_TRUE(rel.pass) << rel.d_map << " " << rel.d_flow;
}

TEST(GeoLorenz, FlowAndMapHittingAgree) {
    const gl::GeoLorenzParams p;
    const Vec2 p0 = gl::sample_attractor(p, 2000, 1000, 1).points.back();
    const Vec3 target = gl::flow_position(p, {p0, 0.3 * gl::exit_time(p, p0.x())});
    const auto radii = geometric_radii(1e-2, 1e-4);
    std::vector<HittingRecord> map(30), flow(30);
    for (std::size_t i = 0; i < 30; ++i) {
        Rng rng = substream(7, i);
        Vec2 z(uniform(rng, -1, 1), uniform(rng, -1, 1));
        std::size_t nh = 0;
        auto step = [&](Vec2 w) {
            w.x() = gl::nudge_off_singular(w.x(), nh);
            return gl::return_map(p, w);
        };
        for (int k = 0; k < 50; ++k) z = step(z);
        map[i] = hitting_time_steps(z, step, [&](const Vec2& w) { return (w - p0).norm(); }, radii, 100'000'000);
        GeoLorenzFlowOrbit orbit(p, {z, 0.0});
        flow[i] = flow_hitting_time(orbit, target, radii);
    }
    EXPECT_NEAR(hitting_exponent(map).slope, hitting_exponent(flow).slope, 0.1);
}
