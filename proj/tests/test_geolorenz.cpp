#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "singlab/geolorenz.hpp"

using namespace singlab;
using namespace singlab::geolorenz;

namespace {

// Ulam approximation of the invariant density of f on `bins` cells of [-1, 1].
std::vector<double> ulam_density(const QuotientMapSpec& q, std::size_t bins) {
    const std::size_t per = 4000;
    const double w = 2.0 / static_cast<double>(bins);
    std::vector<std::vector<double>> P(bins, std::vector<double>(bins, 0.0));
    for (std::size_t i = 0; i < bins; ++i)
        for (std::size_t k = 0; k < per; ++k) {
            const double x = -1.0 + w * (static_cast<double>(i) + (k + 0.5) / per);
            const double fx = quotient_map(q, x);
            const auto j = std::min<std::size_t>(bins - 1, static_cast<std::size_t>((fx + 1.0) / w));
            P[i][j] += 1.0 / per;
        }
    std::vector<double> v(bins, 1.0 / static_cast<double>(bins));
    for (int it = 0; it < 2000; ++it) {
        std::vector<double> nv(bins, 0.0);
        for (std::size_t i = 0; i < bins; ++i)
            for (std::size_t j = 0; j < bins; ++j) nv[j] += v[i] * P[i][j];
        v = nv;
    }
    return v;
}

}  // namespace

TEST(Params, Validation) {
    GeoLorenzParams p;
    EXPECT_NO_THROW(p.validate());
    EXPECT_NEAR(p.alpha(), 8.0 / 3.0 / 11.83, 1e-15);
    EXPECT_NEAR(p.beta(), 22.83 / 11.83, 1e-15);
    GeoLorenzParams bad = p;
    bad.c_y = 0.6;
    EXPECT_THROW(bad.validate(), DomainError);
    bad = p;
    bad.quotient.alpha_f = 0.6;
    EXPECT_THROW(bad.validate(), DomainError);
    bad = p;
    bad.lambda2 = -5.0;  // beta < 1
    EXPECT_THROW(bad.validate(), DomainError);
}

TEST(ExitTime, Values) {
    const GeoLorenzParams p;
    EXPECT_EQ(exit_time(p, 1.0), 0.0);
    EXPECT_EQ(exit_time(p, -1.0), 0.0);
    EXPECT_NEAR(exit_time(p, 0.5), std::log(2.0) / 11.83, 1e-15);
    EXPECT_NEAR(exit_time(p, 0.5), 0.058592, 5e-7);
    EXPECT_GT(exit_time(p, 0.1), exit_time(p, 0.2));
    EXPECT_THROW(exit_time(p, 0.0), DomainError);
}

TEST(LocalTransition, MatchesLinearFlow) {
    const GeoLorenzParams p;
    const Transition t = local_transition(p, 0.5, 0.3);
    EXPECT_EQ(t.side, 1);
    const Vec3 e = linear_flow_exact(p.saddle(), Vec3(0.5, 0.3, 1.0), exit_time(p, 0.5));
    EXPECT_NEAR(t.u, e.y(), 1e-12);
    EXPECT_NEAR(t.z, e.z(), 1e-12);
    IntegratorConfig cfg;
    cfg.abs_tol = cfg.rel_tol = 1e-13;
    const IntegrationResult r = integrate_until(VectorField{p.saddle(), 1.0}, Vec3(0.5, 0.3, 1.0), 1.0, cfg,
                                                {[](const Vec3& x) { return std::abs(x.x()) - 1.0; }, +1});
    ASSERT_TRUE(r.event);
    EXPECT_NEAR(t.u, r.event->state.y(), 1e-8);
    EXPECT_NEAR(t.z, r.event->state.z(), 1e-8);
}

TEST(LocalTransition, CuspAndAxis) {
    const GeoLorenzParams p;
    const Transition a = local_transition(p, -0.3, 0.0);
    EXPECT_EQ(a.side, -1);
    EXPECT_EQ(a.u, 0.0);
    EXPECT_NEAR(a.z, std::pow(0.3, p.alpha()), 1e-15);
    const Transition c = local_transition(p, 1e-12, 0.9);
    EXPECT_LT(std::abs(c.u), 1e-20);
    EXPECT_LT(c.z, 0.01);
    EXPECT_THROW(local_transition(p, 0.0, 0.1), DomainError);
}

TEST(OuterMap, LineToLine) {
    const GeoLorenzParams p;
    EXPECT_EQ(outer_map(p, 1, 0.1, 0.7).x(), outer_map(p, 1, -0.4, 0.7).x());
    EXPECT_NEAR(outer_map(p, 1, 0.0, 1.0).x(), 1.0, 1e-15);
    EXPECT_EQ(outer_map(p, -1, 0.2, 0.4).x(), -outer_map(p, 1, 0.2, 0.4).x());
    // y' is affine in u
    const double y0 = outer_map(p, 1, 0.0, 0.5).y(), y1 = outer_map(p, 1, 0.1, 0.5).y(),
                 y2 = outer_map(p, 1, 0.2, 0.5).y();
    EXPECT_NEAR(y2 - y1, y1 - y0, 1e-15);
    EXPECT_THROW(outer_map(p, 1, 0.0, 1.5), DomainError);
}

TEST(OuterMap, ComposesToReturnMap) {
    const GeoLorenzParams p;
    for (double x : {-0.9, -0.3, 0.01, 0.5, 1.0})
        for (double y : {-1.0, 0.0, 0.7}) {
            const Transition t = local_transition(p, x, y);
            EXPECT_LT((outer_map(p, t.side, t.u, t.z) - return_map(p, x, y)).norm(), 1e-14) << x << " " << y;
        }
}

TEST(QuotientMap, Values) {
    const QuotientMapSpec q;
    EXPECT_DOUBLE_EQ(quotient_map(q, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(quotient_map(q, -1.0), -1.0);
    EXPECT_NEAR(quotient_map(q, 0.5), 0.189207, 5e-7);
    EXPECT_NEAR(quotient_map(q, 1e-12), -1.0, 1e-8);
    EXPECT_GT(quotient_deriv(q, 1e-12), 1e2);
    EXPECT_THROW(quotient_map(q, 0.0), DomainError);
    for (double x = -1.0; x <= 1.0; x += 0.001) {
        if (std::abs(x) < 1e-9) continue;
        EXPECT_DOUBLE_EQ(quotient_map(q, -x), -quotient_map(q, x));
        EXPECT_GE(quotient_deriv(q, x), 1.5 - 1e-12);
        const double h = 1e-7;
        if (std::abs(x) > 1e-3 && std::abs(x) < 1.0 - h)
            EXPECT_NEAR(quotient_deriv(q, x), (quotient_map(q, x + h) - quotient_map(q, x - h)) / (2 * h), 1e-5);
    }
}

TEST(QuotientMap, BranchInverse) {
    const QuotientMapSpec q;
    for (double y = -0.99; y < 1.0; y += 0.07) {
        EXPECT_NEAR(quotient_map(q, quotient_branch_inverse(q, 1, y)), y, 1e-13);
        EXPECT_NEAR(quotient_map(q, quotient_branch_inverse(q, -1, y)), y, 1e-13);
    }
}

TEST(ReturnMap, Values) {
    const GeoLorenzParams p;
    const Vec2 r = return_map(p, 0.5, 0.3);
    EXPECT_NEAR(r.x(), 0.189207, 5e-7);
    EXPECT_NEAR(r.y(), 0.5 + 0.25 * std::pow(0.5, 22.83 / 11.83) * 0.3, 1e-15);
    EXPECT_NEAR(r.y(), 0.519685, 5e-6);
    EXPECT_THROW(return_map(p, 0.0, 0.3), DomainError);
}

TEST(ReturnMap, FoliationInvarianceExact) {
    const GeoLorenzParams p;
    Rng rng(11);
    for (int i = 0; i < 10000; ++i) {
        const double x = uniform(rng, -1.0, 1.0);
        if (x == 0.0) continue;
        ASSERT_EQ(return_map(p, x, uniform(rng, -1.0, 1.0)).x(), return_map(p, x, uniform(rng, -1.0, 1.0)).x());
    }
}

TEST(ReturnMap, JacobianAndContraction) {
    const GeoLorenzParams p;
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        const Vec2 z(uniform(rng, 0.05, 0.95) * (i % 2 ? 1 : -1), uniform(rng, -1.0, 1.0));
        const Mat2 J = return_map_jacobian(p, z);
        const double h = 1e-7;
        for (int c = 0; c < 2; ++c) {
            const Vec2 e = Vec2::Unit(c) * h;
            const Vec2 fd = (return_map(p, z + e) - return_map(p, z - e)) / (2 * h);
            EXPECT_LT((J.col(c) - fd).norm(), 1e-5);
        }
        EXPECT_EQ(J(0, 1), 0.0);
        EXPECT_LE(std::abs(J(1, 1)), 0.25);
    }
}

TEST(ReturnMap, InverseAndImage) {
    const GeoLorenzParams p;
    Rng rng(8);
    for (int i = 0; i < 1000; ++i) {
        const Vec2 z(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0));
        if (z.x() == 0.0) continue;
        const Vec2 w = return_map(p, z);
        EXPECT_TRUE(in_image(p, w));
        const auto back = inverse_return_map(p, w);
        ASSERT_TRUE(back);
        EXPECT_LT((*back - z).norm(), 1e-9);
    }
    EXPECT_FALSE(in_image(p, Vec2(0.3, 0.0)));
    EXPECT_FALSE(inverse_return_map(p, Vec2(0.3, 0.0)));
}

TEST(ReturnMap, LeafDiameterContracts) {
    const GeoLorenzParams p;
    std::vector<Vec2> pts;
    for (double x = -0.95; x <= 0.95; x += 0.1)
        for (double y = -1.0; y <= 1.0; y += 0.25) pts.emplace_back(x, y);
    double bound = 2.0;
    for (int n = 1; n <= 5; ++n) {
        bound *= p.c_y;
        for (std::size_t i = 0; i + 8 < pts.size(); i += 9) {
            double lo = 1e9, hi = -1e9;
            for (std::size_t k = 0; k < 9; ++k) {
                Vec2 z = pts[i + k];
                for (int j = 0; j < n; ++j) z = return_map(p, z);
                lo = std::min(lo, z.y());
                hi = std::max(hi, z.y());
            }
            EXPECT_LE(hi - lo, bound + 1e-15);
        }
    }
}

TEST(Attractor, BoundsAndDeterminism) {
    const GeoLorenzParams p;
    const AttractorSample a = sample_attractor(p, 20000, 100, 3);
    const AttractorSample b = sample_attractor(p, 20000, 100, 3);
    ASSERT_EQ(a.points.size(), 19900u);
    EXPECT_EQ(a.points, b.points);
    for (const Vec2& z : a.points) {
        ASSERT_LE(std::abs(z.y()), p.off_y + p.c_y);
        ASSERT_LE(std::abs(z.x()), 1.0);
    }
    EXPECT_THROW(sample_attractor(p, 10, 10, 1), DomainError);
}

TEST(Attractor, MarginalMatchesUlam) {
    const GeoLorenzParams p;
    const std::size_t bins = 64;
    const AttractorSample a = sample_attractor(p, 1'001'000, 1000, 9);
    std::vector<double> h(bins, 0.0);
    for (const Vec2& z : a.points)
        h[std::min<std::size_t>(bins - 1, static_cast<std::size_t>((z.x() + 1.0) / 2.0 * bins))] += 1.0;
    for (double& v : h) v /= static_cast<double>(a.points.size());
    const auto u = ulam_density(p.quotient, bins);
    double tv = 0.0;
    for (std::size_t i = 0; i < bins; ++i) tv += 0.5 * std::abs(h[i] - u[i]);
    EXPECT_LT(tv, 0.05);
}

TEST(Attractor, OccupancyInvariant) {
    const GeoLorenzParams p;
    const AttractorSample a = sample_attractor(p, 1'001'000, 1000, 4);
    auto box = [](const Vec2& z) {
        const int i = std::clamp(static_cast<int>((z.x() + 1.0) * 32.0), 0, 63);
        const int j = std::clamp(static_cast<int>((z.y() + 1.0) * 32.0), 0, 63);
        return 64 * i + j;
    };
    std::set<int> before, after;
    for (const Vec2& z : a.points) {
        before.insert(box(z));
        if (z.x() != 0.0) after.insert(box(return_map(p, z)));
    }
    std::size_t diff = 0;
    for (int b : before) diff += after.count(b) ? 0 : 1;
    for (int b : after) diff += before.count(b) ? 0 : 1;
    EXPECT_LE(static_cast<double>(diff), 0.01 * static_cast<double>(before.size()));
}

TEST(Flow, PhasesAndReturn) {
    const GeoLorenzParams p;
    const Vec2 b(0.5, 0.3);
    EXPECT_LT((flow_position(p, {b, 0.0}) - Vec3(0.5, 0.3, 1.0)).norm(), 1e-15);
    const Transition t = local_transition(p, 0.5, 0.3);
    const Vec3 exit = flow_position(p, {b, exit_time(p, 0.5)});
    EXPECT_LT((exit - Vec3(1.0, t.u, t.z)).norm(), 1e-12);
    EXPECT_NEAR(return_time(p, b), exit_time(p, 0.5) + p.outer_time, 1e-15);
    const FlowState s = flow_advance(p, {b, 0.0}, return_time(p, b));
    EXPECT_LT((s.base - return_map(p, b)).norm(), 1e-15);
    EXPECT_NEAR(s.s, 0.0, 1e-12);
    const Vec2 r = return_map(p, b);
    EXPECT_LT((flow_position(p, s) - Vec3(r.x(), r.y(), 1.0)).norm(), 1e-12);
}

TEST(Flow, SemigroupAndSpeedBound) {
    const GeoLorenzParams p;
    Rng rng(2);
    for (int i = 0; i < 200; ++i) {
        const FlowState z{Vec2(uniform(rng, 0.05, 1.0), uniform(rng, -1.0, 1.0)), 0.0};
        const double a = uniform(rng, 0.0, 3.0), c = uniform(rng, 0.0, 3.0);
        const FlowState x = flow_advance(p, flow_advance(p, z, a), c), y = flow_advance(p, z, a + c);
        EXPECT_LT((flow_position(p, x) - flow_position(p, y)).norm(), 1e-9);
        const FlowState w = flow_advance(p, z, a);
        const double v = flow_velocity(p, w).norm();
        EXPECT_LE(v, flow_speed_bound(p, w) * (1 + 1e-12));
        const double dt = std::min(1e-6, phase_remaining(p, w) / 2);
        if (dt > 1e-9) {
            const Vec3 fd = (flow_position(p, flow_advance(p, w, dt)) - flow_position(p, w)) / dt;
            EXPECT_LT((fd - flow_velocity(p, w)).norm(), 1e-3 * std::max(1.0, v));
        }
    }
}

TEST(Flow, SimulationMatchesClosedForm) {
    const GeoLorenzParams p;
    IntegratorConfig cfg;
    cfg.abs_tol = cfg.rel_tol = 1e-12;
    const Trajectory tr = simulate_flow(p, Vec2(0.7, -0.2), 5.0, cfg);
    EXPECT_GE(tr.end_time(), 5.0);
    for (double t = 0.0; t < 5.0; t += 0.173)
        EXPECT_LT((tr.at(t) - flow_position(p, flow_advance(p, {Vec2(0.7, -0.2), 0.0}, t))).norm(), 1e-5) << t;
}

TEST(Nudge, CountsHits) {
    std::size_t n = 0;
    EXPECT_EQ(nudge_off_singular(0.3, n), 0.3);
    EXPECT_EQ(n, 0u);
    EXPECT_NE(nudge_off_singular(0.0, n), 0.0);
    EXPECT_EQ(n, 1u);
}
