#include "singlab/geolorenz.hpp"

#include <algorithm>
#include <cmath>

namespace singlab::geolorenz {

void GeoLorenzParams::validate() const {
    const double a = alpha(), b = beta();
    if (!(lambda1 > 0.0) || !(0.0 < a && a < 1.0 && 1.0 < b))
        throw DomainError("GeoLorenzParams: need 0 < alpha < 1 < beta");
    if (!(quotient.alpha_f > 1.0 / std::sqrt(2.0) && quotient.alpha_f < 1.0))
        throw DomainError("GeoLorenzParams: alpha_f must lie in (1/sqrt(2), 1)");
    if (!(c_y > 0.0 && c_y <= 0.5)) throw DomainError("GeoLorenzParams: c_y must lie in (0, 1/2]");
    if (!(off_y >= 0.0 && off_y + c_y <= 1.0)) throw DomainError("GeoLorenzParams: need off_y + c_y <= 1");
    if (!(outer_time > 0.0)) throw DomainError("GeoLorenzParams: outer_time must be > 0");
}

double exit_time(const GeoLorenzParams& p, double x0) {
    if (x0 == 0.0) throw DomainError("exit_time: x0 = 0 never leaves the cube (divergent time)");
    if (!(std::abs(x0) <= 1.0)) throw DomainError("exit_time: |x0| must be <= 1");
    return -std::log(std::abs(x0)) / p.lambda1;
}

Transition local_transition(const GeoLorenzParams& p, double x, double y) {
    if (x == 0.0) throw DomainError("local_transition: x on the singular line");
    if (!(std::abs(x) <= 1.0)) throw DomainError("local_transition: |x| must be <= 1");
    const double ax = std::abs(x);
    return {x > 0.0 ? 1 : -1, y * std::pow(ax, p.beta()), std::pow(ax, p.alpha())};
}

Vec2 outer_map(const GeoLorenzParams& p, int side, double u, double z) {
    if (side != 1 && side != -1) throw DomainError("outer_map: side must be +1 or -1");
    if (!(z > 0.0 && z <= 1.0)) throw DomainError("outer_map: z must lie in (0, 1]");
    if (!(std::abs(u) <= 1.0)) throw DomainError("outer_map: |u| must be <= 1");
    // |x| = z^(1/alpha) on the leaf that produced this z, so f(x) only needs z.
    const double x_new = side * (2.0 * std::pow(z, p.quotient.alpha_f / p.alpha()) - 1.0);
    const double y_new = side * p.off_y + p.c_y * u;
    return {x_new, y_new};
}

double quotient_branch_inverse(const QuotientMapSpec& q, int side, double x_image) {
    if (side > 0) return std::pow((x_image + 1.0) / 2.0, 1.0 / q.alpha_f);
    return -std::pow((1.0 - x_image) / 2.0, 1.0 / q.alpha_f);
}

Vec2 return_map(const GeoLorenzParams& p, const Vec2& point) {
    const double x = point.x(), y = point.y();
    if (x == 0.0) throw DomainError("return_map: x on the singular line");
    const double s = x > 0.0 ? 1.0 : -1.0;
    return {quotient_map(p.quotient, x), s * p.off_y + p.c_y * std::pow(std::abs(x), p.beta()) * y};
}

Mat2 return_map_jacobian(const GeoLorenzParams& p, const Vec2& point) {
    const double x = point.x(), y = point.y();
    if (x == 0.0) throw DomainError("return_map_jacobian: x on the singular line");
    const double ax = std::abs(x), s = x > 0.0 ? 1.0 : -1.0, b = p.beta();
    Mat2 j;
    j(0, 0) = quotient_deriv(p.quotient, x);
    j(0, 1) = 0.0;
    j(1, 0) = s * p.c_y * b * std::pow(ax, b - 1.0) * y;
    j(1, 1) = p.c_y * std::pow(ax, b);
    return j;
}

std::optional<Vec2> inverse_return_map(const GeoLorenzParams& p, const Vec2& point) {
    if (!(point.x() > -1.0 && point.x() <= 1.0)) return std::nullopt;
    for (int side : {1, -1}) {
        const double x = quotient_branch_inverse(p.quotient, side, point.x());
        if (x == 0.0) continue;
        const double y = (point.y() - side * p.off_y) / (p.c_y * std::pow(std::abs(x), p.beta()));
        if (std::abs(y) <= 1.0) return Vec2(x, y);
    }
    return std::nullopt;
}

bool in_image(const GeoLorenzParams& p, const Vec2& point) {
    return inverse_return_map(p, point).has_value();
}

double nudge_off_singular(double x, std::size_t& counter) {
    if (x != 0.0) return x;
    ++counter;
    return 1e-15;
}

AttractorSample sample_attractor(const GeoLorenzParams& p, std::size_t n_iter, std::size_t burn_in,
                                 std::uint64_t seed) {
    if (!(n_iter > burn_in)) throw DomainError("sample_attractor: need n_iter > burn_in");
    Rng rng(seed);
    AttractorSample out;
    out.points.reserve(n_iter - burn_in);
    Vec2 z(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0));
    for (std::size_t n = 0; n < n_iter; ++n) {
        z.x() = nudge_off_singular(z.x(), out.singular_hits);
        z = return_map(p, z);
        if (n >= burn_in) out.points.push_back(z);
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

struct Reinjection {
    Vec3 b0, b1, b2, b3;
    double duration;

    Vec3 at(double sigma) const {
        const double m = 1.0 - sigma;
        return m * m * m * b0 + 3 * m * m * sigma * b1 + 3 * m * sigma * sigma * b2 +
               sigma * sigma * sigma * b3;
    }
    Vec3 velocity(double sigma) const {
        const double m = 1.0 - sigma;
        return (3 * m * m * (b1 - b0) + 6 * m * sigma * (b2 - b1) + 3 * sigma * sigma * (b3 - b2)) /
               duration;
    }
    double speed_bound() const {
        return 3.0 * std::max({(b1 - b0).norm(), (b2 - b1).norm(), (b3 - b2).norm()}) / duration;
    }
};

Reinjection reinjection_from(const GeoLorenzParams& p, int side, double u, double z) {
    const Vec2 target = outer_map(p, side, u, z);
    Reinjection r;
    r.b0 = Vec3(side, u, z);
    r.b1 = Vec3(2.0 * side, u, 2.0);
    r.b2 = Vec3(target.x(), target.y(), 2.0);
    r.b3 = Vec3(target.x(), target.y(), 1.0);
    r.duration = p.outer_time;
    return r;
}

Reinjection reinjection_for(const GeoLorenzParams& p, const Vec2& base) {
    const Transition tr = local_transition(p, base.x(), base.y());
    return reinjection_from(p, tr.side, tr.u, tr.z);
}

}  // namespace

double return_time(const GeoLorenzParams& p, const Vec2& base) {
    return exit_time(p, base.x()) + p.outer_time;
}

Vec3 flow_position(const GeoLorenzParams& p, const FlowState& st) {
    const double tau = exit_time(p, st.base.x());
    if (st.s < tau) return linear_flow_exact(p.saddle(), Vec3(st.base.x(), st.base.y(), 1.0), st.s);
    return reinjection_for(p, st.base).at(std::min(1.0, (st.s - tau) / p.outer_time));
}

Vec3 flow_velocity(const GeoLorenzParams& p, const FlowState& st) {
    const double tau = exit_time(p, st.base.x());
    if (st.s < tau)
        return eval_field<double>(p.saddle(), linear_flow_exact(p.saddle(), Vec3(st.base.x(), st.base.y(), 1.0), st.s));
    return reinjection_for(p, st.base).velocity(std::min(1.0, (st.s - tau) / p.outer_time));
}

double flow_speed_bound(const GeoLorenzParams& p, const FlowState& st) {
    const double tau = exit_time(p, st.base.x());
    if (st.s < tau) return p.lambda1 + std::abs(p.lambda2) * std::abs(st.base.y()) + std::abs(p.lambda3);
    return reinjection_for(p, st.base).speed_bound();
}

double phase_remaining(const GeoLorenzParams& p, const FlowState& st) {
    const double tau = exit_time(p, st.base.x());
    if (st.s < tau) return tau - st.s;
    return tau + p.outer_time - st.s;
}

FlowState flow_advance(const GeoLorenzParams& p, FlowState st, double dt) {
    if (dt < 0.0) throw DomainError("flow_advance: dt must be >= 0");
    std::size_t nudges = 0;
    while (true) {
        const double remaining = return_time(p, st.base) - st.s;
        if (dt < remaining) {
            st.s += dt;
            return st;
        }
        dt -= remaining;
        st.base = return_map(p, st.base);
        st.base.x() = nudge_off_singular(st.base.x(), nudges);
        st.s = 0.0;
    }
}

Trajectory simulate_flow(const GeoLorenzParams& p, const Vec2& p0, double T, const IntegratorConfig& cfg,
                         std::size_t outer_nodes) {
    if (!(T > 0.0)) throw DomainError("simulate_flow: T must be > 0");
    if (p0.x() == 0.0 || !(std::abs(p0.x()) <= 1.0) || !(std::abs(p0.y()) <= 1.0))
        throw DomainError("simulate_flow: start must lie in S*");
    const VectorField linear{p.saddle()};
    EventSpec exit_event{[](const Vec3& x) { return std::abs(x.x()) - 1.0; }, +1};

    Trajectory traj;
    double t = 0.0;
    Vec2 base = p0;
    std::size_t nudges = 0;
    while (t < T) {
        const Vec3 start(base.x(), base.y(), 1.0);
        Vec3 exit_state = start;
        const double tau = exit_time(p, base.x());
        if (tau > 0.0) {
            const IntegrationResult seg = integrate_until(linear, start, 2.0 * tau + 1.0, cfg, exit_event);
            if (!seg.event) throw NumericError("simulate_flow: no exit through Sigma");
            Trajectory shifted = seg.trajectory;
            for (double& s : shifted.times) s += t;
            traj.append(shifted);
            t = traj.end_time();
            exit_state = seg.event->state;
        } else if (traj.empty()) {
            traj.push(t, start, eval_field(linear, start));
        }
        // Closed-form reinjection from the numerically reached exit point.
        const int side = exit_state.x() > 0.0 ? 1 : -1;
        const double z = std::clamp(exit_state.z(), std::nextafter(0.0, 1.0), 1.0);
        const double u = std::clamp(exit_state.y(), -1.0, 1.0);
        const Reinjection r = reinjection_from(p, side, u, z);
        traj.velocities_out.back() = r.velocity(0.0);
        for (std::size_t k = 1; k <= outer_nodes; ++k) {
            const double sigma = static_cast<double>(k) / outer_nodes;
            const Vec3 v = r.velocity(sigma);
            if (k == outer_nodes) {
                const Vec3 landing = r.at(1.0);
                traj.push(t + p.outer_time, landing, v, eval_field(linear, landing));
            } else {
                traj.push(t + sigma * p.outer_time, r.at(sigma), v);
            }
        }
        t += p.outer_time;
        base = Vec2(r.b3.x(), r.b3.y());
        base.x() = nudge_off_singular(base.x(), nudges);
    }
    return traj;
}

}  // namespace singlab::geolorenz
