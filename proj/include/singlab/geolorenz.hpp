#pragma once

// Geometric Lorenz model on the rescaled cube [-1,1]^3.
//
// S = {(x, y, 1) : |x| <= 1, |y| <= 1} is the cross-section, l = {x = 0} its
// singular line, Sigma^+- = {x = +-1} the exit faces of the linear region. A
// point of S* = S \ l follows the linear saddle until it leaves through Sigma,
// then returns to S along a reinjection curve of fixed duration. The return
// map is
//
//   F(x, y) = (f(x), sgn(x) * off_y + c_y * |x|^beta * y),
//   f(x)    = sgn(x) * (2 |x|^alpha_f - 1),
//
// so vertical lines {x = const} are mapped into vertical lines and contracted.

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "singlab/flowcore.hpp"
#include "singlab/types.hpp"

namespace singlab::geolorenz {

struct QuotientMapSpec {
    // Exponent of the power-law branches; |f'| >= 2 alpha_f everywhere.
    double alpha_f = 0.75;
};

struct GeoLorenzParams {
    double lambda1 = 11.83;
    double lambda2 = -22.83;
    double lambda3 = -8.0 / 3.0;
    QuotientMapSpec quotient{};
    double c_y = 0.25;
    double off_y = 0.5;
    // Duration of the excursion outside the cube; the flow's return time is
    // exit_time(x) + outer_time.
    double outer_time = 1.0;

    double alpha() const { return -lambda3 / lambda1; }
    double beta() const { return -lambda2 / lambda1; }
    LinearSaddleParams saddle() const { return {lambda1, lambda2, lambda3}; }

    // Throws DomainError unless 0 < alpha < 1 < beta, alpha_f in (1/sqrt2, 1),
    // c_y in (0, 1/2], off_y + c_y <= 1 and outer_time > 0.
    void validate() const;
};

// -- closed-form pieces ------------------------------------------------------

// Time for (x0, y, 1) to reach Sigma: -log|x0| / lambda1.
double exit_time(const GeoLorenzParams& p, double x0);

struct Transition {
    int side;   // +1 exits through Sigma^+, -1 through Sigma^-
    double u;   // y-coordinate on Sigma: y |x|^beta
    double z;   // z-coordinate on Sigma: |x|^alpha
};

// Cusp map L: S* -> Sigma.
Transition local_transition(const GeoLorenzParams& p, double x, double y);

// Reinjection from Sigma back to S; x' depends on (side, z) only, y' is affine in u.
Vec2 outer_map(const GeoLorenzParams& p, int side, double u, double z);

template <typename Scalar>
Scalar quotient_map(const QuotientMapSpec& q, Scalar x) {
    using std::abs;
    using std::pow;
    if (x == Scalar(0)) throw DomainError("quotient_map: x on the singular line");
    const Scalar s = x > Scalar(0) ? Scalar(1) : Scalar(-1);
    return s * (Scalar(2) * pow(abs(x), Scalar(q.alpha_f)) - Scalar(1));
}

template <typename Scalar>
Scalar quotient_deriv(const QuotientMapSpec& q, Scalar x) {
    using std::abs;
    using std::pow;
    if (x == Scalar(0)) throw DomainError("quotient_deriv: x on the singular line");
    return Scalar(2 * q.alpha_f) * pow(abs(x), Scalar(q.alpha_f - 1));
}

// Inverse of the branch on the side `side` (+1: (0, 1], -1: [-1, 0)).
double quotient_branch_inverse(const QuotientMapSpec& q, int side, double x_image);

Vec2 return_map(const GeoLorenzParams& p, const Vec2& point);
inline Vec2 return_map(const GeoLorenzParams& p, double x, double y) { return return_map(p, Vec2(x, y)); }

// DF at `point`; column 0 is d/dx, column 1 d/dy.
Mat2 return_map_jacobian(const GeoLorenzParams& p, const Vec2& point);

// True if `point` lies in F(S*), the two cusped triangles.
bool in_image(const GeoLorenzParams& p, const Vec2& point);

// Preimage under F, or nullopt when the point is outside F(S*).
std::optional<Vec2> inverse_return_map(const GeoLorenzParams& p, const Vec2& point);

struct AttractorSample {
    std::vector<Vec2> points;
    // Number of times the orbit landed exactly on l and was nudged off it.
    std::size_t singular_hits = 0;
};

// Iterates F from a uniform random point of S; keeps iterates burn_in..n_iter-1.
AttractorSample sample_attractor(const GeoLorenzParams& p, std::size_t n_iter, std::size_t burn_in,
                                 std::uint64_t seed);

// Returns x nudged off l by 1e-15 when it sits exactly on it.
double nudge_off_singular(double x, std::size_t& counter);

// -- the flow in R^3 ---------------------------------------------------------

// A point of the flow: the last visit to S and the time elapsed since.
struct FlowState {
    Vec2 base;
    double s = 0.0;
};

double return_time(const GeoLorenzParams& p, const Vec2& base);

// Position in R^3. For s < exit_time the linear flow from (x, y, 1); then a
// cubic Bezier curve from the exit point on Sigma to F(base) on S that leaves
// Sigma outward and lands on S moving in the -z direction.
Vec3 flow_position(const GeoLorenzParams& p, const FlowState& st);
Vec3 flow_velocity(const GeoLorenzParams& p, const FlowState& st);

// Upper bound of the speed on the remainder of the current phase
// (linear part or reinjection part).
double flow_speed_bound(const GeoLorenzParams& p, const FlowState& st);

// Time until the current phase ends (exit through Sigma or landing on S).
double phase_remaining(const GeoLorenzParams& p, const FlowState& st);

// Advances by dt >= 0, stepping the base with F at each landing on S.
FlowState flow_advance(const GeoLorenzParams& p, FlowState st, double dt);

// Direct simulation: the linear part is integrated numerically with an exit
// event on |x| = 1, the reinjection part is sampled from its closed form.
// Returns the trajectory from (p0, 1) over at least T time units.
Trajectory simulate_flow(const GeoLorenzParams& p, const Vec2& p0, double T, const IntegratorConfig& cfg,
                         std::size_t outer_nodes = 64);

}  // namespace singlab::geolorenz
