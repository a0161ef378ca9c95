#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "singlab/ode.hpp"
#include "singlab/types.hpp"

namespace singlab {

// ---------------------------------------------------------------------------
// Vector fields

struct LorenzParams {
    double a = 10.0;
    double r = 28.0;
    double b = 8.0 / 3.0;
};

// Diagonal linear field (lambda1 x, lambda2 y, lambda3 z) modelling the flow
// near a hyperbolic saddle.
struct LinearSaddleParams {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double lambda3 = 0.0;

    // lambda2 < lambda3 < 0 < -lambda3 < lambda1
    bool lorenz_like() const {
        return lambda2 < lambda3 && lambda3 < 0.0 && 0.0 < -lambda3 && -lambda3 < lambda1;
    }
};

// Eigenvalues of the Lorenz(10, 28, 8/3) linearisation at the origin, i.e.
// (-11 +- sqrt(1201)) / 2 and -8/3.
LinearSaddleParams classical_lorenz_saddle();

// x' = -rate * x, a global sink at the origin.
struct SinkParams {
    double rate = 1.0;
};

// x' = -omega y, y' = omega x, z' = 0.
struct PlanarRotationParams {
    double omega = 1.0;
};

// Constant-speed linear flow on the torus of revolution with core radius
// `major_radius`, extended to a neighbourhood: the angle around the z-axis
// advances at omega_long, the angle around the core circle at omega_mer,
// distance to the core circle is conserved.
struct TorusRotationParams {
    double major_radius = 2.0;
    double omega_long = 1.0;
    double omega_mer = 1.6180339887498949;
};

using FieldKind = std::variant<LorenzParams, LinearSaddleParams, SinkParams, PlanarRotationParams,
                               TorusRotationParams>;

struct VectorField {
    FieldKind kind;
    // +1 for X, -1 for the time-reversed field -X.
    double direction = 1.0;

    VectorField reversed() const { return VectorField{kind, -direction}; }
    std::string id() const;
};

// Builds a field from its textual id ("lorenz", "linear", "sink", "rotation",
// "torus") and named parameters; missing parameters take defaults. Throws
// DomainError for an unknown id or an unknown parameter name.
VectorField make_field(const std::string& id, const std::map<std::string, double>& params = {});

template <typename Scalar>
Vector3<Scalar> eval_field(const LorenzParams& p, const Vector3<Scalar>& x) {
    return {Scalar(p.a) * (x.y() - x.x()), Scalar(p.r) * x.x() - x.y() - x.x() * x.z(),
            x.x() * x.y() - Scalar(p.b) * x.z()};
}

template <typename Scalar>
Vector3<Scalar> eval_field(const LinearSaddleParams& p, const Vector3<Scalar>& x) {
    return {Scalar(p.lambda1) * x.x(), Scalar(p.lambda2) * x.y(), Scalar(p.lambda3) * x.z()};
}

template <typename Scalar>
Vector3<Scalar> eval_field(const SinkParams& p, const Vector3<Scalar>& x) {
    return -Scalar(p.rate) * x;
}

template <typename Scalar>
Vector3<Scalar> eval_field(const PlanarRotationParams& p, const Vector3<Scalar>& x) {
    return {-Scalar(p.omega) * x.y(), Scalar(p.omega) * x.x(), Scalar(0)};
}

template <typename Scalar>
Vector3<Scalar> eval_field(const TorusRotationParams& p, const Vector3<Scalar>& x) {
    using std::sqrt;
    const Scalar rho = sqrt(x.x() * x.x() + x.y() * x.y());
    const Scalar c = x.x() / rho, s = x.y() / rho;
    const Scalar wl(p.omega_long), wm(p.omega_mer);
    return {-wl * x.y() - c * wm * x.z(), wl * x.x() - s * wm * x.z(),
            wm * (rho - Scalar(p.major_radius))};
}

template <typename Scalar>
Vector3<Scalar> eval_field(const VectorField& field, const Vector3<Scalar>& x) {
    return std::visit([&](const auto& p) { return eval_field<Scalar>(p, x); }, field.kind) *
           Scalar(field.direction);
}

inline Vec3 eval_field(const VectorField& field, const Vec3& x) { return eval_field<double>(field, x); }

// Jacobian DX(x); finite differences only for the torus field.
Mat3 jacobian(const VectorField& field, const Vec3& x);

inline double divergence(const VectorField& field, const Vec3& x) { return jacobian(field, x).trace(); }

// Exact flow of the linear saddle: (x0 e^{l1 t}, y0 e^{l2 t}, z0 e^{l3 t}).
template <typename Scalar>
Vector3<Scalar> linear_flow_exact(const LinearSaddleParams& p, const Vector3<Scalar>& x0, Scalar t) {
    using std::exp;
    return {x0.x() * exp(Scalar(p.lambda1) * t), x0.y() * exp(Scalar(p.lambda2) * t),
            x0.z() * exp(Scalar(p.lambda3) * t)};
}

// ---------------------------------------------------------------------------
// Trajectories

struct Trajectory {
    std::vector<double> times;
    std::vector<Vec3> states;
    // Velocity leaving each node and arriving at it. They differ only at
    // nodes where a piecewise-defined flow switches branch.
    std::vector<Vec3> velocities_out;
    std::vector<Vec3> velocities_in;
    StepStats step_stats;

    std::size_t size() const { return times.size(); }
    bool empty() const { return times.empty(); }
    double start_time() const { return times.front(); }
    double end_time() const { return times.back(); }

    void push(double t, const Vec3& x, const Vec3& v) { push(t, x, v, v); }
    void push(double t, const Vec3& x, const Vec3& v_in, const Vec3& v_out);
    // Appends `other`, skipping its first node when it coincides in time with
    // our last node (the junction keeps our incoming and its outgoing velocity).
    void append(const Trajectory& other);

    // Index k with times[k] <= t <= times[k+1].
    std::size_t interval(double t) const;
    // Cubic Hermite dense output.
    Vec3 at(double t) const;
    Vec3 velocity_at(double t) const;
    Vec3 interpolate(std::size_t k, double t) const;
    Vec3 interpolate_velocity(std::size_t k, double t) const;
};

struct EventSpec {
    std::function<double(const Vec3&)> g;
    // +1: g crosses upward, -1: downward, 0: either.
    int direction = 0;
};

struct EventHit {
    double time;
    Vec3 state;
};

struct IntegrationResult {
    Trajectory trajectory;
    std::optional<EventHit> event;
};

// Integrates the field from x0 over [0, T] storing every accepted step.
Trajectory integrate(const VectorField& field, const Vec3& x0, double T, const IntegratorConfig& cfg);

// Integrates until the terminal event fires or T is reached. The event time is
// refined on the Hermite interpolant to cfg.event_tol and the state at that
// time recomputed with one explicit step from the preceding node.
IntegrationResult integrate_until(const VectorField& field, const Vec3& x0, double T,
                                  const IntegratorConfig& cfg, const EventSpec& event);

// ---------------------------------------------------------------------------
// Variational equation

struct TangentFrame {
    double time = 0.0;
    Vec3 state = Vec3::Zero();
    // Columns are tangent vectors; orthonormal for every frame after the first.
    Mat3 basis = Mat3::Identity();
    // Accumulated log-stretching of each column since t = 0.
    Vec3 log_norms = Vec3::Zero();
    // Gram-Schmidt R factor of the interval ending at this frame:
    // DX^{dt} * previous.basis = basis * r_factor.
    Mat3 r_factor = Mat3::Identity();
};

struct TangentOptions {
    double reortho_interval = 0.5;
    // Maximal condition number of the propagated basis before re-orthonormalisation.
    double condition_bound = 1e13;
};

// Propagates (state, basis) and re-orthonormalises by modified Gram-Schmidt
// every reortho_interval. Returns the frame at t = 0 followed by one frame per
// interval; the last interval may be shorter so the final frame sits at T.
std::vector<TangentFrame> integrate_with_tangent(const VectorField& field, const Vec3& x0,
                                                 const Mat3& basis0, double T,
                                                 const IntegratorConfig& cfg,
                                                 const TangentOptions& opts = {});

// Modified Gram-Schmidt with positive diagonal R. Returns false if a column
// collapses.
bool gram_schmidt(const Mat3& a, Mat3& q, Mat3& r);

// Haar-random orthonormal basis.
Mat3 random_orthonormal_basis(Rng& rng);

}  // namespace singlab
