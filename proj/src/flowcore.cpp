#include "singlab/flowcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/QR>
#include <Eigen/SVD>

namespace singlab {

LinearSaddleParams classical_lorenz_saddle() {
    const double disc = std::sqrt(1201.0);
    return {(-11.0 + disc) / 2.0, (-11.0 - disc) / 2.0, -8.0 / 3.0};
}

std::string VectorField::id() const {
    struct Name {
        std::string operator()(const LorenzParams&) const { return "lorenz"; }
        std::string operator()(const LinearSaddleParams&) const { return "linear"; }
        std::string operator()(const SinkParams&) const { return "sink"; }
        std::string operator()(const PlanarRotationParams&) const { return "rotation"; }
        std::string operator()(const TorusRotationParams&) const { return "torus"; }
    };
    return std::visit(Name{}, kind);
}

namespace {

double take(std::map<std::string, double>& params, const std::string& key, double fallback) {
    auto it = params.find(key);
    if (it == params.end()) return fallback;
    const double v = it->second;
    params.erase(it);
    return v;
}

}  // namespace

VectorField make_field(const std::string& id, const std::map<std::string, double>& params_in) {
    auto params = params_in;
    VectorField field;
    if (id == "lorenz") {
        LorenzParams p;
        p.a = take(params, "a", p.a);
        p.r = take(params, "r", p.r);
        p.b = take(params, "b", p.b);
        if (!(p.b > 0.0) || !std::isfinite(p.a) || !std::isfinite(p.r))
            throw DomainError("lorenz field: parameters must be finite with b > 0");
        field.kind = p;
    } else if (id == "linear") {
        LinearSaddleParams p = classical_lorenz_saddle();
        p.lambda1 = take(params, "lambda1", p.lambda1);
        p.lambda2 = take(params, "lambda2", p.lambda2);
        p.lambda3 = take(params, "lambda3", p.lambda3);
        field.kind = p;
    } else if (id == "sink") {
        SinkParams p;
        p.rate = take(params, "rate", p.rate);
        field.kind = p;
    } else if (id == "rotation") {
        PlanarRotationParams p;
        p.omega = take(params, "omega", p.omega);
        field.kind = p;
    } else if (id == "torus") {
        TorusRotationParams p;
        p.major_radius = take(params, "major_radius", p.major_radius);
        p.omega_long = take(params, "omega_long", p.omega_long);
        p.omega_mer = take(params, "omega_mer", p.omega_mer);
        field.kind = p;
    } else {
        throw DomainError("unknown field id '" + id + "'");
    }
    if (!params.empty())
        throw DomainError("field '" + id + "': unknown parameter '" + params.begin()->first + "'");
    return field;
}

Mat3 jacobian(const VectorField& field, const Vec3& x) {
    struct Jac {
        const Vec3& x;
        Mat3 operator()(const LorenzParams& p) const {
            Mat3 j;
            j << -p.a, p.a, 0.0,
                 p.r - x.z(), -1.0, -x.x(),
                 x.y(), x.x(), -p.b;
            return j;
        }
        Mat3 operator()(const LinearSaddleParams& p) const {
            return Vec3(p.lambda1, p.lambda2, p.lambda3).asDiagonal();
        }
        Mat3 operator()(const SinkParams& p) const { return -p.rate * Mat3::Identity(); }
        Mat3 operator()(const PlanarRotationParams& p) const {
            Mat3 j = Mat3::Zero();
            j(0, 1) = -p.omega;
            j(1, 0) = p.omega;
            return j;
        }
        Mat3 operator()(const TorusRotationParams& p) const {
            Mat3 j;
            for (int c = 0; c < 3; ++c) {
                const double h = 1e-6 * std::max(1.0, std::abs(x[c]));
                Vec3 xp = x, xm = x;
                xp[c] += h;
                xm[c] -= h;
                j.col(c) = (eval_field<double>(p, xp) - eval_field<double>(p, xm)) / (2 * h);
            }
            return j;
        }
    };
    return std::visit(Jac{x}, field.kind) * field.direction;
}

// ---------------------------------------------------------------------------

void Trajectory::push(double t, const Vec3& x, const Vec3& v_in, const Vec3& v_out) {
    if (!times.empty() && !(t > times.back()))
        throw NumericError("Trajectory: times must be strictly increasing");
    if (!x.allFinite()) throw NumericError("Trajectory: non-finite state");
    times.push_back(t);
    states.push_back(x);
    velocities_in.push_back(v_in);
    velocities_out.push_back(v_out);
}

void Trajectory::append(const Trajectory& other) {
    std::size_t first = 0;
    if (!empty() && !other.empty() && other.times.front() == times.back()) {
        velocities_out.back() = other.velocities_out.front();
        first = 1;
    }
    for (std::size_t k = first; k < other.size(); ++k)
        push(other.times[k], other.states[k], other.velocities_in[k], other.velocities_out[k]);
    step_stats.accepted += other.step_stats.accepted;
    step_stats.rejected += other.step_stats.rejected;
}

std::size_t Trajectory::interval(double t) const {
    if (size() < 2) throw NumericError("Trajectory: dense output needs two nodes");
    if (t <= times.front()) return 0;
    if (t >= times.back()) return size() - 2;
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    return static_cast<std::size_t>(it - times.begin()) - 1;
}

Vec3 Trajectory::interpolate(std::size_t k, double t) const {
    return hermite(times[k], states[k], velocities_out[k], times[k + 1], states[k + 1],
                   velocities_in[k + 1], t);
}

Vec3 Trajectory::interpolate_velocity(std::size_t k, double t) const {
    return hermite_derivative(times[k], states[k], velocities_out[k], times[k + 1], states[k + 1],
                              velocities_in[k + 1], t);
}

Vec3 Trajectory::at(double t) const { return interpolate(interval(t), t); }

Vec3 Trajectory::velocity_at(double t) const { return interpolate_velocity(interval(t), t); }

// ---------------------------------------------------------------------------

Trajectory integrate(const VectorField& field, const Vec3& x0, double T, const IntegratorConfig& cfg) {
    if (!(T > 0.0)) throw DomainError("integrate: T must be > 0");
    if (!x0.allFinite()) throw DomainError("integrate: non-finite initial state");
    Trajectory traj;
    auto rhs = [&](double, const Vec3& x) -> Vec3 { return eval_field(field, x); };
    drive<3>(rhs, x0, 0.0, T, cfg, traj.step_stats, [&](double t, const Vec3& x, const Vec3& f) {
        traj.push(t, x, f);
        return true;
    });
    return traj;
}

namespace {

// Brent-free safeguarded bisection/secant on [a, b] with g(a), g(b) of opposite
// sign; the function is cheap so plain bisection to tolerance is fine.
template <typename G>
double bracket_root(G&& g, double a, double b, double ga, double tol) {
    for (int it = 0; it < 200 && b - a > tol; ++it) {
        const double m = 0.5 * (a + b);
        const double gm = g(m);
        if (gm == 0.0) return m;
        if ((gm > 0.0) == (ga > 0.0)) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

bool crosses(double g0, double g1, int direction) {
    if (direction > 0) return g0 < 0.0 && g1 >= 0.0;
    if (direction < 0) return g0 > 0.0 && g1 <= 0.0;
    return (g0 < 0.0 && g1 >= 0.0) || (g0 > 0.0 && g1 <= 0.0);
}

}  // namespace

IntegrationResult integrate_until(const VectorField& field, const Vec3& x0, double T,
                                  const IntegratorConfig& cfg, const EventSpec& event) {
    if (!(T > 0.0)) throw DomainError("integrate: T must be > 0");
    IntegrationResult out;
    Trajectory& traj = out.trajectory;
    auto rhs = [&](double, const Vec3& x) -> Vec3 { return eval_field(field, x); };
    double g_prev = event.g(x0);
    drive<3>(rhs, x0, 0.0, T, cfg, traj.step_stats, [&](double t, const Vec3& x, const Vec3& f) {
        if (traj.empty()) {
            traj.push(t, x, f);
            return true;
        }
        const double g_now = event.g(x);
        if (crosses(g_prev, g_now, event.direction)) {
            const std::size_t k = traj.size() - 1;
            const double t0 = traj.times[k];
            const Vec3 x0k = traj.states[k], f0k = traj.velocities_out[k];
            auto g_of = [&](double s) { return event.g(hermite(t0, x0k, f0k, t, x, f, s)); };
            double te = bracket_root(g_of, t0, t, g_prev, cfg.event_tol);
            if (te <= t0) te = std::nextafter(t0, t);
            const Vec3 xe = single_step<3>(rhs, t0, x0k, te - t0, cfg);
            traj.push(te, xe, eval_field(field, xe));
            out.event = EventHit{te, xe};
            return false;
        }
        g_prev = g_now;
        traj.push(t, x, f);
        return true;
    });
    return out;
}

// ---------------------------------------------------------------------------

bool gram_schmidt(const Mat3& a, Mat3& q, Mat3& r) {
    q = a;
    r.setZero();
    for (int j = 0; j < 3; ++j) {
        for (int i = 0; i < j; ++i) {
            r(i, j) = q.col(i).dot(q.col(j));
            q.col(j) -= r(i, j) * q.col(i);
        }
        const double n = q.col(j).norm();
        if (!(n > 0.0) || !std::isfinite(n)) return false;
        r(j, j) = n;
        q.col(j) /= n;
    }
    return true;
}

Mat3 random_orthonormal_basis(Rng& rng) {
    Mat3 g;
    for (int i = 0; i < 9; ++i) g.data()[i] = normal01(rng);
    Mat3 q, r;
    gram_schmidt(g, q, r);
    return q;
}

std::vector<TangentFrame> integrate_with_tangent(const VectorField& field, const Vec3& x0,
                                                 const Mat3& basis0, double T,
                                                 const IntegratorConfig& cfg,
                                                 const TangentOptions& opts) {
    if (!(T >= 0.0)) throw DomainError("integrate_with_tangent: T must be >= 0");
    if (!(opts.reortho_interval > 0.0)) throw DomainError("integrate_with_tangent: reortho_interval must be > 0");
    {
        Eigen::JacobiSVD<Mat3> svd(basis0);
        const auto s = svd.singularValues();
        if (!(s(2) > 0.0) || s(0) / s(2) > opts.condition_bound)
            throw DomainError("integrate_with_tangent: initial basis is singular");
    }
    std::vector<TangentFrame> frames;
    TangentFrame frame;
    frame.time = 0.0;
    frame.state = x0;
    frame.basis = basis0;
    frames.push_back(frame);

    using State12 = StateN<12>;
    auto rhs = [&](double, const State12& y) -> State12 {
        const Vec3 x = y.head<3>();
        const Eigen::Map<const Mat3> m(y.data() + 3);
        State12 out;
        out.head<3>() = eval_field(field, x);
        Eigen::Map<Mat3>(out.data() + 3) = jacobian(field, x) * m;
        return out;
    };

    StepStats stats;
    double t = 0.0;
    while (t < T) {
        const double t_next = (T - t) <= opts.reortho_interval * (1.0 + 1e-12) ? T : t + opts.reortho_interval;
        State12 y;
        y.head<3>() = frames.back().state;
        Eigen::Map<Mat3>(y.data() + 3) = frames.back().basis;
        State12 y_end = y;
        drive<12>(rhs, y, t, t_next, cfg, stats, [&](double, const State12& s, const State12&) {
            y_end = s;
            return true;
        });
        const Mat3 propagated = Eigen::Map<const Mat3>(y_end.data() + 3);
        Eigen::JacobiSVD<Mat3> svd(propagated);
        const auto sv = svd.singularValues();
        if (!(sv(2) > 0.0) || sv(0) / sv(2) > opts.condition_bound)
            throw NumericError("integrate_with_tangent: tangent basis degenerate beyond condition bound");
        TangentFrame next;
        next.time = t_next;
        next.state = y_end.head<3>();
        if (!gram_schmidt(propagated, next.basis, next.r_factor))
            throw NumericError("integrate_with_tangent: Gram-Schmidt breakdown");
        for (int j = 0; j < 3; ++j)
            next.log_norms[j] = frames.back().log_norms[j] + std::log(next.r_factor(j, j));
        frames.push_back(next);
        t = t_next;
    }
    return frames;
}

}  // namespace singlab
