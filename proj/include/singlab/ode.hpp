#pragma once

// Explicit Runge-Kutta machinery shared by state and variational integration.
// Everything here is templated on the state dimension so the same code drives
// the 3-dimensional flow and the 12-dimensional flow-plus-tangent system.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include <Eigen/Core>

#include "singlab/types.hpp"

namespace singlab {

enum class Scheme { dopri5, rk4 };

struct IntegratorConfig {
    Scheme scheme = Scheme::dopri5;
    double initial_step = 1e-3;
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    std::size_t max_steps = 50'000'000;
    double event_tol = 1e-13;
    // Step length used by the fixed-step scheme.
    double fixed_step = 1e-3;

    void validate() const {
        if (!(abs_tol > 0.0) || !(rel_tol > 0.0) || !(event_tol > 0.0))
            throw DomainError("IntegratorConfig: tolerances must be > 0");
        if (!(initial_step > 0.0) || !(fixed_step > 0.0))
            throw DomainError("IntegratorConfig: step lengths must be > 0");
        if (max_steps == 0) throw DomainError("IntegratorConfig: max_steps must be > 0");
    }
};

struct StepStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
};

template <int N>
using StateN = Eigen::Matrix<double, N, 1>;

// Cubic Hermite interpolation between (t0, x0, f0) and (t1, x1, f1).
template <typename Vec>
Vec hermite(double t0, const Vec& x0, const Vec& f0, double t1, const Vec& x1, const Vec& f1,
            double t) {
    const double h = t1 - t0;
    const double s = (t - t0) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    return h00 * x0 + (h10 * h) * f0 + h01 * x1 + (h11 * h) * f1;
}

template <typename Vec>
Vec hermite_derivative(double t0, const Vec& x0, const Vec& f0, double t1, const Vec& x1,
                       const Vec& f1, double t) {
    const double h = t1 - t0;
    const double s = (t - t0) / h;
    const double s2 = s * s;
    const double d00 = (6 * s2 - 6 * s) / h;
    const double d10 = 3 * s2 - 4 * s + 1;
    const double d01 = (-6 * s2 + 6 * s) / h;
    const double d11 = 3 * s2 - 2 * s;
    return d00 * x0 + d10 * f0 + d01 * x1 + d11 * f1;
}

namespace detail {

template <int N>
struct TrialStep {
    StateN<N> x;
    StateN<N> f;     // derivative at the new point
    double error;    // scaled error norm, <= 1 means acceptable
};

// Dormand-Prince 5(4), first-same-as-last.
template <int N, typename Rhs>
TrialStep<N> dopri5_step(Rhs& rhs, double t, const StateN<N>& x, const StateN<N>& f0, double h,
                         const IntegratorConfig& cfg) {
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                     a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                     a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                     b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                     e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    const StateN<N> k2 = rhs(t + c2 * h, x + h * a21 * f0);
    const StateN<N> k3 = rhs(t + c3 * h, x + h * (a31 * f0 + a32 * k2));
    const StateN<N> k4 = rhs(t + c4 * h, x + h * (a41 * f0 + a42 * k2 + a43 * k3));
    const StateN<N> k5 = rhs(t + c5 * h, x + h * (a51 * f0 + a52 * k2 + a53 * k3 + a54 * k4));
    const StateN<N> k6 =
        rhs(t + h, x + h * (a61 * f0 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    TrialStep<N> out;
    out.x = x + h * (b1 * f0 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    out.f = rhs(t + h, out.x);
    const StateN<N> err =
        h * (e1 * f0 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * out.f);
    const StateN<N> scale =
        (cfg.abs_tol + cfg.rel_tol * x.cwiseAbs().cwiseMax(out.x.cwiseAbs()).array()).matrix();
    out.error = (err.cwiseAbs().array() / scale.array()).maxCoeff();
    return out;
}

template <int N, typename Rhs>
TrialStep<N> rk4_step(Rhs& rhs, double t, const StateN<N>& x, const StateN<N>& f0, double h) {
    const StateN<N> k2 = rhs(t + 0.5 * h, x + 0.5 * h * f0);
    const StateN<N> k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2);
    const StateN<N> k4 = rhs(t + h, x + h * k3);
    TrialStep<N> out;
    out.x = x + (h / 6.0) * (f0 + 2.0 * k2 + 2.0 * k3 + k4);
    out.f = rhs(t + h, out.x);
    out.error = 0.0;
    return out;
}

}  // namespace detail

// Integrates dx/dt = rhs(t, x) from t0 to t1 (t1 > t0). `observer(t, x, f)` is
// called for the initial point and after every accepted step; returning false
// stops the integration early. Returns the time reached.
template <int N, typename Rhs, typename Observer>
double drive(Rhs&& rhs, StateN<N> x, double t0, double t1, const IntegratorConfig& cfg,
             StepStats& stats, Observer&& observer) {
    cfg.validate();
    double t = t0;
    StateN<N> f = rhs(t, x);
    if (!observer(t, x, f)) return t;
    double h = cfg.scheme == Scheme::rk4 ? cfg.fixed_step : cfg.initial_step;
    std::size_t steps = 0;
    while (t < t1) {
        if (++steps > cfg.max_steps) throw NumericError("integrate: step budget exhausted");
        double step = std::min(h, t1 - t);
        // Avoid leaving a sliver of a step at the end.
        if (t1 - t - step <= 1e-12 * std::max(1.0, std::abs(t1))) step = t1 - t;
        if (step <= 0.0) break;
        detail::TrialStep<N> trial;
        if (cfg.scheme == Scheme::rk4) {
            trial = detail::rk4_step<N>(rhs, t, x, f, step);
        } else {
            trial = detail::dopri5_step<N>(rhs, t, x, f, step, cfg);
            if (!(trial.error <= 1.0)) {
                ++stats.rejected;
                const double factor =
                    std::isfinite(trial.error) ? std::max(0.2, 0.9 * std::pow(trial.error, -0.25)) : 0.2;
                h = step * factor;
                if (h < 1e-15 * std::max(1.0, std::abs(t)))
                    throw NumericError("integrate: step size underflow");
                continue;
            }
        }
        if (!trial.x.allFinite()) throw NumericError("integrate: non-finite state");
        ++stats.accepted;
        t = (step == t1 - t) ? t1 : t + step;
        if (t > t1) t = t1;
        x = trial.x;
        f = trial.f;
        if (cfg.scheme == Scheme::dopri5) {
            const double err = std::max(trial.error, 1e-10);
            h = step * std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        }
        if (!observer(t, x, f)) return t;
    }
    return t;
}

// One explicit step from (t, x) of length h with the configured scheme, used to
// land exactly on refined event times.
template <int N, typename Rhs>
StateN<N> single_step(Rhs&& rhs, double t, const StateN<N>& x, double h, const IntegratorConfig& cfg) {
    if (h == 0.0) return x;
    const StateN<N> f = rhs(t, x);
    if (cfg.scheme == Scheme::rk4) {
        // Keep the fixed-step accuracy: split into sub-steps no longer than fixed_step.
        const int n = std::max(1, static_cast<int>(std::ceil(std::abs(h) / cfg.fixed_step)));
        StateN<N> y = x;
        double s = t;
        for (int i = 0; i < n; ++i) {
            const StateN<N> fy = rhs(s, y);
            y = detail::rk4_step<N>(rhs, s, y, fy, h / n).x;
            s += h / n;
        }
        return y;
    }
    return detail::dopri5_step<N>(rhs, t, x, f, h, cfg).x;
}

}  // namespace singlab
