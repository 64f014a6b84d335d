#pragma once

// Independent reference computations used only by the tests. Nothing here
// shares code paths with the PDE solvers they check.

#include <array>
#include <cmath>
#include <functional>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>

namespace oracle {

namespace odeint = boost::numeric::odeint;

/// Boundary slope q'(0) of the autonomous semi-wave
///   q'' + k q' + q(1 - q) = 0,  q(0) = 0,  q(inf) = 1,  q' > 0,
/// from the stable manifold of the saddle (1, 0) traced back to q = 0 in
/// the phase plane p = q'(q). Returns 0 when the manifold never reaches q = 0
/// with p > 0 (no semi-wave).
inline double semiwave_slope(double k)
{
    const double lam = (-k - std::sqrt(k * k + 4.0)) / 2.0; // stable eigenvalue at (1, 0)
    const double c2 = 1.0 / (3.0 * lam + k);
    const double delta = 1e-4;
    const double w0 = -delta;
    std::array<double, 1> p{lam * w0 + c2 * w0 * w0};

    // dp/dq = -k - q(1-q)/p, integrated from q = 1 - delta down to q = 0.
    bool died = false;
    auto rhs = [k, &died](const std::array<double, 1>& x, std::array<double, 1>& dxdq, double q) {
        if (x[0] <= 1e-12) {
            died = true;
            dxdq[0] = 0.0;
            return;
        }
        dxdq[0] = -k - q * (1.0 - q) / x[0];
    };
    auto stepper = odeint::make_controlled(1e-13, 1e-13, odeint::runge_kutta_dopri5<std::array<double, 1>>());
    odeint::integrate_adaptive(stepper, rhs, p, 1.0 - delta, 0.0, -1e-4);
    if (died || !(p[0] > 0.0))
        return 0.0;
    return p[0];
}

/// Speed c of the autonomous rightward semi-wave for constant beta and mu:
/// the root of c - mu * q'_{beta - c}(0) on [0, beta + 2].
inline double semiwave_speed(double beta, double mu = 1.0)
{
    double lo = 0.0, hi = beta + 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double g = mid - mu * semiwave_slope(beta - mid);
        (g > 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

/// B(0) for the homogeneous logistic with mu: root of b - 2 - c*(b).
inline double critical_average_homogeneous(double mu = 1.0)
{
    double lo = 2.0, hi = 20.0;
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double y = mid - 2.0 - semiwave_speed(mid, mu);
        (y > 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Monotone solution of v'' + k v' + v(1-v) = 0, v(0) = 0, v(l) = 1, by
/// shooting on s = v'(0). Returns s; fills profile(z) if requested.
inline double pinned_bvp_slope(double k, double ell)
{
    using State = std::array<double, 2>;
    // +1: reaches 1 before l (overshoot), -1: turns back below 1 first.
    auto shoot = [k, ell](double s) {
        State x{0.0, s};
        auto rhs = [k](const State& y, State& dy, double) {
            dy[0] = y[1];
            dy[1] = -k * y[1] - y[0] * (1.0 - y[0]);
        };
        auto stepper = odeint::make_dense_output(1e-13, 1e-13, odeint::runge_kutta_dopri5<State>());
        stepper.initialize(x, 0.0, 1e-4);
        while (true) {
            const auto span = stepper.do_step(rhs);
            if (span.second >= ell) {
                State y;
                stepper.calc_state(ell, y);
                return y[0] >= 1.0 ? 1 : -1;
            }
            const State& y = stepper.current_state();
            if (y[0] >= 1.0)
                return 1;
            if (y[1] <= 0.0)
                return -1;
        }
    };
    double lo = 1e-6, hi = 5.0;
    for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
        const double mid = 0.5 * (lo + hi);
        (shoot(mid) > 0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Value v(z) of the pinned BVP solution with slope s at 0.
inline double pinned_bvp_value(double k, double s, double z)
{
    using State = std::array<double, 2>;
    State x{0.0, s};
    auto rhs = [k](const State& y, State& dy, double) {
        dy[0] = y[1];
        dy[1] = -k * y[1] - y[0] * (1.0 - y[0]);
    };
    if (z <= 0.0)
        return 0.0;
    auto stepper = odeint::make_controlled(1e-13, 1e-13, odeint::runge_kutta_dopri5<State>());
    odeint::integrate_adaptive(stepper, rhs, x, 0.0, z, 1e-4);
    return x[0];
}

/// Periodic state of u' = u(a(t) - u), a = 1 + 0.5 sin(2 pi t), T = 1:
/// P(t) = e^{A(t)} / (K + int_0^t e^{A}), K = int_0^1 e^{A} / (e^{A(1)} - 1).
class PeriodicLogistic {
public:
    PeriodicLogistic()
    {
        const double total = integral(0.0, 1.0);
        K_ = total / (std::exp(A(1.0)) - 1.0);
    }

    static double A(double t)
    {
        return t + 0.5 / (2.0 * std::numbers::pi) * (1.0 - std::cos(2.0 * std::numbers::pi * t));
    }

    double operator()(double t) const
    {
        t = t - std::floor(t);
        return std::exp(A(t)) / (K_ + integral(0.0, t));
    }

private:
    static double integral(double a, double b)
    {
        if (b <= a)
            return 0.0;
        auto f = [](double s) { return std::exp(A(s)); };
        return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-13);
    }

    double K_ = 0.0;
};

} // namespace oracle
