#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "errors.hpp"
#include "parabolic.hpp"
#include "periodic.hpp"

namespace pfbp {

struct EigenGrid {
    std::size_t nodes = 512;       // space intervals on [0, l]
    std::size_t steps = 512;       // time steps per period
    bool richardson = true;        // extrapolate from (n, M) and (2n, 2M)
    double tolerance = 1e-10;      // relative change of the multiplier estimate
    std::size_t max_periods = 500;
    std::size_t snapshots = 16;    // eigenfunction samples stored per period
};

struct EigenResult {
    double lambda1 = 0.0;
    double length = 0.0;
    double period = 1.0;
    /// eigenfunction[m][j] at t = m*T/snapshots, z = j*l/nodes; sup-norm 1.
    std::vector<std::vector<double>> eigenfunction;
    bool converged = false;
    std::size_t iterations = 0;
};

namespace detail {

// One application of the period map to psi. Rannacher start: the first two
// CN steps are replaced by four backward-Euler half steps, which keeps the
// undamped stiff CN modes from swamping a fast-decaying principal mode.
inline void eigen_period_map(std::vector<double>& psi, const PeriodicFn& k, const PeriodicFn& a,
                             double h, std::size_t steps, ThetaStepper& stepper,
                             std::vector<std::vector<double>>* snaps, std::size_t snap_every)
{
    const double T = k.period();
    const double dt = T / static_cast<double>(steps);
    auto advance = [&](double t0, double tau, double theta) {
        const double tm = t0 + 0.5 * tau;
        const double kc = k(tm);
        const double ac = a(tm);
        stepper.step(
            psi, h, tau, theta, 1.0, [kc](std::size_t) { return kc; },
            [ac](std::size_t, double v) { return ReactionTerm{ac * v, ac}; }, 0.0, 0.0);
    };
    for (std::size_t m = 0; m < steps; ++m) {
        if (snaps && m % snap_every == 0)
            snaps->push_back(psi);
        const double t0 = dt * static_cast<double>(m);
        if (m < 2) {
            advance(t0, 0.5 * dt, 1.0);
            advance(t0 + 0.5 * dt, 0.5 * dt, 1.0);
        } else {
            advance(t0, dt, 0.5);
        }
    }
}

inline double sup_norm(const std::vector<double>& v)
{
    double m = 0.0;
    for (double x : v)
        m = std::max(m, std::abs(x));
    return m;
}

inline EigenResult eigen_single(const PeriodicFn& k, const PeriodicFn& a, double ell,
                                std::size_t nodes, std::size_t steps, const EigenGrid& grid)
{
    const double T = k.period();
    const double h = ell / static_cast<double>(nodes);
    ThetaStepper stepper(nodes);
    std::vector<double> psi(nodes + 1);
    for (std::size_t j = 0; j <= nodes; ++j)
        psi[j] = std::sin(std::numbers::pi * static_cast<double>(j) / static_cast<double>(nodes));
    psi.front() = psi.back() = 0.0;

    EigenResult res;
    res.length = ell;
    res.period = T;
    double rho_prev = 0.0;
    std::vector<double> prev;
    for (std::size_t p = 1; p <= grid.max_periods; ++p) {
        prev = psi;
        eigen_period_map(psi, k, a, h, steps, stepper, nullptr, 1);
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j <= nodes; ++j) {
            num += prev[j] * psi[j];
            den += prev[j] * prev[j];
        }
        const double rho = num / den;
        if (!(rho > 0.0) || !std::isfinite(rho))
            throw Error(ErrorCode::NoConvergence, "period map lost positivity");
        const double norm = sup_norm(psi);
        for (double& x : psi)
            x /= norm;
        res.iterations = p;
        if (p > 1 && std::abs(rho - rho_prev) < grid.tolerance * rho) {
            res.converged = true;
            res.lambda1 = -std::log(rho) / T;
            break;
        }
        rho_prev = rho;
    }
    if (!res.converged)
        throw Error(ErrorCode::NoConvergence, "power iteration did not settle within " +
                                                  std::to_string(grid.max_periods) + " periods");

    // One more period to record the Floquet eigenfunction phi = e^{lambda t} psi.
    std::vector<std::vector<double>> snaps;
    const std::size_t every = std::max<std::size_t>(1, steps / std::max<std::size_t>(1, grid.snapshots));
    eigen_period_map(psi, k, a, h, steps, stepper, &snaps, every);
    double peak = 0.0;
    for (std::size_t m = 0; m < snaps.size(); ++m) {
        const double t = T * static_cast<double>(m * every) / static_cast<double>(steps);
        const double scale = std::exp(res.lambda1 * t);
        for (double& x : snaps[m])
            x *= scale;
        peak = std::max(peak, sup_norm(snaps[m]));
    }
    for (auto& s : snaps)
        for (double& x : s)
            x /= peak;
    res.eigenfunction = std::move(snaps);
    return res;
}

} // namespace detail

/// Principal eigenvalue of the T-periodic Dirichlet problem
/// phi_t - phi_zz - k(t) phi_z - a(t) phi = lambda phi on (0, l),
/// from the dominant Floquet multiplier rho of the period map:
/// lambda1 = -ln(rho)/T.
inline EigenResult principal_eigenvalue(const PeriodicFn& k, const PeriodicFn& a, double ell,
                                        const EigenGrid& grid = {})
{
    require(ell > 0.0, "interval length must be positive");
    require(std::abs(k.period() - a.period()) <= 1e-12 * k.period(), "k and a must share the period");
    if (!grid.richardson)
        return detail::eigen_single(k, a, ell, grid.nodes, grid.steps, grid);
    const EigenResult coarse = detail::eigen_single(k, a, ell, grid.nodes, grid.steps, grid);
    EigenResult fine = detail::eigen_single(k, a, ell, 2 * grid.nodes, 2 * grid.steps, grid);
    fine.lambda1 = (4.0 * fine.lambda1 - coarse.lambda1) / 3.0;
    fine.iterations += coarse.iterations;
    return fine;
}

inline double minimal_average_speed(const PeriodicFn& a)
{
    const double m = a.mean();
    if (!(m > 0.0))
        throw Error(ErrorCode::NonpositiveLinearization, "mean of a(t) must be positive");
    return 2.0 * std::sqrt(m);
}

/// Critical length l*(k,a): the sign change of lambda1(l), located by
/// bisection after growing (or shrinking) a bracket by factors of 2 from l = 1.
inline double critical_length(const PeriodicFn& k, const PeriodicFn& a, double tol = 1e-6,
                              const EigenGrid& grid = {})
{
    const double cbar = minimal_average_speed(a);
    if (std::abs(k.mean()) >= cbar)
        throw Error(ErrorCode::NoCriticalLength,
                    "|mean(k)| >= cbar: lambda1 > 0 for every length");
    auto lambda = [&](double ell) { return principal_eigenvalue(k, a, ell, grid).lambda1; };

    double lo = 1.0, hi = 1.0;
    double lam = lambda(1.0);
    if (std::abs(lam) <= tol)
        return 1.0;
    if (lam > 0.0) {
        while (lam > 0.0) {
            lo = hi;
            hi *= 2.0;
            if (hi > 1e4)
                throw Error(ErrorCode::NoCriticalLength, "no sign change of lambda1 below l = 1e4");
            lam = lambda(hi);
        }
    } else {
        while (lam < 0.0) {
            hi = lo;
            lo *= 0.5;
            if (lo < 1e-4)
                throw Error(ErrorCode::NoCriticalLength, "no sign change of lambda1 above l = 1e-4");
            lam = lambda(lo);
        }
    }
    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        lam = lambda(mid);
        if (std::abs(lam) <= tol || hi - lo < 1e-12 * hi)
            break;
        (lam > 0.0 ? lo : hi) = mid;
    }
    return mid;
}

} // namespace pfbp
