#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "errors.hpp"
#include "parabolic.hpp"
#include "periodic.hpp"

namespace pfbp {

/// Coefficients of the free boundary problem
///   u_t = u_xx - beta(t) u_x + f(t,u) on g(t) < x < h(t),
///   g' = -mu u_x(t,g),  h' = -mu u_x(t,h).
struct Problem {
    PeriodicFn beta;
    PeriodicFn mu;
    Reaction reaction;

    double period() const { return beta.period(); }
};

/// u0 = sigma * phi on [-h0, h0].
struct InitialData {
    double h0 = 1.0;
    std::function<double(double)> phi;
    double sigma = 1.0;
    std::string name = "custom";

    static InitialData cosine(double h0, double sigma)
    {
        InitialData d;
        d.h0 = h0;
        d.sigma = sigma;
        d.name = "cos";
        d.phi = [h0](double x) { return std::cos(std::numbers::pi * x / (2.0 * h0)); };
        return d;
    }

    double operator()(double x) const { return sigma * phi(x); }
};

struct FbpGrid {
    std::size_t nxi = 1024;                 // intervals on xi in [0, 1]
    std::size_t steps_per_period = 1024;    // default dt = T / steps_per_period
    double velocity_tolerance = 1e-3;       // corrector vs predictor, relative to 1 + |v|
    std::size_t max_halvings = 16;
};

/// Solution at one instant on the fixed grid xi_j = j / nxi,
/// x = g + xi (h - g).
struct FbpState {
    double t = 0.0;
    double g = 0.0;
    double h = 0.0;
    double gdot = 0.0;
    double hdot = 0.0;
    std::vector<double> w;

    double length() const { return h - g; }
    std::size_t intervals() const { return w.size() - 1; }
    double x(std::size_t j) const
    {
        return g + length() * static_cast<double>(j) / static_cast<double>(intervals());
    }
    double sup_norm() const { return *std::max_element(w.begin(), w.end()); }

    /// u(t, x), linear between nodes, zero outside [g, h].
    double u(double xq) const
    {
        if (xq <= g || xq >= h)
            return 0.0;
        const double s = (xq - g) / length() * static_cast<double>(intervals());
        const std::size_t j = std::min(static_cast<std::size_t>(s), intervals() - 1);
        const double a = s - static_cast<double>(j);
        return (1.0 - a) * w[j] + a * w[j + 1];
    }
};

struct FrontVelocities {
    double gdot;
    double hdot;
};

inline FrontVelocities front_velocities(const std::vector<double>& w, double length, double mu)
{
    const double dxi = 1.0 / static_cast<double>(w.size() - 1);
    return {-mu * left_gradient(w, dxi) / length, -mu * right_gradient(w, dxi) / length};
}

inline FbpState initial_state(const InitialData& init, const Problem& problem, const FbpGrid& grid)
{
    require(init.h0 > 0.0, "h0 must be positive");
    require(init.sigma >= 0.0, "sigma must be nonnegative");
    require(grid.nxi >= 8, "at least 8 xi intervals");
    FbpState s;
    s.g = -init.h0;
    s.h = init.h0;
    s.w.resize(grid.nxi + 1);
    for (std::size_t j = 0; j <= grid.nxi; ++j)
        s.w[j] = init(s.x(j));
    s.w.front() = s.w.back() = 0.0;
    const auto v = front_velocities(s.w, s.length(), problem.mu(0.0));
    s.gdot = v.gdot;
    s.hdot = v.hdot;
    return s;
}

namespace detail {

struct FbpWorkspace {
    ThetaStepper stepper;
};

// Solve the front-fixed equation over [t, t + dt] with the given mean front
// velocities and end positions; returns the new w.
inline std::vector<double> fbp_solve(const FbpState& s, const Problem& problem, double dt, double theta,
                                     double gdot, double hdot, double length_new, FbpWorkspace& ws)
{
    const std::size_t n = s.intervals();
    const double dxi = 1.0 / static_cast<double>(n);
    const double tm = s.t + 0.5 * dt;
    const double lmid = 0.5 * (s.length() + length_new);
    const double ldot = hdot - gdot;
    const double beta = problem.beta(tm);
    const auto fz = problem.reaction.at(tm);
    if (ws.stepper.intervals() != n)
        ws.stepper.resize(n);
    std::vector<double> w = s.w;
    ws.stepper.step(
        w, dxi, dt, theta, 1.0 / (lmid * lmid),
        [&](std::size_t j) { return (gdot + dxi * static_cast<double>(j) * ldot - beta) / lmid; },
        [&fz](std::size_t, double u) { return ReactionTerm{fz.value(u), fz.derivative(u)}; }, 0.0, 0.0);
    return w;
}

} // namespace detail

/// One step of the front-fixed scheme: predictor with the lagged front
/// velocities, one corrector sweep with the trapezoidal velocities.
/// Throws StepRejected when the corrected velocities drift from the
/// predicted ones beyond tolerance, DomainCollapse when h - g degenerates.
inline FbpState advance(const FbpState& s, const Problem& problem, double dt, const FbpGrid& grid,
                        double theta = 0.5)
{
    thread_local detail::FbpWorkspace ws;
    const double t1 = s.t + dt;
    const double mu1 = problem.mu(t1);

    // predictor
    const double g_p = s.g + dt * s.gdot;
    const double h_p = s.h + dt * s.hdot;
    const auto w_p = detail::fbp_solve(s, problem, dt, theta, s.gdot, s.hdot, h_p - g_p, ws);
    const auto v_p = front_velocities(w_p, h_p - g_p, mu1);

    // corrector
    const double gdot_c = (1.0 - theta) * s.gdot + theta * v_p.gdot;
    const double hdot_c = (1.0 - theta) * s.hdot + theta * v_p.hdot;
    FbpState out;
    out.t = t1;
    out.g = s.g + dt * gdot_c;
    out.h = s.h + dt * hdot_c;
    const double collapse = 4.0 * s.length() / static_cast<double>(s.intervals());
    if (!(out.h - out.g > collapse) || !std::isfinite(out.h - out.g))
        throw Error(ErrorCode::DomainCollapse, "front distance fell below 4 grid cells");
    out.w = detail::fbp_solve(s, problem, dt, theta, gdot_c, hdot_c, out.h - out.g, ws);
    const auto v = front_velocities(out.w, out.length(), mu1);
    out.gdot = v.gdot;
    out.hdot = v.hdot;

    const double dg = std::abs(v.gdot - v_p.gdot) / (1.0 + std::abs(v.gdot));
    const double dh = std::abs(v.hdot - v_p.hdot) / (1.0 + std::abs(v.hdot));
    if (std::max(dg, dh) > grid.velocity_tolerance || !std::isfinite(dg + dh))
        throw Error(ErrorCode::StepRejected, "front velocity corrector mismatch " + std::to_string(std::max(dg, dh)));
    return out;
}

struct SamplingPolicy {
    std::size_t samples_per_period = 16;
    std::size_t snapshot_every_periods = 1;
};

struct Snapshot {
    double t;
    double g;
    double h;
    std::vector<double> w;
};

/// Recorded history of a run.
struct Trajectory {
    double period = 1.0;
    std::vector<double> t, g, h, gdot, hdot, sup;
    std::vector<Snapshot> snapshots;
    FbpState last;
    double amplitude_bound = 0.0;   // M = 1 + sup u0
    std::size_t rejected_steps = 0;
    bool stopped_by_hook = false;
    double next_dt = 0.0;

    double periods() const { return t.empty() ? 0.0 : t.back() / period; }

    void record(const FbpState& s)
    {
        t.push_back(s.t);
        g.push_back(s.g);
        h.push_back(s.h);
        gdot.push_back(s.gdot);
        hdot.push_back(s.hdot);
        sup.push_back(s.sup_norm());
    }
};

using StopHook = std::function<bool(const Trajectory&)>;

namespace detail {

// Advance to exactly t_target with adaptive halving on StepRejected.
inline void advance_to(FbpState& s, double t_target, double dt0, const Problem& problem, const FbpGrid& grid,
                       double& dt, std::size_t& rejected)
{
    while (s.t < t_target - 1e-12 * std::max(1.0, t_target)) {
        const double remaining = t_target - s.t;
        double step = std::min(dt, remaining);
        if (remaining - step < 1e-9 * dt0)
            step = remaining;
        std::size_t halvings = 0;
        while (true) {
            try {
                FbpState next = advance(s, problem, step, grid);
                if (step == remaining)
                    next.t = t_target;
                s = std::move(next);
                break;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::StepRejected || ++halvings > grid.max_halvings)
                    throw;
                ++rejected;
                step *= 0.5;
                dt = step;
            }
        }
        if (halvings == 0)
            dt = std::min(dt0, 2.0 * dt);
    }
}

} // namespace detail

/// Continue a trajectory from its last state up to the given horizon
/// (absolute time). The hook is consulted at each snapshot.
inline void continue_simulation(Trajectory& traj, const Problem& problem, double horizon, const FbpGrid& grid,
                                const SamplingPolicy& policy, const StopHook& hook = {})
{
    const double T = problem.period();
    const double dt0 = T / static_cast<double>(grid.steps_per_period);
    const double dsample = T / static_cast<double>(policy.samples_per_period);
    double dt = traj.next_dt > 0.0 ? std::min(traj.next_dt, dt0) : dt0;
    FbpState& s = traj.last;
    std::size_t k = static_cast<std::size_t>(std::llround(s.t / dsample));
    const std::size_t per = policy.samples_per_period * std::max<std::size_t>(1, policy.snapshot_every_periods);
    traj.stopped_by_hook = false;
    while (s.t < horizon - 1e-12 * horizon) {
        ++k;
        const double target = std::min(horizon, dsample * static_cast<double>(k));
        detail::advance_to(s, target, dt0, problem, grid, dt, traj.rejected_steps);
        traj.record(s);
        if (k % per == 0) {
            traj.snapshots.push_back({s.t, s.g, s.h, s.w});
            if (hook && hook(traj)) {
                traj.stopped_by_hook = true;
                break;
            }
        }
    }
    traj.next_dt = dt;
}

/// Run the free boundary problem from u0 = sigma phi up to the horizon.
/// The first step is split into two backward-Euler half steps to damp
/// nonsmooth initial data; a quarter step is used when the initial front
/// slopes vanish.
inline Trajectory simulate(const Problem& problem, const InitialData& init, double horizon,
                           const FbpGrid& grid = {}, const SamplingPolicy& policy = {},
                           const StopHook& hook = {})
{
    Trajectory traj;
    traj.period = problem.period();
    FbpState s = initial_state(init, problem, grid);
    traj.amplitude_bound = 1.0 + s.sup_norm();
    traj.record(s);
    traj.snapshots.push_back({s.t, s.g, s.h, s.w});

    if (s.sup_norm() > 0.0) {
        const double dt0 = problem.period() / static_cast<double>(grid.steps_per_period);
        const bool flat = std::abs(s.gdot) < 1e-12 && std::abs(s.hdot) < 1e-12;
        double first = flat ? 0.25 * dt0 : dt0;
        for (std::size_t halvings = 0;; ++halvings) {
            try {
                FbpState mid = advance(s, problem, 0.5 * first, grid, 1.0);
                s = advance(mid, problem, 0.5 * first, grid, 1.0);
                break;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::StepRejected || halvings >= grid.max_halvings)
                    throw;
                ++traj.rejected_steps;
                first *= 0.5;
            }
        }
        traj.next_dt = 2.0 * first;
    }
    traj.last = std::move(s);
    continue_simulation(traj, problem, horizon, grid, policy, hook);
    return traj;
}

} // namespace pfbp
