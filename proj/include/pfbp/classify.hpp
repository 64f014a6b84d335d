#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <future>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "critical.hpp"
#include "eigen.hpp"
#include "errors.hpp"
#include "fbp.hpp"
#include "periodic.hpp"

namespace pfbp {

enum class OutcomeKind { Vanishing, Spreading, VirtualSpreading, Transition, Undetermined };
enum class Confidence { High, Low };

inline std::string to_string(OutcomeKind k)
{
    switch (k) {
    case OutcomeKind::Vanishing: return "Vanishing";
    case OutcomeKind::Spreading: return "Spreading";
    case OutcomeKind::VirtualSpreading: return "VirtualSpreading";
    case OutcomeKind::Transition: return "Transition";
    case OutcomeKind::Undetermined: return "Undetermined";
    }
    return "?";
}

inline std::string to_string(Confidence c) { return c == Confidence::High ? "High" : "Low"; }

inline bool spreads(OutcomeKind k) { return k == OutcomeKind::Spreading || k == OutcomeKind::VirtualSpreading; }

struct ClassifyThresholds {
    double window = 10.0;          // K: fixed window [-K, K], moving window width 2K
    double extinction = 1e-4;
    double near_state = 1e-2;      // sup |u - P| on a window
    double escape = 20.0;          // fronts beyond this radius have escaped
    double front_rest = 1e-3;      // |g'| below this counts as a bounded left front
    double length_cells = 3.0;     // slack on the vanishing length bound, in grid cells
    double min_periods = 1.0;
};

/// What the classifier needs to know about the problem beyond the run.
struct ClassifierContext {
    Regime regime = Regime::Small;
    double cbar = 0.0;
    double beta_mean = 0.0;
    double mean_r = 0.0;
    double c1 = 0.0;               // moving-window speed (beta - cbar + mean r) / 2
    double ell_star = std::numeric_limits<double>::quiet_NaN(); // l*(-beta, a), small regime only
    bool low_confidence = false;
    PeriodicFn state;              // P(t)
};

inline ClassifierContext make_context(const Problem& problem, const CriticalSpeeds& crit,
                                      const EigenGrid& eigen_grid = {})
{
    ClassifierContext ctx;
    ctx.regime = crit.regime;
    ctx.cbar = crit.cbar;
    ctx.beta_mean = problem.beta.mean();
    ctx.mean_r = crit.r().mean();
    ctx.c1 = 0.5 * (ctx.beta_mean - ctx.cbar + ctx.mean_r);
    ctx.low_confidence = crit.low_confidence;
    const Reaction f = with_periodic_state(problem.reaction);
    ctx.state = state_of(f);
    if (crit.regime == Regime::Small)
        ctx.ell_star = critical_length(-problem.beta, f.linearization(), 1e-6, eigen_grid);
    return ctx;
}

struct Evidence {
    double t = 0.0;
    double sup_norm = 0.0;
    double g = 0.0, h = 0.0, gdot = 0.0, hdot = 0.0;
    double length = 0.0;
    double length_bound = std::numeric_limits<double>::quiet_NaN();
    double window_sup = 0.0;       // sup u on [-K, K]
    double window_dev = 0.0;       // sup |u - P| on [-K, K]
    double moving_center = 0.0;    // c1 t
    double moving_dev = std::numeric_limits<double>::quiet_NaN();
};

struct Outcome {
    OutcomeKind kind = OutcomeKind::Undetermined;
    Confidence confidence = Confidence::High;
    Evidence evidence;
    std::string reason;
};

namespace detail {

struct WindowStats {
    double sup_u = 0.0;
    double dev = 0.0;
};

// sup u and sup |u - p| over [a, b], sampled at the solution nodes inside
// the window and at its ends.
inline WindowStats window_stats(const FbpState& s, double a, double b, double p)
{
    WindowStats w;
    auto visit = [&](double u) {
        w.sup_u = std::max(w.sup_u, u);
        w.dev = std::max(w.dev, std::abs(u - p));
    };
    visit(s.u(a));
    visit(s.u(b));
    for (std::size_t j = 0; j <= s.intervals(); ++j) {
        const double x = s.x(j);
        if (x > a && x < b)
            visit(s.w[j]);
    }
    return w;
}

} // namespace detail

/// Decide the long-time outcome from the latest state of a run. Returns
/// Undetermined unless one of the rules fires.
inline Outcome classify(const Trajectory& traj, const ClassifierContext& ctx, const ClassifyThresholds& th = {})
{
    Outcome out;
    if (ctx.low_confidence)
        out.confidence = Confidence::Low;
    const FbpState& s = traj.last;
    Evidence& ev = out.evidence;
    ev.t = s.t;
    ev.sup_norm = s.sup_norm();
    ev.g = s.g;
    ev.h = s.h;
    ev.gdot = s.gdot;
    ev.hdot = s.hdot;
    ev.length = s.length();
    const double P = ctx.state(s.t);
    const double K = th.window;
    const auto fixed = detail::window_stats(s, -K, K, P);
    ev.window_sup = fixed.sup_u;
    ev.window_dev = fixed.dev;
    ev.moving_center = ctx.c1 * s.t;

    if (traj.periods() < th.min_periods) {
        out.reason = "run shorter than the minimum number of periods";
        return out;
    }

    if (ev.sup_norm < th.extinction) {
        if (ctx.regime == Regime::Small) {
            ev.length_bound = ctx.ell_star + th.length_cells * s.length() / static_cast<double>(s.intervals());
            if (ev.length > ev.length_bound) {
                out.reason = "sup norm below extinction but h - g exceeds the critical length";
                out.confidence = Confidence::Low;
                return out;
            }
        }
        out.kind = OutcomeKind::Vanishing;
        out.reason = "sup norm below extinction threshold";
        return out;
    }

    if (s.g < -th.escape && s.h > th.escape && fixed.dev < th.near_state) {
        out.kind = OutcomeKind::Spreading;
        out.reason = "both fronts escaped and u is near P on the fixed window";
        return out;
    }

    if (s.h > th.escape && s.g > -th.escape && std::abs(s.gdot) < th.front_rest && fixed.sup_u < th.near_state) {
        const double a = ev.moving_center - K;
        const double b = ev.moving_center + K;
        if (a > s.g && b < s.h) {
            ev.moving_dev = detail::window_stats(s, a, b, P).dev;
            if (ev.moving_dev < th.near_state) {
                out.kind = OutcomeKind::VirtualSpreading;
                out.reason = "left front at rest, u small on the fixed window, near P on the moving window";
                return out;
            }
        }
    }
    out.reason = "no rule fired";
    return out;
}

struct RunOptions {
    double horizon_periods = 60.0;
    std::size_t max_extensions = 4;    // horizon doubled each time
    FbpGrid grid;
    SamplingPolicy sampling;
    ClassifyThresholds thresholds;
    bool stop_early = true;
};

struct ClassifiedRun {
    Trajectory trajectory;
    Outcome outcome;
    std::size_t extensions = 0;
    bool horizon_too_short = false;   // no rule fired by the final horizon
};

/// simulate + classify, stopping as soon as a rule fires and doubling the
/// horizon while the outcome is still undetermined.
inline ClassifiedRun run_classified(const Problem& problem, const InitialData& init, const ClassifierContext& ctx,
                                    const RunOptions& opt = {})
{
    ClassifiedRun run;
    StopHook hook;
    if (opt.stop_early)
        hook = [&](const Trajectory& tr) {
            return classify(tr, ctx, opt.thresholds).kind != OutcomeKind::Undetermined;
        };
    double horizon = opt.horizon_periods * problem.period();
    run.trajectory = simulate(problem, init, horizon, opt.grid, opt.sampling, hook);
    run.outcome = classify(run.trajectory, ctx, opt.thresholds);
    while (run.outcome.kind == OutcomeKind::Undetermined && run.extensions < opt.max_extensions &&
           !run.trajectory.stopped_by_hook) {
        horizon *= 2.0;
        ++run.extensions;
        continue_simulation(run.trajectory, problem, horizon, opt.grid, opt.sampling, hook);
        run.outcome = classify(run.trajectory, ctx, opt.thresholds);
    }
    run.horizon_too_short = run.outcome.kind == OutcomeKind::Undetermined;
    return run;
}

struct ThresholdOptions {
    double sigma_low = 0.1;
    double sigma_high = 10.0;
    double rel_tol = 1e-2;            // stop when hi - lo <= rel_tol * hi
    std::size_t budget = 40;          // probes, expansions included
    double expand = 4.0;
    std::size_t max_expansions = 6;
    bool concurrent_endpoints = true;
    RunOptions run;
};

struct Probe {
    double sigma = 0.0;
    Outcome outcome;
    double g_end = 0.0, h_end = 0.0;
    double periods = 0.0;
};

struct ThresholdResult {
    double sigma_low = 0.0;           // largest sigma seen to vanish
    double sigma_high = 0.0;          // smallest sigma seen to (virtually) spread
    double width = 0.0;
    bool converged = false;
    Confidence confidence = Confidence::High;
    std::vector<Probe> probes;        // in evaluation order
    std::vector<double> transition;   // undetermined sigmas left inside the bracket
};

/// Bisection for the sharp threshold sigma* of u0 = sigma phi. Undetermined
/// probes never move the bracket; the next probe then splits the widest gap
/// between known points.
inline ThresholdResult critical_sigma(const Problem& problem, const InitialData& shape, const ClassifierContext& ctx,
                                      const ThresholdOptions& opt = {})
{
    if (ctx.regime == Regime::Large)
        throw Error(ErrorCode::RegimeError, "mean(beta) >= B(shape): every sigma vanishes, no threshold exists");
    require(opt.sigma_low > 0.0 && opt.sigma_high > opt.sigma_low, "need 0 < sigma_low < sigma_high");

    ThresholdResult res;
    if (ctx.low_confidence)
        res.confidence = Confidence::Low;
    auto probe = [&](double sigma) {
        InitialData d = shape;
        d.sigma = sigma;
        const ClassifiedRun run = run_classified(problem, d, ctx, opt.run);
        return Probe{sigma, run.outcome, run.trajectory.last.g, run.trajectory.last.h, run.trajectory.periods()};
    };
    auto record = [&](Probe p) {
        res.probes.push_back(p);
        return p.outcome.kind;
    };

    double lo = opt.sigma_low, hi = opt.sigma_high;
    OutcomeKind klo, khi;
    if (opt.concurrent_endpoints) {
        auto flo = std::async(std::launch::async, probe, lo);
        const Probe phi = probe(hi);
        klo = record(flo.get());
        khi = record(phi);
    } else {
        klo = record(probe(lo));
        khi = record(probe(hi));
    }

    std::size_t expansions = 0;
    while (klo != OutcomeKind::Vanishing) {
        if (++expansions > opt.max_expansions || res.probes.size() >= opt.budget)
            throw Error(ErrorCode::BracketFailure,
                        "no vanishing down to sigma = " + std::to_string(lo) + "; consistent with sigma* = 0");
        if (spreads(klo))
            hi = std::min(hi, lo), khi = klo;
        lo /= opt.expand;
        klo = record(probe(lo));
    }
    expansions = 0;
    while (!spreads(khi)) {
        if (khi == OutcomeKind::Vanishing)
            lo = std::max(lo, hi);
        if (++expansions > opt.max_expansions || res.probes.size() >= opt.budget)
            throw Error(ErrorCode::BracketFailure,
                        "no spreading up to sigma = " + std::to_string(hi) + "; consistent with sigma* = infinity");
        hi *= opt.expand;
        khi = record(probe(hi));
    }

    // Tested points strictly inside (lo, hi) whose outcome was undetermined.
    std::vector<double> open;
    while (hi - lo > opt.rel_tol * hi && res.probes.size() < opt.budget) {
        std::vector<double> pts{lo};
        pts.insert(pts.end(), open.begin(), open.end());
        pts.push_back(hi);
        std::size_t widest = 0;
        for (std::size_t i = 1; i + 1 < pts.size(); ++i)
            if (pts[i + 1] - pts[i] > pts[widest + 1] - pts[widest])
                widest = i;
        const double mid = 0.5 * (pts[widest] + pts[widest + 1]);
        const OutcomeKind k = record(probe(mid));
        if (k == OutcomeKind::Vanishing) {
            lo = mid;
        } else if (spreads(k)) {
            hi = mid;
        } else {
            open.insert(std::upper_bound(open.begin(), open.end(), mid), mid);
            res.confidence = Confidence::Low;
        }
        std::erase_if(open, [&](double x) { return x <= lo || x >= hi; });
    }
    res.sigma_low = lo;
    res.sigma_high = hi;
    res.width = hi - lo;
    res.converged = res.width <= opt.rel_tol * hi;
    res.transition = open;
    for (auto& p : res.probes)
        if (p.outcome.kind == OutcomeKind::Undetermined && p.sigma > lo && p.sigma < hi)
            p.outcome.kind = OutcomeKind::Transition;
    return res;
}

struct AsymptoticsReport {
    double c_l = 0.0;
    double H1 = 0.0;
    std::vector<double> t;               // sample times
    std::vector<double> h_minus_R;
    std::vector<double> speed_residual;  // h' - r(t)
    std::vector<double> profile_t;       // snapshot times
    std::vector<double> profile_sup;     // sup over [lower, h] of |u - U(t, R + H1 - x)|

    bool has_left = false;
    double G1 = 0.0;
    std::vector<double> g_plus_L;
    std::vector<double> left_speed_residual; // g' + l(t)
    std::vector<double> left_profile_sup;    // sup over [g, 0] of |u - U^(t, x + L - G1)|
};

namespace detail {

inline double final_quarter_mean(const std::vector<double>& t, const std::vector<double>& v)
{
    const double t0 = t.front() + 0.75 * (t.back() - t.front());
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] >= t0)
            sum += v[i], ++n;
    return n ? sum / static_cast<double>(n) : v.back();
}

inline double profile_gap(const Snapshot& s, double a, double b, const std::function<double(double)>& ref)
{
    const std::size_t n = s.w.size() - 1;
    const double L = s.h - s.g;
    double gap = 0.0;
    for (std::size_t j = 0; j <= n; ++j) {
        const double x = s.g + L * static_cast<double>(j) / static_cast<double>(n);
        if (x < a || x > b)
            continue;
        gap = std::max(gap, std::abs(s.w[j] - ref(x)));
    }
    return gap;
}

} // namespace detail

/// Front laws of a spreading run: h - R(t) -> H1, h' - r -> 0 and the
/// profile against the semi-wave U(t, R(t) + H1 - x); left analogues when
/// the left semi-wave exists.
inline AsymptoticsReport front_asymptotics(const Trajectory& traj, const CriticalSpeeds& crit,
                                           const ClassifierContext& ctx)
{
    AsymptoticsReport rep;
    const double gap = ctx.mean_r - (ctx.beta_mean - ctx.cbar);
    rep.c_l = ctx.regime == Regime::Small ? 0.0 : ctx.beta_mean - ctx.cbar + 0.05 * gap;
    rep.t = traj.t;
    for (std::size_t i = 0; i < traj.t.size(); ++i) {
        rep.h_minus_R.push_back(traj.h[i] - crit.R(traj.t[i]));
        rep.speed_residual.push_back(traj.hdot[i] - crit.r()(traj.t[i]));
    }
    rep.H1 = detail::final_quarter_mean(rep.t, rep.h_minus_R);
    rep.has_left = crit.left.has_value();
    if (rep.has_left) {
        const PeriodicFn& l = crit.left->speed;
        for (std::size_t i = 0; i < traj.t.size(); ++i) {
            rep.g_plus_L.push_back(traj.g[i] + crit.L(traj.t[i]));
            rep.left_speed_residual.push_back(traj.gdot[i] + l(traj.t[i]));
        }
        rep.G1 = detail::final_quarter_mean(rep.t, rep.g_plus_L);
    }

    const SemiWaveProfile& U = crit.right.profile;
    for (const Snapshot& s : traj.snapshots) {
        if (s.t <= 0.0)
            continue;
        rep.profile_t.push_back(s.t);
        const double R = crit.R(s.t);
        const double lower = ctx.regime == Regime::Small ? 0.0 : rep.c_l * s.t;
        rep.profile_sup.push_back(detail::profile_gap(
            s, std::max(lower, s.g), s.h, [&](double x) { return U.value(s.t, R + rep.H1 - x); }));
        if (rep.has_left) {
            const SemiWaveProfile& V = crit.left->profile;
            const double Lt = crit.L(s.t);
            rep.left_profile_sup.push_back(detail::profile_gap(
                s, s.g, std::min(0.0, s.h), [&](double x) { return V.value(s.t, x + Lt - rep.G1); }));
        }
    }
    return rep;
}

} // namespace pfbp
