#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "eigen.hpp"
#include "errors.hpp"
#include "periodic.hpp"
#include "semiwave.hpp"

namespace pfbp {

enum class Regime { Small, Medium, Large };

inline std::string to_string(Regime r)
{
    switch (r) {
    case Regime::Small: return "Small";
    case Regime::Medium: return "Medium";
    case Regime::Large: return "Large";
    }
    return "?";
}

/// cbar = 2 sqrt(mean(a)).
inline double cbar(const PeriodicFn& a) { return minimal_average_speed(a); }

struct SpeedOptions {
    double damping = 0.5;
    double tolerance = 1e-5;       // sup |r - A[k - r]|
    std::size_t max_iterations = 400;
    SemiWaveGrid grid;
};

struct SpeedResult {
    PeriodicFn speed;
    SemiWaveProfile profile;       // U(t,z; drift - speed)
    double residual = 0.0;
    std::size_t iterations = 0;
};

namespace detail {

inline SemiWaveProfile half_line_fixed(const PeriodicFn& k, const Reaction& f, double Z, double cb,
                                       const SemiWaveGrid& grid, const SemiWaveProfile* warm)
{
    if (k.mean() <= -cb)
        return zero_profile(ProfileKind::HalfLine, k, Z, grid);
    return half_line_at(k, f, Z, grid, warm);
}

/// Fixed point s = A[drift - s] by damped iteration
/// s <- (1 - w) s + w A[drift - s], starting from s = 0 (or a guess).
inline SpeedResult flux_fixed_point(const PeriodicFn& drift, const PeriodicFn& mu, const Reaction& f,
                                    const SpeedOptions& opt, const std::optional<PeriodicFn>& guess)
{
    const Reaction g = with_periodic_state(f);
    const double cb = cbar(g.linearization());
    const double T = drift.period();
    const std::size_t m = opt.grid.steps;
    PeriodicFn s = guess ? guess->resampled(m) : PeriodicFn::constant(T, 0.0, m);

    SemiWaveProfile prof = half_line_profile(drift - s, g, opt.grid);
    double Z = std::max(prof.length, opt.grid.truncation_radius);
    for (std::size_t it = 1; it <= opt.max_iterations; ++it) {
        const PeriodicFn flux = boundary_flux(prof, mu);
        const PeriodicFn gap = flux - s;
        const double residual = std::max(std::abs(gap.max()), std::abs(gap.min()));
        if (residual < opt.tolerance) {
            // Confirm the truncation radius at the converged drift.
            SemiWaveProfile wider = half_line_fixed(drift - s, g, 2.0 * Z, cb, opt.grid, &prof);
            const PeriodicFn wflux = boundary_flux(wider, mu);
            double diff = 0.0;
            for (std::size_t i = 0; i < wflux.size(); ++i)
                diff = std::max(diff, std::abs(wflux[i] - flux(wflux.node(i))));
            if (diff < std::max(opt.grid.truncation_tolerance, 0.1 * opt.tolerance))
                return {s, std::move(prof), residual, it};
            Z *= 2.0;
            prof = std::move(wider);
            continue;
        }
        s = (1.0 - opt.damping) * s + opt.damping * flux;
        prof = half_line_fixed(drift - s, g, Z, cb, opt.grid, &prof);
    }
    throw Error(ErrorCode::NoConvergence, "semi-wave speed iteration did not converge");
}

} // namespace detail

/// r(t;beta): the fixed point r = A[beta - r] of the rightward semi-wave.
inline SpeedResult rightward_speed(const PeriodicFn& beta, const PeriodicFn& mu, const Reaction& f,
                                   const SpeedOptions& opt = {},
                                   const std::optional<PeriodicFn>& guess = std::nullopt)
{
    return detail::flux_fixed_point(beta, mu, f, opt, guess);
}

/// l(t;beta): the fixed point l = A[-beta - l]; exists only for mean(beta) < cbar.
inline SpeedResult leftward_speed(const PeriodicFn& beta, const PeriodicFn& mu, const Reaction& f,
                                  const SpeedOptions& opt = {},
                                  const std::optional<PeriodicFn>& guess = std::nullopt)
{
    if (beta.mean() >= cbar(f.linearization()))
        throw Error(ErrorCode::RegimeError, "leftward semi-wave needs mean(beta) < cbar");
    return detail::flux_fixed_point(-beta, mu, f, opt, guess);
}

struct CriticalAverageOptions {
    double tolerance = 1e-3;       // final bracket width in b
    double initial_step = 1.0;
    std::size_t max_expansions = 12;
    SpeedOptions speed;
};

struct CriticalAverageResult {
    double B = 0.0;
    double lo = 0.0, hi = 0.0;
    std::vector<std::pair<double, double>> samples; // (b, y(b))
};

/// y(b) = b - cbar - mean r(.; b + theta), with r warm-started from a guess.
inline double critical_gap(double b, const PeriodicFn& theta, const PeriodicFn& mu, const Reaction& f,
                           const SpeedOptions& opt, std::optional<PeriodicFn>* guess = nullptr)
{
    const double cb = cbar(f.linearization());
    const SpeedResult r = rightward_speed(theta + b, mu, f, opt, guess ? *guess : std::nullopt);
    if (guess)
        *guess = r.speed;
    return b - cb - r.speed.mean();
}

/// B(theta): the unique root of the increasing function y(b) on [cbar, inf).
inline CriticalAverageResult critical_average(const PeriodicFn& theta, const PeriodicFn& mu, const Reaction& f,
                                              const CriticalAverageOptions& opt = {})
{
    require(std::abs(theta.mean()) < 1e-8, "shape must have zero mean");
    const Reaction g = with_periodic_state(f);
    const double cb = cbar(g.linearization());
    CriticalAverageResult res;
    std::optional<PeriodicFn> guess;

    double lo = cb;
    double ylo = critical_gap(lo, theta, mu, g, opt.speed, &guess);
    res.samples.emplace_back(lo, ylo);
    if (ylo >= 0.0)
        throw Error(ErrorCode::BracketFailure, "y(cbar) >= 0; semi-wave speed looks wrong");
    double step = opt.initial_step;
    double hi = lo + step;
    double yhi = critical_gap(hi, theta, mu, g, opt.speed, &guess);
    res.samples.emplace_back(hi, yhi);
    std::size_t expansions = 0;
    while (yhi <= 0.0) {
        if (++expansions > opt.max_expansions)
            throw Error(ErrorCode::BracketFailure, "y(b) stayed nonpositive up to b = " + std::to_string(hi));
        lo = hi;
        step *= 2.0;
        hi = lo + step;
        yhi = critical_gap(hi, theta, mu, g, opt.speed, &guess);
        res.samples.emplace_back(hi, yhi);
    }
    while (hi - lo > opt.tolerance) {
        const double mid = 0.5 * (lo + hi);
        const double y = critical_gap(mid, theta, mu, g, opt.speed, &guess);
        res.samples.emplace_back(mid, y);
        (y > 0.0 ? hi : lo) = mid;
    }
    res.lo = lo;
    res.hi = hi;
    res.B = 0.5 * (lo + hi);
    return res;
}

/// beta* = A[cbar + omega] + cbar + omega, a member of the critical set.
inline PeriodicFn beta_star_from_shape(const PeriodicFn& omega, const PeriodicFn& mu, const Reaction& f,
                                       const SemiWaveGrid& grid = {})
{
    require(std::abs(omega.mean()) < 1e-8, "shape must have zero mean");
    const Reaction g = with_periodic_state(f);
    const double cb = cbar(g.linearization());
    const PeriodicFn k = omega + cb;
    const SemiWaveProfile prof = half_line_profile(k, g, grid);
    return boundary_flux(prof, mu) + k;
}

struct RegimeReport {
    Regime regime = Regime::Small;
    double cbar = 0.0;
    double beta_mean = 0.0;
    double B = std::numeric_limits<double>::quiet_NaN();
    double margin = 0.0;
    bool low_confidence = false;
};

inline constexpr double kRegimeMarginFlag = 1e-2;

inline RegimeReport advection_regime(const PeriodicFn& beta, const PeriodicFn& mu, const Reaction& f,
                                     const CriticalAverageOptions& opt = {})
{
    RegimeReport rep;
    rep.cbar = cbar(f.linearization());
    rep.beta_mean = beta.mean();
    require(rep.beta_mean >= 0.0, "mean(beta) must be nonnegative; reflect x -> -x first");
    rep.margin = std::abs(rep.beta_mean - rep.cbar);
    if (rep.beta_mean < rep.cbar) {
        rep.regime = Regime::Small;
    } else {
        const auto ms = mean_and_shape(beta);
        rep.B = critical_average(ms.shape, mu, f, opt).B;
        rep.regime = rep.beta_mean < rep.B ? Regime::Medium : Regime::Large;
        rep.margin = std::min(rep.margin, std::abs(rep.beta_mean - rep.B));
    }
    rep.low_confidence = rep.margin < kRegimeMarginFlag;
    return rep;
}

/// Everything the simulator and classifier need about the semi-waves.
struct CriticalSpeeds {
    double cbar = 0.0;
    Regime regime = Regime::Small;
    double B = std::numeric_limits<double>::quiet_NaN();
    double margin = 0.0;
    bool low_confidence = false;
    SpeedResult right;
    std::optional<SpeedResult> left;

    const PeriodicFn& r() const { return right.speed; }
    double R(double t) const { return right.speed.integral(t); }
    double L(double t) const { return left ? left->speed.integral(t) : 0.0; }
};

inline CriticalSpeeds critical_speeds(const PeriodicFn& beta, const PeriodicFn& mu, const Reaction& f,
                                      const CriticalAverageOptions& opt = {})
{
    const Reaction g = with_periodic_state(f);
    CriticalSpeeds cs;
    const RegimeReport rep = advection_regime(beta, mu, g, opt);
    cs.cbar = rep.cbar;
    cs.regime = rep.regime;
    cs.B = rep.B;
    cs.margin = rep.margin;
    cs.low_confidence = rep.low_confidence;
    cs.right = rightward_speed(beta, mu, g, opt.speed);
    if (rep.regime == Regime::Small)
        cs.left = leftward_speed(beta, mu, g, opt.speed);
    return cs;
}

} // namespace pfbp
