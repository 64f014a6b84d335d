#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "eigen.hpp"
#include "errors.hpp"
#include "parabolic.hpp"
#include "periodic.hpp"

namespace pfbp {

enum class ProfileKind {
    DirichletZero,   // v(t,0) = v(t,l) = 0
    DirichletPinned, // v(t,0) = 0, v(t,l) = P^0
    HalfLine,        // v(t,0) = 0, v(t,Z) = P(t), Z doubled until the flux settles
};

inline std::string to_string(ProfileKind k)
{
    switch (k) {
    case ProfileKind::DirichletZero: return "dd0";
    case ProfileKind::DirichletPinned: return "dd1";
    case ProfileKind::HalfLine: return "halfline";
    }
    return "?";
}

struct SemiWaveGrid {
    double nodes_per_unit = 256.0;
    std::size_t min_nodes = 64;
    std::size_t steps = 512;          // time steps per period
    std::size_t store_every = 4;      // keep every 4th time level of the field
    double period_tolerance = 1e-8;   // sup change over one period
    std::size_t max_periods = 2000;
    double trivial_threshold = 1e-6;
    double truncation_radius = 10.0;  // Z0 for the half line
    double truncation_tolerance = 1e-6;
    std::size_t max_doublings = 4;
};

/// Time-periodic profile on [0,T] x [0,Z] with its boundary gradient.
class SemiWaveProfile {
public:
    ProfileKind kind = ProfileKind::HalfLine;
    double length = 0.0;
    std::size_t intervals = 0;
    std::size_t steps = 0;       // time levels per period (gradient samples)
    std::size_t store_every = 1;
    PeriodicFn drift;
    PeriodicFn gradient;         // d/dz field(t, 0)
    std::vector<double> field;   // rows() x (intervals + 1)
    bool is_zero = false;
    std::size_t periods = 0;     // relaxation periods used
    double period_residual = 0.0;

    double period() const { return drift.period(); }
    double dz() const { return length / static_cast<double>(intervals); }
    std::size_t rows() const { return steps / store_every; }
    double row_time(std::size_t m) const
    {
        return period() * static_cast<double>(m * store_every) / static_cast<double>(steps);
    }
    std::span<const double> row(std::size_t m) const
    {
        return std::span<const double>(field).subspan(m * (intervals + 1), intervals + 1);
    }

    /// Field value; linear in t between stored levels and in z between nodes.
    /// Outside [0, length]: 0 for z < 0, and for z > length the far value
    /// (0 for the zero-Dirichlet kind).
    double value(double t, double z) const
    {
        if (z <= 0.0)
            return 0.0;
        if (z >= length) {
            if (kind == ProfileKind::DirichletZero)
                return 0.0;
            z = length;
        }
        const double T = period();
        double s = std::fmod(t, T);
        if (s < 0.0)
            s += T;
        const double x = s / T * static_cast<double>(rows());
        std::size_t m0 = std::min(static_cast<std::size_t>(x), rows() - 1);
        const double wt = x - static_cast<double>(m0);
        const std::size_t m1 = (m0 + 1) % rows();
        const double y = z / dz();
        std::size_t j0 = std::min(static_cast<std::size_t>(y), intervals - 1);
        const double wz = y - static_cast<double>(j0);
        auto at = [&](std::size_t m) {
            auto r = row(m);
            return (1.0 - wz) * r[j0] + wz * r[j0 + 1];
        };
        return (1.0 - wt) * at(m0) + wt * at(m1);
    }

    double max_value() const
    {
        return field.empty() ? 0.0 : *std::max_element(field.begin(), field.end());
    }
};

namespace detail {

inline SemiWaveProfile zero_profile(ProfileKind kind, const PeriodicFn& k, double length,
                                    const SemiWaveGrid& grid)
{
    SemiWaveProfile p;
    p.kind = kind;
    p.length = length;
    p.intervals = std::max<std::size_t>(grid.min_nodes,
                                        static_cast<std::size_t>(std::ceil(length * grid.nodes_per_unit)));
    p.steps = grid.steps;
    p.store_every = std::max<std::size_t>(1, grid.store_every);
    p.drift = k;
    p.gradient = PeriodicFn::constant(k.period(), 0.0, std::max(grid.steps, kMinPeriodicNodes));
    p.field.assign(p.rows() * (p.intervals + 1), 0.0);
    p.is_zero = true;
    return p;
}

/// Time-steps v_t = v_zz + k(t) v_z + f(t,v) with v(t,0) = 0 and
/// v(t,l) = pin(t) until the one-period change drops below tolerance.
inline SemiWaveProfile relax(ProfileKind kind, const PeriodicFn& k, const Reaction& f, double length,
                             const std::function<double(double)>& pin,
                             const std::function<double(double)>& initial, bool allow_trivial,
                             const SemiWaveGrid& grid)
{
    require(length > 0.0, "domain length must be positive");
    require(grid.steps >= kMinPeriodicNodes, "at least 16 time steps per period");
    const double T = k.period();
    SemiWaveProfile prof;
    prof.kind = kind;
    prof.length = length;
    prof.intervals = std::max<std::size_t>(grid.min_nodes,
                                           static_cast<std::size_t>(std::ceil(length * grid.nodes_per_unit)));
    prof.steps = grid.steps;
    prof.store_every = std::max<std::size_t>(1, grid.store_every);
    prof.drift = k;
    require(prof.steps % prof.store_every == 0, "store_every must divide the step count");

    const std::size_t n = prof.intervals;
    const double h = length / static_cast<double>(n);
    const double dt = T / static_cast<double>(grid.steps);

    std::vector<double> v(n + 1), start(n + 1), grad(grid.steps);
    for (std::size_t j = 0; j <= n; ++j)
        v[j] = initial(h * static_cast<double>(j));
    v[0] = 0.0;
    v[n] = pin(0.0);

    std::vector<double> stored(prof.rows() * (n + 1));
    ThetaStepper stepper(n);

    auto advance = [&](double t0, double tau, double theta) {
        const double tm = t0 + 0.5 * tau;
        const double kc = k(tm);
        const auto fz = f.at(tm);
        stepper.step(
            v, h, tau, theta, 1.0, [kc](std::size_t) { return kc; },
            [&fz](std::size_t, double u) { return ReactionTerm{fz.value(u), fz.derivative(u)}; }, 0.0,
            pin(t0 + tau));
    };

    for (std::size_t p = 1; p <= grid.max_periods; ++p) {
        start = v;
        for (std::size_t m = 0; m < grid.steps; ++m) {
            grad[m] = left_gradient(v, h);
            if (m % prof.store_every == 0)
                std::copy(v.begin(), v.end(), stored.begin() + static_cast<std::ptrdiff_t>((m / prof.store_every) * (n + 1)));
            const double t0 = dt * static_cast<double>(m);
            if (p == 1 && m == 0) {
                advance(t0, 0.5 * dt, 1.0);
                advance(t0 + 0.5 * dt, 0.5 * dt, 1.0);
            } else {
                advance(t0, dt, 0.5);
            }
        }
        double change = 0.0, peak = 0.0;
        for (std::size_t j = 0; j <= n; ++j) {
            change = std::max(change, std::abs(v[j] - start[j]));
            peak = std::max(peak, std::abs(v[j]));
        }
        prof.periods = p;
        prof.period_residual = change;
        if (allow_trivial && peak < grid.trivial_threshold) {
            SemiWaveProfile z = zero_profile(kind, k, length, grid);
            z.periods = p;
            return z;
        }
        // The first period carries the backward-Euler start; never store it.
        if (p >= 2 && change < grid.period_tolerance) {
            prof.field = std::move(stored);
            prof.gradient = PeriodicFn(T, std::move(grad));
            return prof;
        }
        if (!std::isfinite(change))
            break;
    }
    throw Error(ErrorCode::NoConvergence, "relaxation to a periodic profile did not settle within " +
                                              std::to_string(grid.max_periods) + " periods");
}

} // namespace detail

/// U0(t,z;k,l): periodic solution with zero Dirichlet data at both ends, or
/// the zero profile when only the trivial solution exists.
inline SemiWaveProfile relax_dirichlet_zero(const PeriodicFn& k, const Reaction& f, double ell,
                                            const SemiWaveGrid& grid = {})
{
    const Reaction g = with_periodic_state(f);
    const double ptop = state_of(g).max();
    auto initial = [ptop, ell](double z) { return ptop * std::min(1.0, std::min(z, ell - z)); };
    return detail::relax(ProfileKind::DirichletZero, k, g, ell, [](double) { return 0.0; }, initial,
                         true, grid);
}

/// U1(t,z;k,l): maximal periodic solution with v(t,0) = 0, v(t,l) = P^0,
/// reached by relaxing down from P^0 on (0, l].
inline SemiWaveProfile relax_dirichlet_pinned(const PeriodicFn& k, const Reaction& f, double ell,
                                              const SemiWaveGrid& grid = {})
{
    const Reaction g = with_periodic_state(f);
    const double ptop = state_of(g).max();
    auto initial = [ptop](double z) { return z > 0.0 ? ptop : 0.0; };
    return detail::relax(ProfileKind::DirichletPinned, k, g, ell, [ptop](double) { return ptop; },
                         initial, false, grid);
}

/// Truncated half-line solve at a fixed radius Z with far value P(t);
/// warm starts from a previous profile when given.
inline SemiWaveProfile half_line_at(const PeriodicFn& k, const Reaction& f, double Z,
                                    const SemiWaveGrid& grid, const SemiWaveProfile* warm = nullptr)
{
    const Reaction g = with_periodic_state(f);
    const PeriodicFn& P = state_of(g);
    const double ptop = P.max();
    std::function<double(double)> initial;
    if (warm && !warm->is_zero) {
        const double p0 = P(0.0);
        initial = [warm, p0](double z) { return z < warm->length ? warm->value(0.0, z) : p0; };
    } else {
        initial = [ptop](double z) { return z > 0.0 ? ptop : 0.0; };
    }
    auto pin = [&P](double t) { return P(t); };
    return detail::relax(ProfileKind::HalfLine, k, g, Z, pin, initial, false, grid);
}

/// U(t,z;k) on the half line. Zero when mean(k) <= -cbar; otherwise the
/// pinned problem on [0,Z] with Z doubled until the boundary gradient
/// changes by less than the truncation tolerance.
inline SemiWaveProfile half_line_profile(const PeriodicFn& k, const Reaction& f,
                                         const SemiWaveGrid& grid = {},
                                         const SemiWaveProfile* warm = nullptr)
{
    const double cbar = minimal_average_speed(f.linearization());
    if (k.mean() <= -cbar)
        return detail::zero_profile(ProfileKind::HalfLine, k, grid.truncation_radius, grid);
    const Reaction g = with_periodic_state(f);
    double Z = warm && !warm->is_zero ? std::max(grid.truncation_radius, warm->length) : grid.truncation_radius;
    SemiWaveProfile prev = half_line_at(k, g, Z, grid, warm);
    for (std::size_t d = 0; d < grid.max_doublings; ++d) {
        Z *= 2.0;
        SemiWaveProfile next = half_line_at(k, g, Z, grid, &prev);
        double diff = 0.0;
        for (std::size_t i = 0; i < next.gradient.size(); ++i)
            diff = std::max(diff, std::abs(next.gradient[i] - prev.gradient(next.gradient.node(i))));
        if (diff < grid.truncation_tolerance)
            return next;
        prev = std::move(next);
    }
    throw Error(ErrorCode::TruncationFailure, "boundary gradient did not settle up to Z = " + std::to_string(Z));
}

/// mu(t) * d/dz profile(t, 0) on the profile's time grid.
inline PeriodicFn boundary_flux(const SemiWaveProfile& profile, const PeriodicFn& mu)
{
    const PeriodicFn& g = profile.gradient;
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = mu(g.node(i)) * g[i];
    return PeriodicFn(g.period(), std::move(v));
}

/// Compactly supported wave W(t,x) = U0(t, S(t) - x) with S(t) = int_0^t speed,
/// zero outside S(t) - l <= x <= S(t).
class CompactWave {
public:
    CompactWave(SemiWaveProfile profile, PeriodicFn speed, const PeriodicFn& mu)
        : profile_(std::move(profile)), speed_(std::move(speed))
    {
        const PeriodicFn flux = boundary_flux(profile_, mu);
        const PeriodicFn gap = flux - speed_;
        lower_margin_ = gap.min();
    }

    double operator()(double t, double x) const
    {
        const double z = front(t) - x;
        if (z < 0.0 || z > profile_.length)
            return 0.0;
        return profile_.value(t, z);
    }

    double front(double t) const { return speed_.integral(t); }

    /// speed(t) < mu(t) (U0)_z(t,0) at every sampled t.
    bool is_lower_solution() const { return lower_margin_ > 0.0; }
    double lower_margin() const { return lower_margin_; }
    const SemiWaveProfile& profile() const { return profile_; }

private:
    SemiWaveProfile profile_;
    PeriodicFn speed_;
    double lower_margin_ = 0.0;
};

inline CompactWave compact_wave_view(const SemiWaveProfile& u0, const PeriodicFn& speed, const PeriodicFn& mu)
{
    require(u0.kind == ProfileKind::DirichletZero, "compact waves are built from the zero-Dirichlet profile");
    require(!u0.is_zero, "compact wave needs a nontrivial profile");
    return CompactWave(u0, speed, mu);
}

} // namespace pfbp
