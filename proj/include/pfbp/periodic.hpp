#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/numeric/odeint/stepper/runge_kutta4.hpp>

#include "errors.hpp"
#include "tridiagonal.hpp"

namespace pfbp {

inline constexpr std::size_t kDefaultPeriodicNodes = 256;
inline constexpr std::size_t kMinPeriodicNodes = 16;

/// A T-periodic scalar function stored as uniform samples t_i = i*T/N,
/// i = 0..N-1, and evaluated through a periodic cubic spline.
class PeriodicFn {
public:
    PeriodicFn() = default;

    PeriodicFn(double period, std::vector<double> values)
        : period_(period), values_(std::move(values))
    {
        require(period_ > 0.0 && std::isfinite(period_), "period must be positive");
        require(values_.size() >= kMinPeriodicNodes, "a periodic function needs at least 16 nodes");
        build_spline();
    }

    template <class F>
    static PeriodicFn sample(double period, std::size_t nodes, F&& f)
    {
        std::vector<double> v(nodes);
        for (std::size_t i = 0; i < nodes; ++i)
            v[i] = f(period * static_cast<double>(i) / static_cast<double>(nodes));
        return PeriodicFn(period, std::move(v));
    }

    static PeriodicFn constant(double period, double value, std::size_t nodes = kDefaultPeriodicNodes)
    {
        return PeriodicFn(period, std::vector<double>(nodes, value));
    }

    /// mean + amp * sin(2*pi*harmonic*t/T)
    static PeriodicFn sinusoid(double period, double mean, double amp, int harmonic = 1,
                               std::size_t nodes = kDefaultPeriodicNodes)
    {
        const double w = 2.0 * std::numbers::pi * harmonic / period;
        return sample(period, nodes, [&](double t) { return mean + amp * std::sin(w * t); });
    }

    double period() const { return period_; }
    std::size_t size() const { return values_.size(); }
    double spacing() const { return period_ / static_cast<double>(values_.size()); }
    double node(std::size_t i) const { return spacing() * static_cast<double>(i); }
    std::span<const double> values() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }

    double operator()(double t) const
    {
        auto [i, a] = locate(t);
        const std::size_t j = (i + 1) % values_.size();
        const double b = 1.0 - a;
        const double h = spacing();
        return a * values_[i] + b * values_[j] +
               ((a * a * a - a) * second_[i] + (b * b * b - b) * second_[j]) * h * h / 6.0;
    }

    double derivative(double t) const
    {
        auto [i, a] = locate(t);
        const std::size_t j = (i + 1) % values_.size();
        const double b = 1.0 - a;
        const double h = spacing();
        return (values_[j] - values_[i]) / h +
               (-(3.0 * a * a - 1.0) * second_[i] + (3.0 * b * b - 1.0) * second_[j]) * h / 6.0;
    }

    /// Composite Simpson average over one period (trapezoid when N is odd).
    /// Periodic trapezoid rule; equals integral(T) / T for the spline.
    double mean() const
    {
        double sum = 0.0;
        for (double v : values_)
            sum += v;
        return sum / static_cast<double>(values_.size());
    }

    double min() const { return *std::min_element(values_.begin(), values_.end()); }
    double max() const { return *std::max_element(values_.begin(), values_.end()); }

    /// Exact integral of the spline over [0, t]; t may exceed one period.
    double integral(double t) const
    {
        const double turns = std::floor(t / period_);
        double rest = t - turns * period_;
        if (rest < 0.0)
            rest = 0.0;
        const double h = spacing();
        std::size_t i = static_cast<std::size_t>(rest / h);
        if (i >= values_.size())
            i = values_.size() - 1;
        double u = rest - static_cast<double>(i) * h;
        if (u < 0.0)
            u = 0.0;
        const std::size_t j = (i + 1) % values_.size();
        const double b = u / h;
        const double a = 1.0 - b;
        const double part = values_[i] * (u - u * u / (2.0 * h)) + values_[j] * u * u / (2.0 * h) +
                            h * h / 6.0 *
                                (second_[i] * (h / 4.0 * (1.0 - a * a * a * a) - (u - u * u / (2.0 * h))) +
                                 second_[j] * (u * u * u * u / (4.0 * h * h * h) - u * u / (2.0 * h)));
        return turns * full_integral_ + cumulative_[i] + part;
    }

    PeriodicFn resampled(std::size_t nodes) const
    {
        if (nodes == values_.size())
            return *this;
        return sample(period_, nodes, [this](double t) { return (*this)(t); });
    }

    template <class F>
    PeriodicFn map(F&& f) const
    {
        std::vector<double> v(values_.size());
        for (std::size_t i = 0; i < v.size(); ++i)
            v[i] = f(values_[i]);
        return PeriodicFn(period_, std::move(v));
    }

    PeriodicFn operator-() const
    {
        return map([](double x) { return -x; });
    }

    friend PeriodicFn operator+(const PeriodicFn& p, double c)
    {
        return p.map([c](double x) { return x + c; });
    }
    friend PeriodicFn operator+(double c, const PeriodicFn& p) { return p + c; }
    friend PeriodicFn operator-(const PeriodicFn& p, double c) { return p + (-c); }
    friend PeriodicFn operator-(double c, const PeriodicFn& p) { return (-p) + c; }
    friend PeriodicFn operator*(const PeriodicFn& p, double c)
    {
        return p.map([c](double x) { return x * c; });
    }
    friend PeriodicFn operator*(double c, const PeriodicFn& p) { return p * c; }

    friend PeriodicFn operator+(const PeriodicFn& p, const PeriodicFn& q)
    {
        return combine(p, q, [](double x, double y) { return x + y; });
    }
    friend PeriodicFn operator-(const PeriodicFn& p, const PeriodicFn& q)
    {
        return combine(p, q, [](double x, double y) { return x - y; });
    }
    friend PeriodicFn operator*(const PeriodicFn& p, const PeriodicFn& q)
    {
        return combine(p, q, [](double x, double y) { return x * y; });
    }

private:
    // Operands on different grids are evaluated on the finer one.
    template <class Op>
    static PeriodicFn combine(const PeriodicFn& p, const PeriodicFn& q, Op op)
    {
        require(std::abs(p.period_ - q.period_) <= 1e-12 * p.period_, "periods differ");
        const PeriodicFn& fine = p.size() >= q.size() ? p : q;
        std::vector<double> v(fine.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double t = fine.node(i);
            const double x = p.size() == fine.size() ? p.values_[i] : p(t);
            const double y = q.size() == fine.size() ? q.values_[i] : q(t);
            v[i] = op(x, y);
        }
        return PeriodicFn(fine.period_, std::move(v));
    }

    std::pair<std::size_t, double> locate(double t) const
    {
        double s = std::fmod(t, period_);
        if (s < 0.0)
            s += period_;
        const double h = spacing();
        const double x = s / h;
        std::size_t i = static_cast<std::size_t>(x);
        if (i >= values_.size())
            i = values_.size() - 1;
        double frac = x - static_cast<double>(i);
        frac = std::clamp(frac, 0.0, 1.0);
        return {i, 1.0 - frac};
    }

    void build_spline()
    {
        const std::size_t n = values_.size();
        const double h = spacing();
        std::vector<double> lower(n, 1.0), diag(n, 4.0), upper(n, 1.0);
        second_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double prev = values_[(i + n - 1) % n];
            const double next = values_[(i + 1) % n];
            second_[i] = 6.0 * (next - 2.0 * values_[i] + prev) / (h * h);
        }
        solve_cyclic_tridiagonal(lower, diag, upper, second_);

        cumulative_.assign(n + 1, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = (i + 1) % n;
            cumulative_[i + 1] = cumulative_[i] + h * (values_[i] + values_[j]) / 2.0 -
                                 h * h * h * (second_[i] + second_[j]) / 24.0;
        }
        full_integral_ = cumulative_[n];
    }

    double period_ = 1.0;
    std::vector<double> values_;
    std::vector<double> second_;
    std::vector<double> cumulative_;
    double full_integral_ = 0.0;
};

struct MeanShape {
    double mean;
    PeriodicFn shape;
};

inline MeanShape mean_and_shape(const PeriodicFn& p)
{
    const double m = p.mean();
    return {m, p - m};
}

/// The nonlinearity f(t,u) together with f_u and a(t) = f_u(t,0).
///
/// Logistic presets f = u(a(t) - b(t)u) are evaluated inline; other
/// nonlinearities go through the stored callables.
class Reaction {
public:
    using Fn = std::function<double(double, double)>;

    struct Frozen {
        double a = 0.0;
        double b = 0.0;
        double t = 0.0;
        const Reaction* owner = nullptr;

        double value(double u) const
        {
            if (owner->logistic_)
                return u * (a - b * u);
            return owner->f_(t, u);
        }
        double derivative(double u) const
        {
            if (owner->logistic_)
                return a - 2.0 * b * u;
            return owner->fu_(t, u);
        }
    };

    static Reaction logistic(PeriodicFn a, PeriodicFn b)
    {
        Reaction r;
        r.logistic_ = true;
        r.tag_ = "logistic";
        r.period_ = a.period();
        r.b_ = std::move(b);
        r.a_ = std::move(a);
        return r;
    }

    static Reaction logistic(double period, double a, double b)
    {
        return logistic(PeriodicFn::constant(period, a), PeriodicFn::constant(period, b));
    }

    static Reaction custom(double period, Fn f, Fn fu, std::string tag = "custom",
                           std::size_t nodes = kDefaultPeriodicNodes)
    {
        Reaction r;
        r.tag_ = std::move(tag);
        r.period_ = period;
        r.a_ = PeriodicFn::sample(period, nodes, [&fu](double t) { return fu(t, 0.0); });
        r.f_ = std::move(f);
        r.fu_ = std::move(fu);
        return r;
    }

    double operator()(double t, double u) const { return at(t).value(u); }
    double fu(double t, double u) const { return at(t).derivative(u); }

    Frozen at(double t) const
    {
        Frozen z;
        z.t = t;
        z.owner = this;
        if (logistic_) {
            z.a = a_(t);
            z.b = b_(t);
        }
        return z;
    }

    double period() const { return period_; }
    const PeriodicFn& linearization() const { return a_; }
    bool is_logistic() const { return logistic_; }
    const PeriodicFn& logistic_b() const { return b_; }
    const std::string& tag() const { return tag_; }

    /// The periodic state P(t), once attached with with_state().
    const std::optional<PeriodicFn>& state() const { return state_; }
    Reaction with_state(PeriodicFn p) const
    {
        Reaction r = *this;
        r.state_ = std::move(p);
        return r;
    }

private:
    bool logistic_ = false;
    std::string tag_;
    double period_ = 1.0;
    PeriodicFn a_;
    PeriodicFn b_;
    Fn f_;
    Fn fu_;
    std::optional<PeriodicFn> state_;
};

struct PeriodicStateOptions {
    std::size_t nodes = kDefaultPeriodicNodes;
    std::size_t substeps = 32; // RK4 steps between consecutive nodes
    double lower = 1e-10;
    double upper = 2.0;
};

namespace detail {

inline double poincare_map(const Reaction& f, double period, double u0, std::size_t steps,
                           std::vector<double>* trace = nullptr, std::size_t every = 1)
{
    boost::numeric::odeint::runge_kutta4<double> stepper;
    auto rhs = [&f](const double& u, double& dudt, double t) { dudt = f(t, u); };
    const double dt = period / static_cast<double>(steps);
    double u = u0;
    for (std::size_t s = 0; s < steps; ++s) {
        if (trace && s % every == 0)
            trace->push_back(u);
        stepper.do_step(rhs, u, dt * static_cast<double>(s), dt);
    }
    return u;
}

} // namespace detail

/// Unique positive T-periodic solution of u' = f(t,u): bisection on the
/// time-T map u0 -> Phi(u0) - u0 over (lower, upper], then one sampled pass.
inline PeriodicFn periodic_state(const Reaction& f, double period,
                                 const PeriodicStateOptions& opt = {})
{
    const std::size_t steps = opt.nodes * opt.substeps;
    auto gap = [&](double u0) { return detail::poincare_map(f, period, u0, steps) - u0; };

    double lo = opt.lower;
    double hi = opt.upper;
    if (!(gap(lo) > 0.0) || !(gap(hi) < 0.0))
        throw Error(ErrorCode::NoPositivePeriodicState,
                    "time-T map has no sign change in (" + std::to_string(lo) + ", " +
                        std::to_string(hi) + "]");
    for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (gap(mid) > 0.0 ? lo : hi) = mid;
    }
    const double p0 = 0.5 * (lo + hi);

    std::vector<double> trace;
    trace.reserve(opt.nodes);
    detail::poincare_map(f, period, p0, steps, &trace, opt.substeps);
    for (double v : trace)
        if (!(v > 0.0))
            throw Error(ErrorCode::NoPositivePeriodicState, "periodic orbit leaves u > 0");
    return PeriodicFn(period, std::move(trace));
}

/// Attach P(t) to f if not yet present.
inline Reaction with_periodic_state(const Reaction& f, const PeriodicStateOptions& opt = {})
{
    if (f.state())
        return f;
    return f.with_state(periodic_state(f, f.period(), opt));
}

inline const PeriodicFn& state_of(const Reaction& f)
{
    if (!f.state())
        throw Error(ErrorCode::InvalidArgument, "reaction has no periodic state attached");
    return *f.state();
}

struct StabilityIndex {
    PeriodicFn alpha;
    bool satisfied; // max alpha < 0
};

/// alpha(t) = P f_u(t,P) - f(t,P) on the grid of P.
inline StabilityIndex stability_index(const Reaction& f, const PeriodicFn& p)
{
    std::vector<double> alpha(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double t = p.node(i);
        const auto z = f.at(t);
        alpha[i] = p[i] * z.derivative(p[i]) - z.value(p[i]);
    }
    PeriodicFn fn(p.period(), std::move(alpha));
    const bool ok = fn.max() < 0.0;
    return {std::move(fn), ok};
}

struct HypothesisCheck {
    std::string name;
    bool passed;
    std::string detail;
};

struct HypothesisReport {
    std::vector<HypothesisCheck> checks;

    bool all_passed() const
    {
        return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
    }
    bool passed(const std::string& name) const
    {
        for (const auto& c : checks)
            if (c.name == name)
                return c.passed;
        return false;
    }
};

struct ValidationGrid {
    std::size_t times = 64;
    std::size_t values = 64;
    double umax = 2.0;
};

/// Sampled check of the standing hypotheses on (beta, mu, f) plus the
/// stability condition alpha < 0. Never throws for failing clauses.
inline HypothesisReport validate_hypotheses(const PeriodicFn& beta, const PeriodicFn& mu,
                                            const Reaction& f, const ValidationGrid& grid = {})
{
    HypothesisReport rep;
    auto add = [&rep](std::string name, bool ok, std::string detail) {
        rep.checks.push_back({std::move(name), ok, std::move(detail)});
    };
    const double T = f.period();

    const double bmean = beta.mean();
    add("beta_mean_nonnegative", bmean >= 0.0, "mean(beta) = " + std::to_string(bmean));
    add("mu_positive", mu.min() > 0.0, "min(mu) = " + std::to_string(mu.min()));
    add("a_positive", f.linearization().min() > 0.0,
        "min(a) = " + std::to_string(f.linearization().min()));

    double worst_zero = 0.0;
    bool decreasing = true;
    bool negative_above_one = true;
    std::string where;
    for (std::size_t i = 0; i < grid.times; ++i) {
        const double t = T * static_cast<double>(i) / static_cast<double>(grid.times);
        const auto z = f.at(t);
        worst_zero = std::max(worst_zero, std::abs(z.value(0.0)));
        double prev = std::numeric_limits<double>::infinity();
        for (std::size_t j = 1; j <= grid.values; ++j) {
            const double u = grid.umax * static_cast<double>(j) / static_cast<double>(grid.values);
            const double fu = z.value(u);
            const double ratio = fu / u;
            if (!(ratio < prev) && decreasing) {
                decreasing = false;
                where = "t = " + std::to_string(t) + ", u = " + std::to_string(u);
            }
            prev = ratio;
            if (u > 1.0 && !(fu < 0.0))
                negative_above_one = false;
        }
    }
    add("f_zero_at_zero", worst_zero == 0.0, "max |f(t,0)| = " + std::to_string(worst_zero));
    add("f_over_u_decreasing", decreasing, decreasing ? "sampled" : "fails at " + where);
    add("f_negative_above_one", negative_above_one, "sampled on (1, umax]");

    bool stable = false;
    std::string sdetail = "periodic state unavailable";
    try {
        const Reaction g = with_periodic_state(f);
        const auto si = stability_index(g, state_of(g));
        stable = si.satisfied;
        sdetail = "max alpha = " + std::to_string(si.alpha.max());
    } catch (const Error& e) {
        sdetail = e.what();
    }
    add("stability_alpha_negative", stable, sdetail);
    return rep;
}

} // namespace pfbp
