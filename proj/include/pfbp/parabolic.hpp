#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tridiagonal.hpp"

namespace pfbp {

struct ReactionTerm {
    double value;      // F(v)
    double derivative; // dF/dv
};

/// Theta-scheme for v_t = d v_zz + c_j v_z + F_j(v) on a uniform grid
/// z_j = j*h, j = 0..n, with Dirichlet values at both ends.
///
/// Diffusion and advection (central differences) are weighted by theta;
/// the reaction is linearized about the old level,
/// F(v^n) + theta F'(v^n) (v^{n+1} - v^n), which keeps theta = 1/2
/// second order and makes steady states of the discrete map exact.
class ThetaStepper {
public:
    explicit ThetaStepper(std::size_t intervals = 2) { resize(intervals); }

    void resize(std::size_t intervals)
    {
        n_ = intervals;
        const std::size_t m = n_ > 1 ? n_ - 1 : 0;
        lower_.resize(m);
        diag_.resize(m);
        upper_.resize(m);
        rhs_.resize(m);
    }

    std::size_t intervals() const { return n_; }

    /// advection(j) -> c_j, reaction(j, v_j) -> ReactionTerm.
    template <class Advection, class ReactionFn>
    void step(std::span<double> v, double h, double dt, double theta, double diffusion,
              Advection&& advection, ReactionFn&& reaction, double left, double right)
    {
        const std::size_t n = n_;
        const double dd = diffusion / (h * h);
        const double inv2h = 0.5 / h;
        for (std::size_t j = 1; j < n; ++j) {
            const double c = advection(j);
            const double lo = dd - c * inv2h;
            const double mid = -2.0 * dd;
            const double up = dd + c * inv2h;
            const ReactionTerm r = reaction(j, v[j]);
            const std::size_t row = j - 1;
            lower_[row] = -theta * dt * lo;
            diag_[row] = 1.0 - theta * dt * (mid + r.derivative);
            upper_[row] = -theta * dt * up;
            const double lv = lo * v[j - 1] + mid * v[j] + up * v[j + 1];
            rhs_[row] = v[j] + (1.0 - theta) * dt * lv - theta * dt * r.derivative * v[j] +
                        dt * r.value;
            if (j == 1)
                rhs_[row] += theta * dt * lo * left;
            if (j == n - 1)
                rhs_[row] += theta * dt * up * right;
        }
        solver_.solve(lower_, diag_, upper_, rhs_);
        v[0] = left;
        v[n] = right;
        for (std::size_t j = 1; j < n; ++j)
            v[j] = rhs_[j - 1];
    }

private:
    std::size_t n_ = 0;
    std::vector<double> lower_, diag_, upper_, rhs_;
    TridiagonalSolver solver_;
};

/// Second-order one-sided derivative at z = 0.
inline double left_gradient(std::span<const double> v, double h)
{
    return (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
}

/// Second-order one-sided derivative at the last node.
inline double right_gradient(std::span<const double> v, double h)
{
    const std::size_t n = v.size() - 1;
    return (3.0 * v[n] - 4.0 * v[n - 1] + v[n - 2]) / (2.0 * h);
}

} // namespace pfbp
