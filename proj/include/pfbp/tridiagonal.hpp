#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "errors.hpp"

namespace pfbp {

/// Thomas algorithm for a tridiagonal system.
///
/// Row i reads lower[i]*x[i-1] + diag[i]*x[i] + upper[i]*x[i+1] = rhs[i];
/// lower[0] and upper[n-1] are ignored. The solution overwrites rhs.
/// No pivoting: callers provide diagonally dominant systems.
class TridiagonalSolver {
public:
    void solve(std::span<const double> lower, std::span<const double> diag,
               std::span<const double> upper, std::span<double> rhs)
    {
        const std::size_t n = rhs.size();
        if (n == 0)
            return;
        c_prime_.resize(n);

        double denom = diag[0];
        c_prime_[0] = upper[0] / denom;
        rhs[0] /= denom;
        // Forward sweep
        for (std::size_t i = 1; i < n; ++i) {
            denom = diag[i] - lower[i] * c_prime_[i - 1];
            c_prime_[i] = upper[i] / denom;
            rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / denom;
        }
        // Back substitution
        for (std::size_t i = n - 1; i > 0; --i)
            rhs[i - 1] -= c_prime_[i - 1] * rhs[i];
    }

private:
    std::vector<double> c_prime_;
};

/// Cyclic tridiagonal system (corner entries lower[0] and upper[n-1] couple
/// the first and last unknowns), solved via Sherman-Morrison.
inline void solve_cyclic_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                                     std::span<const double> upper, std::span<double> rhs)
{
    const std::size_t n = rhs.size();
    require(n >= 3, "cyclic tridiagonal system needs at least 3 unknowns");

    const double alpha = upper[n - 1]; // A(n-1, 0)
    const double beta = lower[0];      // A(0, n-1)
    const double gamma = -diag[0];

    std::vector<double> d(diag.begin(), diag.end());
    d[0] -= gamma;
    d[n - 1] -= alpha * beta / gamma;

    TridiagonalSolver solver;
    solver.solve(lower, d, upper, rhs);

    std::vector<double> u(n, 0.0);
    u[0] = gamma;
    u[n - 1] = alpha;
    solver.solve(lower, d, upper, u);

    const double factor = (rhs[0] + beta * rhs[n - 1] / gamma) / (1.0 + u[0] + beta * u[n - 1] / gamma);
    for (std::size_t i = 0; i < n; ++i)
        rhs[i] -= factor * u[i];
}

} // namespace pfbp
