#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include <pfbp/semiwave.hpp>

#include "oracles.hpp"

using namespace pfbp;

namespace {

PeriodicFn C(double v) { return PeriodicFn::constant(1.0, v); }

const Reaction& kpp()
{
    static const Reaction f = with_periodic_state(Reaction::logistic(1.0, 1.0, 1.0));
    return f;
}

SemiWaveGrid coarse(double npu = 64.0)
{
    SemiWaveGrid g;
    g.nodes_per_unit = npu;
    g.steps = 128;
    return g;
}

double sup_abs(const PeriodicFn& p, double v)
{
    return std::max(std::abs(p.max() - v), std::abs(p.min() - v));
}

bool all_zero(const SemiWaveProfile& p)
{
    return std::all_of(p.field.begin(), p.field.end(), [](double v) { return v == 0.0; }) &&
           p.gradient.max() == 0.0 && p.gradient.min() == 0.0;
}

} // namespace

TEST(DirichletZero, TrivialBelowCriticalLength)
{
    const auto p = relax_dirichlet_zero(C(0.0), kpp(), 2.0, coarse());
    EXPECT_TRUE(p.is_zero);
    EXPECT_TRUE(all_zero(p));
}

TEST(DirichletZero, TrivialForStrongDrift)
{
    for (double ell : {5.0, 20.0}) {
        const auto p = relax_dirichlet_zero(C(3.0), kpp(), ell, coarse());
        EXPECT_TRUE(p.is_zero) << "l=" << ell;
    }
}

TEST(DirichletZero, MidpointApproachesStateOnLongDomain)
{
    const auto p = relax_dirichlet_zero(C(0.0), kpp(), 40.0, coarse());
    ASSERT_FALSE(p.is_zero);
    for (double t : {0.0, 0.3, 0.7})
        EXPECT_NEAR(p.value(t, 20.0), 1.0, 1e-3);
    EXPECT_LT(p.period_residual, 1e-8);
}

TEST(DirichletZero, IncreasingInLength)
{
    const auto g = coarse();
    const auto shorter = relax_dirichlet_zero(PeriodicFn::sinusoid(1.0, 0.2, 0.5), kpp(), 8.0, g);
    const auto longer = relax_dirichlet_zero(PeriodicFn::sinusoid(1.0, 0.2, 0.5), kpp(), 16.0, g);
    ASSERT_EQ(shorter.dz(), longer.dz());
    for (std::size_t m = 0; m < shorter.rows(); ++m) {
        const auto a = shorter.row(m);
        const auto b = longer.row(m);
        for (std::size_t j = 1; j < shorter.intervals; ++j)
            ASSERT_GT(b[j], a[j]) << "m=" << m << " j=" << j;
    }
}

TEST(DirichletPinned, IncreasingInZ)
{
    const auto p = relax_dirichlet_pinned(C(0.0), kpp(), 20.0, coarse());
    for (std::size_t m = 0; m < p.rows(); ++m) {
        const auto r = p.row(m);
        for (std::size_t j = 0; j + 1 < r.size(); ++j)
            ASSERT_GE(r[j + 1], r[j]);
    }
}

TEST(DirichletPinned, BoundarySlopePositiveUnderBackwardDrift)
{
    const auto p = relax_dirichlet_pinned(C(-1.0), kpp(), 20.0, coarse());
    EXPECT_GT(p.gradient.min(), 0.0);
}

TEST(DirichletPinned, MatchesShootingOracle)
{
    const double k = 0.5, ell = 10.0;
    const auto p = relax_dirichlet_pinned(C(k), kpp(), ell);
    const double s = oracle::pinned_bvp_slope(k, ell);
    EXPECT_NEAR(p.gradient.mean(), s, 1e-4);
    double worst = 0.0;
    for (std::size_t j = 0; j <= p.intervals; j += 16) {
        const double z = p.dz() * static_cast<double>(j);
        worst = std::max(worst, std::abs(p.row(0)[j] - oracle::pinned_bvp_value(k, s, z)));
    }
    EXPECT_LT(worst, 1e-4);
}

TEST(DirichletPinned, IncreasingInDrift)
{
    const auto g = coarse();
    const auto lower = relax_dirichlet_pinned(PeriodicFn::sinusoid(1.0, 0.0, 0.3), kpp(), 12.0, g);
    const auto upper = relax_dirichlet_pinned(PeriodicFn::sinusoid(1.0, 0.5, 0.3), kpp(), 12.0, g);
    for (std::size_t m = 0; m < lower.rows(); ++m)
        for (std::size_t j = 1; j < lower.intervals; ++j)
            ASSERT_GT(upper.row(m)[j], lower.row(m)[j]);
}

TEST(HalfLine, TrivialForDriftBelowMinusCbar)
{
    const auto p = half_line_profile(C(-3.0), kpp(), coarse());
    EXPECT_TRUE(p.is_zero);
    EXPECT_TRUE(all_zero(p));
    EXPECT_TRUE(half_line_profile(C(-2.0), kpp(), coarse()).is_zero);
}

TEST(HalfLine, FirstIntegralSlope)
{
    const auto p = half_line_profile(C(0.0), kpp());
    EXPECT_LT(sup_abs(p.gradient, 1.0 / std::sqrt(3.0)), 1e-4);
    EXPECT_LT(sup_abs(boundary_flux(p, C(1.0)), 1.0 / std::sqrt(3.0)), 1e-4);
    const PeriodicFn doubled = boundary_flux(p, C(2.0));
    for (std::size_t i = 0; i < doubled.size(); ++i)
        EXPECT_DOUBLE_EQ(doubled[i], 2.0 * p.gradient[i]);
}

TEST(HalfLine, AgreesWithPhasePlaneOracle)
{
    for (double k : {-1.0, 0.7}) {
        const auto p = half_line_profile(C(k), kpp());
        EXPECT_LT(sup_abs(p.gradient, oracle::semiwave_slope(k)), 1e-4) << "k=" << k;
    }
}

TEST(HalfLine, FluxIncreasingInDrift)
{
    const auto g = coarse();
    const auto a = half_line_profile(C(0.0), kpp(), g);
    const auto b = half_line_profile(C(0.5), kpp(), g);
    for (std::size_t i = 0; i < a.gradient.size(); ++i)
        EXPECT_GT(b.gradient[i], a.gradient[i]);
}

TEST(HalfLine, PeriodicDriftIsPeriodic)
{
    const auto p = half_line_profile(PeriodicFn::sinusoid(1.0, 0.5, 1.0), kpp(), coarse());
    EXPECT_LT(p.period_residual, coarse().period_tolerance);
    EXPECT_GT(p.gradient.min(), 0.0);
}

TEST(BoundaryFlux, ZeroDirichletConvergesInLength)
{
    const auto g = coarse(128.0);
    const PeriodicFn k = PeriodicFn::sinusoid(1.0, 0.0, 0.5);
    const PeriodicFn mu = C(1.0);
    const PeriodicFn A = boundary_flux(half_line_profile(k, kpp(), g), mu);
    double prev = 1e300;
    for (double ell : {10.0, 20.0, 40.0}) {
        const PeriodicFn A0 = boundary_flux(relax_dirichlet_zero(k, kpp(), ell, g), mu);
        double gap = 0.0;
        for (std::size_t i = 0; i < A.size(); ++i)
            gap = std::max(gap, std::abs(A0[i] - A[i]));
        EXPECT_LT(gap, prev) << "l=" << ell;
        prev = gap;
    }
    EXPECT_LT(prev, 1e-3);
}

TEST(BoundaryFlux, SecondOrderInSpace)
{
    std::vector<double> A;
    for (double npu : {32.0, 64.0, 128.0}) {
        SemiWaveGrid g;
        g.nodes_per_unit = npu;
        A.push_back(half_line_profile(C(0.0), kpp(), g).gradient.mean());
    }
    const double ratio = (A[0] - A[1]) / (A[1] - A[2]);
    EXPECT_GE(ratio, 3.5);
    EXPECT_LE(ratio, 4.5);
}

TEST(CompactWave, StaticFrame)
{
    const auto u0 = relax_dirichlet_zero(C(0.0), kpp(), 10.0, coarse());
    const auto w = compact_wave_view(u0, C(0.0), C(1.0));
    for (double t : {0.0, 0.4})
        for (double z : {0.5, 3.0, 7.25})
            EXPECT_DOUBLE_EQ(w(t, -z), u0.value(t, z));
    EXPECT_EQ(w(0.2, 0.5), 0.0);
    EXPECT_EQ(w(0.2, -10.5), 0.0);
}

TEST(CompactWave, VanishesAtItsFront)
{
    const double r = oracle::semiwave_speed(0.0);
    const auto u0 = relax_dirichlet_zero(C(-r), kpp(), 20.0, coarse());
    const auto w = compact_wave_view(u0, C(r), C(1.0));
    for (double t : {0.0, 0.25, 1.5, 3.75})
        EXPECT_EQ(w(t, w.front(t)), 0.0);
}

TEST(CompactWave, SlowedSpeedIsLowerSolution)
{
    const double r = oracle::semiwave_speed(0.0) - 0.05;
    const auto u0 = relax_dirichlet_zero(C(-r), kpp(), 40.0, coarse());
    const auto w = compact_wave_view(u0, C(r), C(1.0));
    EXPECT_TRUE(w.is_lower_solution());
    EXPECT_GT(w.lower_margin(), 0.0);
}

TEST(CompactWave, RequiresNontrivialZeroDirichletProfile)
{
    EXPECT_THROW(compact_wave_view(relax_dirichlet_zero(C(0.0), kpp(), 2.0, coarse()), C(0.0), C(1.0)), Error);
    EXPECT_THROW(compact_wave_view(relax_dirichlet_pinned(C(0.0), kpp(), 10.0, coarse()), C(0.0), C(1.0)), Error);
}
