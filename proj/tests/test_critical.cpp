#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include <pfbp/critical.hpp>

#include "oracles.hpp"

using namespace pfbp;

namespace {

constexpr double kPi = std::numbers::pi;

PeriodicFn C(double v) { return PeriodicFn::constant(1.0, v); }

const Reaction& kpp()
{
    static const Reaction f = with_periodic_state(Reaction::logistic(1.0, 1.0, 1.0));
    return f;
}

// Coarser than the defaults; the oracle comparisons below use the defaults.
SpeedOptions quick()
{
    SpeedOptions o;
    o.grid.nodes_per_unit = 64.0;
    o.grid.steps = 128;
    return o;
}

CriticalAverageOptions quick_average()
{
    CriticalAverageOptions o;
    o.speed = quick();
    return o;
}

double sup_abs(const PeriodicFn& p, double v)
{
    return std::max(std::abs(p.max() - v), std::abs(p.min() - v));
}

} // namespace

TEST(Cbar, TwoRootMeanA)
{
    EXPECT_DOUBLE_EQ(cbar(C(1.0)), 2.0);
    EXPECT_NEAR(cbar(PeriodicFn::sinusoid(1.0, 1.0, 1.0)), 2.0, 1e-12);
    EXPECT_DOUBLE_EQ(cbar(C(4.0)), 4.0);
    try {
        cbar(C(-0.5));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NonpositiveLinearization);
    }
}

TEST(RightwardSpeed, ShootingOracleAtZeroAdvection)
{
    const auto r = rightward_speed(C(0.0), C(1.0), kpp());
    EXPECT_LT(sup_abs(r.speed, oracle::semiwave_speed(0.0)), 1e-4);
    EXPECT_LT(r.residual, 1e-5);
}

TEST(RightwardSpeed, FixedPointResidualOnFreshEvaluation)
{
    const PeriodicFn beta = PeriodicFn::sinusoid(1.0, 0.5, 0.4);
    const PeriodicFn mu = PeriodicFn::sinusoid(1.0, 1.0, 0.3, 2);
    const auto opt = quick();
    const auto r = rightward_speed(beta, mu, kpp(), opt);
    const auto prof = half_line_profile(beta - r.speed, kpp(), opt.grid);
    const PeriodicFn A = boundary_flux(prof, mu);
    double worst = 0.0;
    for (std::size_t i = 0; i < A.size(); ++i)
        worst = std::max(worst, std::abs(A[i] - r.speed(A.node(i))));
    // A fresh solve at the default truncation radius; the fixed point itself
    // was verified at twice that radius.
    EXPECT_LT(worst, 1e-5 + opt.grid.truncation_tolerance);
}

TEST(RightwardSpeed, IncreasingInBeta)
{
    const auto opt = quick();
    const auto r1 = rightward_speed(C(0.5), C(1.0), kpp(), opt);
    const auto r2 = rightward_speed(C(1.0), C(1.0), kpp(), opt);
    for (std::size_t i = 0; i < r1.speed.size(); ++i)
        EXPECT_GT(r2.speed[i], r1.speed[i]);
    EXPECT_LE((C(0.5) - r1.speed).mean(), (C(1.0) - r2.speed).mean());
}

TEST(RightwardSpeed, MinimumGrowsWithMeanAdvection)
{
    const auto opt = quick();
    const PeriodicFn theta = PeriodicFn::sinusoid(1.0, 0.0, 0.3);
    double prev = -1.0;
    for (double b : {2.0, 4.0, 8.0}) {
        const double m = rightward_speed(theta + b, C(1.0), kpp(), opt).speed.min();
        EXPECT_GT(m, prev) << "b=" << b;
        prev = m;
    }
}

TEST(LeftwardSpeed, ReflectionAtZeroAdvection)
{
    const auto opt = quick();
    const auto r = rightward_speed(C(0.0), C(1.0), kpp(), opt);
    const auto l = leftward_speed(C(0.0), C(1.0), kpp(), opt);
    for (std::size_t i = 0; i < r.speed.size(); ++i)
        EXPECT_NEAR(l.speed[i], r.speed[i], 1e-12);
}

TEST(LeftwardSpeed, MeanBetweenZeroAndGap)
{
    const auto l = leftward_speed(C(1.0), C(1.0), kpp(), quick());
    EXPECT_GT(l.speed.mean(), 0.0);
    EXPECT_LT(l.speed.mean(), 1.0);
}

TEST(LeftwardSpeed, RefusedAboveCbar)
{
    try {
        leftward_speed(C(2.5), C(1.0), kpp(), quick());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::RegimeError);
    }
}

TEST(CriticalAverage, HomogeneousOracle)
{
    const auto B = critical_average(C(0.0), C(1.0), kpp());
    EXPECT_NEAR(B.B, oracle::critical_average_homogeneous(), 1e-3);
    EXPECT_GT(B.B, 2.0);
}

TEST(CriticalAverage, SignOfGapAroundRoot)
{
    const auto opt = quick_average();
    const PeriodicFn theta = PeriodicFn::sinusoid(1.0, 0.0, 0.3);
    const auto res = critical_average(theta, C(1.0), kpp(), opt);
    EXPECT_GT(res.B, 2.0);
    EXPECT_LT(critical_gap(res.B - 0.2, theta, C(1.0), kpp(), opt.speed), 0.0);
    EXPECT_GT(critical_gap(res.B + 0.2, theta, C(1.0), kpp(), opt.speed), 0.0);
}

TEST(CriticalAverage, GapStrictlyIncreasing)
{
    const auto opt = quick();
    const PeriodicFn theta = PeriodicFn::sinusoid(1.0, 0.0, 0.3);
    std::optional<PeriodicFn> guess;
    double prev = -1e300;
    for (int i = 0; i < 6; ++i) {
        const double b = 2.0 + 0.5 * i;
        const double y = critical_gap(b, theta, C(1.0), kpp(), opt, &guess);
        EXPECT_GT(y, prev + 1e-5) << "b=" << b;
        prev = y;
    }
}

TEST(CriticalAverage, RejectsShapeWithMean)
{
    EXPECT_THROW(critical_average(C(0.5), C(1.0), kpp(), quick_average()), Error);
}

TEST(BetaStar, ConstantShapeMatchesShooting)
{
    const PeriodicFn bs = beta_star_from_shape(C(0.0), C(1.0), kpp());
    EXPECT_LT(sup_abs(bs, 2.0 + oracle::semiwave_slope(2.0)), 1e-3);
}

TEST(BetaStar, OnTheCriticalSet)
{
    const auto opt = quick_average();
    const PeriodicFn omega = PeriodicFn::sinusoid(1.0, 0.0, 0.3);
    const PeriodicFn bs = beta_star_from_shape(omega, C(1.0), kpp(), opt.speed.grid);
    const auto r = rightward_speed(bs, C(1.0), kpp(), opt.speed);
    EXPECT_NEAR(r.speed.mean(), bs.mean() - 2.0, 1e-3);
    const auto ms = mean_and_shape(bs);
    EXPECT_NEAR(critical_average(ms.shape, C(1.0), kpp(), opt).B, ms.mean, 1e-3);
}

TEST(BetaStar, MeanDependsOnMuForSomeShape)
{
    // Exploratory: a smoothed step-like mu correlated with the shape moves
    // mean(beta*) away from its value for the zero shape.
    const auto grid = quick().grid;
    const PeriodicFn mu = PeriodicFn::sample(1.0, 256, [](double t) {
        return 1.0 + 0.8 * std::tanh(8.0 * std::sin(2 * kPi * t));
    });
    const PeriodicFn omega = PeriodicFn::sinusoid(1.0, 0.0, 1.5);
    const double base = beta_star_from_shape(C(0.0), mu, kpp(), grid).mean();
    const double shaped = beta_star_from_shape(omega, mu, kpp(), grid).mean();
    EXPECT_GT(std::abs(shaped - base), 1e-2);
}

TEST(Regime, SmallMediumLarge)
{
    const auto opt = quick_average();
    EXPECT_EQ(advection_regime(C(1.0), C(1.0), kpp(), opt).regime, Regime::Small);
    const double B0 = oracle::critical_average_homogeneous();
    ASSERT_GT(B0, 2.1);
    const auto medium = advection_regime(C(2.1), C(1.0), kpp(), opt);
    EXPECT_EQ(medium.regime, Regime::Medium);
    EXPECT_NEAR(medium.B, B0, 1e-2);
    EXPECT_EQ(advection_regime(C(B0 + 1.0), C(1.0), kpp(), opt).regime, Regime::Large);
}

TEST(Regime, NearBoundaryFlaggedLowConfidence)
{
    const auto rep = advection_regime(C(1.995), C(1.0), kpp(), quick_average());
    EXPECT_EQ(rep.regime, Regime::Small);
    EXPECT_TRUE(rep.low_confidence);
    EXPECT_FALSE(advection_regime(C(1.0), C(1.0), kpp(), quick_average()).low_confidence);
}

TEST(Regime, NegativeMeanRejected)
{
    EXPECT_THROW(advection_regime(C(-0.5), C(1.0), kpp(), quick_average()), Error);
}
