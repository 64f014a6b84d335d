#include <algorithm>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include <pfbp/classify.hpp>

using namespace pfbp;

namespace {

constexpr double kPi = std::numbers::pi;

PeriodicFn C(double v) { return PeriodicFn::constant(1.0, v); }

Problem kpp(double beta)
{
    return {C(beta), C(1.0), with_periodic_state(Reaction::logistic(1.0, 1.0, 1.0))};
}

CriticalAverageOptions quick_speeds()
{
    CriticalAverageOptions o;
    o.speed.grid.nodes_per_unit = 64.0;
    o.speed.grid.steps = 128;
    return o;
}

EigenGrid quick_eigen()
{
    EigenGrid g;
    g.nodes = 128;
    g.steps = 128;
    return g;
}

struct Setup {
    Problem problem;
    CriticalSpeeds crit;
    ClassifierContext ctx;
};

const Setup& homogeneous()
{
    static const Setup s = [] {
        Setup out{kpp(0.0), {}, {}};
        out.crit = critical_speeds(out.problem.beta, out.problem.mu, out.problem.reaction, quick_speeds());
        out.ctx = make_context(out.problem, out.crit, quick_eigen());
        return out;
    }();
    return s;
}

const Setup& medium()
{
    static const Setup s = [] {
        Setup out{kpp(3.0), {}, {}};
        out.crit = critical_speeds(out.problem.beta, out.problem.mu, out.problem.reaction, quick_speeds());
        out.ctx = make_context(out.problem, out.crit, quick_eigen());
        return out;
    }();
    return s;
}

RunOptions quick_run()
{
    RunOptions o;
    o.grid.nxi = 256;
    o.grid.steps_per_period = 256;
    return o;
}

} // namespace

TEST(Context, HomogeneousSmallRegime)
{
    const auto& s = homogeneous();
    EXPECT_EQ(s.ctx.regime, Regime::Small);
    EXPECT_NEAR(s.ctx.ell_star, kPi, 1e-4);
    EXPECT_NEAR(s.ctx.c1, 0.5 * (0.0 - 2.0 + s.crit.r().mean()), 1e-15);
    EXPECT_TRUE(s.crit.left.has_value());
}

TEST(Classify, SmallDataVanishes)
{
    const auto& s = homogeneous();
    const auto run = run_classified(s.problem, InitialData::cosine(0.5, 0.5), s.ctx, quick_run());
    EXPECT_EQ(run.outcome.kind, OutcomeKind::Vanishing);
    EXPECT_EQ(run.outcome.confidence, Confidence::High);
    EXPECT_LT(run.outcome.evidence.sup_norm, 1e-4);
    EXPECT_LE(run.outcome.evidence.length, run.outcome.evidence.length_bound);
    EXPECT_TRUE(run.trajectory.stopped_by_hook);
}

TEST(Classify, WideDataSpreads)
{
    const auto& s = homogeneous();
    const auto run = run_classified(s.problem, InitialData::cosine(2.0, 1.0), s.ctx, quick_run());
    EXPECT_EQ(run.outcome.kind, OutcomeKind::Spreading);
    EXPECT_LT(run.outcome.evidence.g, -20.0);
    EXPECT_GT(run.outcome.evidence.h, 20.0);
    EXPECT_LT(run.outcome.evidence.window_dev, 1e-2);
}

TEST(Classify, UndeterminedWhenHorizonTooShort)
{
    const auto& s = homogeneous();
    RunOptions opt = quick_run();
    opt.horizon_periods = 3.0;
    opt.max_extensions = 0;
    const auto run = run_classified(s.problem, InitialData::cosine(2.0, 1.0), s.ctx, opt);
    EXPECT_EQ(run.outcome.kind, OutcomeKind::Undetermined);
    EXPECT_TRUE(run.horizon_too_short);
}

TEST(Classify, HorizonExtendedUntilRuleFires)
{
    const auto& s = homogeneous();
    RunOptions opt = quick_run();
    opt.horizon_periods = 10.0;
    const auto run = run_classified(s.problem, InitialData::cosine(2.0, 1.0), s.ctx, opt);
    EXPECT_EQ(run.outcome.kind, OutcomeKind::Spreading);
    EXPECT_GE(run.extensions, 1u);
}

TEST(Classify, LengthBoundGuardsVanishing)
{
    ClassifierContext ctx = homogeneous().ctx;
    ctx.ell_star = 1.0;   // deliberately too small
    const auto run = run_classified(homogeneous().problem, InitialData::cosine(0.5, 0.5), ctx, [] {
        RunOptions o = quick_run();
        o.max_extensions = 0;
        o.horizon_periods = 40.0;
        return o;
    }());
    EXPECT_EQ(run.outcome.kind, OutcomeKind::Undetermined);
    EXPECT_EQ(run.outcome.confidence, Confidence::Low);
}

TEST(Classify, MinimumPeriodsRespected)
{
    const auto& s = homogeneous();
    const auto tr = simulate(s.problem, InitialData::cosine(0.5, 0.0), 0.5, quick_run().grid);
    const Outcome o = classify(tr, s.ctx);
    EXPECT_EQ(o.kind, OutcomeKind::Undetermined);
}

TEST(Classify, MediumRegimeSplitsVanishingAndVirtualSpreading)
{
    const auto& s = medium();
    ASSERT_EQ(s.ctx.regime, Regime::Medium);
    const auto small = run_classified(s.problem, InitialData::cosine(2.0, 0.1), s.ctx, quick_run());
    EXPECT_EQ(small.outcome.kind, OutcomeKind::Vanishing);
    const auto large = run_classified(s.problem, InitialData::cosine(2.0, 10.0), s.ctx, quick_run());
    EXPECT_EQ(large.outcome.kind, OutcomeKind::VirtualSpreading);
    EXPECT_LT(std::abs(large.outcome.evidence.gdot), 1e-3);
    EXPECT_LT(large.outcome.evidence.window_sup, 1e-2);
    EXPECT_LT(large.outcome.evidence.moving_dev, 1e-2);
}

TEST(Threshold, LargeRegimeRejected)
{
    ClassifierContext ctx = homogeneous().ctx;
    ctx.regime = Regime::Large;
    try {
        critical_sigma(homogeneous().problem, InitialData::cosine(0.5, 1.0), ctx);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::RegimeError);
    }
}

TEST(Threshold, BracketMonotoneAndDeterministic)
{
    const auto& s = homogeneous();
    ThresholdOptions opt;
    opt.run = quick_run();
    opt.sigma_low = 0.5;
    opt.sigma_high = 8.0;
    opt.rel_tol = 5e-2;
    const auto a = critical_sigma(s.problem, InitialData::cosine(0.5, 1.0), s.ctx, opt);
    EXPECT_TRUE(a.converged);
    EXPECT_GT(a.sigma_low, 0.0);
    EXPECT_LT(a.sigma_low, a.sigma_high);
    EXPECT_LE(a.width, opt.rel_tol * a.sigma_high);

    // No vanishing above a spreading probe.
    double lowest_spread = 1e300, highest_vanish = 0.0;
    for (const auto& p : a.probes) {
        if (p.outcome.kind == OutcomeKind::Vanishing)
            highest_vanish = std::max(highest_vanish, p.sigma);
        if (spreads(p.outcome.kind))
            lowest_spread = std::min(lowest_spread, p.sigma);
    }
    EXPECT_LT(highest_vanish, lowest_spread);
    EXPECT_DOUBLE_EQ(highest_vanish, a.sigma_low);
    EXPECT_DOUBLE_EQ(lowest_spread, a.sigma_high);

    const auto b = critical_sigma(s.problem, InitialData::cosine(0.5, 1.0), s.ctx, opt);
    ASSERT_EQ(a.probes.size(), b.probes.size());
    for (std::size_t i = 0; i < a.probes.size(); ++i) {
        EXPECT_EQ(a.probes[i].sigma, b.probes[i].sigma);
        EXPECT_EQ(a.probes[i].outcome.kind, b.probes[i].outcome.kind);
        EXPECT_EQ(a.probes[i].h_end, b.probes[i].h_end);
    }
    EXPECT_EQ(a.sigma_low, b.sigma_low);
    EXPECT_EQ(a.sigma_high, b.sigma_high);
}

TEST(Threshold, BracketExpandsDownward)
{
    const auto& s = homogeneous();
    ThresholdOptions opt;
    opt.run = quick_run();
    opt.sigma_low = 8.0;
    opt.sigma_high = 16.0;
    opt.rel_tol = 0.5;
    const auto r = critical_sigma(s.problem, InitialData::cosine(0.5, 1.0), s.ctx, opt);
    EXPECT_LT(r.sigma_low, 8.0);
    EXPECT_EQ(r.probes.front().sigma, 8.0);
}

TEST(Threshold, UniformSpreadingIsBracketFailure)
{
    const auto& s = homogeneous();
    ThresholdOptions opt;
    opt.run = quick_run();
    opt.sigma_low = 0.5;
    opt.sigma_high = 1.0;
    opt.max_expansions = 1;
    try {
        critical_sigma(s.problem, InitialData::cosine(2.0, 1.0), s.ctx, opt);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::BracketFailure);
    }
}

TEST(Asymptotics, SpreadingRunFollowsSemiWaves)
{
    const auto& s = homogeneous();
    RunOptions opt = quick_run();
    opt.stop_early = false;
    opt.horizon_periods = 60.0;
    const auto run = run_classified(s.problem, InitialData::cosine(2.0, 1.0), s.ctx, opt);
    ASSERT_EQ(run.outcome.kind, OutcomeKind::Spreading);
    const auto rep = front_asymptotics(run.trajectory, s.crit, s.ctx);
    EXPECT_EQ(rep.c_l, 0.0);
    ASSERT_TRUE(rep.has_left);
    const std::size_t n = rep.t.size();
    double speed = 0.0, left = 0.0, lo = 1e300, hi = -1e300;
    for (std::size_t i = 3 * n / 4; i < n; ++i) {
        speed = std::max(speed, std::abs(rep.speed_residual[i]));
        left = std::max(left, std::abs(rep.left_speed_residual[i]));
        lo = std::min(lo, rep.h_minus_R[i]);
        hi = std::max(hi, rep.h_minus_R[i]);
    }
    // Coarse grid: looser than the full-resolution acceptance values.
    EXPECT_LT(speed, 2e-2);
    EXPECT_LT(left, 2e-2);
    EXPECT_LT(hi - lo, 5e-2);
    EXPECT_TRUE(std::isfinite(rep.H1));
    EXPECT_NEAR(rep.G1, -rep.H1, 1e-6);
    EXPECT_LT(rep.profile_sup.back(), 5e-2);
    EXPECT_EQ(rep.profile_t.size(), rep.left_profile_sup.size());
}

TEST(OutcomeNames, Strings)
{
    EXPECT_EQ(to_string(OutcomeKind::VirtualSpreading), "VirtualSpreading");
    EXPECT_EQ(to_string(OutcomeKind::Transition), "Transition");
    EXPECT_EQ(to_string(Confidence::Low), "Low");
    EXPECT_TRUE(spreads(OutcomeKind::Spreading));
    EXPECT_FALSE(spreads(OutcomeKind::Undetermined));
}
