#include <cmath>

#include <gtest/gtest.h>

#include "levyesc/montecarlo.hpp"
#include "levyesc/solver.hpp"

using namespace levyesc;

namespace {

EscapeProblem example51(double eps) {
    EscapeProblem p;
    p.diffusion = DiffusionSpec::constant(1.0);
    p.epsilon = eps;
    return p;
}

MCConfig quick(std::size_t paths) {
    MCConfig c;
    c.n_paths = paths;
    c.dt = 0.01;
    c.seed = 11;
    return c;
}

}  // namespace

TEST(MonteCarlo, DeterministicAndThreadIndependent) {
    const auto p = example51(0.3);
    MCConfig c = quick(2000);
    c.threads = 1;
    const auto a = estimate_escape(p, 0.2, c);
    const auto b = estimate_escape(p, 0.2, c);
    c.threads = 3;
    const auto d = estimate_escape(p, 0.2, c);
    EXPECT_EQ(a.n_target, b.n_target);
    EXPECT_EQ(a.n_target, d.n_target);
    EXPECT_EQ(a.p_hat, d.p_hat);
    c.seed = 12;
    EXPECT_NE(estimate_escape(p, 0.2, c).n_target, a.n_target);
}

TEST(MonteCarlo, FlippedTargetSwapsCounts) {
    EscapeProblem p = example51(0.2);
    p.drift = DriftSpec::linear_ou();
    const MCConfig c = quick(2000);
    const auto r = estimate_escape(p, -0.3, c);
    const auto l = estimate_escape(with_flipped_target(p), -0.3, c);
    EXPECT_EQ(r.n_target, l.n_other);
    EXPECT_EQ(r.n_other, l.n_target);
    EXPECT_NEAR(r.p_hat + l.p_hat, 1.0, 1e-15);
}

TEST(MonteCarlo, BrownianLimitMatchesLinearProfile) {
    const auto p = example51(0.0);
    for (double x0 : {-0.5, 0.25}) {
        const auto e = estimate_escape(p, x0, quick(20000));
        EXPECT_EQ(e.n_censored, 0u);
        EXPECT_LE(std::abs(e.p_hat - 0.5 * (x0 + 1.0)), 4.0 * e.std_err) << x0;
    }
}

TEST(MonteCarlo, WithoutBridgeExitsAreLate) {
    // Missing crossings bias the Brownian estimate towards the far side.
    const auto p = example51(0.0);
    MCConfig c = quick(20000);
    c.dt = 0.05;
    c.bridge = false;
    const auto e = estimate_escape(p, 0.8, c);
    c.bridge = true;
    const auto f = estimate_escape(p, 0.8, c);
    EXPECT_LT(e.p_hat, f.p_hat);
    EXPECT_LE(std::abs(f.p_hat - 0.9), 4.0 * f.std_err);
}

TEST(MonteCarlo, PureStableJumpsOvershoot) {
    EscapeProblem p;
    p.epsilon = 1.0;
    MCConfig c = quick(1);
    c.dt = 1e-3;
    int beyond = 0;
    for (std::uint64_t i = 0; i < 200; ++i) {
        auto rng = path_rng(5, i);
        std::vector<TracePoint> trace;
        const ExitRecord r = simulate_exit(p, 0.0, c, rng, 1.0, &trace);
        ASSERT_NE(r.kind, ExitKind::Censored);
        EXPECT_TRUE(r.position <= -1.0 || r.position >= 1.0);
        EXPECT_EQ(trace.back().x, r.position);
        EXPECT_EQ(r.kind == ExitKind::TargetHit, r.position >= 1.0);
        if (std::abs(r.position) > 1.01) ++beyond;
    }
    EXPECT_GT(beyond, 100);
}

TEST(MonteCarlo, TruncatedJumpsStayWithinUnitRange) {
    EscapeProblem p;
    p.drift = DriftSpec::linear_ou();
    p.epsilon = 0.8;
    p.measure = LevyMeasureSpec::truncated_power_law(p.alpha, 1.0);
    MCConfig c = quick(1);
    for (std::uint64_t i = 0; i < 50; ++i) {
        auto rng = path_rng(9, i);
        std::vector<TracePoint> trace;
        simulate_exit(p, 0.0, c, rng, 1.0, &trace);
        for (std::size_t k = 1; k < trace.size(); ++k) {
            const double step = std::abs(trace[k].x - trace[k - 1].x);
            EXPECT_LT(step, 1.0 + 6.0 * std::sqrt(c.dt)) << i;
        }
    }
}

TEST(MonteCarlo, AgreesWithSolverForJumpDiffusion) {
    const auto p = example51(0.3);
    const auto g = solve_escape_probability(p, 401).first;
    MCConfig c = quick(20000);
    c.dt = 0.002;
    for (double x0 : {-0.5, 0.5}) {
        const auto e = estimate_escape(p, x0, c);
        EXPECT_LE(std::abs(e.p_hat - g(x0)), 4.0 * e.std_err) << x0;
    }
}

TEST(MonteCarlo, AntitheticPairsShareAGenerator) {
    const auto p = example51(0.0);
    MCConfig c = quick(4000);
    c.antithetic = true;
    const auto e = estimate_escape(p, 0.0, c);
    EXPECT_LE(std::abs(e.p_hat - 0.5), 4.0 * e.std_err);
    EXPECT_EQ(e.n_paths, 4000u);
}

TEST(MonteCarlo, CensoringAndValidation) {
    const auto p = example51(0.0);
    MCConfig c = quick(50);
    c.t_max = 0.01;
    c.dt = 0.001;
    EXPECT_THROW(estimate_escape(p, 0.0, c), NumericalError);
    c.t_max = 0.5;
    const auto e = estimate_escape(p, 0.0, c);
    EXPECT_EQ(e.n_target + e.n_other + e.n_censored, 50u);
    EXPECT_GT(e.n_censored, 0u);
    EXPECT_THROW(estimate_escape(p, 1.0, c), DomainError);
    c.dt = 0.0;
    EXPECT_THROW(estimate_escape(p, 0.0, c), ConfigError);
}
