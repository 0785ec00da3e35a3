#include <cmath>

#include <gtest/gtest.h>

#include "levyesc/regular.hpp"
#include "levyesc/solver.hpp"

using namespace levyesc;

namespace {

EscapeProblem example51(double eps, double alpha) {
    EscapeProblem p;
    p.diffusion = DiffusionSpec::constant(1.0);
    p.epsilon = eps;
    return with_alpha(p, alpha);
}

}  // namespace

TEST(Regular, LeadingOrderForZeroDriftIsLinear) {
    const auto p0 = regular_p0(example51(0.01, 1.5));
    for (double x : {-0.9, -0.3, 0.0, 0.6}) EXPECT_NEAR(p0(x), 0.5 * (x + 1.0), 1e-12);
}

TEST(Regular, LeadingOrderForConstantDrift) {
    EscapeProblem p = example51(0.01, 1.5);
    p.drift = DriftSpec::constant(0.8);
    p.diffusion = DiffusionSpec::constant(0.5);
    const auto p0 = regular_p0(p);
    // b p' + sigma^2/2 p'' = 0: p = (1 - e^{-k(x+1)}) / (1 - e^{-2k}), k = 2b/sigma^2.
    const double k = 2.0 * 0.8 / 0.25;
    for (double x : {-0.9, -0.3, 0.0, 0.6}) {
        EXPECT_NEAR(p0(x), std::expm1(-k * (x + 1.0)) / std::expm1(-2.0 * k), 1e-9);
    }
}

TEST(Regular, LeadingOrderOfLinearDriftIsSymmetric) {
    EscapeProblem p = example51(0.05, 1.5);
    p.drift = DriftSpec::linear_ou();
    const auto p0 = regular_p0(p);
    EXPECT_NEAR(p0(0.0), 0.5, 1e-12);
    for (double x : {0.2, 0.5, 0.9}) EXPECT_NEAR(p0(x) + p0(-x), 1.0, 1e-10);
}

TEST(Regular, ForcingMatchesClosedForm) {
    for (double alpha : {0.5, 1.5}) {
        const auto r = regular_expansion(example51(0.01, alpha));
        const double c = stable_constant(StabilityIndex(alpha));
        for (double x : {-0.95, -0.5, 0.0, 0.3, 0.9}) {
            const double exact = c * (std::pow(1.0 - x, 1.0 - alpha) - std::pow(1.0 + x, 1.0 - alpha)) /
                                 (2.0 * alpha * (1.0 - alpha));
            EXPECT_NEAR(r.g(x), exact, 1e-7 * std::max(1.0, std::abs(exact))) << alpha << ' ' << x;
        }
    }
}

TEST(Regular, FirstCorrectionMatchesClosedForm) {
    for (double alpha : {0.5, 1.2, 1.5}) {
        const auto r = regular_expansion(example51(0.01, alpha));
        for (int k = 1; k <= 21; ++k) {
            const double x = -1.0 + 2.0 * k / 22.0;
            EXPECT_NEAR(r.p1(x), example51_p1_oracle(x, StabilityIndex(alpha)), 1e-8) << alpha << ' ' << x;
        }
        EXPECT_EQ(r.p1(1.0), 1.0);
        EXPECT_EQ(r.p1(-1.0), 0.0);
    }
    EXPECT_THROW(example51_p1_oracle(0.0, StabilityIndex(1.0)), DomainError);
}

TEST(Regular, CorrectedBoundaryDropsTheLinearTerms) {
    RegularOptions opts;
    opts.corrected_p1_boundary = true;
    const auto r = regular_expansion(example51(0.01, 1.5), opts);
    const auto s = regular_expansion(example51(0.01, 1.5));
    EXPECT_EQ(r.p1(1.0), 0.0);
    for (double x : {-0.5, 0.0, 0.7}) EXPECT_NEAR(s.p1(x) - r.p1(x), 0.5 * (x + 1.0), 1e-10);
}

TEST(Regular, ExpansionImprovesOnLeadingOrder) {
    RegularOptions opts;
    opts.corrected_p1_boundary = true;
    for (double alpha : {0.5, 1.5}) {
        for (double eps : {0.01, 0.05}) {
            EscapeProblem p = example51(eps, alpha);
            p.drift = DriftSpec::linear_ou();
            const auto g = solve_escape_probability(p, 401).first;
            const auto r = regular_expansion(p, opts);
            double d0 = 0.0, d1 = 0.0;
            for (std::size_t i = 0; i < g.n(); ++i) {
                d0 = std::max(d0, std::abs(g.values[i] - r.p0(g.x(i))));
                d1 = std::max(d1, std::abs(g.values[i] - r(g.x(i))));
            }
            EXPECT_LT(d1, 0.2 * d0) << alpha << ' ' << eps;
        }
    }
}

TEST(Regular, ResidualShrinksFasterThanTheCorrection) {
    RegularOptions opts;
    opts.corrected_p1_boundary = true;
    const double alpha = 0.5;
    double prev = 0.0;
    for (double eps : {0.04, 0.01}) {
        const auto p = example51(eps, alpha);
        const auto g = solve_escape_probability(p, 401).first;
        const auto r = regular_expansion(p, opts);
        double d = 0.0;
        for (std::size_t i = 0; i < g.n(); ++i) d = std::max(d, std::abs(g.values[i] - r(g.x(i))));
        if (prev > 0.0) {
            // eps^{2 alpha} predicts a factor 4; eps^alpha alone would give 2.
            EXPECT_GT(prev / d, 3.0);
        }
        prev = d;
    }
}

TEST(Regular, NeedsBrownianPart) {
    EscapeProblem p = example51(0.1, 1.5);
    p.diffusion = DiffusionSpec::zero();
    EXPECT_THROW(regular_expansion(p), DomainError);
}
