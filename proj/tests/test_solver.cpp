#include <cmath>

#include <boost/math/special_functions/beta.hpp>
#include <gtest/gtest.h>

#include "levyesc/singular.hpp"
#include "levyesc/solver.hpp"

using namespace levyesc;

namespace {

EscapeProblem brownian(double eps, double alpha) {
    EscapeProblem p;
    p.diffusion = DiffusionSpec::constant(1.0);
    p.epsilon = eps;
    return with_alpha(p, alpha);
}

double sup_error(const GridFunction& g, auto&& exact) {
    double e = 0.0;
    for (std::size_t i = 0; i < g.n(); ++i) e = std::max(e, std::abs(g.values[i] - exact(g.x(i))));
    return e;
}

}  // namespace

TEST(Solver, BrownianLimitIsLinear) {
    const auto [g, report] = solve_escape_probability(brownian(0.0, 1.5), 401);
    EXPECT_LE(sup_error(g, [](double x) { return 0.5 * (x + 1.0); }), 1e-10);
    EXPECT_LE(report.residual_inf_norm, 1e-10);
    EXPECT_EQ(g.x(200), 0.0);
}

TEST(Solver, ConstantDriftWithBrownianNoise) {
    EscapeProblem p = brownian(0.0, 1.5);
    p.drift = DriftSpec::constant(0.8);
    const auto [g, report] = solve_escape_probability(p, 401);
    auto exact = [](double x) { return -std::expm1(-1.6 * (x + 1.0)) / -std::expm1(-3.2); };
    EXPECT_LE(sup_error(g, exact), 1e-5);
}

TEST(Solver, PureStableExitLaw) {
    // Symmetric stable motion leaves (-1, 1) to the right with probability
    // I_{(x+1)/2}(alpha/2, alpha/2).
    for (double alpha : {1.2, 1.5, 1.8}) {
        EscapeProblem p;
        p.epsilon = 1.0;
        p = with_alpha(p, alpha);
        auto exact = [alpha](double x) { return boost::math::ibeta(alpha / 2, alpha / 2, (x + 1.0) / 2.0); };
        const double e201 = sup_error(solve_escape_probability(p, 201).first, exact);
        const double e401 = sup_error(solve_escape_probability(p, 401).first, exact);
        EXPECT_LT(e401, 5e-3) << alpha;
        EXPECT_LT(e401, e201) << alpha;
    }
}

TEST(Solver, ScaleInvarianceOfPureJumpProblem) {
    // Without drift the answer does not depend on epsilon.
    EscapeProblem p;
    p.epsilon = 0.3;
    const auto g1 = solve_escape_probability(p, 201).first;
    p.epsilon = 1.7;
    const auto g2 = solve_escape_probability(p, 201).first;
    for (std::size_t i = 0; i < g1.n(); ++i) EXPECT_NEAR(g1.values[i], g2.values[i], 1e-10);
}

TEST(Solver, ComplementAndBounds) {
    for (auto drift : {DriftSpec::constant(1.0), DriftSpec::linear_ou(), DriftSpec::zero()}) {
        for (bool truncated : {false, true}) {
            EscapeProblem p = brownian(0.2, 1.5);
            p.drift = drift;
            if (truncated) p.measure = LevyMeasureSpec::truncated_power_law(p.alpha, 1.0);
            const auto right = solve_escape_probability(p, 301).first;
            const auto left = solve_escape_probability(with_flipped_target(p), 301).first;
            for (std::size_t i = 0; i < right.n(); ++i) {
                EXPECT_NEAR(right.values[i] + left.values[i], 1.0, 1e-10);
                EXPECT_GE(right.values[i], -1e-8);
                EXPECT_LE(right.values[i], 1.0 + 1e-8);
            }
        }
    }
}

TEST(Solver, SymmetricProblemIsOddAboutHalf) {
    EscapeProblem p;
    p.drift = DriftSpec::linear_ou();
    p.epsilon = 0.3;
    const auto g = solve_escape_probability(p, 401).first;
    for (std::size_t i = 0; i < g.n(); ++i) EXPECT_NEAR(g.values[i] + g.values[g.n() - 1 - i], 1.0, 1e-9);
    EXPECT_NEAR(g.values[200], 0.5, 1e-10);
}

TEST(Solver, PositiveDriftProfileIsMonotone) {
    EscapeProblem p;
    p.drift = DriftSpec::constant(1.0);
    p.epsilon = 0.05;
    p.domain = {0.0, 1.0};
    const auto [g, report] = solve_escape_probability(p, 801);
    double prev = 0.0;
    for (double v : g.values) {
        EXPECT_GE(v, prev - 1e-10);
        prev = v;
    }
    EXPECT_GT(g(0.5), 0.99);
}

TEST(Solver, RejectsBadInput) {
    EscapeProblem p;
    p.epsilon = 0.1;
    EXPECT_THROW(solve_escape_probability(p, 2), DomainError);
    p = with_alpha(p, 0.8);
    EXPECT_THROW(solve_escape_probability(p, 101), DomainError);
    EscapeProblem q;
    q.epsilon = 0.0;
    EXPECT_THROW(solve_escape_probability(q, 101), ConfigError);
}

TEST(LayerSolver, LeftProfileMatchesExplicitForTruncatedMeasure) {
    const StabilityIndex a(1.5);
    const auto spec = LevyMeasureSpec::truncated_power_law(a, 1.0);
    const LayerFunction f = solve_layer_problem(1.0, spec, LayerSide::Left);
    const double gamma = gamma_root(a, 1.0, 1.0);
    double err = 0.0;
    for (std::size_t j = 0; j < f.nodes().size(); ++j) {
        err = std::max(err, std::abs(f.node_values()[j] - explicit_F(f.nodes()[j], gamma)));
    }
    // Loose bound: the explicit profile is not an exact solution near xi = 0.
    EXPECT_LT(err, 0.1);
    EXPECT_EQ(f(-1.0), 0.0);
    EXPECT_EQ(f(1e3), 1.0);
}

TEST(LayerSolver, RightMirrorsLeft) {
    const auto spec = LevyMeasureSpec::full_power_law(StabilityIndex(1.5));
    const LayerFunction f = solve_layer_problem(1.0, spec, LayerSide::Left);
    const LayerFunction g = solve_layer_problem(-1.0, spec, LayerSide::Right);
    for (double s : {0.1, 1.0, 5.0, 20.0}) EXPECT_NEAR(f(s) + g(s), 1.0, 1e-10);
}

TEST(LayerSolver, InternalLayerIsAntisymmetric) {
    const auto spec = LevyMeasureSpec::full_power_law(StabilityIndex(1.5));
    const LayerFunction h = solve_layer_problem(0.5, spec, LayerSide::Internal);
    for (double eta : {0.0, 0.5, 2.0, 10.0}) EXPECT_NEAR(h(eta) + h(-eta), 1.0, 1e-9);
    EXPECT_LT(h(-10.0), h(10.0));
}

TEST(LayerSolver, ShortSpanIsReported) {
    const auto spec = LevyMeasureSpec::full_power_law(StabilityIndex(1.5));
    LayerOptions opts;
    opts.span = 0.5;
    opts.n = 200;
    opts.far_field_tolerance = 1e-3;
    EXPECT_THROW(solve_layer_problem(1.0, spec, LayerSide::Left, opts), AccuracyError);
}
