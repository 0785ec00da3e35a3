#include <cmath>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "levyesc/grid_function.hpp"
#include "levyesc/problem.hpp"
#include "levyesc/problem_io.hpp"

using namespace levyesc;

namespace {

const char* kExample51 = R"(# comment line
drift.kind = zero
diffusion.kind = constant
diffusion.params = 1
epsilon = 0.01
alpha = 1.5
measure.kind = full
domain.a = -1
domain.b = 1
target = right
)";

std::string replace(std::string text, const std::string& from, const std::string& to) {
    const auto pos = text.find(from);
    EXPECT_NE(pos, std::string::npos) << from;
    return text.replace(pos, from.size(), to);
}

std::string error_of(const std::string& text) {
    try {
        parse_problem(text, "cfg");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(ProblemFile, ParsesExample) {
    const EscapeProblem p = parse_problem(std::string(kExample51), "cfg");
    EXPECT_EQ(p.drift(0.3), 0.0);
    EXPECT_EQ(p.diffusion(0.3), 1.0);
    EXPECT_EQ(p.epsilon, 0.01);
    EXPECT_EQ(p.alpha.value(), 1.5);
    EXPECT_FALSE(p.measure.truncated());
    EXPECT_EQ(p.domain.a, -1.0);
    EXPECT_EQ(p.domain.b, 1.0);
    EXPECT_EQ(p.target, Target::RightExterior);
    EXPECT_EQ(p.left_exterior_value(), 0.0);
    EXPECT_EQ(p.right_exterior_value(), 1.0);
}

TEST(ProblemFile, RoundTripsEveryKind) {
    std::vector<std::string> texts{
        kExample51,
        "drift.kind = linear_ou\ndiffusion.kind = zero\nepsilon = 0.1\nalpha = 1.5\nmeasure.kind = truncated\n"
        "measure.kappa = 0.75\ndomain.a = -1\ndomain.b = 1.5\ntarget = left\n",
        "drift.kind = tumor\ndrift.params = 0.1, 1.2\ndiffusion.kind = zero\nepsilon = 0.1\nalpha = 1.3\n"
        "measure.kind = full\ndomain.a = 0\ndomain.b = 8\ntarget = left\n",
        "drift.kind = tabulated\ndrift.params = 0 1  0.25 0.6  0.5 0.25  1 -1\ndiffusion.kind = tabulated\n"
        "diffusion.params = 0 1 0.25 1.2 0.75 1.8 1 2\nepsilon = 0.2\nalpha = 0.7\nmeasure.kind = full\ndomain.a = 0\n"
        "domain.b = 1\ntarget = right\n",
        "drift.kind = constant\ndrift.params = -0.3\ndiffusion.kind = zero\nepsilon = 0.05\nalpha = 1.5\n"
        "measure.kind = full\ndomain.a = 0\ndomain.b = 1\ntarget = right\n"};
    for (const auto& t : texts) {
        const EscapeProblem p = parse_problem(t, "cfg");
        const std::string canonical = format_problem(p);
        const EscapeProblem q = parse_problem(canonical, "canonical");
        EXPECT_EQ(format_problem(q), canonical);
        for (double x : {p.domain.a, 0.5 * (p.domain.a + p.domain.b), p.domain.b}) {
            EXPECT_EQ(p.drift(x), q.drift(x));
            EXPECT_EQ(p.diffusion(x), q.diffusion(x));
        }
        EXPECT_EQ(p.measure, q.measure);
        EXPECT_EQ(p.target, q.target);
    }
}

TEST(ProblemFile, TabulatedDriftInterpolates) {
    const auto p = parse_problem(std::string("drift.kind = tabulated\ndrift.params = 0 1 0.25 0.6 0.5 0.25 1 -1\n"
                                             "diffusion.kind = constant\ndiffusion.params = 1\nepsilon = 0\n"
                                             "alpha = 1.5\nmeasure.kind = full\ndomain.a = 0\ndomain.b = 1\n"
                                             "target = right\n"),
                                 "cfg");
    EXPECT_DOUBLE_EQ(p.drift(0.5), 0.25);
    EXPECT_DOUBLE_EQ(p.drift(1.0), -1.0);
}

TEST(ProblemFile, DiagnosticsNameTheLine) {
    EXPECT_NE(error_of(replace(kExample51, "epsilon = 0.01", "epsilon = abc")).find("cfg:5"), std::string::npos);
    EXPECT_NE(error_of(replace(kExample51, "alpha = 1.5", "alpha 1.5")).find("cfg:6"), std::string::npos);
    EXPECT_NE(error_of(replace(kExample51, "target = right", "colour = red")).find("unknown key"),
              std::string::npos);
    EXPECT_NE(error_of(std::string(kExample51) + "alpha = 1.2\n").find("duplicate"), std::string::npos);
    EXPECT_NE(error_of(replace(kExample51, "domain.b = 1\n", "")).find("domain.b"), std::string::npos);
    EXPECT_NE(error_of(replace(kExample51, "drift.kind = zero", "drift.kind = quadratic")).find("drift.kind"),
              std::string::npos);
    EXPECT_NE(error_of(replace(kExample51, "target = right", "target = up")).find("target"), std::string::npos);
}

TEST(ProblemFile, RejectsInvalidProblems) {
    EXPECT_FALSE(error_of(replace(kExample51, "alpha = 1.5", "alpha = 2.5")).empty());
    EXPECT_FALSE(error_of(replace(kExample51, "domain.b = 1", "domain.b = -2")).empty());
    EXPECT_FALSE(error_of(replace(kExample51, "epsilon = 0.01", "epsilon = -1")).empty());
    EXPECT_FALSE(error_of(replace(kExample51, "measure.kind = full", "measure.kind = full\nmeasure.kappa = 1"))
                     .empty());
    EXPECT_FALSE(error_of(replace(kExample51, "measure.kind = full", "measure.kind = truncated")).empty());
    EXPECT_FALSE(error_of(replace(kExample51, "drift.kind = zero", "drift.kind = tumor\ndrift.params = 0.1 5"))
                     .empty());
    const std::string degenerate = replace(replace(replace(kExample51, "diffusion.params = 1\n", ""),
                                                   "diffusion.kind = constant", "diffusion.kind = zero"),
                                           "epsilon = 0.01", "epsilon = 0");
    EXPECT_FALSE(error_of(degenerate).empty());
    EXPECT_THROW(load_problem("/nonexistent/problem.cfg"), ConfigError);
}

TEST(Tumor, EquilibriaAreRootsOfTheDrift) {
    for (auto [theta, beta] : {std::pair{0.1, 1.2}, std::pair{0.3, 1.05}, std::pair{0.05, 1.0 + 1e-9}}) {
        const auto eq = tumor_equilibria(theta, beta);
        // Quadratic theta x^2 - (1 - theta) x + (beta - 1) = 0 from b(x) (x + 1) / x.
        const double disc = (1.0 - theta) * (1.0 - theta) - 4.0 * theta * (beta - 1.0);
        const double x3 = (1.0 - theta + std::sqrt(disc)) / (2.0 * theta);
        const double x2 = (beta - 1.0) / (theta * x3);
        EXPECT_EQ(eq.x1, 0.0);
        EXPECT_NEAR(eq.x2, x2, 1e-12 * std::max(1.0, x2));
        EXPECT_NEAR(eq.x3, x3, 1e-12 * x3);
        const auto b = DriftSpec::tumor(theta, beta);
        EXPECT_NEAR(b(eq.x2), 0.0, 1e-12);
        EXPECT_NEAR(b(eq.x3), 0.0, 1e-11);
        EXPECT_GT(b.derivative(eq.x2), 0.0);
        EXPECT_LT(b.derivative(eq.x3), 0.0);
    }
    EXPECT_THROW(tumor_equilibria(1.2, 1.1), DomainError);
    EXPECT_THROW(tumor_equilibria(0.1, 0.9), DomainError);
    EXPECT_THROW(tumor_equilibria(0.1, 3.1), DomainError);
}

TEST(Classify, RecognisesEachCase) {
    EscapeProblem p;
    p.epsilon = 0.1;
    p.drift = DriftSpec::constant(1.0);
    EXPECT_EQ(classify_case(p).kind, CaseLabel::Kind::PositiveDrift);
    p.drift = DriftSpec::constant(-2.0);
    EXPECT_EQ(classify_case(p).kind, CaseLabel::Kind::NegativeDrift);

    p.drift = DriftSpec::linear_ou();
    const auto c4 = classify_case(p);
    EXPECT_EQ(c4.kind, CaseLabel::Kind::StableEquilibrium);
    EXPECT_EQ(c4.name(), "Case4");
    EXPECT_NEAR(c4.equilibrium, 0.0, 1e-12);
    EXPECT_NEAR(c4.slope, -1.0, 1e-8);

    const auto eq = tumor_equilibria(0.1, 1.2);
    p.drift = DriftSpec::tumor(0.1, 1.2);
    p.domain = {eq.x1, eq.x3};
    const auto c3 = classify_case(p);
    EXPECT_EQ(c3.kind, CaseLabel::Kind::UnstableEquilibrium);
    EXPECT_NEAR(c3.equilibrium, eq.x2, 1e-10);
    EXPECT_NEAR(c3.slope, DriftSpec::tumor(0.1, 1.2).derivative(eq.x2), 1e-6);

    p.drift = DriftSpec::zero();
    p.domain = {-1.0, 1.0};
    EXPECT_EQ(classify_case(p).kind, CaseLabel::Kind::Unsupported);
    p.drift = DriftSpec::tabulated({-1, -0.5, 0, 0.5, 1}, {1, -1, 1, -1, 1});
    EXPECT_EQ(classify_case(p).kind, CaseLabel::Kind::Unsupported);
    // Stable equilibrium with a vanishing endpoint drift.
    p.drift = DriftSpec::tabulated({-1, -0.5, 0.5, 1}, {1, 0.5, -0.5, 0});
    EXPECT_EQ(classify_case(p).kind, CaseLabel::Kind::Unsupported);
}

TEST(Problem, FlipAndAlphaHelpers) {
    EscapeProblem p;
    p.epsilon = 0.1;
    const auto q = with_flipped_target(p);
    EXPECT_EQ(q.left_exterior_value(), 1.0);
    EXPECT_EQ(q.right_exterior_value(), 0.0);
    p.measure = LevyMeasureSpec::truncated_power_law(p.alpha, 2.0);
    const auto r = with_alpha(p, 1.2);
    EXPECT_EQ(r.alpha.value(), 1.2);
    EXPECT_TRUE(r.measure.truncated());
    EXPECT_EQ(r.measure.coefficient(), 2.0);
    EXPECT_NO_THROW(r.validate());
    EscapeProblem bad = p;
    bad.measure = LevyMeasureSpec::full_power_law(StabilityIndex(1.2));
    EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(GridCsv, RoundTripsBitExactly) {
    GridFunction g{-1.0, 1.0, {0.1, 0.2, 1.0 / 3.0, 0.9}, 0.0, 1.0};
    std::stringstream ss;
    write_grid_csv(ss, g);
    const GridFunction h = read_grid_csv(ss);
    EXPECT_EQ(h.a, g.a);
    EXPECT_EQ(h.b, g.b);
    EXPECT_EQ(h.values, g.values);
    EXPECT_EQ(h.left_exterior, 0.0);
    EXPECT_EQ(h.right_exterior, 1.0);
    EXPECT_DOUBLE_EQ(h(-0.6), 0.1);
    std::stringstream bad("x,q\n0,0\n");
    EXPECT_THROW(read_grid_csv(bad), ConfigError);
}
