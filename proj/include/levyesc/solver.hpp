#pragma once

// Direct solution of the nonlocal exterior-value problem
//
//   b(x) p' + 1/2 sigma^2(x) p'' + eps^alpha (L p)(x) = 0   on (a, b),
//   p = left value on (-inf, a],  p = right value on [b, inf),
//
// on a uniform grid. Local terms use central differences. The nonlocal term
// is written as int_0^inf (p(x+u) + p(x-u) - 2 p(x)) nu(u) du: for u < h the
// bracket is replaced by the discrete second difference times the analytic
// second moment of nu on (0, h]; for u >= h the piecewise-linear interpolant
// of the grid values is integrated exactly against the kernel, cell by cell,
// and the constant exterior values contribute exact tail masses.

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include "levyesc/detail/pchip.hpp"

#include "levyesc/errors.hpp"
#include "levyesc/grid_function.hpp"
#include "levyesc/problem.hpp"
#include "levyesc/stable.hpp"

namespace levyesc {

struct SolverReport {
    double residual_inf_norm = 0.0;
    double grid_h = 0.0;
    double condition_estimate = 0.0;  ///< 1 / rcond of the LU factorization
    std::chrono::duration<double> assembly_time{};
    std::chrono::duration<double> solve_time{};
    bool upwinded = false;  ///< first-order upwind drift used after oscillations were detected
};

enum class DriftStencil { Central, Upwind };

struct LinearSystem {
    Eigen::MatrixXd matrix;
    Eigen::VectorXd rhs;
    GridFunction layout;  ///< grid geometry and exterior values; `values` left empty
};

namespace detail {

/// Closed-form cell weights of the kernel for piecewise-linear data on a grid
/// of spacing h. lo[m], hi[m] weight the nodes at distance (m-1)h and mh of
/// the cell [(m-1)h, mh], m >= 2.
struct KernelWeights {
    std::vector<double> lo;
    std::vector<double> hi;
    double near = 0.0;       ///< multiplies p_{i+1} - 2 p_i + p_{i-1}
    double far_mass = 0.0;   ///< one-sided mass of (h, radius]
};

inline KernelWeights kernel_weights(const LevyMeasureSpec& spec, double h, std::size_t max_offset) {
    const double a = spec.alpha().value();
    const double c = spec.coefficient();
    const double radius = spec.radius();
    KernelWeights w;
    w.lo.assign(max_offset + 1, 0.0);
    w.hi.assign(max_offset + 1, 0.0);
    w.near = spec.second_moment(h) / (h * h);
    w.far_mass = spec.tail_mass(h);
    for (std::size_t m = 2; m <= max_offset; ++m) {
        const double d0 = static_cast<double>(m - 1) * h;
        const double d1 = static_cast<double>(m) * h;
        if (d0 >= radius) break;
        const double top = std::min(d1, radius);
        const double lr = std::log1p((top - d0) / d0);
        // I0 = int u^{-1-a} du, I1 = int u^{-a} du over [d0, top]
        const double i0 = -std::pow(d0, -a) * std::expm1(-a * lr) / a;
        const double i1 = a == 1.0 ? lr : std::pow(d0, 1.0 - a) * std::expm1((1.0 - a) * lr) / (1.0 - a);
        w.lo[m] = c * (d1 * i0 - i1) / h;
        w.hi[m] = c * (i1 - d0 * i0) / h;
    }
    return w;
}

/// Coefficients of the local part of the operator.
struct LocalTerms {
    std::function<double(double)> drift;
    std::function<double(double)> half_sigma2;
    double nonlocal_scale = 1.0;
};

inline LinearSystem assemble(const LocalTerms& terms, const LevyMeasureSpec& spec, double a, double b,
                             std::size_t n, double left, double right, DriftStencil stencil) {
    if (n < 3) throw DomainError("grid needs n >= 3 interior nodes");
    LinearSystem sys;
    sys.layout.a = a;
    sys.layout.b = b;
    sys.layout.left_exterior = left;
    sys.layout.right_exterior = right;
    const double h = (b - a) / static_cast<double>(n + 1);
    if (spec.truncated() && !(h < spec.radius())) {
        throw DomainError("grid spacing must be below the truncation radius");
    }
    sys.matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    sys.rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));

    const double scale = terms.nonlocal_scale;
    KernelWeights kw;
    if (scale != 0.0) kw = kernel_weights(spec, h, n + 1);

    for (std::size_t i = 1; i <= n; ++i) {
        const auto row = static_cast<Eigen::Index>(i - 1);
        auto add = [&](std::size_t j, double coef) {
            if (j == 0) sys.rhs(row) -= coef * left;
            else if (j == n + 1) sys.rhs(row) -= coef * right;
            else sys.matrix(row, static_cast<Eigen::Index>(j - 1)) += coef;
        };
        const double x = a + static_cast<double>(i) * h;
        const double bx = terms.drift(x);
        const double d2 = terms.half_sigma2(x) / (h * h);
        if (!std::isfinite(bx) || !std::isfinite(d2)) {
            throw NumericalError("non-finite coefficient at x = " + std::to_string(x), bx);
        }

        if (stencil == DriftStencil::Central) {
            add(i + 1, 0.5 * bx / h);
            add(i - 1, -0.5 * bx / h);
        } else if (bx > 0.0) {
            add(i + 1, bx / h);
            add(i, -bx / h);
        } else {
            add(i, bx / h);
            add(i - 1, -bx / h);
        }
        add(i + 1, d2);
        add(i, -2.0 * d2);
        add(i - 1, d2);

        if (scale == 0.0) continue;
        add(i + 1, scale * kw.near);
        add(i, -2.0 * scale * kw.near - 2.0 * scale * kw.far_mass);
        add(i - 1, scale * kw.near);
        for (std::size_t m = 2; m <= n + 1 - i && m < kw.lo.size(); ++m) {
            if (kw.lo[m] == 0.0 && kw.hi[m] == 0.0) break;
            add(i + m - 1, scale * kw.lo[m]);
            add(i + m, scale * kw.hi[m]);
        }
        for (std::size_t m = 2; m <= i && m < kw.lo.size(); ++m) {
            if (kw.lo[m] == 0.0 && kw.hi[m] == 0.0) break;
            add(i - m + 1, scale * kw.lo[m]);
            add(i - m, scale * kw.hi[m]);
        }
        sys.rhs(row) -= scale * right * spec.tail_mass(static_cast<double>(n + 1 - i) * h);
        sys.rhs(row) -= scale * left * spec.tail_mass(static_cast<double>(i) * h);
    }
    return sys;
}

struct DenseSolution {
    Eigen::VectorXd values;
    double residual = 0.0;
    double condition = 0.0;
};

inline DenseSolution dense_solve(const LinearSystem& sys) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys.matrix);
    const double rcond = lu.rcond();
    DenseSolution out;
    out.condition = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    if (!(rcond > 1e3 * std::numeric_limits<double>::epsilon())) {
        throw NumericalError("system is singular or ill-conditioned; condition estimate " +
                                 std::to_string(out.condition),
                             out.condition);
    }
    out.values = lu.solve(sys.rhs);
    out.residual = (sys.matrix * out.values - sys.rhs).lpNorm<Eigen::Infinity>();
    return out;
}

inline bool monotone_between_exteriors(const GridFunction& g, double slack) {
    const double dir = g.right_exterior >= g.left_exterior ? 1.0 : -1.0;
    double prev = g.left_exterior;
    for (double v : g.values) {
        if (dir * (v - prev) < -slack) return false;
        prev = v;
    }
    return dir * (g.right_exterior - prev) >= -slack;
}

}  // namespace detail

inline void check_assembly_preconditions(const EscapeProblem& problem, std::size_t n, const QuadratureConfig& quad) {
    problem.validate();
    quad.validate();
    if (n < 3) throw DomainError("grid needs n >= 3 interior nodes");
    if (problem.pure_jump()) problem.alpha.require_above_one("pure-jump exterior problem");
}

inline LinearSystem assemble_system(const EscapeProblem& problem, std::size_t n, const QuadratureConfig& quad = {},
                                    DriftStencil stencil = DriftStencil::Central) {
    check_assembly_preconditions(problem, n, quad);
    detail::LocalTerms terms;
    terms.drift = [&](double x) { return problem.drift(x); };
    terms.half_sigma2 = [&](double x) {
        const double s = problem.diffusion(x);
        return 0.5 * s * s;
    };
    terms.nonlocal_scale = problem.epsilon > 0.0 ? std::pow(problem.epsilon, problem.alpha.value()) : 0.0;
    return detail::assemble(terms, problem.measure, problem.domain.a, problem.domain.b, n,
                            problem.left_exterior_value(), problem.right_exterior_value(), stencil);
}

inline std::pair<GridFunction, SolverReport> solve_escape_probability(const EscapeProblem& problem, std::size_t n = 401,
                                                                      const QuadratureConfig& quad = {}) {
    using clock = std::chrono::steady_clock;
    SolverReport report;
    auto t0 = clock::now();
    LinearSystem sys = assemble_system(problem, n, quad);
    auto t1 = clock::now();
    detail::DenseSolution sol = detail::dense_solve(sys);
    auto t2 = clock::now();

    GridFunction g = sys.layout;
    g.values.assign(sol.values.data(), sol.values.data() + sol.values.size());

    // Constant-sign drift without Brownian smoothing: the exact solution is
    // monotone, so a non-monotone answer signals central-difference wiggles.
    if (problem.pure_jump()) {
        const auto label = classify_case(problem);
        const bool one_way = label.kind == CaseLabel::Kind::PositiveDrift ||
                             label.kind == CaseLabel::Kind::NegativeDrift;
        if (one_way && !detail::monotone_between_exteriors(g, 1e-10)) {
            t1 = clock::now();
            sys = assemble_system(problem, n, quad, DriftStencil::Upwind);
            sol = detail::dense_solve(sys);
            t2 = clock::now();
            g.values.assign(sol.values.data(), sol.values.data() + sol.values.size());
            report.upwinded = true;
        }
    }
    report.assembly_time = t1 - t0;
    report.solve_time = t2 - t1;
    report.residual_inf_norm = sol.residual;
    report.condition_estimate = sol.condition;
    report.grid_h = g.h();
    return {std::move(g), report};
}

// ---------------------------------------------------------------------------
// Layer profiles

enum class LayerSide { Left, Right, Internal };

/// A solved boundary- or internal-layer profile in its stretched coordinate,
/// clamped to its far-field constants outside the computed span.
class LayerFunction {
public:
    LayerFunction(LayerSide side, std::vector<double> coords, std::vector<double> values)
        : side_(side),
          lo_(coords.front()),
          hi_(coords.back()),
          lower_value_(values.front()),
          upper_value_(values.back()),
          nodes_(coords),
          node_values_(values),
          interp_(std::make_shared<Pchip>(std::move(coords), std::move(values))) {}

    LayerSide side() const noexcept { return side_; }
    double lower_value() const noexcept { return lower_value_; }
    double upper_value() const noexcept { return upper_value_; }
    double span_lo() const noexcept { return lo_; }
    double span_hi() const noexcept { return hi_; }
    const std::vector<double>& nodes() const noexcept { return nodes_; }
    const std::vector<double>& node_values() const noexcept { return node_values_; }

    /// Stretched exponent of the layer coordinate: alpha/(alpha-1) at the
    /// boundaries, 1 for the internal layer.
    static double stretch_exponent(LayerSide side, StabilityIndex alpha) {
        const double a = alpha.value();
        return side == LayerSide::Internal ? 1.0 : a / (a - 1.0);
    }

    double operator()(double s) const {
        if (s <= lo_) return lower_value_;
        if (s >= hi_) return upper_value_;
        return (*interp_)(s);
    }

private:
    using Pchip = boost::math::interpolators::pchip<std::vector<double>>;
    LayerSide side_;
    double lo_;
    double hi_;
    double lower_value_;
    double upper_value_;
    std::vector<double> nodes_;
    std::vector<double> node_values_;
    std::shared_ptr<Pchip> interp_;
};

struct LayerOptions {
    double span = 50.0;
    std::size_t n = 2000;
    /// Largest allowed gap between the profile at 80% of the span and its
    /// far-field constant.
    double far_field_tolerance = 0.1;
};

/// Solves the constant-coefficient layer equation
///   Left:      b(A) F' + L F = 0,   F = 0 on xi <= 0,  F = 1 beyond span
///   Right:    -b(B) G' + L G = 0,   G = 1 on s <= 0,   G = 0 beyond span
///   Internal:  b'(x) eta H' + L H = 0, H = 0 below -span, H = 1 beyond span
/// with all jumps compensated. `coefficient` is b(A), b(B) or b'(x-bar).
inline LayerFunction solve_layer_problem(double coefficient, const LevyMeasureSpec& spec, LayerSide side,
                                         const LayerOptions& opts = {}, const QuadratureConfig& quad = {}) {
    spec.alpha().require_above_one("layer problem");
    quad.validate();
    if (!(opts.span > 0.0)) throw DomainError("layer span must be positive");
    detail::LocalTerms terms;
    terms.half_sigma2 = [](double) { return 0.0; };
    terms.nonlocal_scale = 1.0;
    double lo = 0.0;
    double left = 0.0;
    double right = 1.0;
    switch (side) {
        case LayerSide::Left:
            terms.drift = [coefficient](double) { return coefficient; };
            break;
        case LayerSide::Right:
            terms.drift = [coefficient](double) { return -coefficient; };
            left = 1.0;
            right = 0.0;
            break;
        case LayerSide::Internal:
            terms.drift = [coefficient](double eta) { return coefficient * eta; };
            lo = -opts.span;
            break;
    }
    const LinearSystem sys = detail::assemble(terms, spec, lo, opts.span, opts.n, left, right, DriftStencil::Central);
    const detail::DenseSolution sol = detail::dense_solve(sys);

    std::vector<double> coords(opts.n + 2), values(opts.n + 2);
    const double h = (opts.span - lo) / static_cast<double>(opts.n + 1);
    for (std::size_t j = 0; j < opts.n + 2; ++j) {
        coords[j] = lo + static_cast<double>(j) * h;
        values[j] = j == 0 ? left : (j == opts.n + 1 ? right : sol.values(static_cast<Eigen::Index>(j - 1)));
    }
    LayerFunction layer(side, std::move(coords), std::move(values));

    const double probe = lo + 0.8 * (opts.span - lo);
    const double mismatch = std::abs(layer(probe) - right);
    if (mismatch > opts.far_field_tolerance) {
        throw AccuracyError("layer span too small: profile at 80% of span is " + std::to_string(mismatch) +
                                " from its far-field value; increase the span",
                            mismatch);
    }
    return layer;
}

}  // namespace levyesc
