#pragma once

// Singular expansions for the pure-jump problem
//
//   b(x) p' + eps^alpha L p = 0,  1 < alpha < 2,
//
// built from boundary-layer profiles F (at A), G (at B) and the internal
// profile H at an equilibrium. The stretched coordinate is (x - A)/eps^beta
// with beta = alpha/(alpha-1) at the boundaries and (x - x_bar)/eps inside.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "levyesc/detail/pchip.hpp"
#include "levyesc/errors.hpp"
#include "levyesc/problem.hpp"
#include "levyesc/solver.hpp"
#include "levyesc/stable.hpp"

namespace levyesc {

// ---------------------------------------------------------------------------
// Exponential layers for the truncated measure

/// int_0^1 (cosh(g u) - 1) u^{-1-alpha} du, with the u^2 term integrated exactly.
inline double truncated_cosh_moment(double alpha, double g) {
    auto bracket = [g](double u) {
        const double y = g * u;
        if (std::abs(y) < 1.0) {
            const double y2 = y * y;
            double term = y2 * y2 / 24.0;
            double sum = term;
            for (int k = 3; k <= 12; ++k) {
                term *= y2 / ((2.0 * k - 1.0) * (2.0 * k));
                sum += term;
            }
            return sum;
        }
        return std::cosh(y) - 1.0 - 0.5 * y * y;
    };
    auto integrand = [&](double u) { return u > 0.0 ? bracket(u) * std::pow(u, -1.0 - alpha) : 0.0; };
    double err = 0.0;
    const double rest =
        boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, 1.0, 15, 1e-13, &err);
    return rest + 0.5 * g * g / (2.0 - alpha);
}

/// b_const * g - int_{-1}^{1} (e^{-g u} - 1 + g u) kappa |u|^{-1-alpha} du.
inline double gamma_residual(StabilityIndex alpha, double kappa, double b_const, double g) {
    return b_const * g - 2.0 * kappa * truncated_cosh_moment(alpha.value(), g);
}

/// Positive root of gamma_residual, by geometric bracketing and bisection.
inline double gamma_root(StabilityIndex alpha, double kappa, double b_const) {
    alpha.require_above_one("gamma_root");
    if (!(kappa > 0.0)) throw DomainError("gamma_root needs kappa > 0");
    if (!(b_const > 0.0)) throw DomainError("gamma_root needs a positive drift coefficient");
    auto r = [&](double g) { return gamma_residual(alpha, kappa, b_const, g); };
    double lo = 0.0;
    // Start below the small-gamma estimate b (2 - alpha) / kappa so r(hi) > 0 is rare.
    double hi = std::min(1.0, 0.5 * b_const * (2.0 - alpha.value()) / kappa);
    while (r(hi) > 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 700.0) throw NumericalError("gamma_root: no sign change below gamma = 700", r(lo));
    }
    for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (r(mid) > 0.0 ? lo : hi) = mid;
    }
    const double root = 0.5 * (lo + hi);
    const double res = r(root);
    if (!(std::abs(res) < 1e-10)) throw NumericalError("gamma_root: residual too large", res);
    return root;
}

inline double explicit_F(double xi, double gamma) {
    if (!(gamma > 0.0)) throw DomainError("explicit_F needs gamma > 0");
    return xi > 0.0 ? -std::expm1(-gamma * xi) : 0.0;
}

inline double explicit_G(double s, double gamma) {
    if (!(gamma > 0.0)) throw DomainError("explicit_G needs gamma > 0");
    return s > 0.0 ? std::exp(-gamma * s) : 1.0;
}

// ---------------------------------------------------------------------------
// Stationary density of dX = -X dt + eps dL^alpha

namespace detail {

/// Standard symmetric stable density (characteristic function exp(-|k|^alpha))
/// on u >= 0: a cubic B-spline table from the cosine transform up to `u_max`,
/// the convergent large-u series beyond.
class StableDensityTable {
public:
    explicit StableDensityTable(StabilityIndex alpha, double u_max = 30.0, double step = 0.005)
        : alpha_(alpha.value()), u_max_(u_max) {
        alpha.require_above_one("stable density table");
        const std::size_t n = static_cast<std::size_t>(std::ceil(u_max / step)) + 1;
        const double k_max = std::pow(40.0, 1.0 / alpha_);
        const std::size_t panels = static_cast<std::size_t>(std::ceil(k_max / std::min(0.05, 0.5 / u_max)));
        using G = boost::math::quadrature::gauss<double, 10>;
        std::vector<double> ks, ws;
        const double width = k_max / static_cast<double>(panels);
        for (std::size_t p = 0; p < panels; ++p) {
            const double mid = (static_cast<double>(p) + 0.5) * width;
            for (std::size_t i = 0; i < G::abscissa().size(); ++i) {
                const double off = 0.5 * width * G::abscissa()[i];
                const double w = 0.5 * width * G::weights()[i];
                for (double k : {mid - off, mid + off}) {
                    ks.push_back(k);
                    ws.push_back(w * std::exp(-std::pow(k, alpha_)));
                    if (off == 0.0) break;
                }
            }
        }
        std::vector<double> values(n);
        const double h = u_max / static_cast<double>(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            const double u = static_cast<double>(j) * h;
            double s = 0.0;
            for (std::size_t i = 0; i < ks.size(); ++i) s += ws[i] * std::cos(u * ks[i]);
            values[j] = s / std::numbers::pi;
        }
        spline_ = std::make_shared<Spline>(values.begin(), values.end(), 0.0, h);
        tail_mass_ = series_tail_mass(u_max_);
    }

    double operator()(double u) const {
        u = std::abs(u);
        return u <= u_max_ ? (*spline_)(u) : series(u);
    }

    double u_max() const noexcept { return u_max_; }

    /// int_{u_max}^inf g(u) du from the series.
    double tail_mass() const noexcept { return tail_mass_; }

    /// (1/pi) sum (-1)^{n+1} Gamma(n alpha + 1)/n! sin(n pi alpha/2) u^{-n alpha - 1}
    double series(double u) const {
        double sum = 0.0;
        for (int k = 1; k <= 40; ++k) {
            const double term = std::exp(std::lgamma(k * alpha_ + 1.0) - std::lgamma(k + 1.0) -
                                         (k * alpha_ + 1.0) * std::log(u)) *
                                std::sin(k * std::numbers::pi * alpha_ / 2.0);
            sum += (k % 2 == 1 ? term : -term);
            if (std::abs(term) < 1e-18 * std::abs(sum)) break;
        }
        return sum / std::numbers::pi;
    }

private:
    double series_tail_mass(double u) const {
        double sum = 0.0;
        for (int k = 1; k <= 40; ++k) {
            const double term = std::exp(std::lgamma(k * alpha_ + 1.0) - std::lgamma(k + 1.0) -
                                         k * alpha_ * std::log(u)) *
                                std::sin(k * std::numbers::pi * alpha_ / 2.0) / (k * alpha_);
            sum += (k % 2 == 1 ? term : -term);
            if (std::abs(term) < 1e-18 * std::abs(sum)) break;
        }
        return sum / std::numbers::pi;
    }

    using Spline = boost::math::interpolators::cardinal_cubic_b_spline<double>;
    double alpha_;
    double u_max_;
    std::shared_ptr<Spline> spline_;
    double tail_mass_ = 0.0;
};

inline std::shared_ptr<const StableDensityTable> stable_density_table(StabilityIndex alpha) {
    static std::mutex mutex;
    static std::map<double, std::shared_ptr<const StableDensityTable>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[alpha.value()];
    if (!slot) slot = std::make_shared<const StableDensityTable>(alpha);
    return slot;
}

}  // namespace detail

/// Scale of the stationary law: rho_hat(k) = exp(-(eps^alpha/alpha)|k|^alpha).
inline double stationary_scale(StabilityIndex alpha, double epsilon) {
    return std::pow(std::pow(epsilon, alpha.value()) / alpha.value(), 1.0 / alpha.value());
}

/// rho(x) = (1/pi) int_0^K cos(x k) rho_hat(k) dk, with the discarded tail
/// bounded by e^{-c K^alpha} / (pi c alpha K^{alpha-1}).
inline double stationary_density(StabilityIndex alpha, double epsilon, double x, double truncation_K,
                                 double tolerance = 1e-10) {
    alpha.require_above_one("stationary_density");
    if (!(epsilon > 0.0)) throw DomainError("stationary_density needs epsilon > 0");
    if (!(truncation_K > 0.0)) throw DomainError("stationary_density needs K > 0");
    const double a = alpha.value();
    const double c = std::pow(epsilon, a) / a;
    const double bound = std::exp(-c * std::pow(truncation_K, a)) /
                         (std::numbers::pi * c * a * std::pow(truncation_K, a - 1.0));
    if (bound > tolerance) {
        throw AccuracyError("stationary_density: discarded tail up to " + std::to_string(bound) +
                                "; increase K",
                            bound);
    }
    const double decay = std::pow(c, -1.0 / a);
    const double width = 0.25 * std::min(decay, std::abs(x) > 0.0 ? 1.0 / std::abs(x) : decay);
    const auto panels = static_cast<std::size_t>(std::ceil(truncation_K / width));
    const double w = truncation_K / static_cast<double>(panels);
    auto f = [&](double k) { return std::cos(x * k) * std::exp(-c * std::pow(k, a)); };
    // k^alpha is not smooth at 0, so the first panel gets a double-exponential rule.
    boost::math::quadrature::tanh_sinh<double> first;
    double sum = first.integrate(f, 0.0, w, 1e-14);
    for (std::size_t p = 1; p < panels; ++p) {
        sum += boost::math::quadrature::gauss<double, 10>::integrate(f, static_cast<double>(p) * w,
                                                                     static_cast<double>(p + 1) * w);
    }
    return sum / std::numbers::pi;
}

/// Stationary density backed by the cached standard table; fast enough for
/// use inside nested quadrature.
class StationaryDensity {
public:
    StationaryDensity(StabilityIndex alpha, double epsilon)
        : scale_(stationary_scale(alpha, epsilon)), table_(detail::stable_density_table(alpha)) {
        if (!(epsilon > 0.0)) throw DomainError("stationary density needs epsilon > 0");
    }
    double operator()(double x) const { return (*table_)(x / scale_) / scale_; }
    double scale() const noexcept { return scale_; }
    const detail::StableDensityTable& table() const noexcept { return *table_; }

private:
    double scale_;
    std::shared_ptr<const detail::StableDensityTable> table_;
};

// ---------------------------------------------------------------------------
// Case-4 constant

struct Case4Constant {
    double epsilon;           ///< evaluation point
    double c_eps;             ///< C at epsilon
    double c_half;            ///< C at epsilon / 2
    double c_extrapolated;    ///< limit estimate, error model C0 + a eps^alpha
    double gamma_left;
    double gamma_right;
};

namespace detail {

/// Solves the flux balance for C at one epsilon. p = f2 + C (f1 - f2) enters
/// linearly; the endpoint singularities (B - x)^{-alpha} of the two sides are
/// combined before integration, which leaves convergent integrands because
/// p(B) = 1.
inline double case4_constant_at(const EscapeProblem& problem, double eps, double gamma_left, double gamma_right) {
    const double a = problem.alpha.value();
    const double A = problem.domain.a;
    const double B = problem.domain.b;
    const double beta = a / (a - 1.0);
    const double stretch = std::pow(eps, beta);
    const StationaryDensity rho(problem.alpha, eps);
    const double rho_a = rho(A);
    const double rho_b = rho(B);

    auto f1 = [&](double x) { return explicit_F((x - A) / stretch, gamma_left); };
    auto f2 = [&](double x) { return explicit_G((B - x) / stretch, gamma_right); };

    // Regular parts of the exterior flux kernels at distance d from the edge,
    // int_0^inf (rho(edge +- s) - rho(edge)) (s + d)^{-1-alpha} ds. They grow
    // like d^{1-alpha}, so d^{alpha-1} times them is tabulated in log d.
    boost::math::quadrature::exp_sinh<double> half_line;
    auto regular_part = [&](double edge, double sign, double d) {
        auto g = [&](double s) {
            return std::isfinite(s) ? (rho(edge + sign * s) - rho(edge)) * std::pow(s + d, -1.0 - a) : 0.0;
        };
        return half_line.integrate(g, 1e-12);
    };
    constexpr int table_points = 241;
    const double log_lo = std::log(1e-14 * (B - A));
    const double log_hi = std::log(B - A);
    auto tabulate = [&](double edge, double sign) {
        std::vector<double> xs(table_points), ys(table_points);
        for (int i = 0; i < table_points; ++i) {
            xs[i] = log_lo + (log_hi - log_lo) * i / (table_points - 1);
            const double d = std::exp(xs[i]);
            ys[i] = regular_part(edge, sign, d) * std::pow(d, a - 1.0);
        }
        return boost::math::interpolators::pchip<std::vector<double>>(std::move(xs), std::move(ys));
    };
    const auto table_right = tabulate(B, 1.0);
    const auto table_left = tabulate(A, -1.0);
    auto lookup = [&](const auto& table, double d) {
        const double t = std::clamp(std::log(d), log_lo, log_hi);
        return table(t) * std::pow(d, 1.0 - a);
    };
    auto regular_right = [&](double d) { return lookup(table_right, d); };
    auto regular_left = [&](double d) { return lookup(table_left, d); };
    auto flux = [&](double db, double da) {
        return rho_b * std::pow(db, -a) / a + rho_a * std::pow(da, -a) / a + regular_right(db) + regular_left(da);
    };

    boost::math::quadrature::tanh_sinh<double> interval;
    // The two-argument form hands over the distance to the nearer endpoint
    // without cancellation.
    auto integrate = [&](auto&& g) {
        return interval.integrate(
            [&](double x, double xc) {
                // Floor keeps the endpoint powers finite; the integrands vanish there.
                const double da = std::max(xc < 0 ? -xc : x - A, 1e-100);
                const double db = std::max(xc > 0 ? xc : B - x, 1e-100);
                return g(x, db, da);
            },
            A, B, 1e-10);
    };

    const double c_alpha = stable_constant(problem.alpha);
    const double lhs_boundary = -B * std::pow(eps, -a) * rho_b / c_alpha;

    // Phi(f2): value of (lhs - rhs) for p = f2.
    const double phi_f2 = lhs_boundary + integrate([&](double x, double db, double da) {
                              const double p = f2(x);
                              return (rho(x) - p * rho_b) * std::pow(db, -a) / a -
                                     p * (rho_a * std::pow(da, -a) / a + regular_right(db) + regular_left(da));
                          });
    // Psi: coefficient of C.
    const double psi = -integrate([&](double x, double db, double da) {
        const double d = f1(x) - f2(x);
        return d == 0.0 ? 0.0 : d * flux(db, da);
    });
    if (!(std::abs(psi) > 1e-12 * std::max(1.0, std::abs(phi_f2)))) {
        throw NumericalError("case4_constant: the two layer contributions coincide; C cannot be determined", psi);
    }
    return -phi_f2 / psi;
}

}  // namespace detail

/// Constant C of the composition C F + (1 - C) G for escape to the right, from the stationary flux
/// balance of dX = -X dt + eps dL^alpha, evaluated at epsilon_eval and
/// epsilon_eval/2 and extrapolated.
inline Case4Constant case4_constant(const EscapeProblem& problem, double epsilon_eval) {
    problem.validate();
    problem.alpha.require_above_one("case4_constant");
    if (!std::holds_alternative<DriftSpec::LinearOU>(problem.drift.kind())) {
        throw DomainError("case4_constant needs the linear drift b(x) = -x (its stationary law is known)");
    }
    if (!problem.measure.truncated()) {
        throw DomainError("case4_constant needs the truncated measure (explicit layers)");
    }
    if (!problem.pure_jump()) throw DomainError("case4_constant needs zero diffusion");
    if (!(problem.domain.a < 0.0 && problem.domain.b > 0.0)) {
        throw DomainError("case4_constant needs the equilibrium 0 inside the domain");
    }
    if (!(epsilon_eval > 0.0)) throw DomainError("case4_constant needs epsilon_eval > 0");
    const double kappa = problem.measure.coefficient();
    Case4Constant out{};
    out.epsilon = epsilon_eval;
    out.gamma_left = gamma_root(problem.alpha, kappa, problem.drift(problem.domain.a));
    out.gamma_right = gamma_root(problem.alpha, kappa, -problem.drift(problem.domain.b));
    out.c_eps = detail::case4_constant_at(problem, epsilon_eval, out.gamma_left, out.gamma_right);
    out.c_half = detail::case4_constant_at(problem, 0.5 * epsilon_eval, out.gamma_left, out.gamma_right);
    const double r = std::pow(2.0, problem.alpha.value());
    out.c_extrapolated = (r * out.c_half - out.c_eps) / (r - 1.0);
    return out;
}

// ---------------------------------------------------------------------------
// Composition

struct SingularOptions {
    LayerOptions layer{};
    QuadratureConfig quad{};
    double case4_epsilon = 0.05;  ///< evaluation point for the Case-4 constant
};

/// Leading-order singular expansion: one layer (Cases 1-3) or the Case-4
/// composition C F + (1 - C) G. Evaluates escape to the right and
/// complements for a left target.
class SingularExpansion {
public:
    SingularExpansion(const EscapeProblem& problem, CaseLabel label, SingularOptions opts = {})
        : problem_(problem), label_(std::move(label)) {
        problem.validate();
        if (!problem.pure_jump()) throw DomainError("singular expansion needs zero diffusion");
        problem.alpha.require_above_one("singular expansion");
        if (!(problem.epsilon > 0.0)) throw DomainError("singular expansion needs epsilon > 0");
        const double a = problem.alpha.value();
        const double A = problem.domain.a;
        const double B = problem.domain.b;
        const auto& spec = problem.measure;
        auto left_layer = [&]() -> std::function<double(double)> {
            const double bA = problem.drift(A);
            if (spec.truncated()) {
                const double g = gamma_root(problem.alpha, spec.coefficient(), bA);
                gamma_left_ = g;
                return [g](double xi) { return explicit_F(xi, g); };
            }
            auto f = std::make_shared<LayerFunction>(solve_layer_problem(bA, spec, LayerSide::Left, opts.layer, opts.quad));
            return [f](double xi) { return (*f)(xi); };
        };
        auto right_layer = [&]() -> std::function<double(double)> {
            const double bB = problem.drift(B);
            if (spec.truncated()) {
                const double g = gamma_root(problem.alpha, spec.coefficient(), -bB);
                gamma_right_ = g;
                return [g](double s) { return explicit_G(s, g); };
            }
            auto f = std::make_shared<LayerFunction>(solve_layer_problem(bB, spec, LayerSide::Right, opts.layer, opts.quad));
            return [f](double s) { return (*f)(s); };
        };

        switch (label_.kind) {
            case CaseLabel::Kind::PositiveDrift:
                beta_ = a / (a - 1.0);
                first_ = left_layer();
                break;
            case CaseLabel::Kind::NegativeDrift:
                beta_ = a / (a - 1.0);
                second_ = right_layer();
                break;
            case CaseLabel::Kind::UnstableEquilibrium: {
                beta_ = 1.0;
                auto f = std::make_shared<LayerFunction>(
                    solve_layer_problem(label_.slope, spec, LayerSide::Internal, opts.layer, opts.quad));
                first_ = [f](double eta) { return (*f)(eta); };
                break;
            }
            case CaseLabel::Kind::StableEquilibrium: {
                beta_ = a / (a - 1.0);
                first_ = left_layer();
                second_ = right_layer();
                EscapeProblem right = problem;
                right.target = Target::RightExterior;
                case4_ = case4_constant(right, opts.case4_epsilon);
                break;
            }
            case CaseLabel::Kind::Unsupported:
                throw DomainError("no singular expansion for this drift (several equilibria or a "
                                  "degenerate one are outside the supported cases): " + label_.reason);
        }
        stretch_ = std::pow(problem.epsilon, beta_);
    }

    const CaseLabel& label() const noexcept { return label_; }
    double beta() const noexcept { return beta_; }
    std::optional<double> gamma_left() const noexcept { return gamma_left_; }
    std::optional<double> gamma_right() const noexcept { return gamma_right_; }
    const std::optional<Case4Constant>& case4() const noexcept { return case4_; }
    std::optional<double> constant() const {
        return case4_ ? std::optional<double>(case4_->c_extrapolated) : std::nullopt;
    }

    double evaluate(double x) const {
        const double A = problem_.domain.a;
        const double B = problem_.domain.b;
        double q = 0.0;
        if (x <= A) {
            q = 0.0;
        } else if (x >= B) {
            q = 1.0;
        } else {
            switch (label_.kind) {
                case CaseLabel::Kind::PositiveDrift: q = first_((x - A) / stretch_); break;
                case CaseLabel::Kind::NegativeDrift: q = second_((B - x) / stretch_); break;
                case CaseLabel::Kind::UnstableEquilibrium: q = first_((x - label_.equilibrium) / stretch_); break;
                case CaseLabel::Kind::StableEquilibrium: {
                    const double c = case4_->c_extrapolated;
                    q = c * first_((x - A) / stretch_) + (1.0 - c) * second_((B - x) / stretch_);
                    break;
                }
                case CaseLabel::Kind::Unsupported: break;
            }
        }
        return problem_.target == Target::RightExterior ? q : 1.0 - q;
    }
    double operator()(double x) const { return evaluate(x); }

private:
    EscapeProblem problem_;
    CaseLabel label_;
    double beta_ = 1.0;
    double stretch_ = 1.0;
    std::function<double(double)> first_;
    std::function<double(double)> second_;
    std::optional<double> gamma_left_;
    std::optional<double> gamma_right_;
    std::optional<Case4Constant> case4_;
};

inline SingularExpansion singular_expansion(const EscapeProblem& problem, const CaseLabel& label,
                                            SingularOptions opts = {}) {
    return SingularExpansion(problem, label, opts);
}

}  // namespace levyesc
