#pragma once

// Regular expansion p = p0 + eps^alpha p1 for problems with a nondegenerate
// Brownian part:
//
//   b p0' + 1/2 sigma^2 p0'' = 0,           p0(A) = 0, p0(B) = 1,
//   b p1' + 1/2 sigma^2 p1'' = -g(x),       g = L p0 (p0 extended by 0 and 1).
//
// With phi = 2b/sigma^2, W(x) = int_A^x e^{-Phi}, Phi(x) = int_A^x phi:
//
//   p0 = W / W(B)
//   p1 = J - p0 J(B) + p0,   J(x) = int_A^x e^{-Phi(s)} int_A^s (-2g/sigma^2) e^{Phi} du ds.
//
// The trailing +p0 gives p1(B) = 1; `corrected_p1_boundary` drops it.
// For a left target the roles of the exterior values swap and the same
// formulas run with boundary data (1, 0).

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "levyesc/errors.hpp"
#include "levyesc/problem.hpp"
#include "levyesc/stable.hpp"

namespace levyesc {

struct RegularOptions {
    std::size_t panels = 600;
    QuadratureConfig quad{};
    bool corrected_p1_boundary = false;
};

namespace detail {

using Gauss7 = boost::math::quadrature::gauss<double, 7>;

/// Cubic Hermite interpolation on [x0, x1].
inline double hermite(double x, double x0, double x1, double f0, double f1, double d0, double d1) {
    const double h = x1 - x0;
    const double t = (x - x0) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * f0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * f1 +
           (t3 - t2) * h * d1;
}

/// Leading-order profile W(x)/W(B) tabulated on a grid clustered at the
/// endpoints (x = A + (B-A)(1 - cos t)/2), Hermite-interpolated between nodes.
class LeadingOrder {
public:
    LeadingOrder(const EscapeProblem& problem, std::size_t panels)
        : a_(problem.domain.a), b_(problem.domain.b), left_(problem.left_exterior_value()),
          right_(problem.right_exterior_value()) {
        if (panels < 8) throw DomainError("regular expansion needs at least 8 panels");
        auto phi = [&problem](double x) {
            const double s = problem.diffusion(x);
            if (!(s != 0.0) || !std::isfinite(s)) {
                throw DomainError("regular expansion needs sigma != 0 on [A, B]; sigma(" + std::to_string(x) +
                                  ") = " + std::to_string(s));
            }
            return 2.0 * problem.drift(x) / (s * s);
        };
        nodes_.resize(panels + 1);
        for (std::size_t k = 0; k <= panels; ++k) {
            nodes_[k] = map(std::numbers::pi * static_cast<double>(k) / static_cast<double>(panels));
        }
        nodes_.front() = a_;
        nodes_.back() = b_;
        phi_.resize(panels + 1);
        big_phi_.assign(panels + 1, 0.0);
        for (std::size_t k = 0; k <= panels; ++k) phi_[k] = phi(nodes_[k]);
        for (std::size_t k = 0; k < panels; ++k) {
            big_phi_[k + 1] = big_phi_[k] + Gauss7::integrate(phi, nodes_[k], nodes_[k + 1]);
        }
        // Weight e^{-Phi} is Hermite data for W; Phi itself is Hermite in its own derivative phi.
        auto weight = [&](double x) { return std::exp(-phi_at(x)); };
        w_.assign(panels + 1, 0.0);
        big_w_.assign(panels + 1, 0.0);
        for (std::size_t k = 0; k <= panels; ++k) w_[k] = std::exp(-big_phi_[k]);
        for (std::size_t k = 0; k < panels; ++k) {
            big_w_[k + 1] = big_w_[k] + Gauss7::integrate(weight, nodes_[k], nodes_[k + 1]);
        }
        if (!(big_w_.back() > 0.0) || !std::isfinite(big_w_.back())) {
            throw NumericalError("leading-order normalization W(B) is not finite", big_w_.back());
        }
    }

    double a() const noexcept { return a_; }
    double b() const noexcept { return b_; }

    /// x = A + (B-A)(1 - cos t)/2 for t in [0, pi].
    double map(double t) const { return a_ + 0.5 * (b_ - a_) * (1.0 - std::cos(t)); }
    double map_prime(double t) const { return 0.5 * (b_ - a_) * std::sin(t); }
    double inverse_map(double x) const {
        const double c = std::clamp(1.0 - 2.0 * (x - a_) / (b_ - a_), -1.0, 1.0);
        return std::acos(c);
    }
    std::size_t panels() const noexcept { return nodes_.size() - 1; }
    double panel_t(std::size_t k) const {
        return std::numbers::pi * static_cast<double>(k) / static_cast<double>(panels());
    }

    double phi_at(double x) const {
        const std::size_t k = locate(x);
        return hermite(x, nodes_[k], nodes_[k + 1], big_phi_[k], big_phi_[k + 1], phi_[k], phi_[k + 1]);
    }
    double w_at(double x) const { return big_w_.back() == 0.0 ? 0.0 : cumulative(x); }
    double total() const noexcept { return big_w_.back(); }

    /// Fraction W(x)/W(B) in [0, 1] for x in [A, B].
    double fraction(double x) const {
        if (x <= a_) return 0.0;
        if (x >= b_) return 1.0;
        return cumulative(x) / big_w_.back();
    }

    /// p0 extended by the exterior values.
    double operator()(double x) const {
        if (x <= a_) return left_;
        if (x >= b_) return right_;
        return left_ + (right_ - left_) * fraction(x);
    }

    double left_value() const noexcept { return left_; }
    double right_value() const noexcept { return right_; }

private:
    std::size_t locate(double x) const {
        const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
        const auto k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - nodes_.begin() - 1));
        return std::min(k, nodes_.size() - 2);
    }
    double cumulative(double x) const {
        const std::size_t k = locate(x);
        return hermite(x, nodes_[k], nodes_[k + 1], big_w_[k], big_w_[k + 1], w_[k], w_[k + 1]);
    }

    double a_, b_, left_, right_;
    std::vector<double> nodes_;
    std::vector<double> phi_, big_phi_;
    std::vector<double> w_, big_w_;
};

}  // namespace detail

/// Leading-order term as a callable x -> p0(x), constant outside [A, B].
inline std::function<double(double)> regular_p0(const EscapeProblem& problem, std::size_t panels = 600) {
    problem.validate();
    auto lo = std::make_shared<const detail::LeadingOrder>(problem, panels);
    return [lo](double x) { return (*lo)(x); };
}

/// g(x) = (L p0)(x) with p0 extended by its exterior constants.
template <class P0>
double regular_g(P0&& p0, double x, const LevyMeasureSpec& spec, const QuadratureConfig& quad,
                 const Exterior& ext) {
    if (!(x > ext.left_edge && x < ext.right_edge)) throw DomainError("regular_g needs x inside (A, B)");
    const double kinks[] = {ext.left_edge, ext.right_edge};
    return apply_generator(p0, x, spec, Compensation::SmallJumpsOnly, quad, ext, kinks);
}

/// p0 + eps^alpha p1 with all integrals precomputed on a cached grid.
class RegularExpansion {
public:
    explicit RegularExpansion(const EscapeProblem& problem, RegularOptions opts = {})
        : problem_(problem), opts_(opts), lead_(std::make_shared<const detail::LeadingOrder>(problem, opts.panels)) {
        problem.validate();
        opts.quad.validate();
        const auto& lo = *lead_;
        const std::size_t m = lo.panels();
        inner_.assign(m + 1, 0.0);
        weighted_.assign(m + 1, 0.0);
        for (std::size_t k = 0; k < m; ++k) {
            const auto [di, dk] = panel_integrals(lo.panel_t(k), lo.panel_t(k + 1));
            inner_[k + 1] = inner_[k] + di;
            weighted_[k + 1] = weighted_[k] + dk;
        }
        j_total_ = lo.total() * inner_.back() - weighted_.back();
    }

    const EscapeProblem& problem() const noexcept { return problem_; }
    double epsilon() const noexcept { return problem_.epsilon; }
    StabilityIndex alpha() const noexcept { return problem_.alpha; }

    double p0(double x) const { return (*lead_)(x); }

    double g(double x) const {
        return regular_g([this](double y) { return (*lead_)(y); }, x, problem_.measure, opts_.quad,
                         problem_.exterior());
    }

    double p1(double x) const {
        const auto& lo = *lead_;
        const double bc_l = opts_.corrected_p1_boundary ? 0.0 : lo.left_value();
        const double bc_r = opts_.corrected_p1_boundary ? 0.0 : lo.right_value();
        if (x <= lo.a()) return bc_l;
        if (x >= lo.b()) return bc_r;
        const double t = lo.inverse_map(x);
        const auto k = std::min(static_cast<std::size_t>(t / std::numbers::pi * static_cast<double>(lo.panels())),
                                lo.panels() - 1);
        const auto [di, dk] = panel_integrals(lo.panel_t(k), t);
        const double inner = inner_[k] + di;
        const double weighted = weighted_[k] + dk;
        // J(x) = W(x) I(x) - int_A^x h W, by exchanging the order of integration.
        const double j = lo.w_at(x) * inner - weighted;
        const double q = lo.fraction(x);
        return j - q * j_total_ + bc_l + (bc_r - bc_l) * q;
    }

    double evaluate(double x) const {
        const double e = problem_.epsilon;
        if (e == 0.0) return p0(x);
        return p0(x) + std::pow(e, problem_.alpha.value()) * p1(x);
    }
    double operator()(double x) const { return evaluate(x); }

private:
    /// Integrals of h = -2 g e^{Phi} / sigma^2 and of h W between two mapped
    /// parameters. The cosine map tames the (B-x)^{1-alpha} endpoint behavior of g.
    std::pair<double, double> panel_integrals(double t0, double t1) const {
        if (!(t1 > t0)) return {0.0, 0.0};
        const auto& lo = *lead_;
        const auto& abs = detail::Gauss7::abscissa();
        const auto& wts = detail::Gauss7::weights();
        const double mid = 0.5 * (t0 + t1);
        const double half = 0.5 * (t1 - t0);
        double si = 0.0;
        double sk = 0.0;
        auto add = [&](double t, double w) {
            const double x = lo.map(t);
            const double jac = lo.map_prime(t);
            if (!(x > lo.a() && x < lo.b()) || jac == 0.0) return;
            const double s = problem_.diffusion(x);
            const double h = -2.0 * g(x) / (s * s) * std::exp(lo.phi_at(x));
            si += w * h * jac;
            sk += w * h * lo.w_at(x) * jac;
        };
        for (std::size_t i = 0; i < abs.size(); ++i) {
            if (abs[i] == 0.0) {
                add(mid, wts[i]);
            } else {
                add(mid + half * abs[i], wts[i]);
                add(mid - half * abs[i], wts[i]);
            }
        }
        return {si * half, sk * half};
    }

    EscapeProblem problem_;
    RegularOptions opts_;
    std::shared_ptr<const detail::LeadingOrder> lead_;
    std::vector<double> inner_;
    std::vector<double> weighted_;
    double j_total_ = 0.0;
};

inline RegularExpansion regular_expansion(const EscapeProblem& problem, RegularOptions opts = {}) {
    return RegularExpansion(problem, opts);
}

/// Closed-form p1 for zero drift, sigma = 1 on (-1, 1) with the full measure,
/// transcribed term by term from its published display.
inline double example51_p1_oracle(double x, StabilityIndex alpha) {
    const double a = alpha.value();
    if (a == 1.0) throw DomainError("closed-form p1 is singular at alpha = 1");
    if (!(x >= -1.0 && x <= 1.0)) throw DomainError("closed-form p1 needs -1 <= x <= 1");
    const double c = stable_constant(alpha);
    const double lead = c / ((-a) * (1.0 - a) * (2.0 - a) * (3.0 - a));
    const double bracket = std::pow(1.0 - x, 3.0 - a) - std::pow(2.0, 3.0 - a) +
                           (3.0 - a) * std::pow(2.0, 2.0 - a) * (x + 1.0) - std::pow(1.0 + x, 3.0 - a);
    const double half = (x + 1.0) / 2.0;
    return lead * bracket - half * c / ((-a) * (2.0 - a) * (3.0 - a)) * std::pow(2.0, 3.0 - a) + half;
}

}  // namespace levyesc
