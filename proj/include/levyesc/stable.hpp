#pragma once

// Symmetric alpha-stable building blocks: the Levy measure (full or truncated
// power law), its normalizing constant, quadrature of the nonlocal generator,
// and sampling of stable increments.

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <concepts>
#include <limits>
#include <numbers>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "levyesc/errors.hpp"

namespace levyesc {

class StabilityIndex {
public:
    explicit StabilityIndex(double alpha) : alpha_(alpha) {
        if (!(alpha > 0.0 && alpha < 2.0)) {
            throw DomainError("stability index must lie in (0, 2), got " + std::to_string(alpha));
        }
    }

    double value() const noexcept { return alpha_; }

    /// Throws unless 1 < alpha < 2 (pure-jump singular-perturbation regime).
    void require_above_one(const std::string& op) const {
        if (!(alpha_ > 1.0)) {
            throw DomainError(op + " requires 1 < alpha < 2, got alpha = " + std::to_string(alpha_));
        }
    }

    friend bool operator==(StabilityIndex, StabilityIndex) = default;

private:
    double alpha_;
};

enum class MeasureKind { FullPowerLaw, TruncatedPowerLaw };

/// How the first-order term f'(x) u is compensated inside the generator.
enum class Compensation { SmallJumpsOnly, AllJumps };

/// C_{1,alpha} = alpha Gamma((1+alpha)/2) / (2^{1-alpha} sqrt(pi) Gamma(1-alpha/2)).
inline double stable_constant(StabilityIndex alpha) {
    const double a = alpha.value();
    return a * std::tgamma(0.5 * (1.0 + a)) /
           (std::pow(2.0, 1.0 - a) * std::sqrt(std::numbers::pi) * std::tgamma(1.0 - 0.5 * a));
}

inline double characteristic_exponent(StabilityIndex alpha, double z) {
    return -std::pow(std::abs(z), alpha.value());
}

/// Symmetric power-law Levy measure c / |u|^{1+alpha}, optionally restricted to |u| <= 1.
class LevyMeasureSpec {
public:
    static LevyMeasureSpec full_power_law(StabilityIndex alpha) {
        return LevyMeasureSpec(MeasureKind::FullPowerLaw, alpha, stable_constant(alpha));
    }

    static LevyMeasureSpec truncated_power_law(StabilityIndex alpha, double kappa) {
        if (!(kappa > 0.0) || !std::isfinite(kappa)) {
            throw DomainError("truncated measure needs kappa > 0");
        }
        return LevyMeasureSpec(MeasureKind::TruncatedPowerLaw, alpha, kappa);
    }

    MeasureKind kind() const noexcept { return kind_; }
    StabilityIndex alpha() const noexcept { return alpha_; }
    bool truncated() const noexcept { return kind_ == MeasureKind::TruncatedPowerLaw; }

    /// Density prefactor: C_{1,alpha} for the full law, kappa for the truncated one.
    double coefficient() const noexcept { return coeff_; }

    /// Largest jump size carried by the measure.
    double radius() const noexcept {
        return truncated() ? 1.0 : std::numeric_limits<double>::infinity();
    }

    double density(double u) const {
        if (u == 0.0) throw DomainError("Levy measure has no atom at 0");
        const double r = std::abs(u);
        if (r > radius()) return 0.0;
        return coeff_ * std::pow(r, -1.0 - alpha_.value());
    }

    /// One-sided mass of (r, radius].
    double tail_mass(double r) const {
        const double a = alpha_.value();
        if (r >= radius()) return 0.0;
        const double inner = std::pow(r, -a);
        const double outer = truncated() ? 1.0 : 0.0;
        return coeff_ * (inner - outer) / a;
    }

    /// One-sided second moment: integral of u^2 over (0, r].
    double second_moment(double r) const {
        const double a = alpha_.value();
        const double top = std::min(r, radius());
        return coeff_ * std::pow(top, 2.0 - a) / (2.0 - a);
    }

    friend bool operator==(const LevyMeasureSpec&, const LevyMeasureSpec&) = default;

private:
    LevyMeasureSpec(MeasureKind kind, StabilityIndex alpha, double coeff)
        : kind_(kind), alpha_(alpha), coeff_(coeff) {}

    MeasureKind kind_;
    StabilityIndex alpha_;
    double coeff_;
};

inline double levy_density(const LevyMeasureSpec& spec, double u) { return spec.density(u); }

struct QuadratureConfig {
    /// Radius below which the second-difference Taylor form is used. Rounding in
    /// the three-point f'' grows like delta^-alpha, truncation like delta^(4-alpha).
    double inner_cutoff = 1e-3;
    double outer_cutoff = 20.0;  ///< tail radius for the full power law
    int nodes_per_decade = 32;
    double tolerance = 1e-8;

    void validate() const {
        if (!(inner_cutoff > 0.0 && inner_cutoff < 1.0 && outer_cutoff >= 1.0)) {
            throw DomainError("quadrature cutoffs must satisfy 0 < inner < 1 <= outer");
        }
        if (nodes_per_decade < 8) throw DomainError("nodes_per_decade must be >= 8");
        if (!(tolerance > 0.0)) throw DomainError("quadrature tolerance must be positive");
    }
};

/// Where a function is known to be constant: f = left_value for x <= left_edge
/// and f = right_value for x >= right_edge.
struct Exterior {
    double left_edge;
    double right_edge;
    double left_value;
    double right_value;
};

namespace detail {

inline std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

/// Globally adaptive Gauss-Kronrod over a log-spaced partition of [lo, hi]
/// with extra breakpoints: the piece with the largest error estimate is
/// bisected until the summed estimate drops below max(tolerance, roundoff,
/// tolerance * L1). The integrand is supplied in the original variable u.
template <class G>
double integrate_log_panels(G&& g, double lo, double hi, std::vector<double> breaks,
                            const QuadratureConfig& quad, double& err_out, double roundoff = 0.0) {
    err_out = 0.0;
    if (!(hi > lo)) return 0.0;
    const double decades = std::log10(hi / lo);
    const int per_decade = std::max(1, static_cast<int>(std::ceil(quad.nodes_per_decade / 15.0)));
    const int panels = std::max(1, static_cast<int>(std::ceil(decades * per_decade)));
    const double ratio = std::pow(hi / lo, 1.0 / panels);
    breaks.reserve(breaks.size() + panels + 1);
    double u = lo;
    for (int k = 0; k <= panels; ++k, u *= ratio) breaks.push_back(k == panels ? hi : u);
    breaks.push_back(lo);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    // u = e^s, du = u ds
    auto in_log = [&](double s) {
        const double uu = std::exp(s);
        return g(uu) * uu;
    };
    struct Piece {
        double s0, s1, value, err, l1;
        bool operator<(const Piece& o) const { return err < o.err; }
    };
    auto eval = [&](double s0, double s1) {
        Piece p{s0, s1, 0.0, 0.0, 0.0};
        p.value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(in_log, s0, s1, 0, 0.0, &p.err,
                                                                                &p.l1);
        // Boost reports the single-rule error in [-1, 1] units.
        p.err *= 0.5 * (s1 - s0);
        return p;
    };
    std::priority_queue<Piece> heap;
    double total = 0.0, err = 0.0, l1 = 0.0;
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
        const double s0 = std::log(breaks[k]);
        const double s1 = std::log(breaks[k + 1]);
        if (!(s1 > s0) || breaks[k] < lo || breaks[k + 1] > hi) continue;
        const Piece p = eval(s0, s1);
        total += p.value;
        err += p.err;
        l1 += p.l1;
        heap.push(p);
    }
    const double floor = std::max(quad.tolerance, roundoff);
    constexpr int max_splits = 4000;
    int splits = 0;
    while (!heap.empty() && err > std::max(floor, quad.tolerance * l1) && splits < max_splits) {
        const Piece worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.s0 + worst.s1);
        if (!(mid > worst.s0 && mid < worst.s1)) break;
        const Piece a = eval(worst.s0, mid);
        const Piece b = eval(mid, worst.s1);
        total += a.value + b.value - worst.value;
        err += a.err + b.err - worst.err;
        l1 += a.l1 + b.l1 - worst.l1;
        heap.push(a);
        heap.push(b);
        ++splits;
    }
    // Re-sum to shed the drift of the running updates.
    total = err = l1 = 0.0;
    for (; !heap.empty(); heap.pop()) {
        total += heap.top().value;
        err += heap.top().err;
        l1 += heap.top().l1;
    }
    err_out = err;
    if (err > std::max(floor, quad.tolerance * l1)) {
        throw NumericalError("generator quadrature did not converge; achieved error " + sci(err), err);
    }
    return total;
}

}  // namespace detail

/// Nonlocal generator (L f)(x) = int (f(x+u) - f(x) - f'(x) u 1_{|u|<=1}) nu(du).
///
/// For the symmetric kernels handled here the compensator integrates to zero
/// on any symmetric range, so both compensation choices reduce to the second
/// difference f(x+u) + f(x-u) - 2 f(x) over u > 0. They differ only in their
/// domain of validity: compensating all jumps needs a finite first moment of
/// large jumps, i.e. alpha > 1.
///
/// Below `inner_cutoff` the second difference is replaced by f''(x) u^2 with a
/// three-point estimate of f''. When `ext` is supplied and the measure has an
/// infinite tail, the part beyond the outer radius is added analytically using
/// the exterior constants; without `ext` the tail beyond `outer_cutoff` is
/// dropped. `kinks` lists points where f is not smooth, which become
/// quadrature breakpoints.
template <class F>
    requires std::invocable<F&, double>
double apply_generator(F&& f, double x, const LevyMeasureSpec& spec, Compensation comp,
                       const QuadratureConfig& quad, std::optional<Exterior> ext = std::nullopt,
                       std::span<const double> kinks = {}) {
    quad.validate();
    if (comp == Compensation::AllJumps && !(spec.alpha().value() > 1.0)) {
        throw DomainError("all-jump compensation requires alpha > 1");
    }
    const double fx = f(x);
    // The Taylor form needs f smooth on (x - delta, x + delta).
    double delta = quad.inner_cutoff;
    auto shrink_to = [&](double k) {
        const double d = std::abs(x - k);
        if (d > 0.0 && d < 2.0 * delta) delta = 0.5 * d;
    };
    for (double k : kinks) shrink_to(k);
    if (ext) {
        shrink_to(ext->left_edge);
        shrink_to(ext->right_edge);
    }
    const double second_derivative = (f(x + delta) + f(x - delta) - 2.0 * fx) / (delta * delta);
    const double near = second_derivative * spec.second_moment(delta);

    double reach = spec.truncated() ? spec.radius() : quad.outer_cutoff;
    if (ext && !spec.truncated()) {
        reach = std::max({reach, ext->right_edge - x, x - ext->left_edge});
    }

    std::vector<double> breaks;
    auto add_break = [&](double k) {
        const double d = std::abs(x - k);
        if (d > delta && d < reach) breaks.push_back(d);
    };
    for (double k : kinks) add_break(k);
    if (ext) {
        add_break(ext->left_edge);
        add_break(ext->right_edge);
    }

    auto integrand = [&](double u) { return (f(x + u) + f(x - u) - 2.0 * fx) * spec.density(u); };
    // Cancellation in the second difference limits what is attainable when delta is tiny.
    double scale = std::abs(fx);
    if (ext) scale = std::max({scale, std::abs(ext->left_value), std::abs(ext->right_value)});
    const double roundoff = 64.0 * std::numeric_limits<double>::epsilon() * scale * spec.tail_mass(delta);
    double err = 0.0;
    double far = 0.0;
    try {
        far = detail::integrate_log_panels(integrand, delta, reach, std::move(breaks), quad, err, roundoff);
    } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " at x = " + std::to_string(x) + " (roundoff floor " +
                                 detail::sci(roundoff) + ")",
                             e.residual());
    }

    if (ext && !spec.truncated()) {
        far += (ext->left_value + ext->right_value - 2.0 * fx) * spec.tail_mass(reach);
    }
    return near + far;
}

/// One draw of L^alpha_dt, i.e. dt^{1/alpha} times a standard symmetric stable
/// variate with characteristic function exp(-|z|^alpha), via the
/// Chambers-Mallows-Stuck transform.
template <class URBG>
double sample_stable_increment(StabilityIndex alpha, double dt, URBG& rng) {
    if (!(dt > 0.0)) throw DomainError("time step must be positive");
    const double a = alpha.value();
    std::uniform_real_distribution<double> angle(-0.5 * std::numbers::pi, 0.5 * std::numbers::pi);
    const double v = angle(rng);
    if (a == 1.0) return dt * std::tan(v);
    std::exponential_distribution<double> expo(1.0);
    const double w = expo(rng);
    const double s = std::sin(a * v) / std::pow(std::cos(v), 1.0 / a) *
                     std::pow(std::cos(v - a * v) / w, (1.0 - a) / a);
    return std::pow(dt, 1.0 / a) * s;
}

}  // namespace levyesc
