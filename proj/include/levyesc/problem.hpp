#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "levyesc/detail/pchip.hpp"

#include "levyesc/errors.hpp"
#include "levyesc/stable.hpp"

namespace levyesc {

/// Monotone cubic (PCHIP) table, defined only on its own grid.
class TabulatedFunction {
public:
    TabulatedFunction(std::vector<double> grid, std::vector<double> values)
        : grid_(grid), values_(values), lo_(0.0), hi_(0.0), interp_(make(std::move(grid), std::move(values), lo_, hi_)) {}

    double operator()(double x) const {
        check(x);
        return interp_(x);
    }
    double prime(double x) const {
        check(x);
        return interp_.prime(x);
    }
    double lo() const noexcept { return lo_; }
    double hi() const noexcept { return hi_; }
    const std::vector<double>& grid() const noexcept { return grid_; }
    const std::vector<double>& values() const noexcept { return values_; }

private:
    using Pchip = boost::math::interpolators::pchip<std::vector<double>>;

    static Pchip make(std::vector<double> grid, std::vector<double> values, double& lo, double& hi) {
        if (grid.size() != values.size() || grid.size() < 4) {
            throw ConfigError("tabulated function needs >= 4 (x, value) pairs");
        }
        if (!std::is_sorted(grid.begin(), grid.end()) ||
            std::adjacent_find(grid.begin(), grid.end()) != grid.end()) {
            throw ConfigError("tabulated grid must be strictly increasing");
        }
        lo = grid.front();
        hi = grid.back();
        return Pchip(std::move(grid), std::move(values));
    }

    void check(double x) const {
        if (!(x >= lo_ && x <= hi_)) {
            throw DomainError("tabulated function evaluated outside [" + std::to_string(lo_) + ", " +
                              std::to_string(hi_) + "]");
        }
    }

    std::vector<double> grid_;
    std::vector<double> values_;
    double lo_;
    double hi_;
    Pchip interp_;
};

class DriftSpec {
public:
    struct Zero {};
    struct Constant {
        double c;
    };
    struct LinearOU {};  ///< b(x) = -x
    struct Tumor {       ///< b(x) = x (1 - theta x) - beta x / (x + 1)
        double theta;
        double beta;
    };
    using Kind = std::variant<Zero, Constant, LinearOU, Tumor, TabulatedFunction>;

    DriftSpec() : kind_(Zero{}) {}
    DriftSpec(Kind kind) : kind_(std::move(kind)) {  // NOLINT(google-explicit-constructor)
        if (const auto* t = std::get_if<Tumor>(&kind_)) validate_tumor(t->theta, t->beta);
    }

    static DriftSpec zero() { return DriftSpec(Zero{}); }
    static DriftSpec constant(double c) { return DriftSpec(Constant{c}); }
    static DriftSpec linear_ou() { return DriftSpec(LinearOU{}); }
    static DriftSpec tumor(double theta, double beta) { return DriftSpec(Tumor{theta, beta}); }
    static DriftSpec tabulated(std::vector<double> grid, std::vector<double> values) {
        return DriftSpec(TabulatedFunction(std::move(grid), std::move(values)));
    }

    const Kind& kind() const noexcept { return kind_; }

    double operator()(double x) const {
        return std::visit(
            [x](const auto& k) -> double {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, Zero>) return 0.0;
                else if constexpr (std::is_same_v<T, Constant>) return k.c;
                else if constexpr (std::is_same_v<T, LinearOU>) return -x;
                else if constexpr (std::is_same_v<T, Tumor>)
                    return x * (1.0 - k.theta * x) - k.beta * x / (x + 1.0);
                else return k(x);
            },
            kind_);
    }

    double derivative(double x) const {
        return std::visit(
            [x](const auto& k) -> double {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, Zero> || std::is_same_v<T, Constant>) return 0.0;
                else if constexpr (std::is_same_v<T, LinearOU>) return -1.0;
                else if constexpr (std::is_same_v<T, Tumor>)
                    return 1.0 - 2.0 * k.theta * x - k.beta / ((x + 1.0) * (x + 1.0));
                else return k.prime(x);
            },
            kind_);
    }

    static void validate_tumor(double theta, double beta) {
        if (!(theta > 0.0 && theta < 1.0)) throw DomainError("tumor model needs 0 < theta < 1");
        const double upper = (theta + 1.0) * (theta + 1.0) / (4.0 * theta);
        if (!(beta > 1.0 && beta < upper)) {
            throw DomainError("tumor model needs 1 < beta < (theta+1)^2/(4 theta) = " +
                              std::to_string(upper));
        }
    }

private:
    Kind kind_;
};

class DiffusionSpec {
public:
    struct Zero {};
    struct Constant {
        double sigma;
    };
    using Kind = std::variant<Zero, Constant, TabulatedFunction>;

    DiffusionSpec() : kind_(Zero{}) {}
    DiffusionSpec(Kind kind) : kind_(std::move(kind)) {}  // NOLINT(google-explicit-constructor)

    static DiffusionSpec zero() { return DiffusionSpec(Zero{}); }
    static DiffusionSpec constant(double sigma) { return DiffusionSpec(Constant{sigma}); }
    static DiffusionSpec tabulated(std::vector<double> grid, std::vector<double> values) {
        return DiffusionSpec(TabulatedFunction(std::move(grid), std::move(values)));
    }

    const Kind& kind() const noexcept { return kind_; }
    bool is_zero() const noexcept { return std::holds_alternative<Zero>(kind_); }

    double operator()(double x) const {
        return std::visit(
            [x](const auto& k) -> double {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, Zero>) return 0.0;
                else if constexpr (std::is_same_v<T, Constant>) return k.sigma;
                else return k(x);
            },
            kind_);
    }

private:
    Kind kind_;
};

enum class Target { RightExterior, LeftExterior };

struct Interval {
    double a;
    double b;
    double width() const noexcept { return b - a; }
    bool contains(double x) const noexcept { return x > a && x < b; }
};

/// Escape from (a, b) into the target half-line for
/// dX = b(X) dt + sigma(X) dW + epsilon dL^alpha.
struct EscapeProblem {
    DriftSpec drift;
    DiffusionSpec diffusion;
    double epsilon = 0.0;
    StabilityIndex alpha{1.5};
    LevyMeasureSpec measure = LevyMeasureSpec::full_power_law(StabilityIndex{1.5});
    Interval domain{-1.0, 1.0};
    Target target = Target::RightExterior;

    double left_exterior_value() const noexcept { return target == Target::LeftExterior ? 1.0 : 0.0; }
    double right_exterior_value() const noexcept { return target == Target::RightExterior ? 1.0 : 0.0; }
    bool pure_jump() const noexcept { return diffusion.is_zero(); }

    Exterior exterior() const noexcept {
        return {domain.a, domain.b, left_exterior_value(), right_exterior_value()};
    }

    void validate() const {
        if (!(domain.a < domain.b) || !std::isfinite(domain.a) || !std::isfinite(domain.b)) {
            throw ConfigError("domain must satisfy a < b");
        }
        if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ConfigError("epsilon must be >= 0");
        if (epsilon == 0.0 && diffusion.is_zero()) {
            throw ConfigError("epsilon = 0 requires a nonzero diffusion");
        }
        if (!(measure.alpha() == alpha)) throw ConfigError("measure alpha differs from problem alpha");
    }
};

/// Swap the target side; the exterior data follow automatically.
inline EscapeProblem with_flipped_target(EscapeProblem p) {
    p.target = p.target == Target::RightExterior ? Target::LeftExterior : Target::RightExterior;
    return p;
}

/// Returns a copy with alpha (and the measure built from it) replaced.
inline EscapeProblem with_alpha(EscapeProblem p, double alpha) {
    const StabilityIndex s(alpha);
    p.alpha = s;
    p.measure = p.measure.truncated() ? LevyMeasureSpec::truncated_power_law(s, p.measure.coefficient())
                                      : LevyMeasureSpec::full_power_law(s);
    return p;
}

struct CaseLabel {
    enum class Kind { PositiveDrift, NegativeDrift, UnstableEquilibrium, StableEquilibrium, Unsupported };
    Kind kind = Kind::Unsupported;
    double equilibrium = std::numeric_limits<double>::quiet_NaN();  ///< x-bar for the equilibrium cases
    double slope = std::numeric_limits<double>::quiet_NaN();        ///< b'(x-bar)
    std::string reason;

    std::string name() const {
        switch (kind) {
            case Kind::PositiveDrift: return "Case1";
            case Kind::NegativeDrift: return "Case2";
            case Kind::UnstableEquilibrium: return "Case3";
            case Kind::StableEquilibrium: return "Case4";
            case Kind::Unsupported: break;
        }
        return "Unsupported";
    }
};

struct ClassifyOptions {
    int scan_points = 2048;
    double eq_tol = -1.0;  ///< negative: 1e-9 * max |b| on the scan grid
};

inline CaseLabel classify_case(const EscapeProblem& problem, ClassifyOptions opts = {}) {
    if (opts.scan_points < 3) throw DomainError("scan_points must be >= 3");
    const double a = problem.domain.a;
    const double b = problem.domain.b;
    const int n = opts.scan_points;
    std::vector<double> xs(n), bs(n);
    double bmax = 0.0;
    for (int i = 0; i < n; ++i) {
        xs[i] = a + (b - a) * i / (n - 1);
        bs[i] = problem.drift(xs[i]);
        bmax = std::max(bmax, std::abs(bs[i]));
    }
    const double tol = opts.eq_tol >= 0.0 ? opts.eq_tol : 1e-9 * bmax;

    CaseLabel out;
    if (bmax == 0.0) {
        out.reason = "drift vanishes identically";
        return out;
    }
    // A point belongs to the equilibrium set when |b| <= tol; endpoints are
    // allowed to vanish (they are not in the open domain).
    const bool positive = std::all_of(bs.begin() + 1, bs.end() - 1, [tol](double v) { return v > tol; });
    const bool negative = std::all_of(bs.begin() + 1, bs.end() - 1, [tol](double v) { return v < -tol; });
    if (positive) {
        out.kind = CaseLabel::Kind::PositiveDrift;
        return out;
    }
    if (negative) {
        out.kind = CaseLabel::Kind::NegativeDrift;
        return out;
    }

    int changes = 0;
    int last_sign = 0;
    int change_at = -1;
    for (int i = 0; i < n; ++i) {
        const int s = bs[i] > tol ? 1 : (bs[i] < -tol ? -1 : 0);
        if (s == 0) continue;
        if (last_sign != 0 && s != last_sign) {
            ++changes;
            change_at = i;
        }
        last_sign = s;
    }
    if (changes != 1) {
        out.reason = std::to_string(changes) + " sign changes of the drift (more than one equilibrium)";
        return out;
    }

    // Bisection between the last nonzero-sign point before the change and change_at.
    int lo_i = change_at - 1;
    while (lo_i > 0 && std::abs(bs[lo_i]) <= tol) --lo_i;
    double lo = xs[lo_i];
    double hi = xs[change_at];
    const double flo = problem.drift(lo);
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = problem.drift(mid);
        if (fm == 0.0) {
            lo = hi = mid;
            break;
        }
        if ((fm > 0.0) == (flo > 0.0)) lo = mid;
        else hi = mid;
    }
    const double xbar = 0.5 * (lo + hi);
    const double step = 1e-6 * (b - a);
    const double slope = (problem.drift(xbar + step) - problem.drift(xbar - step)) / (2.0 * step);

    out.equilibrium = xbar;
    out.slope = slope;
    if (slope > 0.0) {
        out.kind = CaseLabel::Kind::UnstableEquilibrium;
    } else {
        const double ba = problem.drift(a);
        const double bb = problem.drift(b);
        if (std::abs(ba) <= tol || std::abs(bb) <= tol) {
            out.reason = "stable equilibrium with b(A) b(B) = 0";
            return out;
        }
        out.kind = CaseLabel::Kind::StableEquilibrium;
    }
    return out;
}

struct TumorEquilibria {
    double x1;
    double x2;
    double x3;
};

inline TumorEquilibria tumor_equilibria(double theta, double beta) {
    DriftSpec::validate_tumor(theta, beta);
    const double disc = (1.0 - theta) * (1.0 - theta) - 4.0 * theta * (beta - 1.0);
    if (!(disc > 0.0)) throw DomainError("tumor equilibria coincide (zero discriminant)");
    const double root = std::sqrt(disc);
    // x2 via the conjugate form to stay accurate as beta -> 1+.
    const double x3 = (1.0 - theta + root) / (2.0 * theta);
    const double x2 = 2.0 * (beta - 1.0) / (1.0 - theta + root);
    return {0.0, x2, x3};
}

}  // namespace levyesc
