#pragma once

// Monte Carlo exit simulation for dX = b dt + sigma dW + eps dL^alpha.
//
// Euler-Maruyama with exact stable increments (full law) or compound-Poisson
// jumps plus a Gaussian small-jump term (truncated law). A path has left the
// domain as soon as a step lands outside (a, b); the landing side decides the
// outcome, so jumps that overshoot the boundary count for the side they land
// on. With `bridge` on, the Gaussian part of each step is also checked for an
// undetected crossing using the Brownian-bridge crossing probability.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

#include "levyesc/errors.hpp"
#include "levyesc/problem.hpp"
#include "levyesc/stable.hpp"

namespace levyesc {

struct MCConfig {
    std::size_t n_paths = 10000;
    double dt = 1e-3;
    double t_max = -1.0;  ///< negative: 50 transit times (b - a) / max(|b|, sigma, eps)
    std::uint64_t seed = 1;
    bool antithetic = false;
    bool bridge = true;
    double small_jump_cutoff = 1e-3;  ///< truncated law: jumps below this are Gaussian
    unsigned threads = 0;             ///< 0: hardware concurrency

    void validate() const {
        if (n_paths == 0) throw ConfigError("n_paths must be positive");
        if (!(dt > 0.0)) throw ConfigError("dt must be positive");
        if (!(small_jump_cutoff > 0.0 && small_jump_cutoff < 1.0)) {
            throw ConfigError("small-jump cutoff must lie in (0, 1)");
        }
    }
};

enum class ExitKind { TargetHit, OtherHit, Censored };

struct ExitRecord {
    ExitKind kind = ExitKind::Censored;
    double position = 0.0;
    double time = 0.0;
};

struct TracePoint {
    double t;
    double x;
};

struct EstimateWithCI {
    double p_hat = 0.0;
    double std_err = 0.0;
    std::size_t n_target = 0;
    std::size_t n_other = 0;
    std::size_t n_censored = 0;
    std::size_t n_paths = 0;
};

/// Horizon actually used for a problem and configuration.
inline double effective_horizon(const EscapeProblem& problem, const MCConfig& cfg) {
    if (cfg.t_max > 0.0) return cfg.t_max;
    constexpr int scan = 256;
    double speed = problem.epsilon;
    for (int i = 0; i <= scan; ++i) {
        const double x = problem.domain.a + problem.domain.width() * i / scan;
        speed = std::max({speed, std::abs(problem.drift(x)), std::abs(problem.diffusion(x))});
    }
    return 50.0 * problem.domain.width() / speed;
}

/// Generator for one path, derived from (seed, path index) alone. The pair is
/// mixed with the splitmix64 finalizer so nearby indices give unrelated seeds.
inline std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t index) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return std::mt19937_64(mix(mix(seed) ^ index));
}

namespace detail {

/// Per-step jump sampler for eps^alpha nu: exact stable increments for the full
/// law; for the truncated law, Poisson many jumps of size in (delta, 1] plus a
/// Gaussian term carrying the variance of the smaller ones.
class JumpSampler {
public:
    JumpSampler(const EscapeProblem& problem, const MCConfig& cfg)
        : alpha_(problem.alpha), full_(!problem.measure.truncated()), eps_(problem.epsilon), dt_(cfg.dt) {
        if (!full_ && eps_ > 0.0) {
            const double a = alpha_.value();
            const double scale = std::pow(eps_, a);
            delta_ = cfg.small_jump_cutoff;
            delta_pow_ = std::pow(delta_, -a);
            poisson_ = std::poisson_distribution<long>(2.0 * scale * problem.measure.tail_mass(delta_) * dt_);
            small_var_ = 2.0 * scale * problem.measure.second_moment(delta_) * dt_;
        }
    }

    /// Variance of the Gaussian small-jump part (zero for the full law).
    double small_variance() const noexcept { return small_var_; }

    template <class URBG>
    double large_jumps(URBG& rng) {
        if (eps_ == 0.0) return 0.0;
        if (full_) return eps_ * sample_stable_increment(alpha_, dt_, rng);
        const long count = poisson_(rng);
        double sum = 0.0;
        const double a = alpha_.value();
        for (long k = 0; k < count; ++k) {
            // Inverse CDF of u^{-1-alpha} on (delta, 1].
            const double v = unit_(rng);
            const double size = std::pow(delta_pow_ - v * (delta_pow_ - 1.0), -1.0 / a);
            sum += unit_(rng) < 0.5 ? -size : size;
        }
        return sum;
    }

private:
    StabilityIndex alpha_;
    bool full_;
    double eps_;
    double dt_;
    double delta_ = 0.0;
    double delta_pow_ = 0.0;
    double small_var_ = 0.0;
    std::poisson_distribution<long> poisson_{1.0};
    std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

}  // namespace detail

/// Simulates one path from x0 until it leaves (a, b) or the horizon passes.
/// `normal_sign` = -1 gives the antithetic partner of a path with the same
/// generator state.
template <class URBG>
ExitRecord simulate_exit(const EscapeProblem& problem, double x0, const MCConfig& cfg, URBG& rng,
                         double normal_sign = 1.0, std::vector<TracePoint>* trace = nullptr) {
    const double a = problem.domain.a;
    const double b = problem.domain.b;
    if (!(x0 > a && x0 < b)) throw DomainError("simulate_exit needs x0 inside (a, b)");
    const double horizon = effective_horizon(problem, cfg);  // cheap when cfg.t_max is set
    detail::JumpSampler jumps(problem, cfg);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const bool right_target = problem.target == Target::RightExterior;
    auto classify = [&](double x, double t) {
        const bool right = x >= b;
        return ExitRecord{right == right_target ? ExitKind::TargetHit : ExitKind::OtherHit, x, t};
    };

    double x = x0;
    double t = 0.0;
    if (trace) trace->push_back({t, x});
    while (t < horizon) {
        const double s = problem.diffusion(x);
        const double var = s * s * cfg.dt + jumps.small_variance();
        const double y = x + problem.drift(x) * cfg.dt + normal_sign * std::sqrt(var) * normal(rng);
        t += cfg.dt;
        if (y <= a || y >= b) {
            if (trace) trace->push_back({t, y});
            return classify(y, t);
        }
        if (cfg.bridge && var > 0.0) {
            // Crossing probabilities below e^{-40} are skipped without drawing.
            const double up_arg = 2.0 * (b - x) * (b - y) / var;
            const double down_arg = 2.0 * (x - a) * (y - a) / var;
            if (up_arg < 40.0 || down_arg < 40.0) {
                const double u = unit(rng);
                const double up = std::exp(-up_arg);
                const double down = std::exp(-down_arg);
                if (u < up) {
                    if (trace) trace->push_back({t, b});
                    return classify(b, t);
                }
                if (u > 1.0 - down) {
                    if (trace) trace->push_back({t, a});
                    return classify(a, t);
                }
            }
        }
        x = y + jumps.large_jumps(rng);
        if (trace) trace->push_back({t, x});
        if (x <= a || x >= b) return classify(x, t);
    }
    return {ExitKind::Censored, x, t};
}

/// Escape probability over cfg.n_paths independent paths. Path i uses
/// path_rng(seed, i) (antithetic pairs share the generator of their even
/// member), so the result does not depend on the thread count.
inline EstimateWithCI estimate_escape(const EscapeProblem& problem, double x0, const MCConfig& cfg) {
    problem.validate();
    cfg.validate();
    if (!(x0 > problem.domain.a && x0 < problem.domain.b)) throw DomainError("x0 must lie inside (a, b)");
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned workers = std::max(1u, std::min<unsigned>(cfg.threads ? cfg.threads : hw,
                                                             static_cast<unsigned>(cfg.n_paths)));
    struct Counts {
        std::size_t target = 0, other = 0, censored = 0;
    };
    std::vector<Counts> counts(workers);
    MCConfig fixed = cfg;
    fixed.t_max = effective_horizon(problem, cfg);
    auto run = [&](unsigned w) {
        for (std::size_t i = w; i < cfg.n_paths; i += workers) {
            const std::uint64_t stream = cfg.antithetic ? i / 2 : i;
            const double sign = cfg.antithetic && (i % 2 == 1) ? -1.0 : 1.0;
            auto rng = path_rng(cfg.seed, stream);
            const ExitRecord r = simulate_exit(problem, x0, fixed, rng, sign);
            switch (r.kind) {
                case ExitKind::TargetHit: ++counts[w].target; break;
                case ExitKind::OtherHit: ++counts[w].other; break;
                case ExitKind::Censored: ++counts[w].censored; break;
            }
        }
    };
    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run, w);
        for (auto& th : pool) th.join();
    }
    EstimateWithCI est;
    est.n_paths = cfg.n_paths;
    for (const auto& c : counts) {
        est.n_target += c.target;
        est.n_other += c.other;
        est.n_censored += c.censored;
    }
    const std::size_t done = est.n_paths - est.n_censored;
    if (done == 0) {
        throw NumericalError("all paths censored; estimate unavailable (raise t_max)",
                             static_cast<double>(est.n_censored));
    }
    est.p_hat = static_cast<double>(est.n_target) / static_cast<double>(done);
    est.std_err = std::sqrt(est.p_hat * (1.0 - est.p_hat) / static_cast<double>(done));
    return est;
}

}  // namespace levyesc
