#pragma once

// Subcommands of the levyesc tool. Each writes its CSV output(s) plus a
// manifest.json into the output directory; files are written to a temporary
// name and renamed into place.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "levyesc/levyesc.hpp"

namespace levyesc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

struct Options {
    std::string problem;
    std::string out = ".";
    std::uint64_t seed = 1;
    std::size_t grid_n = 401;
    std::vector<double> eps;
    std::vector<double> alpha;
    std::vector<double> x0;
    std::size_t paths = 10000;
    double dt = 1e-3;
    double tmax = -1.0;
    bool corrected_p1_boundary = false;
    std::string num_csv;  ///< compare: reuse a solver CSV instead of solving
    std::size_t traces = 0;
    bool no_bridge = false;
};

inline void write_atomic(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw ConfigError("cannot write " + tmp.string());
        os << content;
        if (!os) throw ConfigError("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline json options_json(const Options& o) {
    return json{{"grid_n", o.grid_n},   {"eps", o.eps},   {"alpha", o.alpha},   {"x0", o.x0},
                {"paths", o.paths},     {"dt", o.dt},     {"tmax", o.tmax},     {"traces", o.traces},
                {"corrected_p1_boundary", o.corrected_p1_boundary},
                {"num_csv", o.num_csv}, {"bridge", !o.no_bridge}};
}

inline void write_manifest(const Options& o, const std::string& subcommand, const EscapeProblem& problem,
                           const std::vector<std::string>& outputs) {
    json m;
    m["tool"] = "levyesc";
    m["version"] = LEVYESC_VERSION;
    m["subcommand"] = subcommand;
    m["problem_file"] = o.problem;
    m["problem"] = format_problem(problem);
    m["parameters"] = options_json(o);
    m["seed"] = o.seed;
    m["out"] = o.out;
    m["outputs"] = outputs;
    m["timestamp"] = utc_timestamp();
    write_atomic(fs::path(o.out) / "manifest.json", m.dump(2) + "\n");
}

inline EscapeProblem load_with_overrides(const Options& o) {
    EscapeProblem p = load_problem(o.problem);
    if (o.alpha.size() == 1) p = with_alpha(p, o.alpha[0]);
    if (o.eps.size() == 1) p.epsilon = o.eps[0];
    p.validate();
    return p;
}

inline void prepare_out(const Options& o) {
    std::error_code ec;
    fs::create_directories(o.out, ec);
    if (ec) throw ConfigError("cannot create output directory " + o.out + ": " + ec.message());
}

// ---------------------------------------------------------------------------
// Asymptotic pipeline routing

struct Asymptotic {
    std::function<double(double)> p;
    json meta;
};

inline Asymptotic build_asymptotic(const EscapeProblem& problem, bool corrected_p1_boundary) {
    Asymptotic out;
    json meta;
    meta["epsilon"] = problem.epsilon;
    meta["alpha"] = problem.alpha.value();
    meta["layer_measure"] = problem.measure.truncated() ? "truncated" : "full";
    if (problem.measure.truncated()) meta["kappa"] = problem.measure.coefficient();
    if (!problem.pure_jump()) {
        RegularOptions ro;
        ro.corrected_p1_boundary = corrected_p1_boundary;
        auto r = std::make_shared<const RegularExpansion>(problem, ro);
        meta["case"] = "regular";
        meta["corrected_p1_boundary"] = corrected_p1_boundary;
        out.p = [r](double x) { return r->evaluate(x); };
    } else {
        const CaseLabel label = classify_case(problem);
        auto s = std::make_shared<const SingularExpansion>(problem, label);
        meta["case"] = label.name();
        meta["beta"] = s->beta();
        if (label.kind == CaseLabel::Kind::UnstableEquilibrium || label.kind == CaseLabel::Kind::StableEquilibrium) {
            meta["equilibrium"] = label.equilibrium;
            meta["slope"] = label.slope;
        }
        if (s->gamma_left()) meta["gamma_left"] = *s->gamma_left();
        if (s->gamma_right()) meta["gamma_right"] = *s->gamma_right();
        if (const auto& c4 = s->case4()) {
            meta["C"] = c4->c_extrapolated;
            meta["C_eps"] = c4->c_eps;
            meta["C_half"] = c4->c_half;
            meta["C_epsilon_eval"] = c4->epsilon;
            // The flux balance weighs with the full-law stationary density.
            meta["flux_measure"] = "full";
        }
        out.p = [s](double x) { return s->evaluate(x); };
    }
    out.meta = std::move(meta);
    return out;
}

// ---------------------------------------------------------------------------
// Subcommands

inline int cmd_solve(const Options& o) {
    const EscapeProblem problem = load_with_overrides(o);
    prepare_out(o);
    const auto [g, report] = solve_escape_probability(problem, o.grid_n);
    std::ostringstream os;
    write_grid_csv(os, g);
    write_atomic(fs::path(o.out) / "p_num.csv", os.str());
    write_manifest(o, "solve", problem, {"p_num.csv"});
    std::cerr << "solve: n=" << g.n() << " residual=" << report.residual_inf_norm
              << " cond=" << report.condition_estimate << (report.upwinded ? " (upwind)" : "") << '\n';
    return 0;
}

inline int cmd_asym(const Options& o) {
    const EscapeProblem problem = load_with_overrides(o);
    prepare_out(o);
    const Asymptotic asym = build_asymptotic(problem, o.corrected_p1_boundary);
    GridFunction layout{problem.domain.a, problem.domain.b, std::vector<double>(o.grid_n, 0.0), 0.0, 0.0};
    std::ostringstream os;
    os << "x,p_asym\n";
    for (std::size_t i = 0; i < layout.n(); ++i) {
        const double x = layout.x(i);
        os << format_double(x) << ',' << format_double(asym.p(x)) << '\n';
    }
    write_atomic(fs::path(o.out) / "p_asym.csv", os.str());
    write_atomic(fs::path(o.out) / "p_asym_meta.json", asym.meta.dump(2) + "\n");
    write_manifest(o, "asym", problem, {"p_asym.csv", "p_asym_meta.json"});
    return 0;
}

inline int cmd_compare(const Options& o) {
    const EscapeProblem base = load_problem(o.problem);
    prepare_out(o);
    const std::vector<double> alphas = o.alpha.empty() ? std::vector<double>{base.alpha.value()} : o.alpha;
    const std::vector<double> epss = o.eps.empty() ? std::vector<double>{base.epsilon} : o.eps;
    std::optional<GridFunction> given;
    if (!o.num_csv.empty()) {
        if (alphas.size() != 1 || epss.size() != 1) {
            throw ConfigError("--num needs a single (alpha, epsilon) cell");
        }
        given = read_grid_csv(o.num_csv);
    }

    struct Cell {
        double alpha, eps;
        std::string rows;
        double sup = 0.0;
        std::string label;
    };
    auto run_cell = [&](double a, double e) {
        EscapeProblem p = with_alpha(base, a);
        p.epsilon = e;
        p.validate();
        GridFunction num = given ? *given : solve_escape_probability(p, o.grid_n).first;
        if (given && (num.a != p.domain.a || num.b != p.domain.b)) {
            throw ConfigError("--num CSV domain differs from the problem domain");
        }
        const Asymptotic asym = build_asymptotic(p, o.corrected_p1_boundary);
        Cell c{a, e, {}, 0.0, asym.meta.value("case", "")};
        std::ostringstream os;
        for (std::size_t i = 0; i < num.n(); ++i) {
            const double x = num.x(i);
            const double pa = asym.p(x);
            const double d = std::abs(num.values[i] - pa);
            c.sup = std::max(c.sup, d);
            os << format_double(a) << ',' << format_double(e) << ',' << format_double(x) << ','
               << format_double(num.values[i]) << ',' << format_double(pa) << ',' << format_double(d) << '\n';
        }
        c.rows = os.str();
        return c;
    };

    std::vector<std::future<Cell>> jobs;
    for (double a : alphas) {
        for (double e : epss) jobs.push_back(std::async(std::launch::async, run_cell, a, e));
    }
    std::string rows = "alpha,epsilon,x,p_num,p_asym,abs_diff\n";
    std::string summary = "alpha,epsilon,case,sup_abs_diff\n";
    for (auto& j : jobs) {
        const Cell c = j.get();
        rows += c.rows;
        summary += format_double(c.alpha) + ',' + format_double(c.eps) + ',' + c.label + ',' +
                   format_double(c.sup) + '\n';
    }
    write_atomic(fs::path(o.out) / "compare.csv", rows);
    write_atomic(fs::path(o.out) / "compare_summary.csv", summary);
    write_manifest(o, "compare", base, {"compare.csv", "compare_summary.csv"});
    return 0;
}

inline int cmd_mc(const Options& o) {
    const EscapeProblem problem = load_with_overrides(o);
    prepare_out(o);
    if (o.x0.empty()) throw ConfigError("mc needs --x0");
    MCConfig cfg;
    cfg.n_paths = o.paths;
    cfg.dt = o.dt;
    cfg.t_max = o.tmax;
    cfg.seed = o.seed;
    cfg.bridge = !o.no_bridge;
    std::string csv = "x0,p_hat,std_err,n_censored\n";
    std::vector<std::string> outputs{"mc.csv"};
    for (std::size_t k = 0; k < o.x0.size(); ++k) {
        const double x0 = o.x0[k];
        const EstimateWithCI e = estimate_escape(problem, x0, cfg);
        csv += format_double(x0) + ',' + format_double(e.p_hat) + ',' + format_double(e.std_err) + ',' +
               std::to_string(e.n_censored) + '\n';
        if (o.traces > 0) {
            fs::create_directories(fs::path(o.out) / "traces");
            MCConfig fixed = cfg;
            fixed.t_max = effective_horizon(problem, cfg);
            for (std::size_t i = 0; i < std::min(o.traces, cfg.n_paths); ++i) {
                auto rng = path_rng(cfg.seed, i);
                std::vector<TracePoint> trace;
                simulate_exit(problem, x0, fixed, rng, 1.0, &trace);
                std::string t = "t,x\n";
                for (const auto& pt : trace) t += format_double(pt.t) + ',' + format_double(pt.x) + '\n';
                const std::string name = "traces/x0_" + std::to_string(k) + "_path_" + std::to_string(i) + ".csv";
                write_atomic(fs::path(o.out) / name, t);
                outputs.push_back(name);
            }
        }
    }
    write_atomic(fs::path(o.out) / "mc.csv", csv);
    write_manifest(o, "mc", problem, outputs);
    return 0;
}

/// Runs a subcommand and maps failures to exit codes: 2 for configuration
/// and domain errors, 1 for numerical failures.
template <class F>
int guarded(F&& f) {
    try {
        return f();
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace levyesc::cli
