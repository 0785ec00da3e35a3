#pragma once

// Flat `key = value` problem files. Blank lines and text after '#' are
// ignored; lists are separated by spaces or commas.
//
//   drift.kind      zero | constant | linear_ou | tumor | tabulated
//   drift.params    constant: c;  tumor: theta beta;  tabulated: x1 v1 x2 v2 ...
//   diffusion.kind  zero | constant | tabulated
//   diffusion.params constant: sigma;  tabulated: x1 v1 x2 v2 ...
//   epsilon, alpha
//   measure.kind    full | truncated
//   measure.kappa   truncated only
//   domain.a, domain.b
//   target          right | left

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "levyesc/errors.hpp"
#include "levyesc/grid_function.hpp"
#include "levyesc/problem.hpp"

namespace levyesc {

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<double> parse_list(const std::string& text, const std::string& where) {
    std::string s = text;
    for (char& c : s) {
        if (c == ',') c = ' ';
    }
    std::istringstream is(s);
    std::vector<double> out;
    std::string tok;
    while (is >> tok) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != tok.size()) throw ConfigError(where + ": '" + tok + "' is not a number");
        out.push_back(v);
    }
    return out;
}

inline std::pair<std::vector<double>, std::vector<double>> split_pairs(const std::vector<double>& flat,
                                                                       const std::string& where) {
    if (flat.size() % 2 != 0) throw ConfigError(where + ": tabulated params must be x/value pairs");
    std::vector<double> xs, vs;
    for (std::size_t i = 0; i < flat.size(); i += 2) {
        xs.push_back(flat[i]);
        vs.push_back(flat[i + 1]);
    }
    return {xs, vs};
}

inline std::string join(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ' ';
        out += format_double(v[i]);
    }
    return out;
}

inline std::string pairs(const TabulatedFunction& t) {
    std::vector<double> flat;
    for (std::size_t i = 0; i < t.grid().size(); ++i) {
        flat.push_back(t.grid()[i]);
        flat.push_back(t.values()[i]);
    }
    return join(flat);
}

}  // namespace detail

/// Parses a problem file. `source` names the input in diagnostics.
inline EscapeProblem parse_problem(std::istream& is, const std::string& source = "<problem>") {
    static const char* known[] = {"drift.kind",  "drift.params",  "diffusion.kind", "diffusion.params",
                                  "epsilon",     "alpha",         "measure.kind",   "measure.kappa",
                                  "domain.a",    "domain.b",      "target"};
    std::map<std::string, std::pair<std::string, int>> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = source + ":" + std::to_string(lineno);
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
            throw ConfigError(where + ": unknown key '" + key + "'");
        }
        if (kv.count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
        kv[key] = {value, lineno};
    }

    auto where = [&](const std::string& key) {
        auto it = kv.find(key);
        return it == kv.end() ? source : source + ":" + std::to_string(it->second.second);
    };
    auto get = [&](const std::string& key) -> std::string {
        auto it = kv.find(key);
        if (it == kv.end()) throw ConfigError(source + ": missing required key '" + key + "'");
        return it->second.first;
    };
    auto get_or = [&](const std::string& key, const std::string& fallback) {
        auto it = kv.find(key);
        return it == kv.end() ? fallback : it->second.first;
    };
    auto number = [&](const std::string& key) {
        const auto v = detail::parse_list(get(key), where(key));
        if (v.size() != 1) throw ConfigError(where(key) + ": '" + key + "' needs exactly one number");
        return v[0];
    };
    auto params = [&](const std::string& key, std::size_t expected) {
        const auto v = detail::parse_list(get_or(key, ""), where(key));
        if (expected != std::size_t(-1) && v.size() != expected) {
            throw ConfigError(where(key) + ": '" + key + "' needs " + std::to_string(expected) + " value(s), got " +
                              std::to_string(v.size()));
        }
        return v;
    };

    try {
        EscapeProblem p;
        const std::string dk = get("drift.kind");
        if (dk == "zero") {
            params("drift.params", 0);
            p.drift = DriftSpec::zero();
        } else if (dk == "constant") {
            p.drift = DriftSpec::constant(params("drift.params", 1)[0]);
        } else if (dk == "linear_ou") {
            params("drift.params", 0);
            p.drift = DriftSpec::linear_ou();
        } else if (dk == "tumor") {
            const auto v = params("drift.params", 2);
            p.drift = DriftSpec::tumor(v[0], v[1]);
        } else if (dk == "tabulated") {
            auto [xs, vs] = detail::split_pairs(params("drift.params", std::size_t(-1)), where("drift.params"));
            p.drift = DriftSpec::tabulated(xs, vs);
        } else {
            throw ConfigError(where("drift.kind") + ": unknown drift.kind '" + dk + "'");
        }

        const std::string sk = get("diffusion.kind");
        if (sk == "zero") {
            params("diffusion.params", 0);
            p.diffusion = DiffusionSpec::zero();
        } else if (sk == "constant") {
            p.diffusion = DiffusionSpec::constant(params("diffusion.params", 1)[0]);
        } else if (sk == "tabulated") {
            auto [xs, vs] =
                detail::split_pairs(params("diffusion.params", std::size_t(-1)), where("diffusion.params"));
            p.diffusion = DiffusionSpec::tabulated(xs, vs);
        } else {
            throw ConfigError(where("diffusion.kind") + ": unknown diffusion.kind '" + sk + "'");
        }

        p.epsilon = number("epsilon");
        p.alpha = StabilityIndex(number("alpha"));
        const std::string mk = get("measure.kind");
        if (mk == "full") {
            if (kv.count("measure.kappa")) {
                throw ConfigError(where("measure.kappa") + ": measure.kappa applies to the truncated measure only");
            }
            p.measure = LevyMeasureSpec::full_power_law(p.alpha);
        } else if (mk == "truncated") {
            p.measure = LevyMeasureSpec::truncated_power_law(p.alpha, number("measure.kappa"));
        } else {
            throw ConfigError(where("measure.kind") + ": unknown measure.kind '" + mk + "'");
        }
        p.domain = {number("domain.a"), number("domain.b")};
        const std::string t = get("target");
        if (t == "right") {
            p.target = Target::RightExterior;
        } else if (t == "left") {
            p.target = Target::LeftExterior;
        } else {
            throw ConfigError(where("target") + ": target must be 'right' or 'left'");
        }
        p.validate();
        return p;
    } catch (const DomainError& e) {
        throw ConfigError(source + ": " + e.what());
    }
}

inline EscapeProblem parse_problem(const std::string& text, const std::string& source) {
    std::istringstream is(text);
    return parse_problem(is, source);
}

inline EscapeProblem load_problem(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open problem file " + path);
    return parse_problem(is, path);
}

/// Canonical text form; parse_problem(format_problem(p)) reproduces p.
inline std::string format_problem(const EscapeProblem& p) {
    std::ostringstream os;
    std::visit(
        [&](const auto& k) {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, DriftSpec::Zero>) os << "drift.kind = zero\n";
            else if constexpr (std::is_same_v<T, DriftSpec::Constant>)
                os << "drift.kind = constant\ndrift.params = " << format_double(k.c) << '\n';
            else if constexpr (std::is_same_v<T, DriftSpec::LinearOU>) os << "drift.kind = linear_ou\n";
            else if constexpr (std::is_same_v<T, DriftSpec::Tumor>)
                os << "drift.kind = tumor\ndrift.params = " << format_double(k.theta) << ' ' << format_double(k.beta)
                   << '\n';
            else os << "drift.kind = tabulated\ndrift.params = " << detail::pairs(k) << '\n';
        },
        p.drift.kind());
    std::visit(
        [&](const auto& k) {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, DiffusionSpec::Zero>) os << "diffusion.kind = zero\n";
            else if constexpr (std::is_same_v<T, DiffusionSpec::Constant>)
                os << "diffusion.kind = constant\ndiffusion.params = " << format_double(k.sigma) << '\n';
            else os << "diffusion.kind = tabulated\ndiffusion.params = " << detail::pairs(k) << '\n';
        },
        p.diffusion.kind());
    os << "epsilon = " << format_double(p.epsilon) << '\n';
    os << "alpha = " << format_double(p.alpha.value()) << '\n';
    if (p.measure.truncated()) {
        os << "measure.kind = truncated\nmeasure.kappa = " << format_double(p.measure.coefficient()) << '\n';
    } else {
        os << "measure.kind = full\n";
    }
    os << "domain.a = " << format_double(p.domain.a) << '\n';
    os << "domain.b = " << format_double(p.domain.b) << '\n';
    os << "target = " << (p.target == Target::RightExterior ? "right" : "left") << '\n';
    return os.str();
}

}  // namespace levyesc
