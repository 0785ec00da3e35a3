#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "levyesc/errors.hpp"

namespace levyesc {

/// Values at the n interior nodes x_i = a + i h (i = 1..n, h = (b-a)/(n+1)) of
/// a uniform grid, plus the constant values taken on (-inf, a] and [b, inf).
struct GridFunction {
    double a = 0.0;
    double b = 1.0;
    std::vector<double> values;
    double left_exterior = 0.0;
    double right_exterior = 1.0;

    std::size_t n() const noexcept { return values.size(); }
    double h() const noexcept { return (b - a) / static_cast<double>(values.size() + 1); }
    /// Coordinate of interior node i (0-based).
    double x(std::size_t i) const noexcept { return a + static_cast<double>(i + 1) * h(); }

    /// Value at grid index j in 0..n+1, where 0 and n+1 are the endpoints.
    double node_value(std::size_t j) const noexcept {
        if (j == 0) return left_exterior;
        if (j == values.size() + 1) return right_exterior;
        return values[j - 1];
    }

    /// Piecewise-linear interpolant, constant outside [a, b].
    double operator()(double x) const {
        if (x <= a) return left_exterior;
        if (x >= b) return right_exterior;
        const double t = (x - a) / h();
        const auto j = std::min(static_cast<std::size_t>(t), values.size());
        const double w = t - static_cast<double>(j);
        return (1.0 - w) * node_value(j) + w * node_value(j + 1);
    }

    void validate() const {
        if (values.size() < 3) throw DomainError("grid function needs at least 3 interior nodes");
        if (!(a < b)) throw DomainError("grid function needs a < b");
        for (double v : values) {
            if (!std::isfinite(v)) throw NumericalError("grid function has non-finite values", v);
        }
    }
};

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// CSV with header `x,p`: a sentinel row at a carrying the left exterior value,
/// one row per interior node, and a sentinel row at b carrying the right one.
inline void write_grid_csv(std::ostream& os, const GridFunction& g) {
    os << "x,p\n";
    os << format_double(g.a) << ',' << format_double(g.left_exterior) << '\n';
    for (std::size_t i = 0; i < g.n(); ++i) {
        os << format_double(g.x(i)) << ',' << format_double(g.values[i]) << '\n';
    }
    os << format_double(g.b) << ',' << format_double(g.right_exterior) << '\n';
}

inline GridFunction read_grid_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "x,p") throw ConfigError("grid CSV must start with header 'x,p'");
    std::vector<double> xs, ps;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw ConfigError("grid CSV line " + std::to_string(lineno) + ": expected 'x,p'");
        }
        try {
            xs.push_back(std::stod(line.substr(0, comma)));
            ps.push_back(std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw ConfigError("grid CSV line " + std::to_string(lineno) + ": not a number");
        }
    }
    if (xs.size() < 5) throw ConfigError("grid CSV needs two sentinel rows and >= 3 nodes");
    GridFunction g;
    g.a = xs.front();
    g.b = xs.back();
    g.left_exterior = ps.front();
    g.right_exterior = ps.back();
    g.values.assign(ps.begin() + 1, ps.end() - 1);
    const double h = g.h();
    for (std::size_t i = 0; i < g.n(); ++i) {
        if (std::abs(xs[i + 1] - g.x(i)) > 1e-9 * std::max(1.0, std::abs(g.x(i))) + 1e-6 * h) {
            throw ConfigError("grid CSV nodes are not uniform");
        }
    }
    return g;
}

inline void write_grid_csv(const std::string& path, const GridFunction& g) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot open " + path + " for writing");
    write_grid_csv(os, g);
}

inline GridFunction read_grid_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open " + path);
    return read_grid_csv(is);
}

}  // namespace levyesc
