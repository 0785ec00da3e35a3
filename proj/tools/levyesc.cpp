#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

void add_common(CLI::App* sub, levyesc::cli::Options& o) {
    sub->add_option("--problem", o.problem, "problem file")->required();
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--eps", o.eps, "epsilon value(s)")->delimiter(',');
    sub->add_option("--alpha", o.alpha, "alpha value(s)")->delimiter(',');
    sub->add_option("--grid-n", o.grid_n, "interior grid nodes");
    sub->add_option("--seed", o.seed, "random seed");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Escape probabilities for SDEs with alpha-stable Levy noise"};
    app.require_subcommand(1);
    levyesc::cli::Options o;

    auto* solve = app.add_subcommand("solve", "solve the nonlocal exterior problem on a grid");
    add_common(solve, o);

    auto* asym = app.add_subcommand("asym", "sample the asymptotic expansion on a grid");
    add_common(asym, o);
    asym->add_flag("--corrected-p1-boundary", o.corrected_p1_boundary, "impose p1(B) = 0");

    auto* compare = app.add_subcommand("compare", "numerical vs asymptotic over an (alpha, eps) sweep");
    add_common(compare, o);
    compare->add_flag("--corrected-p1-boundary", o.corrected_p1_boundary, "impose p1(B) = 0");
    compare->add_option("--num", o.num_csv, "reuse a solve CSV for a single cell");

    auto* mc = app.add_subcommand("mc", "Monte Carlo escape estimates");
    add_common(mc, o);
    mc->add_option("--x0", o.x0, "starting point(s)")->delimiter(',')->required();
    mc->add_option("--paths", o.paths, "paths per starting point");
    mc->add_option("--dt", o.dt, "time step");
    mc->add_option("--tmax", o.tmax, "horizon (default: 50 transit times)");
    mc->add_option("--traces", o.traces, "write this many path traces per x0");
    mc->add_flag("--no-bridge", o.no_bridge, "skip the Brownian-bridge crossing check");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    using namespace levyesc::cli;
    if (*solve) return guarded([&] { return cmd_solve(o); });
    if (*asym) return guarded([&] { return cmd_asym(o); });
    if (*compare) return guarded([&] { return cmd_compare(o); });
    return guarded([&] { return cmd_mc(o); });
}
