// jacdet — principal-value determinants and traces of LQ second variations,
// with a Galerkin spectral oracle for cross-validation.

#include "jacdet/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>

namespace {

bool parse_range(const std::string& text, double& lo, double& hi, int* steps) {
    // LO:HI or LO:HI:STEPS
    const auto c1 = text.find(':');
    if (c1 == std::string::npos) return false;
    const auto c2 = text.find(':', c1 + 1);
    try {
        lo = std::stod(text.substr(0, c1));
        if (c2 == std::string::npos) {
            hi = std::stod(text.substr(c1 + 1));
        } else {
            hi = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
            if (steps) *steps = std::stoi(text.substr(c2 + 1));
        }
    } catch (const std::exception&) {
        return false;
    }
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "jacdet: determinant and trace of the second variation of linear-quadratic\n"
        "optimal-control problems, via the Jacobi-flow determinant formula and an\n"
        "independent Galerkin spectral oracle."};
    app.require_subcommand(1);

    jacdet::RunConfig rc;
    std::string s_spec, lambda_spec;
    int grid = 0;

    auto add_common = [&](CLI::App* cmd, bool needs_problem) {
        if (needs_problem)
            cmd->add_option("--problem", rc.problem_path, "problem config (jacdet-problem/1 JSON)")
                ->required();
        cmd->add_option("--out", rc.out_path, "output path (default: stdout)");
        cmd->add_option("--format", rc.format, "json|csv (default json)");
        cmd->add_option("--grid", grid, "override time grid (RK4 steps)");
        cmd->add_option("--m", rc.m, "oracle cell count (default 256)");
        cmd->add_option("--seed", rc.seed, "seed for metric perturbation");
        cmd->add_option("--tol-det", rc.tol_det, "determinant comparison tolerance");
        cmd->add_option("--tol-trace", rc.tol_trace, "trace comparison tolerance (default 1e-2)");
    };

    CLI::App* det = app.add_subcommand("det", "determinant report over an s-grid");
    add_common(det, true);
    det->add_option("--s", s_spec, "s value X or range LO:HI:STEPS (default 0:1:101)");

    CLI::App* scan = app.add_subcommand("scan", "zero scan over the spectral parameter lambda");
    add_common(scan, true);
    scan->add_option("--lambda", lambda_spec, "range LO:HI (default -100:1)");
    scan->add_flag("--verify", rc.verify, "attach oracle kernel dimensions to each root");

    CLI::App* oracle = app.add_subcommand("oracle", "Galerkin spectrum report");
    add_common(oracle, true);

    CLI::App* compare = app.add_subcommand("compare", "formula vs oracle comparison table");
    add_common(compare, true);

    app.add_subcommand("selftest", "structural invariants on built-in examples");

    CLI11_PARSE(app, argc, argv);

    rc.command = app.get_subcommands().front()->get_name();
    if (grid > 0) rc.grid_override = grid;

    if (!s_spec.empty()) {
        double lo, hi;
        int steps = rc.s_steps;
        if (parse_range(s_spec, lo, hi, &steps)) {
            rc.s_lo = lo;
            rc.s_hi = hi;
            rc.s_steps = steps;
            rc.s_range_given = true;
        } else {
            try {
                rc.s_single = std::stod(s_spec);
            } catch (const std::exception&) {
                std::cerr << "error: --s expects X or LO:HI:STEPS\n";
                return 1;
            }
        }
    }
    if (!lambda_spec.empty()) {
        double lo, hi;
        if (!parse_range(lambda_spec, lo, hi, nullptr)) {
            std::cerr << "error: --lambda expects LO:HI\n";
            return 1;
        }
        rc.lambda_lo = lo;
        rc.lambda_hi = hi;
    }

    return jacdet::run_command(rc);
}
