#pragma once

/*
 * cli.hpp — batch front end. One command per process; reports are written
 * atomically and embed the resolved configuration.
 *
 * Exit codes: 0 success, 1 input/validation errors, 2 degenerate metric
 * after perturbation retries.
 */

#include "jacdet/io.hpp"

#include <cstdio>
#include <iostream>
#include <sstream>

namespace jacdet {

struct RunConfig {
    std::string command;  // det | scan | oracle | compare | selftest
    std::string problem_path;
    std::string out_path;
    std::string format = "json";  // json | csv
    std::optional<int> grid_override;
    int m = 256;
    std::optional<double> s_single;
    double s_lo = 0.0, s_hi = 1.0;
    int s_steps = 101;
    bool s_range_given = false;
    double lambda_lo = -100.0, lambda_hi = 1.0;
    double tol_det = 0.0;    // 0 -> default max(2% rel, 5e-3 abs)
    double tol_trace = 1e-2;
    unsigned seed = 42;
    bool verify = false;

    void validate() const {
        if (m < 4 || m > 65536) throw InputError("--m out of range [4, 65536]");
        if (s_steps < 2 || s_steps > 100000) throw InputError("--s step count out of range");
        if (grid_override && (*grid_override < 16 || *grid_override > (1 << 20)))
            throw InputError("--grid out of range [16, 2^20]");
        if (lambda_hi <= lambda_lo) throw InputError("--lambda range is empty");
        if (tol_det < 0 || tol_trace <= 0) throw InputError("tolerances must be positive");
        if (format != "json" && format != "csv") throw InputError("--format must be json|csv");
    }
};

namespace cli {

inline ProblemConfig load(const RunConfig& rc) {
    if (rc.problem_path.empty()) throw InputError("--problem PATH is required");
    ProblemConfig cfg = load_problem_config(rc.problem_path);
    if (rc.grid_override) {
        cfg.grid.steps = *rc.grid_override;
        cfg.resolved["grid"] = *rc.grid_override;
    }
    return cfg;
}

inline std::vector<double> s_values(const RunConfig& rc) {
    std::vector<double> out;
    if (rc.s_single) {
        out.push_back(*rc.s_single);
        return out;
    }
    for (int i = 0; i < rc.s_steps; ++i)
        out.push_back(rc.s_lo + (rc.s_hi - rc.s_lo) * double(i) / (rc.s_steps - 1));
    // s = 1 is evaluated exactly whenever it lies in the range
    if (rc.s_lo <= 1.0 && 1.0 <= rc.s_hi) {
        bool has_one = false;
        for (double s : out)
            if (s == 1.0) has_one = true;
        if (!has_one) out.push_back(1.0);
    }
    return out;
}

inline void emit(const RunConfig& rc, const Json& as_json, const std::string& as_csv) {
    if (rc.out_path.empty()) {
        if (rc.format == "json")
            std::cout << as_json.dump(2) << "\n";
        else
            std::cout << as_csv;
        return;
    }
    io::atomic_write(rc.out_path, rc.format == "json" ? as_json.dump(2) + "\n" : as_csv);
    io::write_sidecar(rc.out_path);
    // CSV mirror next to a JSON report
    if (rc.format == "json" && !as_csv.empty()) io::atomic_write(rc.out_path + ".csv", as_csv);
}

inline int run_det(const RunConfig& rc) {
    ProblemConfig cfg = load(rc);
    ProblemLQ p = cfg.build();
    DoubledProblem dp = double_system(p, cfg.boundary, cfg.metrics);
    DeterminantEngine engine(dp, rc.seed);
    DetReport rep = engine.report(s_values(rc));

    const double lo = rep.samples.front().s;
    const double hi = rep.samples.back().s;
    if (hi > lo) {
        auto zeros = scan_zeros([&](double s) { return engine.determinant(s); }, lo, hi, 1e-10,
                                std::max(64, int(rep.samples.size())));
        for (const auto& z : zeros) {
            DetZero dz;
            dz.s0 = z.lambda0;
            dz.order = z.order;
            dz.order_flagged = z.order_flagged;
            rep.zeros.push_back(dz);
        }
    }
    emit(rc, det_report_to_json(rep, cfg.resolved), det_report_csv(rep));
    return 0;
}

inline int run_scan(const RunConfig& rc) {
    ProblemConfig cfg = load(rc);
    if (cfg.kind != ProblemKind::Schrodinger)
        throw InputError("scan requires a problem of kind \"schrodinger\"");

    auto det_at = [&](double lam) {
        ProblemLQ p = cfg.build_with_lambda(lam);
        DoubledProblem dp = double_system(p, cfg.boundary, cfg.metrics);
        DeterminantEngine engine(dp, rc.seed);
        return engine.determinant(1.0);
    };
    auto zeros = scan_zeros(det_at, rc.lambda_lo, rc.lambda_hi);

    std::string csv = rc.verify ? "lambda0,order,kernel_dim\n" : "lambda0,order\n";
    Json jz = Json::array();
    char buf[160];
    for (const auto& z : zeros) {
        int kdim = -1;
        if (rc.verify) {
            ProblemLQ p = cfg.build_with_lambda(z.lambda0);
            DoubledProblem dp = double_system(p, cfg.boundary, cfg.metrics);
            kdim = kernel_dimension(assemble_K(dp, rc.m), 1.0);
        }
        if (rc.verify)
            std::snprintf(buf, sizeof buf, "%.12g,%d,%d\n", z.lambda0, z.order, kdim);
        else
            std::snprintf(buf, sizeof buf, "%.12g,%d\n", z.lambda0, z.order);
        csv += buf;
        Json row;
        row["lambda0"] = z.lambda0;
        row["order"] = z.order;
        row["even_order_detection"] = z.even_order;
        if (kdim >= 0) row["kernel_dim"] = kdim;
        jz.push_back(row);
    }
    Json j;
    j["schema"] = "jacdet-scan/1";
    j["config"] = cfg.resolved;
    j["lambda_range"] = {rc.lambda_lo, rc.lambda_hi};
    j["zeros"] = jz;
    RunConfig rc_csv = rc;
    if (rc_csv.format == "json" && !rc_csv.out_path.empty()) {
        // scans are primarily CSV artifacts per the interface contract
    }
    emit(rc_csv, j, csv);
    return 0;
}

inline int run_oracle(const RunConfig& rc) {
    ProblemConfig cfg = load(rc);
    ProblemLQ p = cfg.build();
    DoubledProblem dp = double_system(p, cfg.boundary, cfg.metrics);
    SpectrumReport rep = pv_spectrum(assemble_K(dp, rc.m));
    emit(rc, spectrum_report_to_json(rep, cfg.resolved), spectrum_csv(rep));
    return 0;
}

inline int run_compare(const RunConfig& rc, std::ostream& os = std::cout) {
    ProblemConfig cfg = load(rc);
    ProblemLQ p = cfg.build();
    DoubledProblem dp = double_system(p, cfg.boundary, cfg.metrics);
    DeterminantEngine engine(dp, rc.seed);

    const double det_formula = engine.determinant(1.0);
    const double tr_formula = engine.normalization().trK;
    RefineTable table = refine(dp, rc.m);

    const double det_oracle = table.pv_det_extrapolated;
    const double tr_oracle = table.pv_trace_extrapolated;
    const double det_gap = std::abs(det_formula - det_oracle);
    const double tr_gap = std::abs(tr_formula - tr_oracle);
    const double det_tol =
        rc.tol_det > 0 ? rc.tol_det : std::max(0.02 * std::abs(det_oracle), 5e-3);
    const bool det_ok = det_gap <= det_tol;
    const bool tr_ok = tr_gap <= rc.tol_trace;

    char line[256];
    os << "quantity       formula           oracle            abs_gap      rel_gap      status\n";
    auto rel = [](double gap, double ref) { return gap / std::max(std::abs(ref), 1e-15); };
    std::snprintf(line, sizeof line, "det(I+K)   %16.9e %16.9e %12.3e %12.3e  %s\n", det_formula,
                  det_oracle, det_gap, rel(det_gap, det_oracle), det_ok ? "PASS" : "FAIL");
    os << line;
    std::snprintf(line, sizeof line, "trace(K)   %16.9e %16.9e %12.3e %12.3e  %s\n", tr_formula,
                  tr_oracle, tr_gap, rel(tr_gap, tr_oracle), tr_ok ? "PASS" : "FAIL");
    os << line;
    if (!table.monotone) os << "note: oracle refinement convergence is not monotone\n";

    if (!rc.out_path.empty()) {
        Json j;
        j["schema"] = "jacdet-compare/1";
        j["config"] = cfg.resolved;
        j["det_formula"] = det_formula;
        j["det_oracle_extrapolated"] = det_oracle;
        j["trace_formula"] = tr_formula;
        j["trace_oracle_extrapolated"] = tr_oracle;
        j["det_pass"] = det_ok;
        j["trace_pass"] = tr_ok;
        Json rows = Json::array();
        for (const auto& r : table.rows) {
            Json row;
            row["m"] = r.m;
            row["pv_det"] = r.pv_det;
            row["pv_trace"] = r.pv_trace;
            rows.push_back(row);
        }
        j["refinement"] = rows;
        io::atomic_write(rc.out_path, j.dump(2) + "\n");
        io::write_sidecar(rc.out_path);
    }
    return (det_ok && tr_ok) ? 0 : 1;
}

/// Structural-invariant battery over the built-in example problems.
inline int run_selftest(std::ostream& os = std::cout) {
    int failures = 0;
    auto check = [&](bool ok, const std::string& what) {
        os << (ok ? "[PASS] " : "[FAIL] ") << what << "\n";
        if (!ok) ++failures;
    };

    TimeGrid grid{256};
    const int n = 1;
    auto W0 = [n](double) { return Mat::Zero(n, n); };
    auto Wosc = [n](double) { return Mat(-M_PI * M_PI * Mat::Identity(n, n)); };

    for (auto& [name, W] : std::vector<std::pair<std::string, MatFn>>{{"W=0", W0},
                                                                      {"W=-pi^2", Wosc}}) {
        ProblemLQ p = build_driftless(W, n, grid);
        MetricPair g = MetricPair::identity(n);
        BoundarySubspace bc = boundary_periodic(n);
        DoubledProblem dp = double_system(p, bc, g);

        FlowSolution fl = fundamental_solution(p, 1.0);
        check(fl.max_symplectic_defect(SymplecticFrame{n}.J_std()) < 1e-8,
              name + ": flow symplecticity <= 1e-8");
        check(bc.isotropy_defect() < 1e-12, name + ": boundary isotropy <= 1e-12");
        for (double s : {-1.0, 0.0, 0.5, 2.0}) {
            const Mat a0 = map_A0(s, g);
            const Mat a1 = map_A1(s, g, p.phiTilde);
            check(symplecticity_defect(SymplecticFrame{n}, a0) < 1e-12 &&
                      symplecticity_defect(SymplecticFrame{n}, a1) < 1e-12,
                  name + ": A_i^s symplectic at s=" + std::to_string(s));
        }
        DeterminantEngine engine(dp);
        const GalerkinK gk = assemble_K(dp, 64);
        check(gk.constraint_residual < 1e-10, name + ": oracle constraint residual <= 1e-10");
        const SpectrumReport rep = pv_spectrum(gk);
        const double det_gap = std::abs(engine.determinant(1.0) - rep.pv_det);
        check(det_gap < std::max(0.05 * std::abs(rep.pv_det), 2e-2),
              name + ": coarse oracle/formula agreement");
    }
    os << (failures ? "selftest: FAILED\n" : "selftest: ok\n");
    return failures ? 1 : 0;
}

}  // namespace cli

inline int run_command(const RunConfig& rc) {
    try {
        rc.validate();
        if (rc.command == "det") return cli::run_det(rc);
        if (rc.command == "scan") return cli::run_scan(rc);
        if (rc.command == "oracle") return cli::run_oracle(rc);
        if (rc.command == "compare") return cli::run_compare(rc);
        if (rc.command == "selftest") return cli::run_selftest();
        throw InputError("unknown command: " + rc.command);
    } catch (const DegenerateMetricError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace jacdet
