#pragma once

/*
 * io.hpp — problem configs (schema jacdet-problem/1), report emission
 * (jacdet-report/1, jacdet-spectrum/1) and CSV mirrors.
 *
 * Matrix-valued functions accept three forms:
 *   constant          [[...]] (or a bare number for 1x1)
 *   Fourier series    {"fourier": {"a0": M, "cos": [M...], "sin": [M...]}}
 *                     f(t) = a0 + sum_j cos[j-1] cos(2 pi j t) + sin[j-1] sin(2 pi j t)
 *   dense samples     {"samples": [M, ...]} on uniform nodes incl. endpoints
 *                     (linearly interpolated between nodes)
 *
 * Reports are written atomically (temp file + rename); timestamps go to a
 * ".meta.json" sidecar so the main output is byte-reproducible.
 */

#include "jacdet/determinant.hpp"
#include "jacdet/oracle.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>

namespace jacdet {

using Json = nlohmann::ordered_json;

namespace io {

inline Mat parse_matrix(const Json& j, const std::string& path) {
    if (j.is_number()) {
        Mat m(1, 1);
        m(0, 0) = j.get<double>();
        return m;
    }
    if (!j.is_array() || j.empty())
        throw InputError("expected a matrix at " + path);
    if (!j[0].is_array()) {  // flat vector -> column
        Mat m(int(j.size()), 1);
        for (size_t i = 0; i < j.size(); ++i) m(int(i), 0) = j[i].get<double>();
        return m;
    }
    const int rows = int(j.size());
    const int cols = int(j[0].size());
    Mat m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        if (int(j[size_t(r)].size()) != cols)
            throw InputError("ragged matrix rows at " + path);
        for (int c = 0; c < cols; ++c) m(r, c) = j[size_t(r)][size_t(c)].get<double>();
    }
    return m;
}

inline Json matrix_to_json(const Mat& m) {
    Json rows = Json::array();
    for (int r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

inline MatFn parse_matfn(const Json& j, const std::string& path) {
    if (j.is_number() || j.is_array()) {
        const Mat m = parse_matrix(j, path);
        return [m](double) { return m; };
    }
    if (j.is_object() && j.contains("fourier")) {
        const Json& f = j.at("fourier");
        const Mat a0 = f.contains("a0") ? parse_matrix(f.at("a0"), path + ".fourier.a0") : Mat();
        std::vector<Mat> cs, sn;
        if (f.contains("cos"))
            for (size_t i = 0; i < f.at("cos").size(); ++i)
                cs.push_back(parse_matrix(f.at("cos")[i], path + ".fourier.cos"));
        if (f.contains("sin"))
            for (size_t i = 0; i < f.at("sin").size(); ++i)
                sn.push_back(parse_matrix(f.at("sin")[i], path + ".fourier.sin"));
        Mat base = a0;
        if (base.size() == 0) {
            if (!cs.empty())
                base = Mat::Zero(cs[0].rows(), cs[0].cols());
            else if (!sn.empty())
                base = Mat::Zero(sn[0].rows(), sn[0].cols());
            else
                throw InputError("empty Fourier spec at " + path);
        }
        return [base, cs, sn](double t) {
            Mat out = base;
            for (size_t j2 = 0; j2 < cs.size(); ++j2)
                out += cs[j2] * std::cos(2.0 * M_PI * double(j2 + 1) * t);
            for (size_t j2 = 0; j2 < sn.size(); ++j2)
                out += sn[j2] * std::sin(2.0 * M_PI * double(j2 + 1) * t);
            return out;
        };
    }
    if (j.is_object() && j.contains("samples")) {
        std::vector<Mat> samples;
        for (size_t i = 0; i < j.at("samples").size(); ++i)
            samples.push_back(parse_matrix(j.at("samples")[i], path + ".samples"));
        if (samples.size() < 2) throw InputError("need at least 2 samples at " + path);
        return [samples](double t) {
            const double x = std::clamp(t, 0.0, 1.0) * double(samples.size() - 1);
            const int i = std::min(int(x), int(samples.size()) - 2);
            const double w = x - i;
            return Mat((1.0 - w) * samples[size_t(i)] + w * samples[size_t(i) + 1]);
        };
    }
    throw InputError("unrecognized matrix-function spec at " + path);
}

}  // namespace io

enum class ProblemKind { Driftless, Drift, Schrodinger, Custom };

/// Parsed jacdet-problem/1 configuration plus builders for the engine inputs.
struct ProblemConfig {
    ProblemKind kind = ProblemKind::Driftless;
    int n = 1;
    int k = 1;
    TimeGrid grid;
    MatFn W;                   // driftless
    MatFn R;                   // schrodinger / drift cost
    double lambda = 0.0;       // schrodinger
    MatFn A, B;                // drift
    std::optional<MatFn> H;    // raw control-cost Hessian (default -I)
    std::vector<Mat> customZ;  // custom
    Mat customPhiTilde;
    BoundarySubspace boundary;
    MetricPair metrics;
    Json resolved;  // the config as parsed, embedded into reports

    ProblemLQ build() const { return build_with_lambda(lambda); }

    ProblemLQ build_with_lambda(double lam) const {
        ProblemLQ p;
        switch (kind) {
            case ProblemKind::Driftless:
                p = build_driftless(W, n, grid);
                break;
            case ProblemKind::Schrodinger:
                p = build_schrodinger(R, lam, n, grid);
                break;
            case ProblemKind::Drift:
                p = build_drift(A, B, R, n, k, grid);
                break;
            case ProblemKind::Custom:
                p = build_custom(n, k, grid, customZ, customPhiTilde);
                break;
        }
        if (H) p.Z = normalize_legendre(grid, p.Z, *H);
        return p;
    }

    /// Direct-lift monodromy for hill_reference (independent of the Jacobi flow).
    std::optional<Mat> direct_monodromy(double lam) const {
        switch (kind) {
            case ProblemKind::Driftless:
                return monodromy_driftless_direct(W, n, grid);
            case ProblemKind::Schrodinger: {
                auto Wl = [this, lam](double t) {
                    return Mat(R(t) + lam * Mat::Identity(n, n));
                };
                return monodromy_driftless_direct(Wl, n, grid);
            }
            case ProblemKind::Drift:
                return monodromy_drift_direct(A, B, R, n, grid);
            case ProblemKind::Custom:
                return std::nullopt;
        }
        return std::nullopt;
    }
};

inline ProblemConfig parse_problem_config(const Json& j) {
    ProblemConfig cfg;
    if (!j.is_object()) throw InputError("problem config must be a JSON object at $");
    if (j.value("schema", std::string("jacdet-problem/1")) != "jacdet-problem/1")
        throw InputError("unsupported schema at $.schema");

    const std::string kind = j.value("kind", std::string());
    if (kind == "driftless")
        cfg.kind = ProblemKind::Driftless;
    else if (kind == "drift")
        cfg.kind = ProblemKind::Drift;
    else if (kind == "schrodinger")
        cfg.kind = ProblemKind::Schrodinger;
    else if (kind == "custom")
        cfg.kind = ProblemKind::Custom;
    else
        throw InputError("kind must be driftless|drift|schrodinger|custom at $.kind");

    cfg.n = j.value("n", 1);
    if (cfg.n < 1 || cfg.n > 64) throw InputError("n out of range [1,64] at $.n");
    cfg.k = j.value("k", cfg.n);
    if (cfg.k < 1 || cfg.k > 64) throw InputError("k out of range [1,64] at $.k");
    cfg.grid.steps = j.value("grid", 1024);
    if (cfg.grid.steps < 16 || cfg.grid.steps > (1 << 20))
        throw InputError("grid out of range [16, 2^20] at $.grid");

    switch (cfg.kind) {
        case ProblemKind::Driftless:
            if (!j.contains("W")) throw InputError("driftless problems need $.W");
            cfg.W = io::parse_matfn(j.at("W"), "$.W");
            cfg.k = cfg.n;
            break;
        case ProblemKind::Schrodinger:
            if (!j.contains("R")) throw InputError("schrodinger problems need $.R");
            cfg.R = io::parse_matfn(j.at("R"), "$.R");
            cfg.lambda = j.value("lambda", 0.0);
            cfg.k = cfg.n;
            break;
        case ProblemKind::Drift:
            for (const char* f : {"A", "B", "R"})
                if (!j.contains(f)) throw InputError(std::string("drift problems need $.") + f);
            cfg.A = io::parse_matfn(j.at("A"), "$.A");
            cfg.B = io::parse_matfn(j.at("B"), "$.B");
            cfg.R = io::parse_matfn(j.at("R"), "$.R");
            break;
        case ProblemKind::Custom: {
            if (!j.contains("Z") || !j.contains("phiTilde"))
                throw InputError("custom problems need $.Z and $.phiTilde");
            const MatFn zfn = io::parse_matfn(j.at("Z"), "$.Z");
            cfg.customZ = sample(cfg.grid, zfn);
            cfg.customPhiTilde = io::parse_matrix(j.at("phiTilde"), "$.phiTilde");
            break;
        }
    }
    if (j.contains("H")) cfg.H = io::parse_matfn(j.at("H"), "$.H");

    // boundary
    if (!j.contains("boundary") || (j.at("boundary").is_string() &&
                                    j.at("boundary").get<std::string>() == "periodic")) {
        cfg.boundary = boundary_periodic(cfg.n);
    } else if (j.at("boundary").is_object() && j.at("boundary").contains("graph")) {
        cfg.boundary = boundary_graph(io::parse_matrix(j.at("boundary").at("graph"),
                                                       "$.boundary.graph"));
    } else if (j.at("boundary").is_object() && j.at("boundary").contains("separated")) {
        const Json& sep = j.at("boundary").at("separated");
        if (!sep.contains("T0") || !sep.contains("T1"))
            throw InputError("separated boundary needs $.boundary.separated.{T0,T1}");
        cfg.boundary = boundary_separated(io::parse_matrix(sep.at("T0"), "$.boundary.separated.T0"),
                                          io::parse_matrix(sep.at("T1"), "$.boundary.separated.T1"));
    } else {
        throw InputError("boundary must be \"periodic\", {graph: F} or {separated: {T0, T1}} "
                         "at $.boundary");
    }

    // metrics
    if (j.contains("metrics")) {
        const Json& m = j.at("metrics");
        const Mat g0 = m.contains("G0") ? io::parse_matrix(m.at("G0"), "$.metrics.G0")
                                        : Mat(Mat::Identity(2 * cfg.n, 2 * cfg.n));
        const Mat g1 = m.contains("G1") ? io::parse_matrix(m.at("G1"), "$.metrics.G1")
                                        : Mat(Mat::Identity(2 * cfg.n, 2 * cfg.n));
        cfg.metrics = MetricPair::from_blocks(g0.topLeftCorner(cfg.n, cfg.n),
                                              g0.bottomRightCorner(cfg.n, cfg.n),
                                              g1.topLeftCorner(cfg.n, cfg.n),
                                              g1.bottomRightCorner(cfg.n, cfg.n));
        if (max_abs(g0.topRightCorner(cfg.n, cfg.n)) > 0 ||
            max_abs(g1.topRightCorner(cfg.n, cfg.n)) > 0)
            throw InputError("metrics must be block-diagonal at $.metrics");
    } else {
        cfg.metrics = MetricPair::identity(cfg.n);
    }

    cfg.resolved = j;
    return cfg;
}

inline ProblemConfig load_problem_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open problem file: " + path);
    Json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw InputError("problem file " + path + " is not valid JSON: " + e.what());
    }
    return parse_problem_config(j);
}

namespace io {

inline void atomic_write(const std::string& path, const std::string& contents) {
    namespace fs = std::filesystem;
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    const fs::path tmp = p.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << contents;
    }
    fs::rename(tmp, p);
}

inline void write_sidecar(const std::string& path) {
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    Json meta;
    meta["written_at_unix_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
    atomic_write(path + ".meta.json", meta.dump(2) + "\n");
}

}  // namespace io

inline Json det_report_to_json(const DetReport& rep, const Json& resolved_config) {
    Json j;
    j["schema"] = "jacdet-report/1";
    j["config"] = resolved_config;
    j["a"] = rep.norm.a;
    j["b"] = rep.norm.b;
    j["trace_K"] = rep.norm.trK;
    j["logderiv"] = rep.norm.logderiv;
    Json samples = Json::array();
    for (const auto& s : rep.samples) {
        Json row;
        row["s"] = s.s;
        row["det_Q"] = s.det_Q;
        row["det_IK"] = s.det_IK;
        samples.push_back(row);
    }
    j["samples"] = samples;
    Json zeros = Json::array();
    for (const auto& z : rep.zeros) {
        Json row;
        row["s0"] = z.s0;
        row["order"] = z.order;
        row["order_flagged"] = z.order_flagged;
        if (z.oracle_kernel_dim >= 0) row["oracle_kernel_dim"] = z.oracle_kernel_dim;
        zeros.push_back(row);
    }
    j["zeros"] = zeros;
    Json diag;
    diag["cond_M0"] = rep.cond_M0;
    diag["symplectic_defect"] = rep.symplectic_defect;
    diag["logderiv_fd_rel_err"] = rep.norm.logderiv_fd_rel_err;
    diag["metric_perturbed"] = rep.norm.metric_perturbed;
    if (rep.norm.metric_perturbed) diag["perturb_seed"] = rep.norm.perturb_seed;
    j["diagnostics"] = diag;
    return j;
}

inline std::string det_report_csv(const DetReport& rep) {
    std::string out = "s,det_Q,det_IK\n";
    char buf[128];
    for (const auto& s : rep.samples) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", s.s, s.det_Q, s.det_IK);
        out += buf;
    }
    return out;
}

inline Json spectrum_report_to_json(const SpectrumReport& rep, const Json& resolved_config) {
    Json j;
    j["schema"] = "jacdet-spectrum/1";
    j["config"] = resolved_config;
    j["m"] = rep.m;
    j["pv_trace"] = rep.pv_trace;
    j["pv_det"] = rep.pv_det;
    j["symmetry_defect"] = rep.symmetry_defect;
    j["constraint_residual"] = rep.constraint_residual;
    j["strictly_normal"] = rep.strictly_normal;
    Json cap;
    cap["xi"] = rep.capacity.xi;
    cap["residual"] = rep.capacity.residual;
    cap["samples"] = rep.capacity.samples;
    j["capacity"] = cap;
    Json pair;
    pair["pairs"] = rep.pairing.pairs;
    pair["worst_mismatch"] = rep.pairing.worst_mismatch;
    j["pairing"] = pair;
    j["eigenvalues"] = rep.eigenvalues;
    return j;
}

inline std::string spectrum_csv(const SpectrumReport& rep) {
    std::string out = "index,mu\n";
    char buf[64];
    for (size_t i = 0; i < rep.eigenvalues.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, rep.eigenvalues[i]);
        out += buf;
    }
    return out;
}

}  // namespace jacdet
