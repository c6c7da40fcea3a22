#pragma once

/*
 * oracle.hpp — independent Galerkin ground truth for the operator K.
 *
 * The compact part of the second variation acts on
 *   H = R^n + L^2([0,1], R^k) + R^{dim N}
 * as
 *   K u = ( -u0,
 *           -Ztil_t' Jtil (int_0^t Ztil u + Zt0 u0),
 *           -u1 - Lambda(u) ),
 * with Lambda the partial-inverse projection onto im(PhiTT Zt1). Controls are
 * discretized as piecewise constants on m cells; all Volterra integrals are
 * evaluated with cumulative Simpson on the fine grid, so the assembled form
 * is exact for the discretized controls up to quadrature error. The form is
 * restricted to an H-orthonormal basis of the constraint space V and
 * symmetrized; the pre-symmetrization defect is recorded.
 *
 * Principal-value quantities order the eigenvalues by |mu| descending, which
 * realizes the epsilon-cutoff prescription exactly at finite dimension.
 */

#include "jacdet/problem.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <vector>

namespace jacdet {

struct GalerkinK {
    int m = 64;          // time cells
    int n = 1, k = 1, d = 1;
    Mat matrix;          // symmetric compression of K to V
    Mat v_basis;         // H-orthonormal basis of V (columns, full coordinates)
    Mat constraint;      // C: full coordinates -> R^{2n}
    Mat h_gram;          // block-diagonal H inner product
    double symmetry_defect = 0.0;    // before symmetrization
    double constraint_residual = 0.0;
    double time_block_trace = 0.0;   // trace of the raw Volterra block
    bool strictly_normal = true;

    int dim() const { return n + m * k + d; }
};

namespace detail {

struct OracleWork {
    Mat F;   // F(v,u) = <K u, v>
    Mat Hg;
    Mat C;
};

inline OracleWork assemble_blocks(const DoubledProblem& dp, int m) {
    const int n = dp.base.n;
    const int k = dp.base.k;
    const int d = dp.dimN();
    const TimeGrid& grid = dp.base.grid;
    if (grid.steps % m != 0)
        throw InputError("oracle cell count m must divide the grid step count");
    const int per = 2 * grid.steps / m;  // fine intervals per cell (even)
    const double hfine = grid.fine_h();

    const Mat Jt = dp.J_doubled();
    const Mat PhiTT = dp.phi_doubled();
    const Mat W1 = PhiTT * dp.Zt1;
    const Mat B0 = dp.Zt0.transpose() * dp.Gt0 * dp.Zt0;
    const Mat B1 = W1.transpose() * dp.Gt1 * W1;

    // cumulative integral of Ztil on the fine grid
    std::vector<Mat> ztil(size_t(grid.fine_count()));
    for (int i = 0; i < grid.fine_count(); ++i) ztil[size_t(i)] = dp.Ztil(i);
    const auto cumZ = cumulative_simpson(ztil, hfine);

    std::vector<Mat> cell_int(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i)
        cell_int[size_t(i)] = cumZ[size_t((i + 1) * per)] - cumZ[size_t(i * per)];

    // within-cell double integrals int_cell Ztil' Jt (cumZ - cumZ(cell start))
    std::vector<Mat> diag_blk(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) {
        std::vector<Mat> integ(size_t(per) + 1);
        for (int j = 0; j <= per; ++j) {
            const int idx = i * per + j;
            integ[size_t(j)] = ztil[size_t(idx)].transpose() * Jt *
                               (cumZ[size_t(idx)] - cumZ[size_t(i * per)]);
        }
        diag_blk[size_t(i)] = integrate_simpson(integ, hfine);
    }

    const int dim = n + m * k + d;
    const int it = n;
    const int i1 = n + m * k;

    OracleWork w;
    w.F = Mat::Zero(dim, dim);
    w.F.block(0, 0, n, n) = -B0;
    for (int i = 0; i < m; ++i) {
        const int r = it + i * k;
        w.F.block(r, 0, k, n) = -cell_int[size_t(i)].transpose() * Jt * dp.Zt0;
        for (int j = 0; j < i; ++j)
            w.F.block(r, it + j * k, k, k) =
                -cell_int[size_t(i)].transpose() * Jt * cell_int[size_t(j)];
        w.F.block(r, r, k, k) = -diag_blk[size_t(i)];
    }
    if (d) {
        w.F.block(i1, 0, d, n) = -dp.Zt1.transpose() * Jt * dp.Zt0;
        for (int j = 0; j < m; ++j)
            w.F.block(i1, it + j * k, d, k) = -dp.Zt1.transpose() * Jt * cell_int[size_t(j)];
        w.F.block(i1, i1, d, d) = -B1 - dp.Zt1.transpose() * Jt * dp.Zt1;
    }

    w.Hg = Mat::Zero(dim, dim);
    w.Hg.block(0, 0, n, n) = B0;
    w.Hg.block(it, it, m * k, m * k) = (1.0 / m) * Mat::Identity(m * k, m * k);
    if (d) w.Hg.block(i1, i1, d, d) = B1;

    // constraint: horizontal components of Zt0 u0 + int Ztil u + Zt1 u1
    Mat pih = Mat::Zero(2 * n, 4 * n);
    pih.block(0, n, n, n) = Mat::Identity(n, n);
    pih.block(n, 3 * n, n, n) = Mat::Identity(n, n);
    w.C = Mat::Zero(2 * n, dim);
    w.C.block(0, 0, 2 * n, n) = pih * dp.Zt0;
    for (int j = 0; j < m; ++j) w.C.block(0, it + j * k, 2 * n, k) = pih * cell_int[size_t(j)];
    if (d) w.C.block(0, i1, 2 * n, d) = pih * dp.Zt1;
    return w;
}

}  // namespace detail

inline GalerkinK assemble_K(const DoubledProblem& dp, int m, bool allow_degenerate = false) {
    if (m < 4) throw InputError("oracle needs at least 4 cells");
    auto w = detail::assemble_blocks(dp, m);

    GalerkinK g;
    g.m = m;
    g.n = dp.base.n;
    g.k = dp.base.k;
    g.d = dp.dimN();
    g.h_gram = w.Hg;
    g.constraint = w.C;

    const int n = g.n;
    for (int i = 0; i < m * g.k; ++i) g.time_block_trace += w.F(n + i, n + i) * double(m);

    Eigen::JacobiSVD<Mat> svd(w.C, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    int rank = 0;
    const double cut = 1e-10 * (sv.size() ? sv(0) + 1.0 : 1.0);
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > cut) ++rank;
    g.strictly_normal = (rank == 2 * n);
    if (!g.strictly_normal && !allow_degenerate)
        throw Error("oracle constraint map is rank-deficient (problem violates strict normality)");

    Mat kb = svd.matrixV().rightCols(w.C.cols() - rank);
    // H-orthonormalize the kernel basis
    const Mat gram = kb.transpose() * w.Hg * kb;
    Eigen::LLT<Mat> llt(symmetrize(gram));
    if (llt.info() != Eigen::Success) throw Error("oracle H-gram is not positive definite");
    kb = llt.matrixL().solve(kb.transpose()).transpose();

    Mat mv = kb.transpose() * w.F * kb;
    g.symmetry_defect = max_abs(mv - mv.transpose());
    g.matrix = symmetrize(mv);
    g.v_basis = kb;

    double worst = 0.0;
    for (int j = 0; j < kb.cols(); ++j) worst = std::max(worst, (w.C * kb.col(j)).norm());
    g.constraint_residual = worst;
    return g;
}

struct CapacityFit {
    double xi = 0.0;
    double residual = 0.0;
    int samples = 0;
};

struct PairingDiagnostic {
    int pairs = 0;
    double worst_mismatch = 0.0;  // relative, over the largest pairs
};

struct SpectrumReport {
    int m = 0;
    std::vector<double> eigenvalues;  // sorted by |mu| descending
    double pv_trace = 0.0;
    double pv_det = 0.0;
    CapacityFit capacity;
    PairingDiagnostic pairing;
    double symmetry_defect = 0.0;
    double constraint_residual = 0.0;
    bool strictly_normal = true;

    double pv_det_at(double s) const {
        double prod = 1.0;
        for (double mu : eigenvalues) prod *= 1.0 + s * mu;
        return prod;
    }
};

inline SpectrumReport pv_spectrum(const GalerkinK& g) {
    Eigen::SelfAdjointEigenSolver<Mat> es(g.matrix);
    if (es.info() != Eigen::Success) throw Error("oracle eigendecomposition failed");
    std::vector<double> mu(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    std::sort(mu.begin(), mu.end(), [](double a, double b) { return std::abs(a) > std::abs(b); });

    SpectrumReport rep;
    rep.m = g.m;
    rep.eigenvalues = mu;
    rep.pv_trace = std::accumulate(mu.begin(), mu.end(), 0.0);
    rep.pv_det = rep.pv_det_at(1.0);
    rep.symmetry_defect = g.symmetry_defect;
    rep.constraint_residual = g.constraint_residual;
    rep.strictly_normal = g.strictly_normal;

    // capacity diagnostic: fit |mu_i| ~ xi / i on each sign family's tail
    std::vector<double> pos, neg;
    for (double v : mu) (v >= 0 ? pos : neg).push_back(std::abs(v));
    std::sort(pos.rbegin(), pos.rend());
    std::sort(neg.rbegin(), neg.rend());
    std::vector<double> prods;
    auto collect = [&](const std::vector<double>& fam) {
        const int lo = int(fam.size()) / 4;
        const int hi = int(fam.size()) / 2;
        for (int i = lo; i < hi; ++i) prods.push_back(fam[size_t(i)] * double(i + 1));
    };
    collect(pos);
    collect(neg);
    if (!prods.empty()) {
        std::sort(prods.begin(), prods.end());
        rep.capacity.xi = prods[prods.size() / 2];
        double dev = 0.0;
        for (double v : prods) dev = std::max(dev, std::abs(v - rep.capacity.xi));
        rep.capacity.residual = dev;
        rep.capacity.samples = int(prods.size());
    }

    // symmetric-pairing diagnostic over the largest pairs
    const double floor = 1e-6 * (mu.empty() ? 1.0 : std::abs(mu.front()));
    const int npairs = int(std::min(pos.size(), neg.size()));
    for (int i = 0; i < std::min(npairs, 10); ++i) {
        if (pos[size_t(i)] < floor && neg[size_t(i)] < floor) break;
        rep.pairing.pairs += 1;
        rep.pairing.worst_mismatch =
            std::max(rep.pairing.worst_mismatch,
                     std::abs(pos[size_t(i)] - neg[size_t(i)]) / std::max(pos[size_t(i)], floor));
    }
    return rep;
}

struct RefineRow {
    int m = 0;
    double pv_det = 0.0;
    double pv_trace = 0.0;
};

struct RefineTable {
    std::vector<RefineRow> rows;       // m0, 2 m0, 4 m0
    double pv_det_extrapolated = 0.0;  // Richardson in 1/m from the two finest
    double pv_trace_extrapolated = 0.0;
    double pv_det_error_estimate = 0.0;
    double pv_trace_error_estimate = 0.0;
    bool monotone = true;
    SpectrumReport finest;
};

inline RefineTable refine(const DoubledProblem& dp, int m0, double s = 1.0) {
    if (m0 < 8) throw InputError("refine needs m0 >= 8");
    auto run = [&](int m) {
        return pv_spectrum(assemble_K(dp, m));
    };
    auto f1 = std::async(std::launch::async, run, m0);
    auto f2 = std::async(std::launch::async, run, 2 * m0);
    auto f3 = std::async(std::launch::async, run, 4 * m0);
    SpectrumReport r1 = f1.get(), r2 = f2.get(), r3 = f3.get();

    RefineTable t;
    for (const SpectrumReport* r : {&r1, &r2, &r3})
        t.rows.push_back({r->m, r->pv_det_at(s), r->pv_trace});
    const double d1 = t.rows[0].pv_det, d2 = t.rows[1].pv_det, d3 = t.rows[2].pv_det;
    const double tr1 = t.rows[0].pv_trace, tr2 = t.rows[1].pv_trace, tr3 = t.rows[2].pv_trace;
    // first-order basis convergence: x(m) = x* + c/m
    t.pv_det_extrapolated = d3 + (d3 - d2);
    t.pv_trace_extrapolated = tr3 + (tr3 - tr2);
    t.pv_det_error_estimate = std::abs(d3 - d2);
    t.pv_trace_error_estimate = std::abs(tr3 - tr2);
    t.monotone = ((d2 - d1) * (d3 - d2) >= 0.0) && ((tr2 - tr1) * (tr3 - tr2) >= 0.0);
    t.finest = std::move(r3);
    return t;
}

/// Number of eigenvalues mu with |1 + s mu| <= tol.
inline int kernel_dimension(const GalerkinK& g, double s, double tol = 5e-2) {
    const SpectrumReport rep = pv_spectrum(g);
    int count = 0;
    for (double mu : rep.eigenvalues)
        if (std::abs(1.0 + s * mu) <= tol) ++count;
    return count;
}

inline int kernel_dimension(const SpectrumReport& rep, double s, double tol = 5e-2) {
    int count = 0;
    for (double mu : rep.eigenvalues)
        if (std::abs(1.0 + s * mu) <= tol) ++count;
    return count;
}

}  // namespace jacdet
