#pragma once

/*
 * problem.hpp — normalized linear-quadratic problem data along an extremal.
 *
 * A ProblemLQ holds the Legendre-normalized samples Z_t (2n x k) on the fine
 * grid and the backtracking differential PhiT at t = 1 (fiber-preserving,
 * upper block-triangular in (p,q)). Builders cover the three application
 * families:
 *
 *   driftless  dq = u, cost 1/2 int |u|^2 + <W q, q>, dynamics q'' = W q.
 *              Internally R := -W, giving Z_t = (int_0^t R; I) and
 *              PhiT = [[I, -int_0^1 R],[0, I]].
 *   schrodinger driftless with W = R + lambda.
 *   drift      dq = A q + B u, cost 1/2 int |u|^2 + <R q, q>;
 *              Z_t = PhiT_t^{-1} (0; B_t) computed numerically.
 */

#include "jacdet/boundary.hpp"
#include "jacdet/grid.hpp"
#include "jacdet/symplectic.hpp"

#include <string>
#include <vector>

namespace jacdet {

struct ProblemLQ {
    int n = 1;
    int k = 1;
    TimeGrid grid;
    std::vector<Mat> Z;  // fine-grid samples, 2n x k
    Mat phiTilde;        // 2n x 2n, symplectic, fiber-preserving
    std::string label = "custom";

    Mat X(int i) const { return Z[size_t(i)].bottomRows(n); }
    Mat Y(int i) const { return Z[size_t(i)].topRows(n); }

    /// Gamma = int_0^1 X X' dt (strict normality requires this SPD).
    Mat gamma() const {
        std::vector<Mat> f;
        f.reserve(Z.size());
        for (size_t i = 0; i < Z.size(); ++i) {
            const Mat x = Z[i].bottomRows(n);
            f.push_back(x * x.transpose());
        }
        return integrate_simpson(f, grid.fine_h());
    }

    void validate() const {
        if (int(Z.size()) != grid.fine_count()) throw InputError("Z sample count does not match grid");
        SymplecticFrame fr{n};
        if (symplecticity_defect(fr, phiTilde) > 1e-10)
            throw Error("phiTilde is not symplectic (defect > 1e-10)");
        if (max_abs(phiTilde.bottomLeftCorner(n, n)) > 1e-12)
            throw Error("phiTilde is not fiber-preserving (lower-left block nonzero)");
        const Mat g = gamma();
        Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(g));
        const double lo = es.eigenvalues().minCoeff();
        const double hi = es.eigenvalues().maxCoeff();
        if (lo <= 0.0 || hi / lo > 1e12)
            throw Error("problem is not strictly normal: Gamma = int X X' dt is singular "
                        "(condition number > 1e12)");
    }
};

/// Change of coordinates v -> (-H)^{1/2} v so the control-block metric becomes
/// the identity: Z <- Z (-H)^{-1/2}. Requires -H_t SPD uniformly on the grid
/// (strong Legendre condition).
inline std::vector<Mat> normalize_legendre(const TimeGrid& grid, const std::vector<Mat>& Zraw,
                                           const MatFn& H) {
    std::vector<Mat> out;
    out.reserve(Zraw.size());
    for (int i = 0; i < grid.fine_count(); ++i) {
        const double t = grid.fine_t(i);
        const Mat negH = -H(t);
        Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(negH));
        const double lo = es.eigenvalues().minCoeff();
        if (lo <= 0.0)
            throw InputError("strong Legendre condition fails at t = " + std::to_string(t) +
                             ": smallest eigenvalue of -H_t is " + std::to_string(lo));
        const Mat inv_sqrt = es.operatorInverseSqrt();
        out.push_back(Zraw[size_t(i)] * inv_sqrt);
    }
    return out;
}

/// Driftless family parametrized by the potential W (dynamics q'' = W q).
inline ProblemLQ build_driftless(const MatFn& W, int n, const TimeGrid& grid = {}) {
    ProblemLQ p;
    p.n = n;
    p.k = n;
    p.grid = grid;
    p.label = "driftless";
    std::vector<Mat> R;
    R.reserve(grid.fine_count());
    for (int i = 0; i < grid.fine_count(); ++i) R.push_back(-W(grid.fine_t(i)));
    const auto cumR = cumulative_simpson(R, grid.fine_h());
    p.Z.reserve(grid.fine_count());
    for (int i = 0; i < grid.fine_count(); ++i) {
        Mat z(2 * n, n);
        z.topRows(n) = cumR[size_t(i)];
        z.bottomRows(n) = Mat::Identity(n, n);
        p.Z.push_back(std::move(z));
    }
    p.phiTilde = Mat::Identity(2 * n, 2 * n);
    p.phiTilde.topRightCorner(n, n) = -cumR.back();
    return p;
}

inline ProblemLQ build_schrodinger(const MatFn& R, double lambda, int n, const TimeGrid& grid = {}) {
    ProblemLQ p = build_driftless(
        [&](double t) { return Mat(R(t) + lambda * Mat::Identity(n, n)); }, n, grid);
    p.label = "schrodinger";
    return p;
}

namespace detail {

/// Fundamental solution of dq = A_t q at every fine node (RK4, one fine
/// interval per step, coefficients evaluated at true quarter points).
inline std::vector<Mat> integrate_linear(const TimeGrid& grid, const MatFn& A) {
    const Mat a0 = A(0.0);
    const int n = int(a0.rows());
    std::vector<Mat> fine;
    fine.reserve(grid.fine_count());
    fine.push_back(Mat::Identity(n, n));
    const double h = grid.fine_h();
    for (int i = 0; i + 1 < grid.fine_count(); ++i) {
        const double t = grid.fine_t(i);
        const Mat a1 = A(t);
        const Mat am = A(t + 0.5 * h);
        const Mat a2 = A(t + h);
        const Mat& y = fine.back();
        const Mat k1 = a1 * y;
        const Mat k2 = am * (y + 0.5 * h * k1);
        const Mat k3 = am * (y + 0.5 * h * k2);
        const Mat k4 = a2 * (y + h * k3);
        fine.push_back(y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    }
    return fine;
}

}  // namespace detail

/// Drift family dq = A q + B u with cost 1/2 int |u|^2 + <R q, q>.
/// Z_t = PhiT_t^{-1} (0; B_t) is computed numerically from the integrated flow
/// rather than from a transcribed closed form.
inline ProblemLQ build_drift(const MatFn& A, const MatFn& B, const MatFn& R, int n, int k,
                             const TimeGrid& grid = {}) {
    const auto Ph = detail::integrate_linear(grid, A);

    std::vector<Mat> prp;  // Ph' R Ph samples
    prp.reserve(grid.fine_count());
    for (int i = 0; i < grid.fine_count(); ++i)
        prp.push_back(Ph[size_t(i)].transpose() * R(grid.fine_t(i)) * Ph[size_t(i)]);
    const auto cum = cumulative_simpson(prp, grid.fine_h());

    ProblemLQ p;
    p.n = n;
    p.k = k;
    p.grid = grid;
    p.label = "drift";
    p.Z.reserve(grid.fine_count());
    for (int i = 0; i < grid.fine_count(); ++i) {
        // PhiT_t^{-1} = [[Ph', cum Ph^{-1}],[0, Ph^{-1}]]
        const Mat pinvB = Ph[size_t(i)].partialPivLu().solve(B(grid.fine_t(i)));
        Mat z(2 * n, k);
        z.topRows(n) = cum[size_t(i)] * pinvB;
        z.bottomRows(n) = pinvB;
        p.Z.push_back(std::move(z));
    }
    const Mat phT_inv = Ph.back().transpose();
    p.phiTilde = Mat::Zero(2 * n, 2 * n);
    p.phiTilde.topLeftCorner(n, n) = phT_inv.partialPivLu().solve(Mat::Identity(n, n));
    p.phiTilde.topRightCorner(n, n) = -p.phiTilde.topLeftCorner(n, n) * cum.back();
    p.phiTilde.bottomRightCorner(n, n) = Ph.back();
    p.validate();
    return p;
}

/// User-supplied samples (already Legendre-normalized).
inline ProblemLQ build_custom(int n, int k, const TimeGrid& grid, std::vector<Mat> Z,
                              const Mat& phiTilde) {
    ProblemLQ p;
    p.n = n;
    p.k = k;
    p.grid = grid;
    p.Z = std::move(Z);
    p.phiTilde = phiTilde;
    p.label = "custom";
    p.validate();
    return p;
}

/*
 * Doubled system on M x M: trivial dynamics on the first factor convert the
 * boundary manifold N into separated conditions diagonal x N. Doubled vectors
 * are factor-major, (p1,q1,p2,q2); the symplectic form is (-sigma)+sigma and
 * the metrics are g~0 = g0+g0, g~1 = g0+g1.
 */
struct DoubledProblem {
    ProblemLQ base;
    BoundarySubspace bc;
    MetricPair metrics;

    Mat Zt0;  // 4n x n,    (0; I; 0; I)
    Mat Zt1;  // 4n x d,    ((0; X0); PhiT^{-1} (0; X1))
    Mat Gt0;  // 4n x 4n,   diag(G0, G0)
    Mat Gt1;  // 4n x 4n,   diag(G0, G1)

    int n() const { return base.n; }
    int dimN() const { return bc.dimN(); }

    Mat J_doubled() const {
        const int twon = 2 * base.n;
        const Mat j = SymplecticFrame{base.n}.J_sigma();
        Mat out = Mat::Zero(2 * twon, 2 * twon);
        out.topLeftCorner(twon, twon) = -j;
        out.bottomRightCorner(twon, twon) = j;
        return out;
    }

    /// Doubled flow differential diag(I, PhiT).
    Mat phi_doubled() const {
        const int twon = 2 * base.n;
        Mat out = Mat::Identity(2 * twon, 2 * twon);
        out.bottomRightCorner(twon, twon) = base.phiTilde;
        return out;
    }

    /// Fine-grid doubled sample (0; Z_t).
    Mat Ztil(int i) const {
        Mat z = Mat::Zero(4 * base.n, base.k);
        z.bottomRows(2 * base.n) = base.Z[size_t(i)];
        return z;
    }
};

inline DoubledProblem double_system(const ProblemLQ& p, const BoundarySubspace& bc,
                                    const MetricPair& metrics) {
    if (bc.n != p.n) throw InputError("boundary data dimension does not match problem");
    if (metrics.n != p.n) throw InputError("metric dimension does not match problem");
    const int n = p.n;
    const int d = bc.dimN();

    DoubledProblem dp;
    dp.base = p;
    dp.bc = bc;
    dp.metrics = metrics;

    dp.Zt0 = Mat::Zero(4 * n, n);
    dp.Zt0.block(n, 0, n, n) = Mat::Identity(n, n);
    dp.Zt0.block(3 * n, 0, n, n) = Mat::Identity(n, n);

    Mat hor1(2 * n, d);
    hor1.topRows(n) = Mat::Zero(n, d);
    hor1.bottomRows(n) = bc.X1;
    dp.Zt1 = Mat::Zero(4 * n, d);
    dp.Zt1.block(n, 0, n, d) = bc.X0;
    dp.Zt1.bottomRows(2 * n) = p.phiTilde.partialPivLu().solve(hor1);

    dp.Gt0 = Mat::Zero(4 * n, 4 * n);
    dp.Gt0.topLeftCorner(2 * n, 2 * n) = metrics.G0;
    dp.Gt0.bottomRightCorner(2 * n, 2 * n) = metrics.G0;
    dp.Gt1 = Mat::Zero(4 * n, 4 * n);
    dp.Gt1.topLeftCorner(2 * n, 2 * n) = metrics.G0;
    dp.Gt1.bottomRightCorner(2 * n, 2 * n) = metrics.G1;
    return dp;
}

}  // namespace jacdet
