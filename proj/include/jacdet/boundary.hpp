#pragma once

/*
 * boundary.hpp — linearized boundary data.
 *
 * A boundary manifold N in M x M enters through two objects:
 *   - the tangent space to its annihilator A(N), a Lagrangian subspace of
 *     (R^{2n} x R^{2n}, (-sigma) + sigma), stored as a stacked basis (T0; T1);
 *   - the tangent space TN itself, stored as horizontal columns (X0; X1),
 *     which is what the flow machinery consumes.
 *
 * For a linear N the annihilator tangent splits as TN (horizontal) plus
 * Ann(TN) (vertical); builders produce both pieces consistently and user
 * supplied bases are validated against this split form.
 */

#include "jacdet/symplectic.hpp"

#include <optional>

namespace jacdet {

enum class BoundaryKind { Periodic, Graph, Separated };

struct BoundarySubspace {
    int n = 1;
    BoundaryKind kind = BoundaryKind::Periodic;
    Mat T0, T1;  // 2n x 2n stacked basis of T A(N)
    Mat X0, X1;  // n x d horizontal basis of TN (d = dim N)
    std::optional<Mat> graph_F;

    int dimN() const { return int(X0.cols()); }

    /// Residual of the (-sigma)+sigma isotropy relation T1' Jstd T1 - T0' Jstd T0.
    double isotropy_defect() const {
        const Mat j = SymplecticFrame{n}.J_std();
        return max_abs(T1.transpose() * j * T1 - T0.transpose() * j * T0);
    }

    double rank_gap() const {
        Mat stacked(4 * n, T0.cols());
        stacked << T0, T1;
        Eigen::JacobiSVD<Mat> svd(stacked);
        return svd.singularValues().size() ? svd.singularValues().minCoeff() : 0.0;
    }
};

namespace detail {

inline void check_isotropy(const BoundarySubspace& bc, double tol = 1e-12) {
    if (bc.isotropy_defect() > tol)
        throw InputError("boundary basis violates (-sigma)+sigma isotropy beyond tolerance");
    if (bc.rank_gap() < 1e-10)
        throw InputError("boundary basis (T0; T1) is rank deficient");
}

}  // namespace detail

/// Periodic boundary conditions: A(N) is the diagonal, T0 = T1 = I.
inline BoundarySubspace boundary_periodic(int n) {
    BoundarySubspace bc;
    bc.n = n;
    bc.kind = BoundaryKind::Periodic;
    bc.T0 = Mat::Identity(2 * n, 2 * n);
    bc.T1 = bc.T0;
    bc.X0 = Mat::Identity(n, n);
    bc.X1 = bc.X0;
    return bc;
}

/// Quasi-periodic N = graph(f) with linearization F: TN = {(X, FX)} and
/// T A(N) = {((F'p, q), (p, Fq))}.
inline BoundarySubspace boundary_graph(const Mat& F) {
    const int n = int(F.rows());
    if (F.cols() != n) throw InputError("graph boundary matrix F must be square");
    Eigen::FullPivLU<Mat> lu(F);
    if (!lu.isInvertible()) throw InputError("graph boundary matrix F is not invertible");
    BoundarySubspace bc;
    bc.n = n;
    bc.kind = BoundaryKind::Graph;
    bc.graph_F = F;
    bc.T0 = Mat::Zero(2 * n, 2 * n);
    bc.T0.topLeftCorner(n, n) = F.transpose();
    bc.T0.bottomRightCorner(n, n) = Mat::Identity(n, n);
    bc.T1 = Mat::Zero(2 * n, 2 * n);
    bc.T1.topLeftCorner(n, n) = Mat::Identity(n, n);
    bc.T1.bottomRightCorner(n, n) = F;
    bc.X0 = Mat::Identity(n, n);
    bc.X1 = F;
    detail::check_isotropy(bc);
    return bc;
}

/// Separated N = N0 x N1 from user bases of T Ann(N_i) (2n x n each).
/// Each basis must be Lagrangian and split into vertical + horizontal parts.
inline BoundarySubspace boundary_separated(const Mat& TN0, const Mat& TN1) {
    const int n = int(TN0.rows()) / 2;
    if (TN0.rows() != 2 * n || TN1.rows() != 2 * n || TN0.cols() != n || TN1.cols() != n)
        throw InputError("separated boundary bases must be 2n x n");

    auto split = [n](const Mat& T, const char* side) -> Mat {
        // Extract an orthonormal basis of the horizontal projection; validate
        // that vertical and horizontal parts pair to zero (split form).
        const Mat P = T.topRows(n);
        const Mat Q = T.bottomRows(n);
        if (max_abs(P.transpose() * Q) > 1e-10 * (1.0 + max_abs(T)))
            throw InputError(std::string("separated boundary basis for ") + side +
                             " is not an annihilator tangent (vertical/horizontal parts "
                             "do not annihilate each other)");
        Eigen::JacobiSVD<Mat> svd(Q, Eigen::ComputeFullU);
        const auto& sv = svd.singularValues();
        int r = 0;
        const double cut = 1e-10 * (sv.size() ? sv(0) + 1.0 : 1.0);
        for (int i = 0; i < sv.size(); ++i)
            if (sv(i) > cut) ++r;
        return svd.matrixU().leftCols(r);
    };

    const Mat X0 = split(TN0, "N0");
    const Mat X1 = split(TN1, "N1");
    const int d0 = int(X0.cols());
    const int d1 = int(X1.cols());

    BoundarySubspace bc;
    bc.n = n;
    bc.kind = BoundaryKind::Separated;
    bc.T0 = Mat::Zero(2 * n, 2 * n);
    bc.T0.leftCols(n) = TN0;
    bc.T1 = Mat::Zero(2 * n, 2 * n);
    bc.T1.rightCols(n) = TN1;
    bc.X0 = Mat::Zero(n, d0 + d1);
    bc.X0.leftCols(d0) = X0;
    bc.X1 = Mat::Zero(n, d0 + d1);
    bc.X1.rightCols(d1) = X1;
    detail::check_isotropy(bc);
    return bc;
}

/// T Ann for N_i = {point}: the vertical subspace.
inline Mat ann_point_basis(int n) {
    Mat t = Mat::Zero(2 * n, n);
    t.topRows(n) = Mat::Identity(n, n);
    return t;
}

/// T Ann for N_i = M (free endpoint): the horizontal subspace.
inline Mat ann_free_basis(int n) {
    Mat t = Mat::Zero(2 * n, n);
    t.bottomRows(n) = Mat::Identity(n, n);
    return t;
}

}  // namespace jacdet
