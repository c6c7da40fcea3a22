#pragma once

/*
 * symplectic.hpp — fixed Darboux-coordinate symplectic linear algebra.
 *
 * Conventions used across the library:
 *   vectors are (p, q) with n components each; the vertical subspace is
 *   Pi = {q = 0} and, for block-diagonal metrics, its orthogonal complement
 *   is the horizontal subspace {p = 0}.
 *
 *   sigma((p1,q1),(p2,q2)) = <p1,q2> - <p2,q1>
 *
 * Two coordinate representations of sigma appear:
 *   J_std   with sigma(v,w) = <v, J_std w>,   J_std  = [[0, I],[-I, 0]]
 *   J_sigma with sigma(v,w) = <J_sigma v, w>, J_sigma = [[0,-I],[ I, 0]]
 * J_sigma is the one entering the Jacobi equation and the quadratic forms.
 */

#include "jacdet/types.hpp"

namespace jacdet {

struct SymplecticFrame {
    int n = 1;

    int dim() const { return 2 * n; }

    /// sigma(v,w) = <v, J_std w>
    Mat J_std() const {
        Mat j = Mat::Zero(2 * n, 2 * n);
        j.topRightCorner(n, n) = Mat::Identity(n, n);
        j.bottomLeftCorner(n, n) = -Mat::Identity(n, n);
        return j;
    }

    /// sigma(v,w) = <J_sigma v, w>  (= J_std transposed)
    Mat J_sigma() const { return J_std().transpose(); }

    Mat pr_vertical() const {
        Mat p = Mat::Zero(2 * n, 2 * n);
        p.topLeftCorner(n, n) = Mat::Identity(n, n);
        return p;
    }

    Mat pr_horizontal() const { return Mat::Identity(2 * n, 2 * n) - pr_vertical(); }
};

inline double symplecticity_defect(const SymplecticFrame& fr, const Mat& phi) {
    const Mat j = fr.J_std();
    return max_abs(phi.transpose() * j * phi - j);
}

/// Vertical dilation: scales Pi by s, fixes the horizontal subspace.
inline Mat dilation_vertical(const SymplecticFrame& fr, double s) {
    Mat d = Mat::Identity(2 * fr.n, 2 * fr.n);
    d.topLeftCorner(fr.n, fr.n) *= s;
    return d;
}

/// Horizontal dilation: scales Pi^perp by s, fixes Pi.
inline Mat dilation_horizontal(const SymplecticFrame& fr, double s) {
    Mat d = Mat::Identity(2 * fr.n, 2 * fr.n);
    d.bottomRightCorner(fr.n, fr.n) *= s;
    return d;
}

/*
 * Positive scalar products g0, g1 in block-diagonal Darboux form, with the
 * g_i-skew operators J_i defined by g_i(J_i X, Y) = sigma(X, Y):
 *
 *   G_i = diag(G1_i, G2_i),   J_i = [[0, -(G1_i)^{-1}],[(G2_i)^{-1}, 0]]
 *
 * Block-diagonal form keeps the horizontal subspace Lagrangian, which the
 * determinant formula requires.
 */
struct MetricPair {
    int n = 1;
    Mat G0;  // 2n x 2n, diag(G1_0, G2_0)
    Mat G1;

    static MetricPair identity(int n) {
        MetricPair m;
        m.n = n;
        m.G0 = Mat::Identity(2 * n, 2 * n);
        m.G1 = m.G0;
        return m;
    }

    static MetricPair from_blocks(const Mat& g0p, const Mat& g0q, const Mat& g1p, const Mat& g1q) {
        const int n = int(g0p.rows());
        MetricPair m;
        m.n = n;
        m.G0 = Mat::Zero(2 * n, 2 * n);
        m.G0.topLeftCorner(n, n) = g0p;
        m.G0.bottomRightCorner(n, n) = g0q;
        m.G1 = Mat::Zero(2 * n, 2 * n);
        m.G1.topLeftCorner(n, n) = g1p;
        m.G1.bottomRightCorner(n, n) = g1q;
        m.validate();
        return m;
    }

    Mat vertical_block(int side) const {
        const Mat& g = side == 0 ? G0 : G1;
        return g.topLeftCorner(n, n);
    }
    Mat horizontal_block(int side) const {
        const Mat& g = side == 0 ? G0 : G1;
        return g.bottomRightCorner(n, n);
    }

    /// Rejects off-diagonal blocks and non-SPD diagonal blocks, naming the offender.
    void validate() const {
        for (int side = 0; side < 2; ++side) {
            const Mat& g = side == 0 ? G0 : G1;
            if (g.rows() != 2 * n || g.cols() != 2 * n)
                throw InputError("metric G" + std::to_string(side) + " has wrong dimension");
            if (max_abs(g.topRightCorner(n, n)) > 0 || max_abs(g.bottomLeftCorner(n, n)) > 0)
                throw InputError("metric G" + std::to_string(side) +
                                 " is not block-diagonal in Darboux form");
            if (!is_spd(g.topLeftCorner(n, n)))
                throw InputError("vertical block of G" + std::to_string(side) + " is not SPD");
            if (!is_spd(g.bottomRightCorner(n, n)))
                throw InputError("horizontal block of G" + std::to_string(side) + " is not SPD");
        }
    }

    /// J_i with g_i(J_i X, Y) = sigma(X, Y); equals G_i^{-1} J_sigma.
    Mat J(int side) const {
        SymplecticFrame fr{n};
        const Mat& g = side == 0 ? G0 : G1;
        return g.llt().solve(fr.J_sigma());
    }

    /// g_i-orthogonal projection onto Pi (block metrics: independent of g_i).
    Mat proj_Pi(int) const { return SymplecticFrame{n}.pr_vertical(); }
    Mat proj_PiPerp(int) const { return SymplecticFrame{n}.pr_horizontal(); }
};

/// A_0^s = I + (1-s) J_0^{-1} pr_{Pi^perp}; symplectic for every s, A_0^1 = I.
inline Mat map_A0(double s, const MetricPair& g) {
    const int n = g.n;
    Mat a = Mat::Identity(2 * n, 2 * n);
    // J_0^{-1} pr_perp = [[0, G2_0],[0, 0]]
    a.topRightCorner(n, n) = (1.0 - s) * g.horizontal_block(0);
    return a;
}

/// A_1^s = I + (1-s)(J_1^{-1} + PhiT pr_Pi PhiT^{-1}) pr_{Pi^perp} for a
/// fiber-preserving symplectic PhiT (upper block-triangular in (p,q)).
inline Mat map_A1(double s, const MetricPair& g, const Mat& phi_tilde) {
    const int n = g.n;
    const Mat A = phi_tilde.topLeftCorner(n, n);
    const Mat B = phi_tilde.topRightCorner(n, n);
    const Mat D = phi_tilde.bottomRightCorner(n, n);
    // PhiT pr_Pi PhiT^{-1} pr_perp = [[0, -B D^{-1}],[0, 0]]
    Mat a = Mat::Identity(2 * n, 2 * n);
    Mat corner = g.horizontal_block(1) - B * D.partialPivLu().solve(Mat::Identity(n, n));
    a.topRightCorner(n, n) = (1.0 - s) * corner;
    return a;
}

}  // namespace jacdet
