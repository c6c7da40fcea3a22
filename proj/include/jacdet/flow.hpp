#pragma once

/*
 * flow.hpp — the Jacobi-type linear flow and its s = 0 closed forms.
 *
 * The Jacobi equation is
 *
 *     eta' = Z_t^s (Z_t^s)' J_sigma eta,     Z_t^s = delta^s Z_t,
 *
 * with delta^s the vertical dilation. The fundamental solution Phi_t^s is
 * symplectic for every s; defects are monitored, never corrected, so they
 * stay an honest error signal. At s = 0 the flow and its s-derivative have
 * closed forms in the iterated integrals
 *
 *     Gamma_t = int X X',  Theta_t = int Y X',
 *     Omega_t = int X_t Z_t' J_sigma (int_0^t Z X') dt,
 *
 *     Phi_t^0 = [[I, 0],[Gamma_t, I]],
 *     d/ds Phi_t^s |_0 = [[Theta_t, 0],[Omega_t, -Theta_t']].
 */

#include "jacdet/problem.hpp"

#include <cmath>

namespace jacdet {

struct FlowSolution {
    double s = 1.0;
    TimeGrid grid;
    std::vector<Mat> nodes;  // coarse-grid values, nodes[0] = I
    int integrator_order = 4;

    const Mat& at_one() const { return nodes.back(); }

    double max_symplectic_defect(const Mat& J_std) const {
        double worst = 0.0;
        for (const auto& phi : nodes)
            worst = std::max(worst, max_abs(phi.transpose() * J_std * phi - J_std));
        return worst;
    }
};

namespace detail {

inline void check_finite(const Mat& phi, double t) {
    if (!phi.allFinite())
        throw Error("Jacobi flow integration blew up at t = " + std::to_string(t) +
                    " (|Phi| = " + std::to_string(max_abs(phi)) + ")");
}

}  // namespace detail

/// RK4 fundamental solution on the shared grid. `store_path = false` keeps
/// only the endpoints (used by s-sweeps).
inline FlowSolution fundamental_solution(const ProblemLQ& p, double s, bool store_path = true) {
    const int n = p.n;
    const Mat J = SymplecticFrame{n}.J_sigma();
    const Mat D = dilation_vertical(SymplecticFrame{n}, s);

    FlowSolution out;
    out.s = s;
    out.grid = p.grid;
    out.nodes.reserve(store_path ? size_t(p.grid.steps) + 1 : 2);

    auto gen = [&](int fine_idx) -> Mat {
        const Mat zs = D * p.Z[size_t(fine_idx)];
        return zs * zs.transpose() * J;
    };

    Mat phi = Mat::Identity(2 * n, 2 * n);
    out.nodes.push_back(phi);
    const double h = 1.0 / p.grid.steps;
    for (int i = 0; i < p.grid.steps; ++i) {
        const Mat a1 = gen(2 * i);
        const Mat a2 = gen(2 * i + 1);
        const Mat a4 = gen(2 * i + 2);
        const Mat k1 = a1 * phi;
        const Mat k2 = a2 * (phi + 0.5 * h * k1);
        const Mat k3 = a2 * (phi + 0.5 * h * k2);
        const Mat k4 = a4 * (phi + h * k3);
        phi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        detail::check_finite(phi, (i + 1) * h);
        if (store_path)
            out.nodes.push_back(phi);
        else if (i + 1 == p.grid.steps)
            out.nodes.push_back(phi);
    }
    return out;
}

/// Doubled-system flow diag(I, Phi_t^s) on R^{4n}.
inline FlowSolution fundamental_solution(const DoubledProblem& dp, double s,
                                         bool store_path = true) {
    FlowSolution base = fundamental_solution(dp.base, s, store_path);
    const int twon = 2 * dp.base.n;
    FlowSolution out;
    out.s = s;
    out.grid = base.grid;
    out.nodes.reserve(base.nodes.size());
    for (const auto& phi : base.nodes) {
        Mat big = Mat::Identity(2 * twon, 2 * twon);
        big.bottomRightCorner(twon, twon) = phi;
        out.nodes.push_back(std::move(big));
    }
    return out;
}

struct ClosedFormS0 {
    std::vector<Mat> Gamma, Theta, Omega;  // cumulative, fine grid
    TimeGrid grid;
    int n = 1;

    const Mat& gamma1() const { return Gamma.back(); }
    const Mat& theta1() const { return Theta.back(); }
    const Mat& omega1() const { return Omega.back(); }

    Mat phi0(int fine_idx) const {
        Mat out = Mat::Identity(2 * n, 2 * n);
        out.bottomLeftCorner(n, n) = Gamma[size_t(fine_idx)];
        return out;
    }

    Mat dphi_ds0(int fine_idx) const {
        Mat out = Mat::Zero(2 * n, 2 * n);
        out.topLeftCorner(n, n) = Theta[size_t(fine_idx)];
        out.bottomLeftCorner(n, n) = Omega[size_t(fine_idx)];
        out.bottomRightCorner(n, n) = -Theta[size_t(fine_idx)].transpose();
        return out;
    }

    Mat phi0_at_one() const { return phi0(int(Gamma.size()) - 1); }
    Mat dphi_ds0_at_one() const { return dphi_ds0(int(Gamma.size()) - 1); }
};

inline ClosedFormS0 closed_form_s0(const ProblemLQ& p) {
    const int n = p.n;
    const Mat J = SymplecticFrame{n}.J_sigma();
    const double h = p.grid.fine_h();
    const int cnt = p.grid.fine_count();

    std::vector<Mat> xx, yx, zx;
    xx.reserve(cnt);
    yx.reserve(cnt);
    zx.reserve(cnt);
    for (int i = 0; i < cnt; ++i) {
        const Mat x = p.X(i);
        xx.push_back(x * x.transpose());
        yx.push_back(p.Y(i) * x.transpose());
        zx.push_back(p.Z[size_t(i)] * x.transpose());
    }

    ClosedFormS0 out;
    out.grid = p.grid;
    out.n = n;
    out.Gamma = cumulative_simpson(xx, h);
    out.Theta = cumulative_simpson(yx, h);

    const auto cum_zx = cumulative_simpson(zx, h);
    std::vector<Mat> om;
    om.reserve(cnt);
    for (int i = 0; i < cnt; ++i)
        om.push_back(p.X(i) * p.Z[size_t(i)].transpose() * J * cum_zx[size_t(i)]);
    out.Omega = cumulative_simpson(om, h);
    return out;
}

/// Linearized extremal flow over one interval, integrated directly from the
/// Hamiltonian lift (independent of the Jacobi-flow route):
///   driftless/schrodinger:  d(p,q)/dt = (W_t q, p)
///   drift:                  d(p,q)/dt = (-A' p - R q, A q + B B' p)
inline Mat monodromy_direct(const MatFn& lift, const TimeGrid& grid, int two_n) {
    MatFn f = lift;
    std::vector<Mat> fine = detail::integrate_linear(grid, f);
    (void)two_n;
    return fine.back();
}

/// Monodromy Psi = PhiT Phi_1^1 via the Jacobi flow.
inline Mat monodromy(const ProblemLQ& p) {
    return p.phiTilde * fundamental_solution(p, 1.0, false).at_one();
}

/// Direct-lift monodromy for the driftless family q'' = W q.
inline Mat monodromy_driftless_direct(const MatFn& W, int n, const TimeGrid& grid = {}) {
    auto lift = [&](double t) {
        Mat m = Mat::Zero(2 * n, 2 * n);
        m.topRightCorner(n, n) = W(t);
        m.bottomLeftCorner(n, n) = Mat::Identity(n, n);
        return m;
    };
    return monodromy_direct(lift, grid, 2 * n);
}

/// Direct-lift monodromy for the drift family.
inline Mat monodromy_drift_direct(const MatFn& A, const MatFn& B, const MatFn& R, int n,
                                  const TimeGrid& grid = {}) {
    auto lift = [&](double t) {
        const Mat a = A(t);
        const Mat b = B(t);
        Mat m = Mat::Zero(2 * n, 2 * n);
        m.topLeftCorner(n, n) = -a.transpose();
        m.topRightCorner(n, n) = -R(t);
        m.bottomLeftCorner(n, n) = b * b.transpose();
        m.bottomRightCorner(n, n) = a;
        return m;
    };
    return monodromy_direct(lift, grid, 2 * n);
}

}  // namespace jacdet
