#pragma once

/*
 * determinant.hpp — the finite-dimensional determinant formula.
 *
 * Eigenvalues mu of the compact part K of the second variation correspond to
 * parameters s = -1/mu at which the Jacobi boundary-value problem on the
 * doubled system acquires a solution. Eliminating the multiplier data from
 * the eigenvalue system leaves a (2n+d) x (2n+d) linear pencil in the unknowns
 * (xi, u1), xi the initial Jacobi covector, u1 the boundary control:
 *
 *   [ pr_q xi                 + X0 u1            ]
 *   [ pr_q Phi_1^s xi         + D^{-1} X1 u1     ]   = 0,
 *   [ X0' pr_p xi - X1' pr_p PhiT Phi_1^s xi + (1-s) E u1 ]
 *
 *   E = 3 X0' G0q X0 + X1' G1q X1 - X1' B D^{-1} X1,
 *
 * where PhiT = [[A,B],[0,D]] and (X0; X1) spans TN. The boundary-metric
 * weights (the factor 3 = 2 + 1 from the doubled left boundary) make the
 * zero set of det M(s) coincide with the spectrum of K; this is validated
 * against the Galerkin oracle in the test suite.
 *
 * The characteristic function det M(s) is entire with Hadamard data (a, b):
 *
 *   det M(s) = a e^{(logderiv - tr K) s} prod (1 + s mu)^{m(mu)},
 *   a = det M(0),  logderiv = tr(M'(0) M(0)^{-1}),
 *
 * so with b := tr K - logderiv,
 *
 *   det(I + sK) = a^{-1} e^{b s} det M(s).
 *
 * tr K on the constrained space V is computed exactly as
 *
 *   tr K = -n - dim N - tr[(C C*)^{-1} (C K C*)],
 *
 * a finite-rank correction over the codimension-2n constraint map C, with
 * C C* and C K C* assembled from the iterated integrals Gamma, Theta, Omega.
 */

#include "jacdet/flow.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <vector>

namespace jacdet {

struct PencilData {
    int n = 1;
    int d = 1;
    Mat X0, X1;      // canonical (orthonormal stacked columns) TN basis
    Mat A, B, D;     // phiTilde blocks
    Mat G0q, G1q;    // horizontal metric blocks
    Mat E;           // boundary-metric block of the pencil
};

namespace detail {

/// Orthonormalize stacked (X0; X1) columns with positive-diagonal QR so the
/// pencil, and hence det_Q, is independent of the supplied basis.
inline void canonicalize_tn(Mat& X0, Mat& X1) {
    const int n = int(X0.rows());
    const int d = int(X0.cols());
    if (d == 0) return;
    Mat stacked(2 * n, d);
    stacked << X0, X1;
    Eigen::HouseholderQR<Mat> qr(stacked);
    Mat q = qr.householderQ() * Mat::Identity(2 * n, d);
    const Mat r = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
    for (int j = 0; j < d; ++j)
        if (r(j, j) < 0) q.col(j) *= -1.0;
    X0 = q.topRows(n);
    X1 = q.bottomRows(n);
}

inline PencilData make_pencil_data(const DoubledProblem& dp) {
    PencilData pd;
    const int n = dp.base.n;
    pd.n = n;
    pd.X0 = dp.bc.X0;
    pd.X1 = dp.bc.X1;
    canonicalize_tn(pd.X0, pd.X1);
    pd.d = int(pd.X0.cols());
    pd.A = dp.base.phiTilde.topLeftCorner(n, n);
    pd.B = dp.base.phiTilde.topRightCorner(n, n);
    pd.D = dp.base.phiTilde.bottomRightCorner(n, n);
    pd.G0q = dp.metrics.horizontal_block(0);
    pd.G1q = dp.metrics.horizontal_block(1);
    const Mat BD1X1 = pd.B * pd.D.partialPivLu().solve(pd.X1);
    pd.E = 3.0 * pd.X0.transpose() * pd.G0q * pd.X0 + pd.X1.transpose() * pd.G1q * pd.X1 -
           pd.X1.transpose() * BD1X1;
    return pd;
}

inline Mat assemble_pencil(const PencilData& pd, double s, const Mat& phi1s) {
    const int n = pd.n;
    const int d = pd.d;
    Mat M = Mat::Zero(2 * n + d, 2 * n + d);
    M.block(0, n, n, n) = Mat::Identity(n, n);
    if (d) M.block(0, 2 * n, n, d) = pd.X0;
    M.block(n, 0, n, 2 * n) = phi1s.bottomRows(n);
    if (d) M.block(n, 2 * n, n, d) = pd.D.partialPivLu().solve(pd.X1);
    Mat row3 = Mat::Zero(d, 2 * n);
    if (d) {
        row3.leftCols(n) = pd.X0.transpose();
        Mat ptphi_top(n, 2 * n);
        ptphi_top = pd.A * phi1s.topRows(n) + pd.B * phi1s.bottomRows(n);
        row3 -= pd.X1.transpose() * ptphi_top;
        M.block(2 * n, 0, d, 2 * n) = row3;
        M.block(2 * n, 2 * n, d, d) = (1.0 - s) * pd.E;
    }
    return M;
}

inline Mat assemble_pencil_ds0(const PencilData& pd, const Mat& dphi0) {
    const int n = pd.n;
    const int d = pd.d;
    Mat dM = Mat::Zero(2 * n + d, 2 * n + d);
    dM.block(n, 0, n, 2 * n) = dphi0.bottomRows(n);
    if (d) {
        dM.block(2 * n, 0, d, 2 * n) =
            -pd.X1.transpose() * (pd.A * dphi0.topRows(n) + pd.B * dphi0.bottomRows(n));
        dM.block(2 * n, 2 * n, d, d) = -pd.E;
    }
    return dM;
}

/// Hadamard-style magnitude bound for det M, used to decide degeneracy of a.
inline double det_scale(const Mat& m) {
    double prod = 1.0;
    for (int i = 0; i < m.rows(); ++i) prod *= std::max(m.row(i).norm(), 1e-30);
    return prod;
}

}  // namespace detail

/// tr(K|_V): the boundary blocks contribute -n - dimN, the Volterra block has
/// zero trace, and the orthogonal projection off V is a rank-2n correction.
inline double trace_K(const DoubledProblem& dp, const ClosedFormS0& cf) {
    const int n = dp.base.n;
    const PencilData pd = detail::make_pencil_data(dp);
    const int d = pd.d;
    const Mat& Gam = cf.gamma1();
    const Mat& The = cf.theta1();
    const Mat& Om = cf.omega1();

    const Mat B0 = 2.0 * pd.G0q;
    Eigen::LLT<Mat> B0llt(B0);
    const Mat B1 = d ? Mat(pd.X0.transpose() * pd.G0q * pd.X0 +
                           pd.X1.transpose() * pd.G1q * pd.X1)
                     : Mat();
    Eigen::PartialPivLU<Mat> B1lu;
    Mat DX1, X1Dit;
    if (d) {
        B1lu.compute(B1);
        DX1 = pd.D.partialPivLu().solve(pd.X1);
        X1Dit = pd.X1.transpose() * pd.D.transpose().partialPivLu().solve(Mat::Identity(n, n));
    }

    Mat CC = Mat::Zero(2 * n, 2 * n);
    Mat CK = Mat::Zero(2 * n, 2 * n);
    for (int j = 0; j < 2 * n; ++j) {
        Vec w = Vec::Zero(2 * n);
        w(j) = 1.0;
        const Vec w1 = w.head(n);
        const Vec w2 = w.tail(n);
        const Vec v0 = B0llt.solve(w2 - w1);
        Vec v1;
        if (d) v1 = B1lu.solve(-pd.X0.transpose() * w1 + X1Dit * w2);

        // C of the orthogonal-complement element v(w)
        Vec c1 = v0;
        Vec c2 = v0 + Gam * w2;
        if (d) {
            c1 += pd.X0 * v1;
            c2 += DX1 * v1;
        }
        CC.col(j).head(n) = c1;
        CC.col(j).tail(n) = c2;

        // C of K v(w)
        Vec u1p;
        if (d) {
            const Vec lam = B1lu.solve(pd.X1.transpose() *
                                       (pd.B * v0 + (pd.A * The + pd.B * Gam) * w2));
            u1p = -v1 - lam;
        }
        Vec k1 = -v0;
        Vec k2 = -v0 - Om * w2 + The.transpose() * v0;
        if (d) {
            k1 += pd.X0 * u1p;
            k2 += DX1 * u1p;
        }
        CK.col(j).head(n) = k1;
        CK.col(j).tail(n) = k2;
    }
    const double corr = CC.partialPivLu().solve(CK).trace();
    return double(-n - d) - corr;
}

struct Normalization {
    double a = 0.0;       // det M(0)
    double b = 0.0;       // tr K - tr(M'(0) M(0)^{-1})
    double trK = 0.0;
    double logderiv = 0.0;
    double logderiv_fd_rel_err = 0.0;  // analytic vs central differences
    bool metric_perturbed = false;
    unsigned perturb_seed = 0;
    MetricPair metrics_used;
};

struct DetReportSample {
    double s = 0.0;
    double det_Q = 0.0;
    double det_IK = 0.0;
};

struct DetZero {
    double s0 = 0.0;
    int order = 1;
    bool order_flagged = false;  // order estimate > 2, for manual review
    int oracle_kernel_dim = -1;  // attached on request
};

struct DetReport {
    Normalization norm;
    std::vector<DetReportSample> samples;
    std::vector<DetZero> zeros;
    double cond_M0 = 0.0;
    double symplectic_defect = 0.0;
};

class DeterminantEngine {
public:
    explicit DeterminantEngine(const DoubledProblem& dp, unsigned perturb_seed = 42u)
        : dp_(dp), seed_(perturb_seed) {
        pd_ = detail::make_pencil_data(dp_);
        cf_ = closed_form_s0(dp_.base);
        norm_ = normalize(dp_, pd_, cf_, /*allow_perturb=*/true);
    }

    const Normalization& normalization() const { return norm_; }
    const ClosedFormS0& closed_forms() const { return cf_; }
    const DoubledProblem& problem() const { return dp_; }

    /// Normalized intersection determinant det M(s) = det_Q(s).
    double det_Q(double s) const {
        const Mat phi = fundamental_solution(active_problem(), s, false).at_one();
        return detail::assemble_pencil(pd_active(), s, phi).determinant();
    }

    /// det(I + sK) = a^{-1} e^{bs} det_Q(s).
    double determinant(double s) const {
        return std::exp(norm_.b * s) / norm_.a * det_Q(s);
    }

    DetReport report(const std::vector<double>& s_values) const {
        DetReport rep;
        rep.norm = norm_;
        rep.samples.reserve(s_values.size());
        for (double s : s_values) {
            const double q = det_Q(s);
            rep.samples.push_back({s, q, std::exp(norm_.b * s) / norm_.a * q});
        }
        const Mat phi0 = cf_.phi0_at_one();
        const Mat m0 = detail::assemble_pencil(pd_active(), 0.0, phi0);
        Eigen::JacobiSVD<Mat> svd(m0);
        const auto& sv = svd.singularValues();
        rep.cond_M0 = sv(0) / std::max(sv(sv.size() - 1), 1e-300);
        rep.symplectic_defect =
            fundamental_solution(active_problem(), 1.0, true)
                .max_symplectic_defect(SymplecticFrame{dp_.base.n}.J_std());
        return rep;
    }

private:
    const ProblemLQ& active_problem() const {
        return norm_.metric_perturbed ? perturbed_dp_->base : dp_.base;
    }
    const PencilData& pd_active() const { return norm_.metric_perturbed ? perturbed_pd_ : pd_; }

    Normalization normalize(const DoubledProblem& dp, const PencilData& pd, const ClosedFormS0& cf,
                            bool allow_perturb) {
        Normalization out;
        out.metrics_used = dp.metrics;
        const Mat phi0 = cf.phi0_at_one();
        const Mat m0 = detail::assemble_pencil(pd, 0.0, phi0);
        out.a = m0.determinant();

        const double scale = detail::det_scale(m0);
        if (std::abs(out.a) < 1e-10 * scale) {
            if (!allow_perturb)
                throw DegenerateMetricError("det(Q^0) vanishes for the supplied metrics");
            return perturb_and_retry(dp);
        }

        const Mat dm0 = detail::assemble_pencil_ds0(pd, cf.dphi_ds0_at_one());
        out.logderiv = m0.partialPivLu().solve(dm0).trace();
        out.trK = trace_K(dp, cf);
        out.b = out.trK - out.logderiv;

        // finite-difference cross-check of the analytic derivative
        const double h = 1e-5;
        const Mat php = fundamental_solution(dp.base, h, false).at_one();
        const Mat phm = fundamental_solution(dp.base, -h, false).at_one();
        const double fd = (detail::assemble_pencil(pd, h, php).determinant() -
                           detail::assemble_pencil(pd, -h, phm).determinant()) /
                          (2.0 * h) / out.a;
        out.logderiv_fd_rel_err = std::abs(fd - out.logderiv) / std::max(1.0, std::abs(out.logderiv));
        return out;
    }

    Normalization perturb_and_retry(const DoubledProblem& dp) {
        const int n = dp.base.n;
        std::mt19937 rng(seed_);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int attempt = 0; attempt < 5; ++attempt) {
            auto bump = [&](const Mat& g) {
                Mat s = Mat::NullaryExpr(n, n, [&](Eigen::Index, Eigen::Index) { return gauss(rng); });
                return Mat(g + 1e-3 * symmetrize(s));
            };
            MetricPair pert;
            try {
                pert = MetricPair::from_blocks(bump(dp.metrics.vertical_block(0)),
                                               bump(dp.metrics.horizontal_block(0)),
                                               bump(dp.metrics.vertical_block(1)),
                                               bump(dp.metrics.horizontal_block(1)));
            } catch (const InputError&) {
                continue;  // perturbation broke positivity, draw again
            }
            DoubledProblem dp2 = double_system(dp.base, dp.bc, pert);
            PencilData pd2 = detail::make_pencil_data(dp2);
            const Mat m0 = detail::assemble_pencil(pd2, 0.0, cf_.phi0_at_one());
            if (std::abs(m0.determinant()) < 1e-10 * detail::det_scale(m0)) continue;
            perturbed_dp_ = dp2;
            perturbed_pd_ = pd2;
            Normalization out = normalize(dp2, pd2, cf_, /*allow_perturb=*/false);
            out.metric_perturbed = true;
            out.perturb_seed = seed_ + unsigned(attempt);
            return out;
        }
        throw DegenerateMetricError(
            "nongeneric metric: det(Q^0) still vanishes after 5 perturbation attempts");
    }

    DoubledProblem dp_;
    unsigned seed_ = 42u;
    PencilData pd_;
    ClosedFormS0 cf_;
    Normalization norm_;
    std::optional<DoubledProblem> perturbed_dp_;
    PencilData perturbed_pd_;
};

/*
 * Closed-form reference for periodic and graph boundary conditions, evaluated
 * from the monodromy alone (independent of the Jacobi-flow path):
 *
 *   det(I+K) = det(F) det(Psi - lift(F)) / det(D)
 *              -----------------------------------------------------
 *              (-1)^n det [[Gamma, D^{-1}F - I], [c1, E0 + F'B]]
 *
 *   lift(F) = diag(F^{-T}, F),  c1 = I - F'(A + B Gamma),
 *   E0 = 3 G0q + F' G1q F - F' B D^{-1} F.
 *
 * For periodic driftless data (F = D = I) this collapses to
 *   det(I+K) = (-1)^n det(I - Psi) / (det Gamma  det(3 G0q + G1q)).
 */
inline double hill_reference(const ProblemLQ& p, const MetricPair& g, const BoundarySubspace& bc,
                             std::optional<Mat> psi_direct = std::nullopt) {
    const int n = p.n;
    Mat F;
    if (bc.kind == BoundaryKind::Periodic)
        F = Mat::Identity(n, n);
    else if (bc.kind == BoundaryKind::Graph)
        F = *bc.graph_F;
    else
        throw InputError("hill_reference requires periodic or graph boundary conditions");

    const Mat psi = psi_direct ? *psi_direct : monodromy(p);
    const Mat A = p.phiTilde.topLeftCorner(n, n);
    const Mat B = p.phiTilde.topRightCorner(n, n);
    const Mat D = p.phiTilde.bottomRightCorner(n, n);
    const Mat gamma = p.gamma();

    Mat lift = Mat::Zero(2 * n, 2 * n);
    lift.topLeftCorner(n, n) = F.transpose().partialPivLu().solve(Mat::Identity(n, n));
    lift.bottomRightCorner(n, n) = F;

    const double num =
        F.determinant() * (psi - lift).determinant() / D.determinant();

    const Mat c1 = Mat::Identity(n, n) - F.transpose() * (A + B * gamma);
    const Mat E0 = 3.0 * g.horizontal_block(0) + F.transpose() * g.horizontal_block(1) * F -
                   F.transpose() * B * D.partialPivLu().solve(F);
    Mat blk(2 * n, 2 * n);
    blk.topLeftCorner(n, n) = gamma;
    blk.topRightCorner(n, n) = D.partialPivLu().solve(F) - Mat::Identity(n, n);
    blk.bottomLeftCorner(n, n) = c1;
    blk.bottomRightCorner(n, n) = E0 + F.transpose() * B;
    const double den = ((n % 2) ? -1.0 : 1.0) * blk.determinant();
    return num / den;
}

struct ScanZero {
    double lambda0 = 0.0;
    int order = 1;
    bool order_flagged = false;
    bool even_order = false;  // found by minimum detection, no sign change
};

/// Locate zeros of a smooth scalar family on [lo, hi]: sign-change bisection
/// plus local-minimum refinement for even-order roots.
inline std::vector<ScanZero> scan_zeros(const std::function<double(double)>& f, double lo,
                                        double hi, double tol = 1e-9, int grid_points = 400) {
    std::vector<double> xs(size_t(grid_points) + 1);
    std::vector<double> vs(size_t(grid_points) + 1);
    for (int i = 0; i <= grid_points; ++i) {
        xs[size_t(i)] = lo + (hi - lo) * double(i) / grid_points;
        vs[size_t(i)] = f(xs[size_t(i)]);
    }
    double vscale = 0.0;
    for (double v : vs) vscale = std::max(vscale, std::abs(v));
    if (vscale == 0.0) vscale = 1.0;

    std::vector<ScanZero> out;
    auto bisect = [&](double a, double b) {
        double fa = f(a);
        for (int it = 0; it < 200; ++it) {
            const double m = 0.5 * (a + b);
            const double fm = f(m);
            if (fm == 0.0 || 0.5 * (b - a) < tol) return m;
            if ((fa < 0) != (fm < 0))
                b = m;
            else {
                a = m;
                fa = fm;
            }
        }
        return 0.5 * (a + b);
    };
    auto minimize = [&](double a, double b) {
        // golden-section on |f|
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double c = b - gr * (b - a), d = a + gr * (b - a);
        double fc = std::abs(f(c)), fd = std::abs(f(d));
        while (b - a > tol) {
            if (fc < fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - gr * (b - a);
                fc = std::abs(f(c));
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + gr * (b - a);
                fd = std::abs(f(d));
            }
        }
        return 0.5 * (a + b);
    };

    auto estimate_order = [&](double x0) {
        // slope of log|f| against log(offset) over a decade of offsets
        const double base = std::max(10.0 * tol, 1e-7 * (hi - lo));
        double acc = 0.0;
        int cnt = 0;
        for (double side : {-1.0, 1.0}) {
            for (double mult : {1.0, 2.0, 4.0}) {
                const double d1 = base * mult;
                const double d2 = 10.0 * d1;
                const double f1 = std::abs(f(x0 + side * d1));
                const double f2 = std::abs(f(x0 + side * d2));
                if (f1 > 0 && f2 > 0) {
                    acc += std::log(f2 / f1) / std::log(10.0);
                    ++cnt;
                }
            }
        }
        return cnt ? acc / cnt : 1.0;
    };

    for (int i = 0; i < grid_points; ++i) {
        const double a = xs[size_t(i)], b = xs[size_t(i + 1)];
        const double fa = vs[size_t(i)], fb = vs[size_t(i + 1)];
        if (fa == 0.0 && i > 0) continue;
        if ((fa < 0) != (fb < 0)) {
            const double r = bisect(a, b);
            const double slope = estimate_order(r);
            ScanZero z;
            z.lambda0 = r;
            z.order = std::max(1, int(std::lround(slope)));
            z.order_flagged = z.order > 2;
            out.push_back(z);
        } else if (i > 0) {
            // interior local minimum of |f| dipping far below the scale
            const double fm = std::abs(vs[size_t(i)]);
            if (fm < std::abs(vs[size_t(i - 1)]) && fm < std::abs(vs[size_t(i + 1)])) {
                const double r = minimize(xs[size_t(i - 1)], xs[size_t(i + 1)]);
                if (std::abs(f(r)) < 1e-8 * vscale) {
                    const double slope = estimate_order(r);
                    ScanZero z;
                    z.lambda0 = r;
                    z.order = std::max(1, int(std::lround(slope)));
                    z.order_flagged = z.order > 2;
                    z.even_order = true;
                    out.push_back(z);
                }
            }
        }
    }
    return out;
}

}  // namespace jacdet
