#include "test_helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace jacdet;
using Catch::Approx;
using jtest::const_fn;

TEST_CASE("Legendre normalization", "[problem]") {
    TimeGrid grid{64};
    std::vector<Mat> z;
    for (int i = 0; i < grid.fine_count(); ++i) {
        Mat m(2, 1);
        m << 0.0, 1.0;
        z.push_back(m);
    }
    SECTION("H = -I leaves Z unchanged") {
        auto out = normalize_legendre(grid, z, const_fn(-Mat::Identity(1, 1)));
        REQUIRE(max_abs(out[10] - z[10]) == 0.0);
    }
    SECTION("H = -4 rescales by 1/2") {
        auto out = normalize_legendre(grid, z, const_fn(-4.0 * Mat::Identity(1, 1)));
        REQUIRE(out[5](1, 0) == Approx(0.5).margin(1e-14));
    }
    SECTION("H = -diag(1,9) rescales columns by (1, 1/3)") {
        std::vector<Mat> z2;
        for (int i = 0; i < grid.fine_count(); ++i) {
            Mat m = Mat::Zero(4, 2);
            m(2, 0) = 1.0;
            m(3, 1) = 1.0;
            z2.push_back(m);
        }
        Mat H = Mat::Zero(2, 2);
        H(0, 0) = -1.0;
        H(1, 1) = -9.0;
        auto out = normalize_legendre(grid, z2, const_fn(H));
        REQUIRE(out[3](2, 0) == Approx(1.0).margin(1e-14));
        REQUIRE(out[3](3, 1) == Approx(1.0 / 3.0).margin(1e-14));
    }
    SECTION("indefinite H rejected with the offending time and eigenvalue") {
        auto H = [](double t) { return Mat((t < 0.5 ? -1.0 : 1.0) * Mat::Identity(1, 1)); };
        REQUIRE_THROWS_WITH(normalize_legendre(grid, z, H),
                            Catch::Matchers::ContainsSubstring("strong Legendre"));
    }
}

TEST_CASE("driftless builder", "[problem]") {
    SECTION("W = 0") {
        ProblemLQ p = build_driftless(jtest::zero_fn(1), 1, TimeGrid{64});
        REQUIRE(max_abs(p.Z.front() - p.Z.back()) == 0.0);
        REQUIRE(p.Z[7](0, 0) == 0.0);
        REQUIRE(p.Z[7](1, 0) == 1.0);
        REQUIRE(max_abs(p.phiTilde - Mat::Identity(2, 2)) == 0.0);
    }
    SECTION("constant W = -r gives Z_1 = (r; 1), PhiT = [[1,-r],[0,1]]") {
        const double r = 2.75;
        ProblemLQ p = build_driftless(const_fn(-r * Mat::Identity(1, 1)), 1, TimeGrid{128});
        REQUIRE(p.Z.back()(0, 0) == Approx(r).margin(1e-12));
        REQUIRE(p.phiTilde(0, 1) == Approx(-r).margin(1e-12));
    }
    SECTION("W = -diag(t, 2t): top block is diag(t^2/2, t^2)") {
        auto W = [](double t) {
            Mat m = Mat::Zero(2, 2);
            m(0, 0) = -t;
            m(1, 1) = -2.0 * t;
            return m;
        };
        TimeGrid grid{128};
        ProblemLQ p = build_driftless(W, 2, grid);
        for (int i : {32, 100, grid.fine_count() - 1}) {
            const double t = grid.fine_t(i);
            REQUIRE(p.Z[size_t(i)](0, 0) == Approx(t * t / 2).margin(1e-12));
            REQUIRE(p.Z[size_t(i)](1, 1) == Approx(t * t).margin(1e-12));
        }
    }
    SECTION("Gamma = I exactly up to quadrature error") {
        ProblemLQ p = build_driftless(jtest::fourier_potential(3), 1, TimeGrid{64});
        REQUIRE(max_abs(p.gamma() - Mat::Identity(1, 1)) <= 1e-12);
    }
}

TEST_CASE("drift builder", "[problem]") {
    SECTION("zero drift reduces to driftless") {
        auto R = [](double t) { return Mat((1.0 + std::sin(2 * M_PI * t)) * Mat::Identity(1, 1)); };
        ProblemLQ pd = build_drift(jtest::zero_fn(1), const_fn(Mat::Identity(1, 1)), R, 1, 1,
                                   TimeGrid{256});
        ProblemLQ pl = build_driftless([&R](double t) { return Mat(-R(t)); }, 1, TimeGrid{256});
        REQUIRE(max_abs(pd.phiTilde - pl.phiTilde) < 1e-10);
        double worst = 0.0;
        for (size_t i = 0; i < pd.Z.size(); i += 37) worst = std::max(worst, max_abs(pd.Z[i] - pl.Z[i]));
        REQUIRE(worst < 1e-10);
    }
    SECTION("scalar drift: X_t = e^{-a t} and Gamma = (1 - e^{-2a})/(2a)") {
        const double a = 0.5;
        ProblemLQ p = build_drift(const_fn(a * Mat::Identity(1, 1)), const_fn(Mat::Identity(1, 1)),
                                  jtest::zero_fn(1), 1, 1, TimeGrid{512});
        const double t = 0.625;
        const int idx = int(t * (p.grid.fine_count() - 1));
        REQUIRE(p.X(idx)(0, 0) == Approx(std::exp(-a * p.grid.fine_t(idx))).epsilon(1e-10));
        REQUIRE(p.gamma()(0, 0) == Approx((1 - std::exp(-2 * a)) / (2 * a)).epsilon(1e-10));
    }
    SECTION("double integrator is controllable") {
        Mat A = Mat::Zero(2, 2);
        A(0, 1) = 1.0;
        Mat B = Mat::Zero(2, 1);
        B(1, 0) = 1.0;
        ProblemLQ p = build_drift(const_fn(A), const_fn(B), jtest::zero_fn(2), 2, 1, TimeGrid{256});
        REQUIRE(is_spd(symmetrize(p.gamma())));
    }
    SECTION("drift phiTilde is symplectic and fiber-preserving") {
        auto A = [](double t) { return Mat((0.4 + 0.2 * std::cos(2 * M_PI * t)) * Mat::Identity(1, 1)); };
        ProblemLQ p = build_drift(A, const_fn(Mat::Identity(1, 1)),
                                  const_fn(1.5 * Mat::Identity(1, 1)), 1, 1, TimeGrid{512});
        REQUIRE(symplecticity_defect(SymplecticFrame{1}, p.phiTilde) < 1e-10);
        REQUIRE(max_abs(p.phiTilde.bottomLeftCorner(1, 1)) < 1e-12);
    }
    SECTION("uncontrollable system flagged as not strictly normal") {
        REQUIRE_THROWS_WITH(build_drift(jtest::zero_fn(1), const_fn(Mat::Zero(1, 1)),
                                        jtest::zero_fn(1), 1, 1, TimeGrid{64}),
                            Catch::Matchers::ContainsSubstring("strictly normal"));
    }
}

TEST_CASE("schrodinger builder", "[problem]") {
    SECTION("lambda = 0 coincides with driftless on the engine convention") {
        auto R = [](double t) { return Mat(std::cos(2 * M_PI * t) * Mat::Identity(1, 1)); };
        ProblemLQ ps = build_schrodinger(R, 0.0, 1, TimeGrid{128});
        ProblemLQ pl = build_driftless(R, 1, TimeGrid{128});
        REQUIRE(max_abs(ps.phiTilde - pl.phiTilde) == 0.0);
        REQUIRE(max_abs(ps.Z[57] - pl.Z[57]) == 0.0);
    }
    SECTION("R = 0, lambda = -(2 pi)^2: full-period monodromy") {
        ProblemLQ p = build_schrodinger(jtest::zero_fn(1), -4.0 * M_PI * M_PI, 1, TimeGrid{1024});
        REQUIRE(max_abs(monodromy(p) - Mat::Identity(2, 2)) < 1e-8);
    }
    SECTION("R = 0, lambda = 0: unipotent monodromy") {
        ProblemLQ p = build_schrodinger(jtest::zero_fn(1), 0.0, 1, TimeGrid{256});
        Mat expected(2, 2);
        expected << 1, 0, 1, 1;
        REQUIRE(max_abs(monodromy(p) - expected) < 1e-10);
    }
}

TEST_CASE("doubled system", "[problem]") {
    SECTION("periodic n=1, W=0: the worked vectors") {
        DoubledProblem dp = jtest::periodic_driftless(jtest::zero_fn(1), 1, 64);
        Vec expect(4);
        expect << 0, 1, 0, 1;
        REQUIRE(max_abs(dp.Zt0 - expect) == 0.0);
        REQUIRE(max_abs(dp.Zt1 - expect) == 0.0);
        REQUIRE(max_abs(dp.phi_doubled() * dp.Zt1 - expect) == 0.0);
    }
    SECTION("periodic with potential: Zt1 = (0, 1, -Rhat, 1)") {
        const double r = 1.3;  // W = -r, Rhat = -int R = -r
        DoubledProblem dp = jtest::periodic_driftless(const_fn(-r * Mat::Identity(1, 1)), 1, 128);
        REQUIRE(dp.Zt1(2, 0) == Approx(r).margin(1e-12));  // -Rhat = r
        Vec expect(4);
        expect << 0, 1, 0, 1;
        REQUIRE(max_abs(dp.phi_doubled() * dp.Zt1 - expect) < 1e-12);
    }
    SECTION("time samples have a zero first factor") {
        DoubledProblem dp = jtest::periodic_driftless(jtest::fourier_potential(5), 1, 64);
        for (int i : {0, 31, 128}) REQUIRE(max_abs(dp.Ztil(i).topRows(2)) == 0.0);
    }
    SECTION("image of the doubled flow applied to Zt1 lies in TA(N) and the horizontal pair") {
        Mat F(1, 1);
        F << 1.7;
        ProblemLQ p = build_driftless(jtest::fourier_potential(9), 1, TimeGrid{128});
        BoundarySubspace bc = boundary_graph(F);
        DoubledProblem dp = double_system(p, bc, MetricPair::identity(1));
        const Mat w = dp.phi_doubled() * dp.Zt1;
        // vertical components vanish (horizontal pair)
        REQUIRE(max_abs(w.row(0)) < 1e-10);
        REQUIRE(max_abs(w.row(2)) < 1e-10);
        // membership in T A(N): w = (T0; T1) c for some c
        Mat t_stacked(4, 2);
        t_stacked << bc.T0, bc.T1;
        const Mat resid = w - t_stacked * t_stacked.colPivHouseholderQr().solve(w);
        REQUIRE(max_abs(resid) < 1e-10);
    }
    SECTION("drift with graph boundary reproduces the (0,1,0,Phihat) pattern") {
        const double a = 0.5;
        ProblemLQ p = build_drift(const_fn(a * Mat::Identity(1, 1)), const_fn(Mat::Identity(1, 1)),
                                  jtest::zero_fn(1), 1, 1, TimeGrid{256});
        const double ph = std::exp(a);
        BoundarySubspace bc = boundary_graph(ph * Mat::Identity(1, 1));
        DoubledProblem dp = double_system(p, bc, MetricPair::identity(1));
        const Mat w = dp.phi_doubled() * dp.Zt1;
        REQUIRE(w(0, 0) == Approx(0.0).margin(1e-10));
        REQUIRE(w(1, 0) == Approx(1.0).margin(1e-10));
        REQUIRE(w(2, 0) == Approx(0.0).margin(1e-10));
        REQUIRE(w(3, 0) == Approx(ph).epsilon(1e-8));
    }
    SECTION("dimension mismatch rejected") {
        ProblemLQ p = build_driftless(jtest::zero_fn(1), 1, TimeGrid{64});
        REQUIRE_THROWS_AS(double_system(p, boundary_periodic(2), MetricPair::identity(1)),
                          InputError);
    }
    SECTION("determinism: identical inputs give bit-identical samplers") {
        ProblemLQ p1 = build_driftless(jtest::fourier_potential(21), 1, TimeGrid{128});
        ProblemLQ p2 = build_driftless(jtest::fourier_potential(21), 1, TimeGrid{128});
        for (size_t i = 0; i < p1.Z.size(); i += 17)
            REQUIRE(std::memcmp(p1.Z[i].data(), p2.Z[i].data(),
                                sizeof(double) * size_t(p1.Z[i].size())) == 0);
    }
}
