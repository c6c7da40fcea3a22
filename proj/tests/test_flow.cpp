#include "test_helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace jacdet;
using Catch::Approx;
using jtest::const_fn;

namespace {

ProblemLQ raw_problem(int n, int k, const TimeGrid& grid, const MatFn& zfn, const Mat& phiT) {
    // bypasses strict-normality validation, for degenerate test data
    ProblemLQ p;
    p.n = n;
    p.k = k;
    p.grid = grid;
    p.Z = sample(grid, zfn);
    p.phiTilde = phiT;
    return p;
}

}  // namespace

TEST_CASE("fundamental solution basics", "[flow]") {
    SECTION("Z = 0 freezes the flow") {
        ProblemLQ p = raw_problem(1, 1, TimeGrid{64}, [](double) { return Mat::Zero(2, 1); },
                                  Mat::Identity(2, 2));
        for (double s : {-1.0, 0.0, 2.0}) {
            FlowSolution fl = fundamental_solution(p, s);
            REQUIRE(max_abs(fl.at_one() - Mat::Identity(2, 2)) == 0.0);
            REQUIRE(max_abs(fl.nodes.front() - Mat::Identity(2, 2)) == 0.0);
        }
    }
    SECTION("s = 0 matches the closed form") {
        ProblemLQ p = build_driftless(jtest::fourier_potential(13), 1, TimeGrid{512});
        ClosedFormS0 cf = closed_form_s0(p);
        const Mat phi0 = fundamental_solution(p, 0.0, false).at_one();
        REQUIRE(max_abs(phi0 - cf.phi0_at_one()) < 1e-8);
    }
    SECTION("constant Z against a matrix-exponential oracle") {
        Mat z(2, 1);
        z << 0.8, -0.6;
        ProblemLQ p = raw_problem(1, 1, TimeGrid{512}, const_fn(z), Mat::Identity(2, 2));
        const SymplecticFrame fr{1};
        for (double s : {-1.0, 0.5, 2.0}) {
            const Mat zs = dilation_vertical(fr, s) * z;
            const Mat gen = zs * zs.transpose() * fr.J_sigma();
            REQUIRE(max_abs(fundamental_solution(p, s, false).at_one() - jtest::expm(gen)) < 1e-10);
        }
    }
}

TEST_CASE("flow invariants", "[flow]") {
    ProblemLQ p = build_driftless(jtest::fourier_potential(17), 1, TimeGrid{1024});
    const Mat jstd = SymplecticFrame{1}.J_std();
    SECTION("symplecticity across s on the full path") {
        for (double s : {-2.0, -1.0, 0.0, 0.5, 1.0, 2.0}) {
            FlowSolution fl = fundamental_solution(p, s);
            REQUIRE(fl.max_symplectic_defect(jstd) <= 1e-8);
            REQUIRE(std::abs(fl.at_one().determinant() - 1.0) <= 1e-8);
        }
    }
    SECTION("finite differences in s match the closed-form derivative") {
        ClosedFormS0 cf = closed_form_s0(p);
        const double h = 1e-4;
        const Mat fd = (fundamental_solution(p, h, false).at_one() -
                        fundamental_solution(p, -h, false).at_one()) /
                       (2.0 * h);
        REQUIRE(max_abs(fd - cf.dphi_ds0_at_one()) <= 1e-5);
    }
    SECTION("order-4 grid convergence") {
        ProblemLQ coarse = build_driftless(jtest::fourier_potential(17), 1, TimeGrid{128});
        ProblemLQ fine = build_driftless(jtest::fourier_potential(17), 1, TimeGrid{256});
        ProblemLQ ref = build_driftless(jtest::fourier_potential(17), 1, TimeGrid{2048});
        const double s = 1.3;
        const double e1 = max_abs(fundamental_solution(coarse, s, false).at_one() -
                                  fundamental_solution(ref, s, false).at_one());
        const double e2 = max_abs(fundamental_solution(fine, s, false).at_one() -
                                  fundamental_solution(ref, s, false).at_one());
        REQUIRE(e1 / e2 >= 8.0);
    }
    SECTION("doubled flow is symplectic for (-sigma)+sigma") {
        DoubledProblem dp = jtest::periodic_driftless(jtest::fourier_potential(17), 1, 256);
        FlowSolution fl = fundamental_solution(dp, 0.7);
        const Mat jt = dp.J_doubled().transpose();  // representation with sigma(v,w) = <v, J w>
        double worst = 0.0;
        for (const auto& phi : fl.nodes)
            worst = std::max(worst, max_abs(phi.transpose() * jt * phi - jt));
        REQUIRE(worst <= 1e-8);
        REQUIRE(max_abs(fl.at_one().topLeftCorner(2, 2) - Mat::Identity(2, 2)) == 0.0);
    }
}

TEST_CASE("closed forms at s = 0", "[flow]") {
    SECTION("W = 0: unipotent flow and vanishing derivative") {
        ProblemLQ p = build_driftless(jtest::zero_fn(1), 1, TimeGrid{128});
        ClosedFormS0 cf = closed_form_s0(p);
        const int mid = p.grid.fine_count() / 2;
        REQUIRE(cf.phi0(mid)(1, 0) == Approx(p.grid.fine_t(mid)).margin(1e-13));
        REQUIRE(max_abs(cf.dphi_ds0_at_one()) < 1e-13);
    }
    SECTION("constant potential: Theta(1) = r/2, Gamma(1) = 1") {
        const double r = 3.2;  // W = -r
        ProblemLQ p = build_driftless(const_fn(-r * Mat::Identity(1, 1)), 1, TimeGrid{256});
        ClosedFormS0 cf = closed_form_s0(p);
        REQUIRE(cf.theta1()(0, 0) == Approx(r / 2).margin(1e-12));
        REQUIRE(cf.gamma1()(0, 0) == Approx(1.0).margin(1e-12));
    }
    SECTION("Omega cross-checked against finite differences of the flow") {
        ProblemLQ p = build_driftless(const_fn(-2.0 * Mat::Identity(1, 1)), 1, TimeGrid{1024});
        ClosedFormS0 cf = closed_form_s0(p);
        const double h = 1e-5;
        const Mat fd = (fundamental_solution(p, h, false).at_one() -
                        fundamental_solution(p, -h, false).at_one()) /
                       (2.0 * h);
        REQUIRE(fd(1, 0) == Approx(cf.omega1()(0, 0)).margin(1e-5));
    }
}

TEST_CASE("monodromy", "[flow]") {
    SECTION("W = 0 gives the unipotent lift") {
        ProblemLQ p = build_driftless(jtest::zero_fn(1), 1, TimeGrid{128});
        Mat expected(2, 2);
        expected << 1, 0, 1, 1;
        REQUIRE(max_abs(monodromy(p) - expected) < 1e-10);
        REQUIRE(max_abs(monodromy_driftless_direct(jtest::zero_fn(1), 1, TimeGrid{128}) - expected) <
                1e-10);
    }
    SECTION("harmonic oscillator closed form") {
        const double w = 2.2;
        auto W = const_fn(-w * w * Mat::Identity(1, 1));
        const Mat psi = monodromy(build_driftless(W, 1, TimeGrid{1024}));
        Mat expected(2, 2);
        expected << std::cos(w), -w * std::sin(w), std::sin(w) / w, std::cos(w);
        REQUIRE(max_abs(psi - expected) < 1e-8);
        REQUIRE(symplecticity_defect(SymplecticFrame{1}, psi) <= 1e-8);
    }
    SECTION("both computation routes agree, including drift") {
        auto W = jtest::fourier_potential(23);
        REQUIRE(max_abs(monodromy(build_driftless(W, 1, TimeGrid{1024})) -
                        monodromy_driftless_direct(W, 1, TimeGrid{1024})) <= 1e-8);

        auto A = const_fn(0.3 * Mat::Identity(1, 1));
        auto B = const_fn(Mat::Identity(1, 1));
        auto R = const_fn(1.1 * Mat::Identity(1, 1));
        ProblemLQ pd = build_drift(A, B, R, 1, 1, TimeGrid{1024});
        REQUIRE(max_abs(monodromy(pd) - monodromy_drift_direct(A, B, R, 1, TimeGrid{1024})) <= 1e-8);
    }
}
