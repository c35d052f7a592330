#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "chronodg/analysis.hpp"
#include "chronodg/irk.hpp"
#include "chronodg/newmark.hpp"

using namespace chronodg;

TEST(LobattoIIIC, TwoStageCoefficients) {
    const ButcherTableau t = lobatto_iiic(2);
    EXPECT_EQ(max_abs_diff(t.A, RealMatrix{{0.5, -0.5}, {0.5, 0.5}}), 0);
    EXPECT_DOUBLE_EQ(t.b[0], 0.5);
    EXPECT_DOUBLE_EQ(t.c[1], 1.0);
}

TEST(LobattoIIIC, ThreeStageSecondRow) {
    const ButcherTableau t = lobatto_iiic(3);
    EXPECT_NEAR(t.A(1, 0), 1.0 / 6, 1e-16);
    EXPECT_NEAR(t.A(1, 1), 5.0 / 12, 1e-16);
    EXPECT_NEAR(t.A(1, 2), -1.0 / 12, 1e-16);
    EXPECT_NEAR(t.c[1], 0.5, 1e-16);
}

TEST(LobattoIIIC, FourStageNodesAndWeights) {
    const ButcherTableau t = lobatto_iiic(4);
    const double r5 = std::sqrt(5.0);
    EXPECT_NEAR(t.c[1], 0.5 - r5 / 10, 1e-16);
    EXPECT_NEAR(t.c[2], 0.5 + r5 / 10, 1e-16);
    EXPECT_NEAR(t.b[1], 5.0 / 12, 1e-16);
    EXPECT_NEAR(t.b[3], 1.0 / 12, 1e-16);
}

TEST(LobattoIIIC, UnsupportedStageCount) {
    EXPECT_THROW(lobatto_iiic(1), Unsupported);
    EXPECT_THROW(lobatto_iiic(5), Unsupported);
}

TEST(IrkStep, ConstantSolutionWithoutStiffness) {
    const RealMatrix L = oscillator_operator(0.0);
    for (double dt : {0.1, 1.0, 7.0}) {
        const IrkStepResult r = irk_step(lobatto_iiic(3), L, dt, Vec{1, 0});
        EXPECT_NEAR(r.z_next[0], 1, 1e-15);
        EXPECT_NEAR(r.z_next[1], 0, 1e-15);
    }
}

TEST(IrkStep, StageMatrixDeterminant) {
    EXPECT_NEAR(determinant(irk_stage_matrix(lobatto_iiic(2), oscillator_operator(1), 1)), 1.25, 1e-14);
}

TEST(IrkStep, TwoStageBruteForce) {
    // 4x4 stage system, checked via residual and update
    const ButcherTableau t = lobatto_iiic(2);
    const RealMatrix L = oscillator_operator(1);
    const IrkStepResult r = irk_step(t, L, 1.0, Vec{1, 0});
    const RealMatrix K = irk_stage_matrix(t, L, 1.0);
    Vec k;
    for (const auto& ki : r.stages) k.insert(k.end(), ki.begin(), ki.end());
    const Vec rhs{0, -1, 0, -1};  // L z repeated
    EXPECT_LE(norm2(vsub(K * k, rhs)), 1e-14);
    // R(z) = 1/(1 - z + z^2/2) at z = -i gives 0.4 - 0.8i
    EXPECT_NEAR(r.z_next[0], 0.4, 1e-14);
    EXPECT_NEAR(r.z_next[1], -0.8, 1e-14);
}

TEST(IrkStep, StepMatrixAgreesWithStep) {
    const RealMatrix L = oscillator_operator(2.5);
    for (int s = 2; s <= 4; ++s) {
        const RealMatrix S = irk_step_matrix(lobatto_iiic(s), L, 0.3);
        const Vec z{0.4, -1.3};
        EXPECT_LE(norm2(vsub(S * z, irk_step(lobatto_iiic(s), L, 0.3, z).z_next)), 1e-14);
    }
}

TEST(OrderConditions, TwoStageB2) {
    const Vec b = order_condition_B(lobatto_iiic(2), 2);
    EXPECT_EQ(b[0], 0);
    EXPECT_EQ(b[1], 0);
}

TEST(OrderConditions, ThreeStageC2D2) {
    const ButcherTableau t = lobatto_iiic(3);
    const RealMatrix C = order_condition_C(t, 2), D = order_condition_D(t, 2);
    for (double x : C.data()) EXPECT_LE(std::abs(x), 1e-14);
    for (double x : D.data()) EXPECT_LE(std::abs(x), 1e-14);
}

TEST(OrderConditions, FullSetForAllStageCounts) {
    for (int s = 2; s <= 4; ++s) {
        const ButcherTableau t = lobatto_iiic(s);
        for (double x : order_condition_B(t, 2 * s - 2)) EXPECT_LE(std::abs(x), 1e-12);
        const RealMatrix C = order_condition_C(t, s - 1), D = order_condition_D(t, s - 1);
        for (double x : C.data()) EXPECT_LE(std::abs(x), 1e-12);
        for (double x : D.data()) EXPECT_LE(std::abs(x), 1e-12);
        for (std::size_t j = 0; j < t.stages(); ++j) {
            EXPECT_NEAR(t.A(t.stages() - 1, j), t.b[j], 1e-15);
            EXPECT_NEAR(t.A(j, 0), t.b[0], 1e-15);
        }
        // order is exactly 2s-2: B(2s-1) fails
        EXPECT_GT(std::abs(order_condition_B(t, 2 * s - 1).back()), 1e-4);
    }
}

TEST(StabilityFunction, UnityAtOrigin) {
    for (int s = 2; s <= 4; ++s) EXPECT_NEAR(std::abs(stability_function(lobatto_iiic(s), 0.0) - 1.0), 0, 1e-15);
}

TEST(StabilityFunction, TwoStageValue) {
    EXPECT_NEAR(std::abs(stability_function(lobatto_iiic(2), -1.0) - 0.4), 0, 1e-15);
}

TEST(StabilityFunction, ThreeStageSubdiagonalPade) {
    // (1 + z/4) / (1 - 3z/4 + z^2/4 - z^3/24)
    auto pade = [](cplx z) { return (1.0 + z / 4.0) / (1.0 - 3.0 * z / 4.0 + z * z / 4.0 - z * z * z / 24.0); };
    for (cplx z : {cplx(-2, 0), cplx(-0.5, 1.5), cplx(3, -1)})
        EXPECT_NEAR(std::abs(stability_function(lobatto_iiic(3), z) - pade(z)), 0, 1e-14);
}

TEST(StabilityFunction, ApproximatesExponentialToOrder) {
    // R(z) - e^z = O(z^{2s-1})
    for (int s = 2; s <= 4; ++s) {
        const double e1 = std::abs(stability_function(lobatto_iiic(s), cplx(-0.1)) - std::exp(-0.1));
        const double e2 = std::abs(stability_function(lobatto_iiic(s), cplx(-0.05)) - std::exp(-0.05));
        EXPECT_NEAR(std::log2(e1 / e2), 2 * s - 1, 0.15);
    }
}

TEST(StabilityFunction, LStableDecay) {
    for (int s = 2; s <= 4; ++s) {
        double prev = 1.0;
        for (int k = 1; k <= 6; ++k) {
            const double m = std::abs(stability_function(lobatto_iiic(s), cplx(-std::pow(10.0, k))));
            EXPECT_LT(m, prev);
            if (k >= 3) {
                EXPECT_LT(m, 0.1);
            }
            prev = m;
        }
    }
}

TEST(StabilityFunction, PoleThrows) {
    // I - zA singular for A = [[1]] at z = 1
    const ButcherTableau t{RealMatrix{{1.0}}, {1.0}, {1.0}};
    EXPECT_THROW(stability_function(t, 1.0), PoleHit);
}

TEST(AlgebraicStability, LobattoIIIC) {
    for (int s = 2; s <= 4; ++s) {
        const AlgebraicStability a = algebraic_stability_check(lobatto_iiic(s));
        EXPECT_TRUE(a.B_psd);
        EXPECT_TRUE(a.M_psd);
    }
}

TEST(AlgebraicStability, ExplicitEulerFails) {
    const AlgebraicStability a = algebraic_stability_check({RealMatrix{{0.0}}, {1.0}, {0.0}});
    EXPECT_TRUE(a.B_psd);
    EXPECT_FALSE(a.M_psd);
    EXPECT_NEAR(a.M_min_eigenvalue, -1.0, 1e-15);
}

TEST(IrkProperties, ObservedOrderTwoSMinusTwo) {
    const Oscillator p;
    for (int s = 2; s <= 4; ++s) {
        const auto rep = run_convergence(LobattoMethod{s}, p, reference_dts());
        EXPECT_NEAR(rep.final_order, 2 * s - 2, 0.2) << "s=" << s;
    }
}
