#include <gtest/gtest.h>

#include <random>

#include "chronodg/analysis.hpp"
#include "chronodg/dg1.hpp"

using namespace chronodg;

TEST(Dg1Assemble, LinearBlocks) {
    for (double dt : {1.0, 0.3}) {
        const DG1SlabSystem sys = assemble_dg1({1, 1.0, dt});
        EXPECT_LE(max_abs_diff(sys.N[4], dt * RealMatrix{{0.5, -0.5}, {0.5, 0.5}}), 1e-15);
        EXPECT_LE(max_abs_diff(sys.N[5], RealMatrix{{0, -1}, {0, -1}}), 1e-15);
    }
}

TEST(Dg1Assemble, KroneckerBlocks) {
    const DG1SlabSystem sys = assemble_dg1({1, 1.0, 1.0});
    const RealMatrix L = oscillator_operator(1.0);
    const RealMatrix NL = kron(sys.N[4], L);
    const double f[2][2] = {{0.5, -0.5}, {0.5, 0.5}};
    for (std::size_t bi = 0; bi < 2; ++bi)
        for (std::size_t bj = 0; bj < 2; ++bj)
            for (std::size_t i = 0; i < 2; ++i)
                for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(NL(2 * bi + i, 2 * bj + j), f[bi][bj] * L(i, j), 1e-15);
}

TEST(Dg1Assemble, QuadraticRow) {
    const DG1SlabSystem sys = assemble_dg1({2, 1.0, 0.5});
    EXPECT_NEAR(sys.N[4](1, 0), 0.5 / 6, 1e-15);
    EXPECT_NEAR(sys.N[4](1, 1), 0.5 * 5 / 12, 1e-15);
    EXPECT_NEAR(sys.N[4](1, 2), -0.5 / 12, 1e-15);
}

TEST(Dg1Assemble, BlocksMatchLobattoAndPattern) {
    for (int r = 1; r <= 3; ++r) {
        const double dt = 0.37;
        const DG1SlabSystem sys = assemble_dg1({r, 2.0, dt});
        EXPECT_LE(max_abs_diff(sys.N[4], dt * lobatto_iiic(r + 1).A), 1e-12) << r;
        const std::size_t n = static_cast<std::size_t>(r) + 1;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(sys.N[5](i, j), j == n - 1 ? -1.0 : 0.0, 1e-12);
        const RealMatrix lhs = sys.N[1] + sys.N[3];
        EXPECT_LE(max_abs_diff(lhs * sys.N[4], sys.N[2]), 1e-12);
        EXPECT_LE(max_abs_diff(lhs * sys.N[5], sys.N[0]), 1e-12);
    }
}

TEST(Dg1Assemble, DeterminantExample) { EXPECT_NEAR(determinant(assemble_dg1({1, 1.0, 1.0}).K), 1.25, 1e-14); }

TEST(Dg1Assemble, DeterminantFormulas) {
    std::mt19937 rng(41);
    std::uniform_real_distribution<double> l(0.1, 10), d(0.01, 2);
    for (int k = 0; k < 50; ++k) {
        const double L = l(rng), dt = d(rng), x = L * dt * dt;
        const double expect[3] = {(4 + x * x) / 4, (576 + 36 * x + x * x * x) / 576,
                                  x * x * x * x / 129600 + x * x / 900 + 2 * x / 45 + 1};
        for (int r = 1; r <= 3; ++r) {
            const double det = determinant(assemble_dg1({r, L, dt}).K);
            EXPECT_LE(std::abs(det - expect[r - 1]) / expect[r - 1], 1e-12) << "r=" << r << " x=" << x;
        }
    }
}

TEST(Dg1Assemble, InvalidConfig) {
    EXPECT_THROW(assemble_dg1({4, 1.0, 0.1}), Unsupported);
    EXPECT_THROW(assemble_dg1({1, 1.0, -0.1}), InvalidArgument);
}

TEST(Dg1Step, FreeMotionKeepsConstants) {
    for (int r = 1; r <= 3; ++r) {
        const DG1SlabSystem sys = assemble_dg1({r, 0.0, 0.25});
        Vec z(2 * (static_cast<std::size_t>(r) + 1), 0.0);
        z[z.size() - 2] = 1;
        const Vec out = dg1_step(sys, z);
        for (std::size_t i = 0; i < out.size(); i += 2) {
            EXPECT_NEAR(out[i], 1, 1e-14);
            EXPECT_NEAR(out[i + 1], 0, 1e-14);
        }
    }
}

TEST(Dg1Step, MatchesTwoStageLobatto) {
    const DG1SlabSystem sys = assemble_dg1({1, 1.0, 1.0});
    const Vec out = dg1_step(sys, Vec{0.3, -7.0, 1.0, 0.0});
    const IrkStepResult irk = irk_step(lobatto_iiic(2), oscillator_operator(1.0), 1.0, Vec{1, 0});
    EXPECT_LE(norm2(vsub(last_pair(out), irk.z_next)), 1e-14);
    EXPECT_NEAR(out[2], 0.4, 1e-14);
    EXPECT_NEAR(out[3], -0.8, 1e-14);
    EXPECT_LE(norm2(vsub(out, stage_values(irk.stages, 1.0))), 1e-14);
}

TEST(Dg1Step, ResidualAndLengthCheck) {
    const DG1SlabSystem sys = assemble_dg1({3, 2.0, 0.2});
    const Vec z{1, 2, 3, 4, 5, 6, 0.5, -0.25};
    const Vec out = dg1_step(sys, z);
    const Vec res = vadd(sys.K * out, kron(sys.N[5], RealMatrix::identity(2)) * z);
    EXPECT_LE(norm2(res), 1e-12);
    EXPECT_THROW(dg1_step(sys, Vec{1, 2}), InvalidArgument);
}

TEST(TableauFromNodes, ReproducesLobatto) {
    for (int r = 1; r <= 3; ++r) {
        const ButcherTableau built = dg1_tableau(r), ref = lobatto_iiic(r + 1);
        EXPECT_LE(max_abs_diff(built.A, ref.A), 1e-12) << r;
        for (std::size_t i = 0; i < built.b.size(); ++i) EXPECT_NEAR(built.b[i], ref.b[i], 1e-14);
    }
}

TEST(TableauFromNodes, FirstColumnIsFirstWeight) {
    const Vec c{0, 0.3, 0.7, 1}, b{0.1, 0.4, 0.3, 0.2};
    const ButcherTableau t = tableau_from_nodes(c, b);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(t.A(i, 0), 0.1);
}

TEST(TableauFromNodes, Errors) {
    EXPECT_THROW(tableau_from_nodes(Vec{0, 0.5, 0.5}, Vec{0.2, 0.4, 0.4}), DuplicateNodes);
    EXPECT_THROW(tableau_from_nodes(Vec{0.1, 1}, Vec{0.5, 0.5}), InvalidArgument);
    EXPECT_THROW(tableau_from_nodes(Vec{0, 1.5}, Vec{0.5, 0.5}), InvalidArgument);
    EXPECT_THROW(tableau_from_nodes(Vec{0, 1}, Vec{1}), InvalidArgument);
}

TEST(InitialSlabDg1, Replicates) {
    const Oscillator prob{1.0, 1.0, 1.0, 20};
    EXPECT_EQ(initial_slab_dg1({1, 1.0, 0.1}, prob), (Vec{1, 1, 1, 1}));
    const Vec z3 = initial_slab_dg1({3, 1.0, 0.1}, Oscillator{1.0, 0.2, -0.4, 20});
    ASSERT_EQ(z3.size(), 8u);
    EXPECT_EQ(last_pair(z3), (Vec{0.2, -0.4}));
}

TEST(InitialSlabDg1, OnlyLastPairIsRead) {
    const DG1SlabSystem sys = assemble_dg1({2, 1.0, 0.1});
    const Vec full = initial_slab_dg1({2, 1.0, 0.1}, Oscillator{});
    const Vec sparse{0, 0, 0, 0, 1, 1};
    EXPECT_EQ(dg1_step(sys, full), dg1_step(sys, sparse));
}

TEST(Dg1Lobatto, EquivalenceMarch) {
    for (int r = 1; r <= 3; ++r)
        for (double lambda : {1.0, 4.0})
            for (double dt : {0.1, 0.05}) {
                const Dg1LobattoDeviation d = dg1_lobatto_deviation(r, lambda, dt, 200, Oscillator{lambda, 1, 1, 20});
                EXPECT_LE(d.state, 1e-10) << r << " " << lambda << " " << dt;
                EXPECT_LE(d.stages, 1e-9) << r << " " << lambda << " " << dt;
            }
}

TEST(Dg1Convergence, SlabAndFinalOrders) {
    for (int r = 1; r <= 3; ++r) {
        const ConvergenceReport rep = run_convergence(Dg1Method{r}, Oscillator{}, reference_dts());
        ASSERT_FALSE(rep.unstable);
        EXPECT_GE(rep.slab_order, r + 0.8);
        EXPECT_LE(rep.slab_order, r + 1.2);
        EXPECT_GE(rep.final_order, 2 * r - 0.25);
        EXPECT_LE(rep.final_order, 2 * r + 0.35);
    }
}

TEST(Dg1Conditioning, SlabMatrixStaysBounded) {
    for (int r = 1; r <= 3; ++r) {
        const SweepCurve c = conditioning_sweep(SlabMatrixKind::dg1_bplus, r, 1.0, reference_dts());
        EXPECT_GE(c.slope, -0.2);
        EXPECT_LE(c.slope, 0.2);
    }
}
