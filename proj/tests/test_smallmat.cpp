#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "chronodg/dg2.hpp"
#include "chronodg/smallmat.hpp"

using namespace chronodg;

namespace {

RealMatrix random_matrix(std::mt19937& rng, std::size_t m, std::size_t n) {
    std::uniform_real_distribution<double> u(-1, 1);
    RealMatrix a(m, n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = u(rng);
    return a;
}

double residual(const RealMatrix& a, const Vec& x, const Vec& b) { return norm2(vsub(a * x, b)); }

}  // namespace

TEST(Solve, IdentityReturnsRhs) {
    const Vec x = solve(RealMatrix::identity(2), Vec{3, 7});
    EXPECT_DOUBLE_EQ(x[0], 3);
    EXPECT_DOUBLE_EQ(x[1], 7);
}

TEST(Solve, Diagonal) {
    const Vec x = solve(RealMatrix{{2, 0}, {0, 4}}, Vec{2, 4});
    EXPECT_DOUBLE_EQ(x[0], 1);
    EXPECT_DOUBLE_EQ(x[1], 1);
}

TEST(Solve, NeedsElimination) {
    const Vec x = solve(RealMatrix{{1, -1}, {1, 1}}, Vec{0, 2});
    EXPECT_NEAR(x[0], 1, 1e-15);
    EXPECT_NEAR(x[1], 1, 1e-15);
}

TEST(Solve, ResidualBoundOnRandomSystems) {
    std::mt19937 rng(1);
    for (int k = 0; k < 50; ++k) {
        const RealMatrix a = random_matrix(rng, 6, 6);
        const Vec b = random_matrix(rng, 6, 1).col(0);
        const Vec x = solve(a, b);
        EXPECT_LE(residual(a, x, b), 1e-12 * (norm_fro(a) * norm2(x) + norm2(b)));
    }
}

TEST(Solve, ComplexSystem) {
    const ComplexMatrix a{{cplx(1, 1), cplx(0, 0)}, {cplx(0, 0), cplx(0, 2)}};
    const CVec x = solve(a, CVec{cplx(2, 0), cplx(2, 0)});
    EXPECT_NEAR(std::abs(x[0] - cplx(1, -1)), 0, 1e-15);
    EXPECT_NEAR(std::abs(x[1] - cplx(0, -1)), 0, 1e-15);
}

TEST(Solve, SingularThrows) {
    EXPECT_THROW(solve(RealMatrix{{1, 2}, {2, 4}}, Vec{1, 1}), SingularMatrix);
    EXPECT_THROW(solve(RealMatrix(3, 3), Vec{1, 1, 1}), SingularMatrix);
}

TEST(Solve, ShapeMismatchThrows) {
    EXPECT_THROW(solve(RealMatrix::identity(2), Vec{1, 2, 3}), InvalidArgument);
    EXPECT_THROW(solve(RealMatrix(2, 3), Vec{1, 2}), InvalidArgument);
}

TEST(Kron, IdentityTimesIdentity) { EXPECT_EQ(max_abs_diff(kron(RealMatrix::identity(2), RealMatrix::identity(2)), RealMatrix::identity(4)), 0); }

TEST(Kron, ScalarBlock) {
    const RealMatrix k = kron(RealMatrix{{0, 1}, {0, 0}}, RealMatrix{{2}});
    EXPECT_EQ(max_abs_diff(k, RealMatrix{{0, 2}, {0, 0}}), 0);
}

TEST(Kron, StageOperatorBlocks) {
    const RealMatrix n4{{0.5, -0.5}, {0.5, 0.5}};
    const RealMatrix L{{0, 1}, {-1, 0}};
    const RealMatrix k = kron(n4, L);
    ASSERT_EQ(k.rows(), 4u);
    EXPECT_EQ(max_abs_diff(k.block(0, 0, 2, 2), 0.5 * L), 0);
    EXPECT_EQ(max_abs_diff(k.block(0, 2, 2, 2), -0.5 * L), 0);
    EXPECT_EQ(max_abs_diff(k.block(2, 0, 2, 2), 0.5 * L), 0);
    EXPECT_EQ(max_abs_diff(k.block(2, 2, 2, 2), 0.5 * L), 0);
}

TEST(Kron, MixedProductLaw) {
    std::mt19937 rng(2);
    for (int k = 0; k < 20; ++k) {
        const std::size_t n = k % 2 ? 2 : 3;
        const RealMatrix A = random_matrix(rng, n, n), B = random_matrix(rng, n, n);
        const RealMatrix C = random_matrix(rng, n, n), D = random_matrix(rng, n, n);
        EXPECT_LE(max_abs_diff(kron(A, B) * kron(C, D), kron(A * C, B * D)), 1e-13);
    }
}

TEST(Eig, Diagonal) {
    const EigenDecomposition e = eig(diag(Vec{2, -1}));
    EXPECT_NEAR(std::abs(e.eigenvalues[0] - cplx(2)), 0, 1e-14);
    EXPECT_NEAR(std::abs(e.eigenvalues[1] - cplx(-1)), 0, 1e-14);
    EXPECT_NEAR(std::abs(e.W(0, 1)), 0, 1e-14);
    EXPECT_NEAR(std::abs(e.W(1, 0)), 0, 1e-14);
}

TEST(Eig, Rotation) {
    const EigenDecomposition e = eig(RealMatrix{{0, 1}, {-1, 0}});
    EXPECT_NEAR(std::abs(e.eigenvalues[0] - cplx(0, 1)), 0, 1e-14);
    EXPECT_NEAR(std::abs(e.eigenvalues[1] - cplx(0, -1)), 0, 1e-14);
}

TEST(Eig, LinearP1PropagatorOnUnitCircle) {
    const RealMatrix G = assemble({1, SMode::a_dt2, 0.5, 1.0, 1.0}).G;
    const EigenDecomposition e = eig(G);
    EXPECT_NEAR(std::abs(e.eigenvalues[0] - cplx(0.6, 0.8)), 0, 1e-12);
    EXPECT_NEAR(std::abs(e.eigenvalues[1] - cplx(0.6, -0.8)), 0, 1e-12);
    for (const auto& z : e.eigenvalues) EXPECT_NEAR(std::abs(z), 1.0, 1e-12);
}

TEST(Eig, FirstRowNormalization) {
    const RealMatrix G = assemble({2, SMode::zero, 0.0, 1.0, 0.1}).G;
    const EigenDecomposition e = eig(G);
    for (std::size_t j = 0; j < e.W.cols(); ++j) {
        double big = 0;
        for (std::size_t i = 0; i < e.W.rows(); ++i) big = std::max(big, std::abs(e.W(i, j)));
        if (std::abs(e.W(0, j)) > 1e-8 * big)
            EXPECT_NEAR(std::abs(e.W(0, j) - cplx(1)), 0, 1e-14);
        else
            EXPECT_NEAR(big, 1.0, 1e-14);
    }
}

TEST(Eig, OrderingByModulusThenReal) {
    const EigenDecomposition e = eig(diag(Vec{1, -3, 2, -1}));
    const double expect[] = {-3, 2, 1, -1};
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(e.eigenvalues[i].real(), expect[i], 1e-13);
}

TEST(Eig, ReconstructionAndEigenpairs) {
    std::mt19937 rng(5);
    for (int k = 0; k < 30; ++k) {
        const RealMatrix G = random_matrix(rng, 2 + k % 6, 2 + k % 6);
        const EigenDecomposition e = eig(G);
        const double gn = norm_fro(G);
        EXPECT_LE(max_abs_diff(e.W * diag(e.eigenvalues) * e.Winv, to_complex(G)), 1e-9 * gn);
        EXPECT_LE(max_abs_diff(e.W * e.Winv, ComplexMatrix::identity(G.rows())), 1e-10);
        for (std::size_t j = 0; j < G.rows(); ++j) {
            const CVec v = e.W.col(j);
            CVec lv = v;
            for (auto& x : lv) x *= e.eigenvalues[j];
            EXPECT_LE(norm2(vsub(to_complex(G) * v, lv)), 1e-9 * gn * norm2(v));
        }
    }
}

TEST(Eig, SlabPropagatorsWithZeroEigenvalues) {
    for (int r = 2; r <= 3; ++r) {
        const RealMatrix G = assemble({r, SMode::zero, 0.0, 1.0, 0.05}).G;
        const EigenDecomposition e = eig(G);
        EXPECT_LE(max_abs_diff(e.W * diag(e.eigenvalues) * e.Winv, to_complex(G)), 1e-9 * norm_fro(G));
    }
}

TEST(Eig, DefectiveThrows) { EXPECT_THROW(eig(RealMatrix{{1, 1}, {0, 1}}), Defective); }

TEST(SpectralRadius, Identity) { EXPECT_NEAR(spectral_radius(RealMatrix::identity(3)), 1.0, 1e-14); }

TEST(SpectralRadius, LinearP1Conservative) {
    EXPECT_NEAR(spectral_radius(assemble({1, SMode::a_dt2, 0.5, 1.0, 1.0}).G), 1.0, 1e-12);
}

TEST(SpectralRadius, LinearP1Dissipative) { EXPECT_LT(spectral_radius(assemble({1, SMode::zero, 0.0, 1.0, 1.0}).G), 1.0); }

TEST(SpectralRadius, DefectiveDoubleRoot) {
    // Jordan block: eigenvalue still exact
    EXPECT_NEAR(spectral_radius(RealMatrix{{-1.0 / 3, 1}, {0, -1.0 / 3}}), 1.0 / 3, 1e-15);
}

TEST(SpectralRadius, AgreesWithEig) {
    std::mt19937 rng(6);
    for (int k = 0; k < 20; ++k) {
        const RealMatrix G = random_matrix(rng, 5, 5);
        EXPECT_NEAR(spectral_radius(G), std::abs(eig(G).eigenvalues[0]), 1e-12);
    }
}

TEST(Cond2, Identity) { EXPECT_NEAR(cond2(RealMatrix::identity(4)), 1.0, 1e-14); }

TEST(Cond2, Diagonal) { EXPECT_NEAR(cond2(diag(Vec{10, 1})), 10.0, 1e-13); }

TEST(Cond2, AtLeastOne) {
    std::mt19937 rng(7);
    for (int k = 0; k < 20; ++k) EXPECT_GE(cond2(random_matrix(rng, 4, 4)), 1.0);
}

TEST(Cond2, SlabMatrixFinite) {
    const double k = cond2(assemble({1, SMode::zero, 0.0, 1.0, 0.1}).Aplus);
    EXPECT_TRUE(std::isfinite(k));
    EXPECT_GT(k, 1.0);
}

TEST(Cond2, SingularThrows) { EXPECT_THROW(cond2(RealMatrix(2, 2)), SingularMatrix); }

TEST(Svd, SingularValuesOfKnownMatrix) {
    // [[3,0],[4,5]] has singular values sqrt(45), sqrt(5)
    const Vec s = singular_values(RealMatrix{{3, 0}, {4, 5}});
    EXPECT_NEAR(s[0], std::sqrt(45.0), 1e-13);
    EXPECT_NEAR(s[1], std::sqrt(5.0), 1e-13);
}

TEST(Determinant, KnownValues) {
    EXPECT_NEAR(determinant(RealMatrix{{1, 2}, {3, 4}}), -2.0, 1e-14);
    EXPECT_NEAR(determinant(RealMatrix::identity(5)), 1.0, 1e-14);
}

TEST(Inverse, RoundTrip) {
    std::mt19937 rng(8);
    const RealMatrix a = random_matrix(rng, 5, 5);
    EXPECT_LE(max_abs_diff(a * inverse(a), RealMatrix::identity(5)), 1e-12);
}

TEST(ExtendedScalar, SqrtAndTrig) {
    const Extended two = 2;
    EXPECT_NEAR(static_cast<double>(real_sqrt(two) * real_sqrt(two)), 2.0, 1e-16);
    for (double x : {0.0, 0.3, 1.7, -4.2, 20.0}) {
        Extended s, c;
        sin_cos(Extended(x), s, c);
        EXPECT_NEAR(static_cast<double>(s), std::sin(x), 1e-15);
        EXPECT_NEAR(static_cast<double>(c), std::cos(x), 1e-15);
    }
}
