#pragma once

// Butcher tableaux, implicit RK steps for z' = L z via the Kronecker stage
// system, Lobatto IIIC coefficients and the simplifying order conditions.

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "chronodg/errors.hpp"
#include "chronodg/smallmat.hpp"

namespace chronodg {

template <class T>
struct BasicButcherTableau {
    Matrix<T> A;
    std::vector<T> b;
    std::vector<T> c;

    std::size_t stages() const { return b.size(); }
};
using ButcherTableau = BasicButcherTableau<double>;

template <class T = double>
BasicButcherTableau<T> lobatto_iiic(int s) {
    const T one = 1;
    switch (s) {
        case 2:
            return {Matrix<T>{{one / 2, -one / 2}, {one / 2, one / 2}}, {one / 2, one / 2}, {T(0), one}};
        case 3:
            return {Matrix<T>{{one / 6, -one / 3, one / 6}, {one / 6, 5 * one / 12, -one / 12}, {one / 6, 2 * one / 3, one / 6}},
                    {one / 6, 2 * one / 3, one / 6},
                    {T(0), one / 2, one}};
        case 4: {
            const T r5 = real_sqrt(T(5));
            return {Matrix<T>{{one / 12, -r5 / 12, r5 / 12, -one / 12},
                              {one / 12, one / 4, (10 - 7 * r5) / 60, r5 / 60},
                              {one / 12, (10 + 7 * r5) / 60, one / 4, -r5 / 60},
                              {one / 12, 5 * one / 12, 5 * one / 12, one / 12}},
                    {one / 12, 5 * one / 12, 5 * one / 12, one / 12},
                    {T(0), one / 2 - r5 / 10, one / 2 + r5 / 10, one}};
        }
        default:
            throw Unsupported("Lobatto IIIC is provided for s = 2, 3, 4 only");
    }
}

// I_s (x) I_2 - dt A (x) L
inline RealMatrix irk_stage_matrix(const ButcherTableau& tab, const RealMatrix& L, double dt) {
    const std::size_t s = tab.stages(), m = L.rows();
    return RealMatrix::identity(s * m) - dt * kron(tab.A, L);
}

struct IrkStepResult {
    std::vector<Vec> stages;  // stage derivatives k_i
    Vec z_next;
};

inline IrkStepResult irk_step(const ButcherTableau& tab, const RealMatrix& L, double dt, const Vec& z) {
    const std::size_t s = tab.stages(), m = L.rows();
    const Vec Lz = L * z;
    Vec rhs(s * m);
    for (std::size_t i = 0; i < s; ++i)
        for (std::size_t j = 0; j < m; ++j) rhs[i * m + j] = Lz[j];
    Vec k;
    try {
        k = solve(irk_stage_matrix(tab, L, dt), rhs);
    } catch (const SingularMatrix& e) {
        throw SingularStageSystem(e.what());
    }
    IrkStepResult out{std::vector<Vec>(s, Vec(m)), z};
    for (std::size_t i = 0; i < s; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            out.stages[i][j] = k[i * m + j];
            out.z_next[j] += dt * tab.b[i] * k[i * m + j];
        }
    return out;
}

// Linear one-step map z -> z_next: I + dt (b^T (x) I)(I - dt A (x) L)^{-1}(1 (x) L).
template <class T>
Matrix<T> irk_step_matrix(const BasicButcherTableau<T>& tab, const Matrix<T>& L, T dt) {
    const std::size_t s = tab.stages(), m = L.rows();
    Matrix<T> rhs(s * m, m);
    for (std::size_t i = 0; i < s; ++i) rhs.set_block(i * m, 0, L);
    const Matrix<T> stage = Matrix<T>::identity(s * m) - kron(tab.A, L) * dt;
    Matrix<T> k;
    try {
        k = solve(stage, rhs);
    } catch (const SingularMatrix& e) {
        throw SingularStageSystem(e.what());
    }
    Matrix<T> S = Matrix<T>::identity(m);
    for (std::size_t i = 0; i < s; ++i)
        for (std::size_t p = 0; p < m; ++p)
            for (std::size_t q = 0; q < m; ++q) S(p, q) += dt * tab.b[i] * k(i * m + p, q);
    return S;
}

// B(p): sum_j b_j c_j^{k-1} - 1/k for k = 1..p.
inline Vec order_condition_B(const ButcherTableau& tab, int p) {
    Vec res(static_cast<std::size_t>(std::max(p, 0)));
    for (int k = 1; k <= p; ++k) {
        double s = 0;
        for (std::size_t j = 0; j < tab.stages(); ++j) s += tab.b[j] * std::pow(tab.c[j], k - 1);
        res[static_cast<std::size_t>(k - 1)] = s - 1.0 / k;
    }
    return res;
}

// C(q): entry (i, k-1) = sum_j a_ij c_j^{k-1} - c_i^k / k.
inline RealMatrix order_condition_C(const ButcherTableau& tab, int q) {
    const std::size_t s = tab.stages();
    RealMatrix res(s, static_cast<std::size_t>(std::max(q, 0)));
    for (std::size_t i = 0; i < s; ++i)
        for (int k = 1; k <= q; ++k) {
            double v = 0;
            for (std::size_t j = 0; j < s; ++j) v += tab.A(i, j) * std::pow(tab.c[j], k - 1);
            res(i, static_cast<std::size_t>(k - 1)) = v - std::pow(tab.c[i], k) / k;
        }
    return res;
}

// D(r): entry (j, k-1) = sum_i b_i c_i^{k-1} a_ij - b_j (1 - c_j^k) / k.
inline RealMatrix order_condition_D(const ButcherTableau& tab, int r) {
    const std::size_t s = tab.stages();
    RealMatrix res(s, static_cast<std::size_t>(std::max(r, 0)));
    for (std::size_t j = 0; j < s; ++j)
        for (int k = 1; k <= r; ++k) {
            double v = 0;
            for (std::size_t i = 0; i < s; ++i) v += tab.b[i] * std::pow(tab.c[i], k - 1) * tab.A(i, j);
            res(j, static_cast<std::size_t>(k - 1)) = v - tab.b[j] * (1.0 - std::pow(tab.c[j], k)) / k;
        }
    return res;
}

// R(z) = 1 + z b^T (I - zA)^{-1} 1
inline cplx stability_function(const ButcherTableau& tab, cplx z) {
    const std::size_t s = tab.stages();
    ComplexMatrix m = ComplexMatrix::identity(s) - z * to_complex(tab.A);
    CVec x;
    try {
        x = solve(m, CVec(s, cplx(1.0)));
    } catch (const SingularMatrix&) {
        throw PoleHit("I - zA is singular");
    }
    cplx acc = 0;
    for (std::size_t i = 0; i < s; ++i) acc += tab.b[i] * x[i];
    return 1.0 + z * acc;
}

struct AlgebraicStability {
    bool B_psd;
    bool M_psd;
    double B_min_eigenvalue;
    double M_min_eigenvalue;
};

// B = diag(b), M = BA + A^T B - b b^T, both checked for positive semi-definiteness.
inline AlgebraicStability algebraic_stability_check(const ButcherTableau& tab) {
    const RealMatrix B = diag(tab.b);
    RealMatrix bbT(tab.stages(), tab.stages());
    for (std::size_t i = 0; i < tab.stages(); ++i)
        for (std::size_t j = 0; j < tab.stages(); ++j) bbT(i, j) = tab.b[i] * tab.b[j];
    RealMatrix M = B * tab.A + transpose(tab.A) * B - bbT;
    M = 0.5 * (M + transpose(M));
    const double bmin = symmetric_eigenvalues(B).front();
    const double mmin = symmetric_eigenvalues(M).front();
    return {bmin >= -1e-12, mmin >= -1e-12, bmin, mmin};
}

}  // namespace chronodg
