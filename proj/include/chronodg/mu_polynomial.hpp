#pragma once

// Polynomials in mu = lambda * dt^2 with real coefficients. Used to assemble the
// DG2 slab matrices symbolically in mu, so that det(A+) and adj(A+) A- can be
// split into their mu-power coefficients.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "chronodg/smallmat.hpp"

namespace chronodg {

class MuPolynomial {
public:
    MuPolynomial() = default;
    MuPolynomial(double c0) : c_{c0} { trim(); }  // NOLINT: implicit on purpose, scalars embed
    explicit MuPolynomial(std::vector<double> coeffs) : c_(std::move(coeffs)) { trim(); }

    static MuPolynomial mu() { return MuPolynomial(std::vector<double>{0.0, 1.0}); }

    // Ascending powers of mu; empty for the zero polynomial.
    const std::vector<double>& coefficients() const { return c_; }
    double coeff(std::size_t k) const { return k < c_.size() ? c_[k] : 0.0; }
    int degree() const { return static_cast<int>(c_.size()) - 1; }
    bool is_zero() const { return c_.empty(); }

    double operator()(double mu) const {
        double p = 0;
        for (std::size_t k = c_.size(); k-- > 0;) p = p * mu + c_[k];
        return p;
    }

    MuPolynomial& operator+=(const MuPolynomial& o) {
        if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), 0.0);
        for (std::size_t k = 0; k < o.c_.size(); ++k) c_[k] += o.c_[k];
        trim();
        return *this;
    }
    MuPolynomial& operator-=(const MuPolynomial& o) { return *this += o * -1.0; }
    MuPolynomial& operator*=(const MuPolynomial& o) { return *this = *this * o; }

    friend MuPolynomial operator+(MuPolynomial a, const MuPolynomial& b) { return a += b; }
    friend MuPolynomial operator-(MuPolynomial a, const MuPolynomial& b) { return a -= b; }
    friend MuPolynomial operator-(const MuPolynomial& a) { return a * -1.0; }
    friend MuPolynomial operator*(const MuPolynomial& a, const MuPolynomial& b) {
        if (a.c_.empty() || b.c_.empty()) return {};
        std::vector<double> c(a.c_.size() + b.c_.size() - 1, 0.0);
        for (std::size_t i = 0; i < a.c_.size(); ++i)
            for (std::size_t j = 0; j < b.c_.size(); ++j) c[i + j] += a.c_[i] * b.c_[j];
        return MuPolynomial(std::move(c));
    }
    friend MuPolynomial operator*(const MuPolynomial& a, double s) {
        std::vector<double> c = a.c_;
        for (auto& x : c) x *= s;
        return MuPolynomial(std::move(c));
    }
    friend MuPolynomial operator*(double s, const MuPolynomial& a) { return a * s; }

    // Divides by mu^m; the caller guarantees the low coefficients vanish.
    MuPolynomial shifted_down(std::size_t m) const {
        if (m >= c_.size()) return {};
        return MuPolynomial(std::vector<double>(c_.begin() + static_cast<std::ptrdiff_t>(m), c_.end()));
    }

    // Index of the lowest nonzero coefficient (|c| > tol * max|c|).
    std::size_t valuation(double tol = 1e-12) const {
        const double big = max_abs();
        for (std::size_t k = 0; k < c_.size(); ++k)
            if (std::abs(c_[k]) > tol * big) return k;
        return c_.size();
    }

    double max_abs() const {
        double m = 0;
        for (double x : c_) m = std::max(m, std::abs(x));
        return m;
    }

    // Zeroes coefficients below tol * scale and drops trailing zeros.
    MuPolynomial cleaned(double scale, double tol = 1e-12) const {
        std::vector<double> c = c_;
        for (auto& x : c)
            if (std::abs(x) <= tol * scale) x = 0.0;
        return MuPolynomial(std::move(c));
    }

private:
    void trim() {
        while (!c_.empty() && c_.back() == 0.0) c_.pop_back();
    }
    std::vector<double> c_;
};

using MuMatrix = Matrix<MuPolynomial>;

inline RealMatrix evaluate(const MuMatrix& m, double mu) {
    RealMatrix r(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) r(i, j) = m(i, j)(mu);
    return r;
}

// Coefficient matrix of mu^k.
inline RealMatrix coefficient_matrix(const MuMatrix& m, std::size_t k) {
    RealMatrix r(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) r(i, j) = m(i, j).coeff(k);
    return r;
}

inline int max_degree(const MuMatrix& m) {
    int d = -1;
    for (const auto& p : m.data()) d = std::max(d, p.degree());
    return d;
}

template <class T>
Matrix<T> minor_matrix(const Matrix<T>& a, std::size_t skip_row, std::size_t skip_col) {
    const std::size_t n = a.rows();
    Matrix<T> m(n - 1, n - 1);
    for (std::size_t i = 0, mi = 0; i < n; ++i) {
        if (i == skip_row) continue;
        for (std::size_t j = 0, mj = 0; j < n; ++j) {
            if (j == skip_col) continue;
            m(mi, mj++) = a(i, j);
        }
        ++mi;
    }
    return m;
}

// Cofactor expansion along the first row; fine for the n <= 4 slab matrices.
template <class T>
T cofactor_determinant(const Matrix<T>& a) {
    if (!a.square()) throw InvalidArgument("determinant of a non-square matrix");
    const std::size_t n = a.rows();
    if (n == 0) return T(1);
    if (n == 1) return a(0, 0);
    if (n == 2) return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    T det{};
    for (std::size_t j = 0; j < n; ++j) {
        const T term = a(0, j) * cofactor_determinant(minor_matrix(a, 0, j));
        det = (j % 2 == 0) ? det + term : det - term;
    }
    return det;
}

template <class T>
Matrix<T> adjugate(const Matrix<T>& a) {
    const std::size_t n = a.rows();
    Matrix<T> adj(n, n);
    if (n == 1) {
        adj(0, 0) = T(1);
        return adj;
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const T m = cofactor_determinant(minor_matrix(a, j, i));
            adj(i, j) = ((i + j) % 2 == 0) ? m : T{} - m;
        }
    return adj;
}

}  // namespace chronodg
