#pragma once

// Dense algebra for the tiny matrices that show up in slab propagators,
// stage systems and GLM blocks (n <= 16 or so).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <utility>
#include <type_traits>
#include <vector>

#include "chronodg/errors.hpp"

namespace chronodg {

using cplx = std::complex<double>;
using Vec = std::vector<double>;
using CVec = std::vector<cplx>;

template <class T>
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, const T& fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    Matrix(std::initializer_list<std::initializer_list<T>> init) {
        rows_ = init.size();
        cols_ = rows_ ? init.begin()->size() : 0;
        data_.reserve(rows_ * cols_);
        for (const auto& row : init) {
            if (row.size() != cols_) throw InvalidArgument("ragged matrix initializer");
            data_.insert(data_.end(), row.begin(), row.end());
        }
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool square() const { return rows_ == cols_; }

    T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const std::vector<T>& data() const { return data_; }

    std::vector<T> row(std::size_t i) const {
        return std::vector<T>(data_.begin() + i * cols_, data_.begin() + (i + 1) * cols_);
    }
    std::vector<T> col(std::size_t j) const {
        std::vector<T> c(rows_);
        for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
        return c;
    }
    void set_col(std::size_t j, const std::vector<T>& c) {
        for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = c[i];
    }

    // Copies `b` into this matrix with its top-left corner at (i0, j0).
    void set_block(std::size_t i0, std::size_t j0, const Matrix& b) {
        for (std::size_t i = 0; i < b.rows(); ++i)
            for (std::size_t j = 0; j < b.cols(); ++j) (*this)(i0 + i, j0 + j) = b(i, j);
    }
    Matrix block(std::size_t i0, std::size_t j0, std::size_t nr, std::size_t nc) const {
        Matrix b(nr, nc);
        for (std::size_t i = 0; i < nr; ++i)
            for (std::size_t j = 0; j < nc; ++j) b(i, j) = (*this)(i0 + i, j0 + j);
        return b;
    }

    Matrix& operator+=(const Matrix& o) {
        check_same(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
        return *this;
    }
    Matrix& operator-=(const Matrix& o) {
        check_same(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
        return *this;
    }
    template <class S>
    Matrix& operator*=(const S& s) {
        for (auto& x : data_) x = x * s;
        return *this;
    }

private:
    void check_same(const Matrix& o) const {
        if (o.rows_ != rows_ || o.cols_ != cols_) throw InvalidArgument("matrix shape mismatch");
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using RealMatrix = Matrix<double>;
using ComplexMatrix = Matrix<cplx>;

template <class T>
Matrix<T> operator+(Matrix<T> a, const Matrix<T>& b) { return a += b; }
template <class T>
Matrix<T> operator-(Matrix<T> a, const Matrix<T>& b) { return a -= b; }
template <class T>
Matrix<T> operator-(Matrix<T> a) { return a *= -1.0; }
// scalar takes the element type, so long double factors are not narrowed
template <class T>
Matrix<T> operator*(const std::type_identity_t<T>& s, Matrix<T> a) { return a *= s; }
template <class T>
Matrix<T> operator*(Matrix<T> a, const std::type_identity_t<T>& s) { return a *= s; }

template <class T>
Matrix<T> operator*(const Matrix<T>& a, const Matrix<T>& b) {
    if (a.cols() != b.rows()) throw InvalidArgument("matrix product shape mismatch");
    Matrix<T> c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const T aik = a(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

template <class T>
std::vector<T> operator*(const Matrix<T>& a, const std::vector<T>& x) {
    if (a.cols() != x.size()) throw InvalidArgument("matrix-vector shape mismatch");
    std::vector<T> y(a.rows(), T{});
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) y[i] += a(i, j) * x[j];
    return y;
}

template <class T>
Matrix<T> transpose(const Matrix<T>& a) {
    Matrix<T> t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

template <class U, class T>
Matrix<U> matrix_cast(const Matrix<T>& a) {
    Matrix<U> m(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) m(i, j) = static_cast<U>(a(i, j));
    return m;
}

inline ComplexMatrix to_complex(const RealMatrix& a) {
    ComplexMatrix c(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j);
    return c;
}

inline RealMatrix diag(const Vec& d) {
    RealMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}
inline ComplexMatrix diag(const CVec& d) {
    ComplexMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

// ---------------------------------------------------------------------------
// Scalar helpers that also cover __float128, which the std math overloads do not.

#if defined(__SIZEOF_FLOAT128__)
using Extended = __float128;
#else
using Extended = long double;
#endif

template <class T>
struct is_complex : std::false_type {};
template <class T>
struct is_complex<std::complex<T>> : std::true_type {};

template <class T>
double magnitude(const T& x) {
    if constexpr (is_complex<T>::value)
        return std::abs(x);
    else
        return static_cast<double>(x < T(0) ? -x : x);
}

template <class T>
double magnitude2(const T& x) {
    if constexpr (is_complex<T>::value)
        return std::norm(x);
    else
        return static_cast<double>(x * x);
}

// Newton from a double seed; three steps reach quad precision.
template <class T>
T real_sqrt(T x) {
    if (x < T(0)) throw InvalidArgument("square root of a negative number");
    if (x == T(0)) return x;
    T y = static_cast<T>(std::sqrt(static_cast<double>(x)));
    for (int k = 0; k < 4; ++k) y = (y + x / y) / 2;
    return y;
}

// Taylor series on x / 2^k, then double-angle back up.
template <class T>
void sin_cos(T x, T& s, T& c) {
    int halvings = 0;
    while (magnitude(x) > 0.5) {
        x /= 2;
        ++halvings;
    }
    T term = x, sum_s = x, sum_c = 1, termc = 1;
    for (int k = 1; k < 30; ++k) {
        term = -term * x * x / T((2 * k) * (2 * k + 1));
        termc = -termc * x * x / T((2 * k - 1) * (2 * k));
        sum_s += term;
        sum_c += termc;
    }
    for (int k = 0; k < halvings; ++k) {
        const T s2 = 2 * sum_s * sum_c, c2 = sum_c * sum_c - sum_s * sum_s;
        sum_s = s2;
        sum_c = c2;
    }
    s = sum_s;
    c = sum_c;
}

template <class T>
double norm_fro(const Matrix<T>& a) {
    double s = 0.0;
    for (const auto& x : a.data()) s += magnitude2(x);
    return std::sqrt(s);
}

template <class T>
double max_abs_diff(const Matrix<T>& a, const Matrix<T>& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidArgument("matrix shape mismatch");
    double m = 0.0;
    for (std::size_t k = 0; k < a.data().size(); ++k) m = std::max(m, magnitude(a.data()[k] - b.data()[k]));
    return m;
}

template <class T>
double norm2(const std::vector<T>& v) {
    double s = 0.0;
    for (const auto& x : v) s += magnitude2(x);
    return std::sqrt(s);
}

template <class T>
std::vector<T> vsub(const std::vector<T>& a, const std::vector<T>& b) {
    std::vector<T> c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] - b[i];
    return c;
}

template <class T>
std::vector<T> vadd(const std::vector<T>& a, const std::vector<T>& b) {
    std::vector<T> c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
    return c;
}

template <class T>
std::vector<T> vscale(double s, std::vector<T> a) {
    for (auto& x : a) x = x * s;
    return a;
}

template <class T>
Matrix<T> kron(const Matrix<T>& a, const Matrix<T>& b) {
    Matrix<T> k(a.rows() * b.rows(), a.cols() * b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            for (std::size_t p = 0; p < b.rows(); ++p)
                for (std::size_t q = 0; q < b.cols(); ++q)
                    k(i * b.rows() + p, j * b.cols() + q) = a(i, j) * b(p, q);
    return k;
}

// ---------------------------------------------------------------------------
// LU with partial pivoting

template <class T>
struct LU {
    Matrix<T> lu;
    std::vector<std::size_t> perm;
};

template <class T>
LU<T> lu_factor(const Matrix<T>& a) {
    if (!a.square()) throw InvalidArgument("LU of a non-square matrix");
    const std::size_t n = a.rows();
    const double tiny = 1e-14 * norm_fro(a);
    LU<T> f{a, std::vector<std::size_t>(n)};
    std::iota(f.perm.begin(), f.perm.end(), std::size_t{0});
    auto& m = f.lu;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (magnitude(m(i, k)) > magnitude(m(p, k))) p = i;
        if (!(magnitude(m(p, k)) > tiny) || m(p, k) == T(0))
            throw SingularMatrix("pivot below tolerance in column " + std::to_string(k));
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(m(p, j), m(k, j));
            std::swap(f.perm[p], f.perm[k]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const T l = m(i, k) / m(k, k);
            m(i, k) = l;
            for (std::size_t j = k + 1; j < n; ++j) m(i, j) -= l * m(k, j);
        }
    }
    return f;
}

template <class T>
std::vector<T> lu_solve(const LU<T>& f, const std::vector<T>& b) {
    const std::size_t n = f.lu.rows();
    if (b.size() != n) throw InvalidArgument("right-hand side length mismatch");
    std::vector<T> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[f.perm[i]];
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) x[i] -= f.lu(i, j) * x[j];
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t j = i + 1; j < n; ++j) x[i] -= f.lu(i, j) * x[j];
        x[i] /= f.lu(i, i);
    }
    return x;
}

template <class T>
std::vector<T> solve(const Matrix<T>& a, const std::vector<T>& b) {
    return lu_solve(lu_factor(a), b);
}

template <class T>
Matrix<T> solve(const Matrix<T>& a, const Matrix<T>& b) {
    const auto f = lu_factor(a);
    Matrix<T> x(a.cols(), b.cols());
    for (std::size_t j = 0; j < b.cols(); ++j) x.set_col(j, lu_solve(f, b.col(j)));
    return x;
}

template <class T>
Matrix<T> inverse(const Matrix<T>& a) {
    return solve(a, Matrix<T>::identity(a.rows()));
}

// Determinant by elimination; returns 0 for exactly singular input instead of throwing.
template <class T>
T determinant(Matrix<T> m) {
    if (!m.square()) throw InvalidArgument("determinant of a non-square matrix");
    const std::size_t n = m.rows();
    T det = T(1);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (magnitude(m(i, k)) > magnitude(m(p, k))) p = i;
        if (m(p, k) == T(0)) return T(0);
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(m(p, j), m(k, j));
            det = -det;
        }
        det *= m(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            const T l = m(i, k) / m(k, k);
            for (std::size_t j = k + 1; j < n; ++j) m(i, j) -= l * m(k, j);
        }
    }
    return det;
}

// ---------------------------------------------------------------------------
// Singular values (one-sided Jacobi) and friends

struct SVD {
    RealMatrix U;  // m x n, orthonormal columns where sigma > 0
    Vec sigma;     // descending
    RealMatrix V;  // n x n
};

inline SVD svd(const RealMatrix& a) {
    if (a.rows() < a.cols()) {
        SVD t = svd(transpose(a));
        return SVD{t.V, t.sigma, t.U};
    }
    const std::size_t m = a.rows(), n = a.cols();
    RealMatrix u = a;
    RealMatrix v = RealMatrix::identity(n);
    for (int sweep = 0; sweep < 80; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                double alpha = 0, beta = 0, gamma = 0;
                for (std::size_t i = 0; i < m; ++i) {
                    alpha += u(i, p) * u(i, p);
                    beta += u(i, q) * u(i, q);
                    gamma += u(i, p) * u(i, q);
                }
                if (gamma == 0.0 || std::abs(gamma) <= 1e-15 * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    const double up = u(i, p), uq = u(i, q);
                    u(i, p) = c * up - s * uq;
                    u(i, q) = s * up + c * uq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vp = v(i, p), vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        if (!rotated) break;
    }
    Vec sigma(n);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0;
        for (std::size_t i = 0; i < m; ++i) s += u(i, j) * u(i, j);
        sigma[j] = std::sqrt(s);
        if (sigma[j] > 0)
            for (std::size_t i = 0; i < m; ++i) u(i, j) /= sigma[j];
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });
    SVD out{RealMatrix(m, n), Vec(n), RealMatrix(n, n)};
    for (std::size_t k = 0; k < n; ++k) {
        out.sigma[k] = sigma[order[k]];
        out.U.set_col(k, u.col(order[k]));
        out.V.set_col(k, v.col(order[k]));
    }
    return out;
}

inline Vec singular_values(const RealMatrix& a) { return svd(a).sigma; }

// A complex matrix X + iY has the singular values of [[X, -Y], [Y, X]], each twice.
inline Vec singular_values(const ComplexMatrix& a) {
    const std::size_t m = a.rows(), n = a.cols();
    RealMatrix e(2 * m, 2 * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            e(i, j) = a(i, j).real();
            e(i, j + n) = -a(i, j).imag();
            e(i + m, j) = a(i, j).imag();
            e(i + m, j + n) = a(i, j).real();
        }
    const Vec all = singular_values(e);
    Vec s;
    for (std::size_t k = 0; k < all.size(); k += 2) s.push_back(all[k]);
    return s;
}

inline double cond2(const RealMatrix& a) {
    if (!a.square()) throw InvalidArgument("cond2 of a non-square matrix");
    const Vec s = singular_values(a);
    if (s.back() < 1e-300) throw SingularMatrix("smallest singular value is zero");
    return s.front() / s.back();
}

// Minimum-norm least-squares solution.
inline Vec least_squares(const RealMatrix& a, const Vec& b) {
    const SVD d = svd(a);
    const std::size_t n = a.cols();
    const double cut = 1e-13 * (d.sigma.empty() ? 0.0 : d.sigma.front());
    Vec x(n, 0.0);
    for (std::size_t k = 0; k < d.sigma.size(); ++k) {
        if (d.sigma[k] <= cut) continue;
        double coef = 0;
        for (std::size_t i = 0; i < a.rows(); ++i) coef += d.U(i, k) * b[i];
        coef /= d.sigma[k];
        for (std::size_t j = 0; j < n; ++j) x[j] += coef * d.V(j, k);
    }
    return x;
}

// Eigenvalues of a symmetric matrix (cyclic Jacobi), ascending.
inline Vec symmetric_eigenvalues(RealMatrix s) {
    if (!s.square()) throw InvalidArgument("symmetric_eigenvalues of a non-square matrix");
    const std::size_t n = s.rows();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += s(p, q) * s(p, q);
        if (off < 1e-32 * std::max(1.0, norm_fro(s) * norm_fro(s))) break;
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (s(p, q) == 0.0) continue;
                const double theta = (s(q, q) - s(p, p)) / (2.0 * s(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double skp = s(k, p), skq = s(k, q);
                    s(k, p) = c * skp - sn * skq;
                    s(k, q) = sn * skp + c * skq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double spk = s(p, k), sqk = s(q, k);
                    s(p, k) = c * spk - sn * sqk;
                    s(q, k) = sn * spk + c * sqk;
                }
            }
    }
    Vec ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = s(i, i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

// ---------------------------------------------------------------------------
// Eigenvalues through the characteristic polynomial

// Coefficients of det(zI - A), ascending powers, leading coefficient 1.
inline Vec characteristic_polynomial(const RealMatrix& a) {
    if (!a.square()) throw InvalidArgument("characteristic polynomial of a non-square matrix");
    const std::size_t n = a.rows();
    Vec c(n + 1, 0.0);
    c[n] = 1.0;
    RealMatrix m(n, n);
    for (std::size_t k = 1; k <= n; ++k) {
        m = a * m;
        for (std::size_t i = 0; i < n; ++i) m(i, i) += c[n - k + 1];
        const RealMatrix am = a * m;
        double tr = 0;
        for (std::size_t i = 0; i < n; ++i) tr += am(i, i);
        c[n - k] = -tr / static_cast<double>(k);
    }
    return c;
}

inline cplx poly_eval(const Vec& c, cplx z) {
    cplx p = 0;
    for (std::size_t k = c.size(); k-- > 0;) p = p * z + c[k];
    return p;
}

inline cplx poly_eval_derivative(const Vec& c, cplx z) {
    cplx p = 0;
    for (std::size_t k = c.size(); k-- > 1;) p = p * z + static_cast<double>(k) * c[k];
    return p;
}

// Durand-Kerner iteration on a polynomial with real coefficients (ascending powers).
inline CVec durand_kerner(const Vec& coeffs, int max_iter = 200, double target = 1e-14) {
    Vec c = coeffs;
    while (c.size() > 1 && c.back() == 0.0) c.pop_back();
    const std::size_t n = c.size() - 1;
    if (n == 0) return {};
    const double lead = c[n];
    for (auto& x : c) x /= lead;
    if (n == 1) return {cplx(-c[0], 0.0)};

    double radius = 0;  // Fujiwara bound
    for (std::size_t k = 1; k <= n; ++k) {
        double term = std::pow(std::abs(c[n - k]), 1.0 / static_cast<double>(k));
        if (k == n) term = std::pow(std::abs(c[0]) / 2.0, 1.0 / static_cast<double>(n));
        radius = std::max(radius, 2.0 * term);
    }
    if (radius == 0) radius = 1.0;
    const double pi = std::acos(-1.0);
    CVec z(n);
    for (std::size_t k = 0; k < n; ++k)
        z[k] = std::polar(radius, 2.0 * pi * static_cast<double>(k) / static_cast<double>(n) + 0.4);

    for (int it = 0; it < max_iter; ++it) {
        double biggest = 0;
        for (std::size_t i = 0; i < n; ++i) {
            cplx den = 1.0;
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) den *= (z[i] - z[j]);
            if (den == cplx(0.0)) den = cplx(1e-300);
            const cplx delta = poly_eval(c, z[i]) / den;
            z[i] -= delta;
            biggest = std::max(biggest, std::abs(delta) / std::max(1.0, std::abs(z[i])));
        }
        if (biggest < target) break;
    }
    return z;
}

struct RootCluster {
    cplx value;
    std::size_t multiplicity;
};

namespace detail {

inline double root_scale(const CVec& z) {
    double s = 1.0;
    for (const auto& x : z) s = std::max(s, std::abs(x));
    return s;
}

// Newton steps that are kept only while they reduce |p|.
inline cplx polish_root(const Vec& c, cplx z) {
    for (int it = 0; it < 8; ++it) {
        const cplx p = poly_eval(c, z);
        const cplx dp = poly_eval_derivative(c, z);
        if (p == cplx(0.0) || dp == cplx(0.0)) break;
        const cplx next = z - p / dp;
        if (std::abs(poly_eval(c, next)) >= std::abs(p)) break;
        z = next;
    }
    return z;
}

}  // namespace detail

// Roots of a real polynomial grouped into clusters of numerically repeated roots.
// Each cluster value is polished on the matching derivative, conjugate pairs are exact.
inline std::vector<RootCluster> clustered_roots(const Vec& coeffs) {
    CVec z = durand_kerner(coeffs);
    if (z.empty()) return {};
    const double scale = detail::root_scale(z);

    // An m-fold root comes back smeared over ~eps^(1/m). Link at the loosest
    // tolerance, then undo any group wider than its size allows.
    auto allowed = [&](std::size_t m) { return (m <= 2 ? 1e-6 : m == 3 ? 1e-4 : 1e-3) * scale; };
    std::vector<std::size_t> group(z.size());
    auto find = [&](std::size_t i) {
        while (group[i] != i) i = group[i] = group[group[i]];
        return i;
    };
    auto link = [&](double tol, const std::vector<bool>& active) {
        for (std::size_t i = 0; i < z.size(); ++i)
            for (std::size_t j = i + 1; j < z.size(); ++j)
                if (active[i] && active[j] && std::abs(z[i] - z[j]) < tol) group[find(i)] = find(j);
    };
    std::iota(group.begin(), group.end(), std::size_t{0});
    link(allowed(z.size()), std::vector<bool>(z.size(), true));
    std::vector<bool> redo(z.size(), false);
    for (std::size_t i = 0; i < z.size(); ++i) {
        std::size_t m = 0;
        double width = 0;
        for (std::size_t j = 0; j < z.size(); ++j)
            if (find(j) == find(i)) {
                ++m;
                width = std::max(width, std::abs(z[j] - z[i]));
            }
        redo[i] = width >= allowed(m);
    }
    for (std::size_t i = 0; i < z.size(); ++i)
        if (redo[i]) group[i] = i;
    for (std::size_t i = 0; i < z.size(); ++i)
        if (!redo[i]) group[i] = find(i);
    link(allowed(2), redo);

    std::vector<RootCluster> out;
    std::vector<std::size_t> seen;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const std::size_t g = find(i);
        if (std::find(seen.begin(), seen.end(), g) != seen.end()) continue;
        seen.push_back(g);
        cplx sum = 0;
        std::size_t m = 0;
        for (std::size_t j = 0; j < z.size(); ++j)
            if (find(j) == g) {
                sum += z[j];
                ++m;
            }
        cplx v = sum / static_cast<double>(m);
        // an m-fold root is a simple root of the (m-1)-th derivative
        Vec d = coeffs;
        for (std::size_t k = 1; k < m; ++k) {
            for (std::size_t i = 1; i < d.size(); ++i) d[i - 1] = static_cast<double>(i) * d[i];
            d.pop_back();
        }
        v = detail::polish_root(d, v);
        out.push_back({v, m});
    }

    // Real polynomial: snap near-real values, then make conjugate partners exact.
    for (auto& r : out)
        if (std::abs(r.value.imag()) < 1e-12 * scale) r.value = cplx(r.value.real(), 0.0);
    std::vector<bool> paired(out.size(), false);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (paired[i] || out[i].value.imag() <= 0.0) continue;
        std::size_t best = out.size();
        double dist = 0;
        for (std::size_t j = 0; j < out.size(); ++j) {
            if (j == i || paired[j] || out[j].value.imag() >= 0.0 || out[j].multiplicity != out[i].multiplicity)
                continue;
            const double d = std::abs(out[j].value - std::conj(out[i].value));
            if (best == out.size() || d < dist) {
                best = j;
                dist = d;
            }
        }
        if (best != out.size()) {
            const cplx mid = 0.5 * (out[i].value + std::conj(out[best].value));
            out[i].value = mid;
            out[best].value = std::conj(mid);
            paired[i] = paired[best] = true;
        }
    }
    return out;
}

inline double spectral_radius(const RealMatrix& g) {
    if (!g.square()) throw InvalidArgument("spectral radius of a non-square matrix");
    double rho = 0;
    for (const auto& r : clustered_roots(characteristic_polynomial(g))) rho = std::max(rho, std::abs(r.value));
    return rho;
}

// ---------------------------------------------------------------------------
// Eigen-decomposition

struct EigenDecomposition {
    CVec eigenvalues;
    ComplexMatrix W;
    ComplexMatrix Winv;
};

namespace detail {

// Basis of the numerical null space of m, computed by Gaussian elimination with
// complete pivoting. At most `max_rank` pivots are taken; `dropped` receives the
// largest entry of the discarded trailing block.
inline std::vector<CVec> null_space(ComplexMatrix m, std::size_t max_rank, double tol, double& dropped) {
    const std::size_t n = m.rows();
    std::vector<std::size_t> colperm(n);
    std::iota(colperm.begin(), colperm.end(), std::size_t{0});
    std::size_t rank = 0;
    dropped = 0;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t pi = k, pj = k;
        double best = -1;
        for (std::size_t i = k; i < n; ++i)
            for (std::size_t j = k; j < n; ++j)
                if (std::abs(m(i, j)) > best) {
                    best = std::abs(m(i, j));
                    pi = i;
                    pj = j;
                }
        if (k >= max_rank || best < tol) {
            dropped = best;
            break;
        }
        for (std::size_t j = 0; j < n; ++j) std::swap(m(k, j), m(pi, j));
        for (std::size_t i = 0; i < n; ++i) std::swap(m(i, k), m(i, pj));
        std::swap(colperm[k], colperm[pj]);
        for (std::size_t i = k + 1; i < n; ++i) {
            const cplx l = m(i, k) / m(k, k);
            for (std::size_t j = k; j < n; ++j) m(i, j) -= l * m(k, j);
        }
        ++rank;
    }
    std::vector<CVec> basis;
    for (std::size_t f = rank; f < n; ++f) {
        CVec y(n, 0.0);
        y[f] = 1.0;
        for (std::size_t i = rank; i-- > 0;) {
            cplx s = m(i, f);
            for (std::size_t j = i + 1; j < rank; ++j) s += m(i, j) * y[j];
            y[i] = -s / m(i, i);
        }
        CVec v(n);
        for (std::size_t i = 0; i < n; ++i) v[colperm[i]] = y[i];
        basis.push_back(std::move(v));
    }
    return basis;
}

inline void normalize_eigenvector(CVec& v) {
    double big = 0;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (std::abs(v[i]) > big) {
            big = std::abs(v[i]);
            arg = i;
        }
    if (big == 0) return;
    const cplx pivot = std::abs(v[0]) > 1e-8 * big ? v[0] : v[arg];
    for (auto& x : v) x /= pivot;
}

inline bool eigen_less(cplx a, cplx b, double tol) {
    const double ma = std::abs(a), mb = std::abs(b);
    if (std::abs(ma - mb) > tol) return ma > mb;
    if (std::abs(a.real() - b.real()) > tol) return a.real() > b.real();
    return a.imag() > b.imag();
}

}  // namespace detail

inline EigenDecomposition eig(const RealMatrix& g) {
    if (!g.square()) throw InvalidArgument("eig of a non-square matrix");
    const std::size_t n = g.rows();
    const double gnorm = std::max(norm_fro(g), 1e-300);
    const auto clusters = clustered_roots(characteristic_polynomial(g));
    const ComplexMatrix gc = to_complex(g);

    auto shifted = [&](cplx mu) {
        ComplexMatrix m = gc;
        for (std::size_t i = 0; i < n; ++i) m(i, i) -= mu;
        return m;
    };

    std::vector<std::pair<cplx, CVec>> pairs;
    std::vector<bool> done(clusters.size(), false);
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        if (done[c]) continue;
        const cplx mu = clusters[c].value;
        const std::size_t mult = clusters[c].multiplicity;
        double dropped = 0;
        auto basis = detail::null_space(shifted(mu), n - mult, 1e-7 * gnorm, dropped);
        if (basis.size() < mult)
            throw Defective("eigenvalue of multiplicity " + std::to_string(mult) + " has " +
                            std::to_string(basis.size()) + " independent eigenvectors");
        if (mult > 1 && dropped > 1e-6 * gnorm) throw Defective("repeated eigenvalue without a full eigenspace");
        basis.resize(mult);
        for (auto& v : basis) {
            detail::normalize_eigenvector(v);
            pairs.emplace_back(mu, v);
        }
        done[c] = true;
        if (mu.imag() != 0.0) {
            for (std::size_t d = 0; d < clusters.size(); ++d)
                if (!done[d] && clusters[d].value == std::conj(mu) && clusters[d].multiplicity == mult) {
                    for (std::size_t k = 0; k < mult; ++k) {
                        CVec v = pairs[pairs.size() - mult + k].second;
                        for (auto& x : v) x = std::conj(x);
                        pairs.emplace_back(std::conj(mu), v);
                    }
                    done[d] = true;
                    break;
                }
        }
    }

    const double tol = 1e-12 * std::max(1.0, std::abs(pairs.empty() ? 0.0 : std::abs(pairs[0].first)));
    std::stable_sort(pairs.begin(), pairs.end(),
                     [&](const auto& a, const auto& b) { return detail::eigen_less(a.first, b.first, tol); });

    EigenDecomposition e{CVec(n), ComplexMatrix(n, n), ComplexMatrix()};
    ComplexMatrix unit(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        e.eigenvalues[k] = pairs[k].first;
        e.W.set_col(k, pairs[k].second);
        unit.set_col(k, vscale(1.0 / norm2(pairs[k].second), pairs[k].second));
    }
    if (singular_values(unit).back() < 1e-10) throw Defective("eigenvector matrix is numerically singular");
    e.Winv = inverse(e.W);
    return e;
}

}  // namespace chronodg
