#pragma once

// Quadrature rules and nodal Lagrange bases on the reference interval [0, 1].

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "chronodg/errors.hpp"
#include "chronodg/smallmat.hpp"

namespace chronodg {

template <class T>
struct BasicQuadratureRule {
    std::vector<T> nodes;    // in [0, 1]
    std::vector<T> weights;  // sum to 1
};
using QuadratureRule = BasicQuadratureRule<double>;

// n-point Gauss-Legendre rule mapped to [0, 1]. T = long double is used where
// the slab matrices need the extra digits.
template <class T = double>
BasicQuadratureRule<T> gauss_legendre(std::size_t n) {
    if (n == 0) throw InvalidArgument("gauss_legendre needs at least one point");
    BasicQuadratureRule<T> q{std::vector<T>(n), std::vector<T>(n)};
    const T pi = std::acos(T(-1));
    const auto legendre = [n](T x, T& p1, T& p0) {
        p0 = 1;
        p1 = x;
        for (std::size_t k = 2; k <= n; ++k) {
            const T pk = ((T(2 * k) - 1) * x * p1 - T(k - 1) * p0) / T(k);
            p0 = p1;
            p1 = pk;
        }
    };
    for (std::size_t i = 0; i < n; ++i) {
        T x = std::cos(pi * (T(i) + T(0.75)) / (T(n) + T(0.5)));
        T p1, p0;
        for (int it = 0; it < 100; ++it) {
            legendre(x, p1, p0);
            const T dp = T(n) * (x * p1 - p0) / (x * x - 1);
            const T dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 10 * std::numeric_limits<T>::epsilon()) break;
        }
        legendre(x, p1, p0);
        const T dp = T(n) * (x * p1 - p0) / (x * x - 1);
        q.nodes[n - 1 - i] = (x + 1) / 2;
        q.weights[n - 1 - i] = 1 / ((1 - x * x) * dp * dp);
    }
    return q;
}

// Gauss-Lobatto-Legendre rule with r+1 points on [0, 1], r = 1, 2, 3.
template <class T = double>
BasicQuadratureRule<T> gauss_lobatto(int r) {
    switch (r) {
        case 1:
            return {{T(0), T(1)}, {T(1) / 2, T(1) / 2}};
        case 2:
            return {{T(0), T(1) / 2, T(1)}, {T(1) / 6, T(2) / 3, T(1) / 6}};
        case 3: {
            const T h = real_sqrt(T(5)) / 10;
            return {{T(0), T(1) / 2 - h, T(1) / 2 + h, T(1)}, {T(1) / 12, T(5) / 12, T(5) / 12, T(1) / 12}};
        }
        default:
            throw Unsupported("Gauss-Lobatto rule only for r = 1, 2, 3");
    }
}

inline Vec equispaced_nodes(int r) {
    if (r < 1) throw InvalidArgument("polynomial degree must be positive");
    Vec x(static_cast<std::size_t>(r) + 1);
    for (int i = 0; i <= r; ++i) x[static_cast<std::size_t>(i)] = static_cast<double>(i) / r;
    return x;
}

// Monomial coefficients (ascending) of the Lagrange polynomials on given nodes.
template <class T>
class BasicLagrangeBasis {
public:
    using Poly = std::vector<T>;

    explicit BasicLagrangeBasis(Poly nodes) : nodes_(std::move(nodes)) {
        const std::size_t n = nodes_.size();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (magnitude(nodes_[i] - nodes_[j]) < 1e-14) throw DuplicateNodes("nodes must be distinct");
        coeffs_.assign(n, Poly());
        for (std::size_t j = 0; j < n; ++j) {
            Poly p{T(1)};
            T denom = 1;
            for (std::size_t k = 0; k < n; ++k) {
                if (k == j) continue;
                Poly next(p.size() + 1, T(0));
                for (std::size_t m = 0; m < p.size(); ++m) {
                    next[m + 1] += p[m];
                    next[m] -= nodes_[k] * p[m];
                }
                p = next;
                denom *= nodes_[j] - nodes_[k];
            }
            for (auto& x : p) x /= denom;
            coeffs_[j] = p;
        }
    }

    std::size_t size() const { return nodes_.size(); }
    const Poly& nodes() const { return nodes_; }

    // d-th derivative of basis function j at t.
    T eval(std::size_t j, T t, int d = 0) const {
        const Poly& c = coeffs_[j];
        T v = 0;
        for (std::size_t k = c.size(); k-- > static_cast<std::size_t>(d);) {
            T f = 1;
            for (int m = 0; m < d; ++m) f *= static_cast<T>(k - static_cast<std::size_t>(m));
            v = v * t + f * c[k];
        }
        return v;
    }

    // Integral of basis function j over [0, x].
    T integral(std::size_t j, T x) const {
        const Poly& c = coeffs_[j];
        T v = 0;
        for (std::size_t k = c.size(); k-- > 0;) v = v * x + c[k] / static_cast<T>(k + 1);
        return v * x;
    }

private:
    Poly nodes_;
    std::vector<Poly> coeffs_;
};
using LagrangeBasis = BasicLagrangeBasis<double>;

}  // namespace chronodg
