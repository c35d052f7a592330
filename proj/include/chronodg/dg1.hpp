#pragma once

// DG time stepping for the first-order form z' = L z, z = (u, w). Nodal basis on
// GLL points, mass terms lumped by the same GLL rule; this is what turns the
// slab solve into a Lobatto IIIC step.

#include <cstddef>

#include "chronodg/errors.hpp"
#include "chronodg/irk.hpp"
#include "chronodg/newmark.hpp"
#include "chronodg/quadrature.hpp"
#include "chronodg/smallmat.hpp"

namespace chronodg {

struct DG1Config {
    int r = 1;
    double lambda = 1.0;
    double dt = 0.1;

    void validate() const {
        if (r < 1 || r > 3) throw Unsupported("DG1 is provided for r = 1, 2, 3");
        if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
        if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be non-negative");
    }
};

struct DG1SlabSystem {
    RealMatrix N[6];
    RealMatrix Bminus;
    RealMatrix Bplus;
    RealMatrix K;  // I - N4 (x) L
};

namespace detail {

template <class T>
Matrix<T> oscillator_operator_t(T lambda) {
    Matrix<T> L(2, 2);
    L(0, 1) = 1;
    L(1, 0) = -lambda;
    return L;
}

template <class T>
struct Dg1Blocks {
    Matrix<T> N[6];
    Matrix<T> lhs;  // N1 + N3
    Matrix<T> K;
};

template <class T>
Dg1Blocks<T> dg1_blocks(const DG1Config& cfg) {
    cfg.validate();
    const auto q = gauss_lobatto<T>(cfg.r);
    const BasicLagrangeBasis<T> phi(q.nodes);
    const std::size_t n = phi.size();
    const T dt = cfg.dt;
    Dg1Blocks<T> b;
    for (auto& m : b.N) m = Matrix<T>(n, n);

    b.N[0](0, n - 1) = -1;  // trace of the previous slab's right end
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) b.N[1](i, j) = q.weights[i] * phi.eval(j, q.nodes[i], 1);
        b.N[2](i, i) = dt * q.weights[i];
    }
    b.N[3](0, 0) = 1;

    b.lhs = b.N[1] + b.N[3];
    b.N[4] = solve(b.lhs, b.N[2]);
    b.N[5] = solve(b.lhs, b.N[0]);
    b.K = Matrix<T>::identity(2 * n) - kron(b.N[4], oscillator_operator_t<T>(cfg.lambda));
    return b;
}

}  // namespace detail

inline DG1SlabSystem assemble_dg1(const DG1Config& cfg) {
    const auto b = detail::dg1_blocks<double>(cfg);
    DG1SlabSystem sys;
    for (int k = 0; k < 6; ++k) sys.N[k] = b.N[k];
    const RealMatrix L = oscillator_operator(cfg.lambda);
    const RealMatrix I2 = RealMatrix::identity(2);
    sys.Bminus = kron(sys.N[0], I2);
    sys.Bplus = kron(b.lhs, I2) - kron(sys.N[2], L);
    sys.K = b.K;
    try {
        lu_factor(sys.K);
    } catch (const SingularMatrix& e) {
        throw SingularK(e.what());
    }
    return sys;
}

inline Vec dg1_step(const DG1SlabSystem& sys, const Vec& zhat) {
    if (zhat.size() != sys.K.rows()) throw InvalidArgument("slab vector length mismatch");
    const Vec rhs = vscale(-1.0, kron(sys.N[5], RealMatrix::identity(2)) * zhat);
    try {
        return solve(sys.K, rhs);
    } catch (const SingularMatrix& e) {
        throw SingularK(e.what());
    }
}

// Runge-Kutta tableau from nodes with c1 = 0 and weights b: a_i1 = b1 and
// a_ij = int_0^{c_i} l_j - b1 l_j(c1), l_j Lagrange on c2..cs.
inline ButcherTableau tableau_from_nodes(const Vec& c, const Vec& b) {
    const std::size_t s = c.size();
    if (s < 2 || b.size() != s) throw InvalidArgument("need at least two nodes and matching weights");
    if (std::abs(c[0]) > 1e-14) throw InvalidArgument("first node must be 0");
    for (double x : c)
        if (x < 0.0 || x > 1.0) throw InvalidArgument("nodes must lie in [0, 1]");
    for (std::size_t i = 0; i < s; ++i)
        for (std::size_t j = i + 1; j < s; ++j)
            if (std::abs(c[i] - c[j]) < 1e-14) throw DuplicateNodes("nodes must be distinct");

    const LagrangeBasis ell(Vec(c.begin() + 1, c.end()));
    ButcherTableau tab;
    tab.A = RealMatrix(s, s);
    tab.b = b;
    tab.c = c;
    for (std::size_t i = 0; i < s; ++i) {
        tab.A(i, 0) = b[0];
        for (std::size_t j = 1; j < s; ++j) tab.A(i, j) = ell.integral(j - 1, c[i]) - b[0] * ell.eval(j - 1, c[0]);
    }
    return tab;
}

inline ButcherTableau dg1_tableau(int r) {
    const QuadratureRule q = gauss_lobatto(r);
    return tableau_from_nodes(q.nodes, q.weights);
}

// Every node pair set to (u0, v0); the step only reads the last pair.
inline Vec initial_slab_dg1(const DG1Config& cfg, const Oscillator& prob) {
    Vec z(2 * (static_cast<std::size_t>(cfg.r) + 1));
    for (std::size_t i = 0; i < z.size(); i += 2) {
        z[i] = prob.u0;
        z[i + 1] = prob.v0;
    }
    return z;
}

inline Vec last_pair(const Vec& zhat) { return {zhat[zhat.size() - 2], zhat[zhat.size() - 1]}; }

// (I (x) L^{-1}) k: stage derivatives back to stage values.
inline Vec stage_values(const std::vector<Vec>& k, double lambda) {
    if (lambda == 0.0) throw InvalidArgument("L is singular for lambda = 0");
    Vec z;
    for (const Vec& ki : k) {
        z.push_back(-ki[1] / lambda);
        z.push_back(ki[0]);
    }
    return z;
}

}  // namespace chronodg
