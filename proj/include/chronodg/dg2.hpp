#pragma once

// DG time stepping for u'' + lambda u = 0 in second-order form. One slab carries
// the r+1 nodal values of a degree-r polynomial at equispaced nodes; the slabs
// are coupled by u_{n+1} = G u_n with G = -A+^{-1} A-.

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "chronodg/errors.hpp"
#include "chronodg/glm.hpp"
#include "chronodg/mu_polynomial.hpp"
#include "chronodg/newmark.hpp"
#include "chronodg/quadrature.hpp"
#include "chronodg/smallmat.hpp"

namespace chronodg {

enum class SMode { zero, a_dt2 };

struct DG2Config {
    int r = 1;
    SMode s_mode = SMode::zero;
    double a = 0.0;  // s = a dt^2 when s_mode == a_dt2
    double lambda = 1.0;
    double dt = 0.1;

    double a_effective() const { return s_mode == SMode::zero ? 0.0 : a; }
    double s() const { return a_effective() * dt * dt; }
    double mu() const { return lambda * dt * dt; }

    void validate() const {
        if (r < 1 || r > 3) throw Unsupported("DG2 is provided for r = 1, 2, 3");
        if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
        if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be non-negative");
    }
};

struct SlabSystem {
    RealMatrix Aminus;
    RealMatrix Aplus;
    RealMatrix G;
};

inline Vec dg2_slab_nodes(int r) { return equispaced_nodes(r); }

struct SlabPolynomials {
    MuMatrix Aplus;   // dt^2 A+
    MuMatrix Aminus;  // dt^2 A-
};

namespace detail {

using LongMatrix = Matrix<long double>;

// dt^2 A+ = P0 + mu P1 and dt^2 A- = M0 + mu M1. Built in long double: the mu
// terms are tiny next to the O(1) parts for small dt, and double-precision
// coefficients alone push rho(G) off 1 by ~1e-10 at r = 3.
struct SlabCoefficients {
    LongMatrix P0, P1, M0, M1;
};

inline SlabCoefficients slab_coefficients(int r, double a) {
    if (r < 1 || r > 3) throw Unsupported("DG2 is provided for r = 1, 2, 3");
    using T = long double;
    std::vector<T> nodes(static_cast<std::size_t>(r) + 1);
    for (int i = 0; i <= r; ++i) nodes[static_cast<std::size_t>(i)] = T(i) / T(r);
    const BasicLagrangeBasis<T> phi(nodes);
    const auto q = gauss_legendre<T>(static_cast<std::size_t>(r) + 2);
    const std::size_t n = phi.size();
    const T ha = T(a) / 2;
    SlabCoefficients c{LongMatrix(n, n), LongMatrix(n, n), LongMatrix(n, n), LongMatrix(n, n)};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            T stiff = 0, mass = 0;  // (phi_j'', phi_i') and (phi_j, phi_i')
            for (std::size_t k = 0; k < q.nodes.size(); ++k) {
                const T t = q.nodes[k];
                stiff += q.weights[k] * phi.eval(j, t, 2) * phi.eval(i, t, 1);
                mass += q.weights[k] * phi.eval(j, t) * phi.eval(i, t, 1);
            }
            const T jump_d = phi.eval(j, 0, 1) * phi.eval(i, 0, 1);
            const T jump_v = phi.eval(j, 0) * phi.eval(i, 0);
            c.P0(i, j) = stiff + jump_d;
            c.P1(i, j) = mass - ha * jump_d + jump_v;

            const T trace_d = phi.eval(j, 1, 1) * phi.eval(i, 0, 1);
            const T trace_v = phi.eval(j, 1) * phi.eval(i, 0);
            c.M0(i, j) = -trace_d;
            c.M1(i, j) = -ha * trace_d - trace_v;
        }
    return c;
}

inline LongMatrix combine(const LongMatrix& c0, const LongMatrix& c1, long double mu) {
    LongMatrix m = c0;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) += mu * c1(i, j);
    return m;
}

// -A+^{-1} A- in long double.
inline LongMatrix propagator_ext(const DG2Config& cfg) {
    cfg.validate();
    const SlabCoefficients c = slab_coefficients(cfg.r, cfg.a_effective());
    const long double mu = static_cast<long double>(cfg.lambda) * cfg.dt * cfg.dt;
    try {
        return -1.0 * solve(combine(c.P0, c.P1, mu), combine(c.M0, c.M1, mu));
    } catch (const SingularMatrix& e) {
        throw SingularSlab(e.what());
    }
}

}  // namespace detail

// dt^2 A+ and dt^2 A- as polynomials in mu = lambda dt^2, with s lambda = a mu.
inline SlabPolynomials assemble_mu(int r, double a) {
    const detail::SlabCoefficients c = detail::slab_coefficients(r, a);
    const std::size_t n = c.P0.rows();
    SlabPolynomials p{MuMatrix(n, n), MuMatrix(n, n)};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            p.Aplus(i, j) = MuPolynomial(std::vector<double>{static_cast<double>(c.P0(i, j)), static_cast<double>(c.P1(i, j))});
            p.Aminus(i, j) = MuPolynomial(std::vector<double>{static_cast<double>(c.M0(i, j)), static_cast<double>(c.M1(i, j))});
        }
    return p;
}

inline SlabSystem assemble(const DG2Config& cfg) {
    cfg.validate();
    const detail::SlabCoefficients c = detail::slab_coefficients(cfg.r, cfg.a_effective());
    const long double mu = static_cast<long double>(cfg.lambda) * cfg.dt * cfg.dt;
    const detail::LongMatrix Ap = detail::combine(c.P0, c.P1, mu), Am = detail::combine(c.M0, c.M1, mu);
    SlabSystem sys;
    const double h2 = cfg.dt * cfg.dt;
    sys.Aplus = (1.0 / h2) * matrix_cast<double>(Ap);
    sys.Aminus = (1.0 / h2) * matrix_cast<double>(Am);
    try {
        sys.G = -1.0 * matrix_cast<double>(solve(Ap, Am));
    } catch (const SingularMatrix& e) {
        throw SingularSlab(e.what());
    }
    return sys;
}

inline Dg2Embedding dg2_embedding(int r, double a, double alpha0 = -2.0) {
    const SlabPolynomials p = assemble_mu(r, a);
    return dg2_as_glm(p.Aplus, p.Aminus, alpha0);
}

inline Vec dg2_step(const SlabSystem& sys, const Vec& u) { return sys.G * u; }

enum class InitialMode { exact_samples, taylor, newmark_T };

// Maps slab values (u_{n,1}, u_{n,2}) of the r = 1 scheme to Newmark's (u_n, v_n).
inline RealMatrix newmark_map(double a, double lambda, double dt) {
    const double mu = lambda * dt * dt;
    return RealMatrix{{0.0, 1.0}, {(-0.5 * a * mu - 1.0) / dt, (0.5 * (a - 1.0) * mu + 1.0) / dt}};
}

// Slab vector on the virtual slab [-dt, 0] that starts the recursion.
inline Vec initial_slab(const DG2Config& cfg, const Oscillator& prob, InitialMode mode = InitialMode::exact_samples) {
    cfg.validate();
    const Vec nodes = dg2_slab_nodes(cfg.r);
    Vec u(nodes.size());
    switch (mode) {
        case InitialMode::exact_samples:
            for (std::size_t i = 0; i < nodes.size(); ++i) u[i] = prob.exact((nodes[i] - 1.0) * cfg.dt);
            break;
        case InitialMode::taylor:
            for (std::size_t i = 0; i < nodes.size(); ++i) {
                const double t = (nodes[i] - 1.0) * cfg.dt;
                double acc = 0, term = 1, even = prob.u0, odd = prob.v0;
                for (int k = 0; k <= cfg.r; ++k) {
                    acc += (k % 2 == 0 ? even : odd) * term;
                    if (k % 2 == 1) {
                        even *= -prob.lambda;
                        odd *= -prob.lambda;
                    }
                    term *= t / (k + 1);
                }
                u[i] = acc;
            }
            break;
        case InitialMode::newmark_T:
            if (cfg.r != 1) throw ModeUnavailable("the Newmark map exists for r = 1 only");
            u = solve(newmark_map(cfg.a_effective(), prob.lambda, cfg.dt), Vec{prob.u0, prob.v0});
            break;
    }
    return u;
}

// Exact-solution samples on the slab [t_end - dt, t_end].
inline Vec exact_slab(const DG2Config& cfg, const Oscillator& prob, double t_end) {
    const Vec nodes = dg2_slab_nodes(cfg.r);
    Vec u(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) u[i] = prob.exact(t_end + (nodes[i] - 1.0) * cfg.dt);
    return u;
}

struct TruncationVector {
    Vec theta;
    CVec winv_theta;
};

// theta_n = u_{n+1}^ex - G u_n^ex, where u_n^ex samples the slab ending at t_n.
inline TruncationVector truncation_vector(const SlabSystem& sys, const EigenDecomposition& e, const DG2Config& cfg,
                                          const Oscillator& prob, double t_n) {
    TruncationVector tv;
    tv.theta = vsub(exact_slab(cfg, prob, t_n + cfg.dt), sys.G * exact_slab(cfg, prob, t_n));
    tv.winv_theta = e.Winv * CVec(tv.theta.begin(), tv.theta.end());
    return tv;
}

inline TruncationVector truncation_vector(const SlabSystem& sys, const DG2Config& cfg, const Oscillator& prob,
                                          double t_n) {
    return truncation_vector(sys, eig(sys.G), cfg, prob, t_n);
}

struct PropagatorSpectrum {
    double rho;
    EigenDecomposition eigen;
};

inline PropagatorSpectrum propagator_spectrum(const DG2Config& cfg) {
    const SlabSystem sys = assemble(cfg);
    return {spectral_radius(sys.G), eig(sys.G)};
}

}  // namespace chronodg
