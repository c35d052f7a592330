#pragma once

// General linear methods for u'' = f(u) with f(u) = -lambda u:
//   Y       = dt^2 A f(Y) + U y[n]
//   y[n+1]  = dt^2 B f(Y) + V y[n]

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "chronodg/errors.hpp"
#include "chronodg/mu_polynomial.hpp"
#include "chronodg/newmark.hpp"
#include "chronodg/smallmat.hpp"

namespace chronodg {

struct GeneralLinearMethod {
    RealMatrix A;  // s x s
    RealMatrix U;  // s x r
    RealMatrix B;  // r x s
    RealMatrix V;  // r x r

    std::size_t stages() const { return A.rows(); }
    std::size_t history() const { return V.rows(); }

    void validate() const {
        const std::size_t s = stages(), r = history();
        if (!A.square() || !V.square() || U.rows() != s || U.cols() != r || B.rows() != r || B.cols() != s)
            throw InvalidArgument("inconsistent GLM block dimensions");
    }
};

struct QVectors {
    std::vector<Vec> q;  // q_0, q_1, ...
    Vec c;               // stage nodes
};

struct GlmStepResult {
    Vec Y;
    Vec y_next;
};

inline GlmStepResult glm_step(const GeneralLinearMethod& m, double lambda, double dt, const Vec& y) {
    const double mu = lambda * dt * dt;
    const RealMatrix K = RealMatrix::identity(m.stages()) + mu * m.A;
    GlmStepResult out;
    try {
        out.Y = solve(K, m.U * y);
    } catch (const SingularMatrix& e) {
        throw SingularImplicitBlock(e.what());
    }
    out.y_next = vsub(m.V * y, vscale(mu, m.B * out.Y));
    return out;
}

// V - mu B (I + mu A)^{-1} U
inline RealMatrix glm_propagator(const GeneralLinearMethod& m, double lambda, double dt) {
    const double mu = lambda * dt * dt;
    const RealMatrix K = RealMatrix::identity(m.stages()) + mu * m.A;
    RealMatrix KinvU;
    try {
        KinvU = solve(K, m.U);
    } catch (const SingularMatrix& e) {
        throw SingularImplicitBlock(e.what());
    }
    return m.V - mu * (m.B * KinvU);
}

// Eigenvalues of V inside the closed unit disc, those on the circle with
// multiplicity at most two.
inline bool zero_stability(const RealMatrix& V, double tol = 1e-10) {
    for (const auto& r : clustered_roots(characteristic_polynomial(V))) {
        const double mod = std::abs(r.value);
        if (mod > 1.0 + tol) return false;
        if (std::abs(mod - 1.0) <= tol && r.multiplicity > 2) return false;
    }
    return true;
}

namespace detail {

inline double factorial(int n) {
    double f = 1;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

inline Vec power_over_factorial(const Vec& c, int k) {
    Vec v(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) v[i] = std::pow(c[i], k) / factorial(k);
    return v;
}

inline const Vec& q_at(const QVectors& qv, int k) {
    if (k < 0 || static_cast<std::size_t>(k) >= qv.q.size())
        throw InvalidArgument("q vector " + std::to_string(k) + " not supplied");
    return qv.q[static_cast<std::size_t>(k)];
}

// sum_{l=1}^{k} q_{k-l} / l!
inline Vec shifted_taylor_sum(const QVectors& qv, int k, std::size_t r) {
    Vec s(r, 0.0);
    for (int l = 1; l <= k; ++l) s = vadd(s, vscale(1.0 / factorial(l), q_at(qv, k - l)));
    return s;
}

}  // namespace detail

struct ConditionResidual {
    int k;
    std::string kind;  // "stage" or "output"
    double residual;
};

// Residual norms of the stage and output order conditions for k = 0..p.
inline std::vector<ConditionResidual> order_condition_residuals(const GeneralLinearMethod& m, const QVectors& qv, int p) {
    m.validate();
    std::vector<ConditionResidual> out;
    const std::size_t r = m.history();
    for (int k = 0; k <= p; ++k) {
        const Vec& qk = detail::q_at(qv, k);
        Vec stage = vsub(m.U * qk, detail::power_over_factorial(qv.c, k));
        Vec output = vsub(m.V * qk, vadd(qk, detail::shifted_taylor_sum(qv, k, r)));
        if (k >= 2) {
            const Vec ck = detail::power_over_factorial(qv.c, k - 2);
            stage = vadd(stage, m.A * ck);
            output = vadd(output, m.B * ck);
        }
        out.push_back({k, "stage", norm2(stage)});
        out.push_back({k, "output", norm2(output)});
    }
    return out;
}

struct BestFit {
    Vec q;
    double residual;
};

// Least-squares q_k for the stage and output conditions at order k, with q_0..q_{k-1} fixed.
inline BestFit best_fit_q(const GeneralLinearMethod& m, const QVectors& qv, int k) {
    const std::size_t s = m.stages(), r = m.history();
    RealMatrix M(s + r, r);
    M.set_block(0, 0, m.U);
    M.set_block(s, 0, m.V - RealMatrix::identity(r));
    Vec rhs_stage = detail::power_over_factorial(qv.c, k);
    Vec rhs_out = detail::shifted_taylor_sum(qv, k, r);
    if (k >= 2) {
        const Vec ck = detail::power_over_factorial(qv.c, k - 2);
        rhs_stage = vsub(rhs_stage, m.A * ck);
        rhs_out = vsub(rhs_out, m.B * ck);
    }
    Vec rhs(rhs_stage);
    rhs.insert(rhs.end(), rhs_out.begin(), rhs_out.end());
    BestFit f{least_squares(M, rhs), 0.0};
    f.residual = norm2(vsub(M * f.q, rhs));
    return f;
}

// Newmark(gamma, beta) with history y = [dt v, dt^2 f(u), u] and a single stage Y = u_{n+1}.
inline GeneralLinearMethod newmark_as_glm(const NewmarkParams& p = {}) {
    const double g = p.gamma, b = p.beta;
    return GeneralLinearMethod{
        RealMatrix{{b}},
        RealMatrix{{1.0, 0.5 - b, 1.0}},
        RealMatrix{{g}, {1.0}, {b}},
        RealMatrix{{1.0, 1.0 - g, 0.0}, {0.0, 0.0, 0.0}, {1.0, 0.5 - b, 1.0}},
    };
}

inline Vec newmark_glm_history(double lambda, double dt, const PairState& s) {
    return {dt * s.v, -dt * dt * lambda * s.u, s.u};
}

// Starting expansion of the Newmark(1/2, 1/4) history: y = sum_k dt^k u^(k) q_k.
inline QVectors newmark_q_vectors() {
    return {{{0.0, 0.0, 1.0}, {1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {-1.0 / 12.0, 0.0, 0.0}}, {1.0}};
}

// ---------------------------------------------------------------------------
// DG2 slab iteration u_{n+1} = G u_n rewritten as a GLM.

struct Dg2Embedding {
    GeneralLinearMethod method;
    Vec alpha;                   // det(A+) = sum_k alpha_k mu^k (common factor removed)
    std::vector<RealMatrix> Gk;  // d G = G_0 - sum_{k>=1} mu^k G_k
    std::size_t removed_mu_power = 0;

    std::size_t levels() const { return alpha.size() - 1; }
    std::size_t block() const { return Gk.front().rows(); }

    RealMatrix Uhat() const {
        const std::size_t n = block();
        return method.U.block(0, 0, n, 2 * n);
    }
};

// Builds the GLM from dt^2 A+ and dt^2 A- given as polynomials in mu. The
// determinant and adjugate are only defined up to a common factor; it is fixed
// by dividing out the largest shared power of mu and scaling to alpha_0.
inline Dg2Embedding dg2_as_glm(const MuMatrix& Aplus_mu, const MuMatrix& Aminus_mu, double alpha0 = -2.0) {
    if (!Aplus_mu.square() || Aplus_mu.rows() != Aminus_mu.rows() || !Aminus_mu.square())
        throw InvalidArgument("slab polynomial matrices must be square and of equal size");
    const std::size_t n = Aplus_mu.rows();
    MuPolynomial d = cofactor_determinant(Aplus_mu);
    MuMatrix N = adjugate(Aplus_mu) * Aminus_mu;
    N *= -1.0;

    double nscale = 0;
    for (const auto& p : N.data()) nscale = std::max(nscale, p.max_abs());
    const double dscale = d.max_abs();
    if (dscale == 0.0) throw ZeroAlphaZero("det(A+) vanishes identically");
    d = d.cleaned(dscale, 1e-10);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) N(i, j) = N(i, j).cleaned(nscale, 1e-10);

    std::size_t shift = d.valuation(0.0);
    for (const auto& p : N.data())
        if (!p.is_zero()) shift = std::min(shift, p.valuation(0.0));
    d = d.shifted_down(shift);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) N(i, j) = N(i, j).shifted_down(shift);
    if (d.coeff(0) == 0.0) throw ZeroAlphaZero("det(A+) has no constant term after removing common mu factors");

    const double scale = alpha0 / d.coeff(0);
    const int deg = std::max({d.degree(), max_degree(N), 1});
    Dg2Embedding e;
    e.removed_mu_power = shift;
    for (int k = 0; k <= deg; ++k) e.alpha.push_back(scale * d.coeff(static_cast<std::size_t>(k)));
    for (int k = 0; k <= deg; ++k) {
        RealMatrix Gk = scale * coefficient_matrix(N, static_cast<std::size_t>(k));
        e.Gk.push_back(k == 0 ? Gk : -1.0 * Gk);
    }

    const std::size_t L = static_cast<std::size_t>(deg);
    const double a0 = e.alpha[0];
    const RealMatrix I = RealMatrix::identity(n);
    GeneralLinearMethod& m = e.method;
    m.A = RealMatrix(L * n, L * n);
    m.U = RealMatrix(L * n, 2 * n);
    m.B = RealMatrix(2 * n, L * n);
    m.V = RealMatrix(2 * n, 2 * n);
    for (std::size_t k = 1; k <= L; ++k) {
        m.A.set_block(0, (k - 1) * n, (e.alpha[k] / a0) * I);
        m.B.set_block(0, (k - 1) * n, (e.alpha[k] / a0) * I);
        m.B.set_block(n, (k - 1) * n, (1.0 / a0) * e.Gk[k]);
        if (k >= 2) m.A.set_block((k - 1) * n, (k - 2) * n, -1.0 * I);
    }
    m.U.set_block(0, 0, (1.0 / a0) * e.Gk[0]);
    m.U.set_block(0, n, I);
    m.V.set_block(0, 0, (1.0 / a0) * e.Gk[0]);
    m.V.set_block(0, n, I);
    return e;
}

// History vector [u; -sum_k mu^k G_k u / alpha_0] for slab values u.
inline Vec dg2_glm_history(const Dg2Embedding& e, double mu, const Vec& u) {
    const std::size_t n = e.block();
    Vec tail(n, 0.0);
    double muk = 1;
    for (std::size_t k = 1; k < e.Gk.size(); ++k) {
        muk *= mu;
        tail = vsub(tail, vscale(muk / e.alpha[0], e.Gk[k] * u));
    }
    Vec y(u);
    y.insert(y.end(), tail.begin(), tail.end());
    return y;
}

// Coefficient of dt^j y^{(j)} in theta = y_hat(t + dt) - G_GLM y_hat(t) for the
// model problem, where y_hat(t) = sum_j dt^j y^{(j)}(t) q_j.
inline Vec theta_coefficient(const GeneralLinearMethod& m, const QVectors& qv, int j) {
    const std::size_t r = m.history();
    const Vec& qj = detail::q_at(qv, j);
    Vec res = vsub(vadd(qj, detail::shifted_taylor_sum(qv, j, r)), m.V * qj);
    RealMatrix BAl = m.B;  // B A^l
    for (int l = 0; 2 * l + 2 <= j; ++l) {
        res = vsub(res, BAl * (m.U * detail::q_at(qv, j - 2 * l - 2)));
        BAl = BAl * m.A;
    }
    return res;
}

// Coefficient of dt^j y^{(j)} in the first stage-block truncation error T_1.
inline Vec stage_truncation_coefficient(const Dg2Embedding& e, const QVectors& qv, int j) {
    Vec res = vsub(detail::power_over_factorial(qv.c, j), e.Uhat() * detail::q_at(qv, j));
    for (int k = 1; 2 * k <= j && static_cast<std::size_t>(k) < e.alpha.size(); ++k) {
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        res = vadd(res, vscale(sign * e.alpha[static_cast<std::size_t>(k)] / e.alpha[0],
                               detail::power_over_factorial(qv.c, j - 2 * k)));
    }
    return res;
}

struct ExtendedResiduals {
    Vec T;      // ||T-coefficient_j||, j = 0..a
    Vec theta;  // ||theta-coefficient_j||, j = 0..p
};

inline ExtendedResiduals extended_order_residuals(const Dg2Embedding& e, const QVectors& qv, int p, int a) {
    ExtendedResiduals r;
    for (int j = 0; j <= a; ++j) r.T.push_back(norm2(stage_truncation_coefficient(e, qv, j)));
    for (int j = 0; j <= p; ++j) r.theta.push_back(norm2(theta_coefficient(e.method, qv, j)));
    return r;
}

// Least-squares q_j for the stage-truncation and theta conditions at order j jointly.
inline BestFit best_fit_extended_q(const Dg2Embedding& e, const QVectors& qv, int j, bool include_stage = true) {
    const std::size_t r = e.method.history(), n = e.block();
    QVectors probe = qv;
    probe.q.resize(static_cast<std::size_t>(j) + 1, Vec(r, 0.0));
    probe.q[static_cast<std::size_t>(j)] = Vec(r, 0.0);
    const Vec theta0 = theta_coefficient(e.method, probe, j);
    const Vec stage0 = stage_truncation_coefficient(e, probe, j);
    // Both coefficients are affine in q_j with linear parts (I - V) and -Uhat.
    const std::size_t rows = r + (include_stage ? n : 0);
    RealMatrix M(rows, r);
    M.set_block(0, 0, RealMatrix::identity(r) - e.method.V);
    Vec rhs = vscale(-1.0, theta0);
    if (include_stage) {
        M.set_block(r, 0, -1.0 * e.Uhat());
        const Vec s = vscale(-1.0, stage0);
        rhs.insert(rhs.end(), s.begin(), s.end());
    }
    BestFit f{least_squares(M, rhs), 0.0};
    f.residual = norm2(vsub(M * f.q, rhs));
    return f;
}

// ---------------------------------------------------------------------------
// Eigenvector-weighted conditions

// Taylor coefficients W_0..W_{terms-1} of dt -> Winv(dt) at dt = 0, from samples at
// h, h/2, ..., h/2^{samples-1} (polynomial extrapolation).
inline std::vector<ComplexMatrix> winv_expansion(const std::function<ComplexMatrix(double)>& winv_of_dt, double h,
                                                 std::size_t terms = 2, std::size_t samples = 6) {
    if (samples < terms) throw InvalidArgument("need at least as many samples as terms");
    std::vector<ComplexMatrix> vals;
    Vec hs;
    for (std::size_t k = 0; k < samples; ++k) {
        hs.push_back(h / std::pow(2.0, static_cast<double>(k)));
        vals.push_back(winv_of_dt(hs.back()));
    }
    const std::size_t R = vals.front().rows(), C = vals.front().cols();
    RealMatrix vand(samples, samples);
    for (std::size_t i = 0; i < samples; ++i)
        for (std::size_t j = 0; j < samples; ++j) vand(i, j) = std::pow(hs[i] / h, static_cast<double>(j));
    const RealMatrix vinv = inverse(vand);
    std::vector<ComplexMatrix> out(terms, ComplexMatrix(R, C));
    for (std::size_t t = 0; t < terms; ++t) {
        const double ht = std::pow(h, static_cast<double>(t));
        for (std::size_t i = 0; i < samples; ++i)
            for (std::size_t a = 0; a < R; ++a)
                for (std::size_t b = 0; b < C; ++b) out[t](a, b) += (vinv(t, i) / ht) * vals[i](a, b);
    }
    return out;
}

struct WeightedOrders {
    std::vector<Vec> residuals;  // [l][j] = ||W_l theta_j||
    std::vector<int> p;          // largest p_l with residuals[l][0..p_l] below tolerance
    int predicted_order = 0;     // min_l (p_l + l + 1)
};

inline WeightedOrders weighted_order_residuals(const GeneralLinearMethod& m, const QVectors& qv,
                                               const std::vector<ComplexMatrix>& W, int p_max, double tol = 1e-10) {
    WeightedOrders out;
    std::vector<CVec> theta;
    for (int j = 0; j <= p_max; ++j) {
        const Vec t = theta_coefficient(m, qv, j);
        theta.emplace_back(t.begin(), t.end());
    }
    for (std::size_t l = 0; l < W.size(); ++l) {
        Vec row;
        int p = -1;
        bool ok = true;
        for (int j = 0; j <= p_max; ++j) {
            row.push_back(norm2(W[l] * theta[static_cast<std::size_t>(j)]));
            if (ok && row.back() <= tol) p = j;
            else ok = false;
        }
        out.residuals.push_back(row);
        out.p.push_back(p);
    }
    int best = -1;
    for (std::size_t l = 0; l < out.p.size(); ++l) {
        const int o = out.p[l] + static_cast<int>(l) + 1;
        best = (best < 0) ? o : std::min(best, o);
    }
    // terms beyond the supplied expansion start no earlier than dt^{L + min p + 1}
    if (!out.p.empty()) {
        const int pmin = *std::min_element(out.p.begin(), out.p.end());
        best = std::min(best, static_cast<int>(W.size()) + pmin + 1);
    }
    out.predicted_order = best;
    return out;
}

}  // namespace chronodg
