#pragma once

// Convergence runs, log-log order fits and the sweeps behind the figure data.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "chronodg/dg1.hpp"
#include "chronodg/dg2.hpp"
#include "chronodg/errors.hpp"
#include "chronodg/irk.hpp"
#include "chronodg/newmark.hpp"
#include "chronodg/smallmat.hpp"

namespace chronodg {

struct OrderFit {
    double slope;
    double r2;
};

// Least-squares slope of log(error) against log(dt).
inline OrderFit observed_order(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 3) throw InvalidArgument("need at least three points for an order fit");
    const double n = static_cast<double>(points.size());
    double sx = 0, sy = 0;
    for (const auto& [dt, err] : points) {
        if (!(err > 0.0)) throw NonPositiveError("error values must be positive");
        if (!(dt > 0.0)) throw InvalidArgument("dt values must be positive");
        sx += std::log(dt);
        sy += std::log(err);
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (const auto& [dt, err] : points) {
        const double x = std::log(dt) - mx, y = std::log(err) - my;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    if (sxx == 0.0) throw InvalidArgument("dt values must not all coincide");
    const double slope = sxy / sxx;
    double ss_res = 0;
    for (const auto& [dt, err] : points) {
        const double e = std::log(err) - my - slope * (std::log(dt) - mx);
        ss_res += e * e;
    }
    const double r2 = syy > 0.0 ? std::max(0.0, 1.0 - ss_res / syy) : 1.0;
    return {slope, r2};
}

inline double fit_slope(const std::vector<double>& dts, const std::vector<double>& vals) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < dts.size(); ++i) pts.emplace_back(dts[i], vals[i]);
    return observed_order(pts).slope;
}

struct NewmarkMethod {
    NewmarkParams params;
};
struct LobattoMethod {
    int stages = 3;
};
struct Dg2Method {
    int r = 1;
    SMode s_mode = SMode::zero;
    double a = 0.0;
    InitialMode init = InitialMode::exact_samples;
};
struct Dg1Method {
    int r = 1;
};

using MethodSpec = std::variant<NewmarkMethod, LobattoMethod, Dg2Method, Dg1Method>;

inline std::string method_id(const MethodSpec& m) {
    struct {
        std::string operator()(const NewmarkMethod&) const { return "newmark"; }
        std::string operator()(const LobattoMethod&) const { return "lobatto3c"; }
        std::string operator()(const Dg2Method&) const { return "dg2"; }
        std::string operator()(const Dg1Method&) const { return "dg1"; }
    } v;
    return std::visit(v, m);
}

inline std::vector<std::pair<std::string, double>> method_params(const MethodSpec& m) {
    if (auto p = std::get_if<NewmarkMethod>(&m)) return {{"gamma", p->params.gamma}, {"beta", p->params.beta}};
    if (auto p = std::get_if<LobattoMethod>(&m)) return {{"stages", p->stages}};
    if (auto p = std::get_if<Dg2Method>(&m))
        return {{"r", p->r}, {"a", p->s_mode == SMode::zero ? 0.0 : p->a}};
    return {{"r", std::get<Dg1Method>(m).r}};
}

struct ErrorSample {
    double dt;
    double slab_error;   // max over slabs
    double final_error;  // at t = T
    bool unstable = false;
};

constexpr double kUnstableThreshold = 1e6;

inline std::size_t step_count(double T, double dt) {
    if (!(dt > 0.0) || !(T > 0.0)) throw InvalidArgument("dt and T must be positive");
    const double n = T / dt;
    const double rn = std::round(n);
    if (rn < 1.0 || std::abs(n - rn) > 1e-12 * std::max(1.0, rn)) throw InvalidArgument("T/dt must be an integer");
    return static_cast<std::size_t>(rn);
}

namespace detail {

inline bool blown(double e) { return !std::isfinite(e) || e > kUnstableThreshold; }

using ExtMatrix = Matrix<Extended>;

// exp(L t) for L = [[0, 1], [-lambda, 0]]
inline ExtMatrix exact_flow(Extended lambda, Extended t) {
    ExtMatrix F(2, 2);
    if (lambda == 0) {
        F(0, 0) = F(1, 1) = 1;
        F(0, 1) = t;
        return F;
    }
    const Extended w = real_sqrt(lambda);
    Extended s, c;
    sin_cos(w * t, s, c);
    F(0, 0) = c;
    F(0, 1) = s / w;
    F(1, 0) = -w * s;
    F(1, 1) = c;
    return F;
}

// Error recursion for a linear stepper:
//   e_{n+1} = Ms e_n + Es z(t_n),  observed slab error o_{n+1} = Mo e_n + Eo z(t_n),
// with z(t) = (u, u') exact. The defect matrices E are formed in extended precision,
// so errors far below the double roundoff floor of a plain march stay resolvable.
struct ErrorRecursion {
    RealMatrix Ms, Es, Mo, Eo;
    Vec e0;
    bool final_last_component = false;  // DG2 reports only u at t = T
};

inline ErrorRecursion pair_recursion(const ExtMatrix& S, Extended lambda, Extended dt) {
    ErrorRecursion rec;
    rec.Ms = rec.Mo = matrix_cast<double>(S);
    rec.Es = rec.Eo = matrix_cast<double>(S - exact_flow(lambda, dt));
    rec.e0 = Vec(2, 0.0);
    return rec;
}

inline ErrorRecursion build_recursion(const MethodSpec& method, const Oscillator& prob, double dt) {
    const Extended lam = prob.lambda, h = dt;
    if (auto m = std::get_if<NewmarkMethod>(&method)) {
        m->params.validate();
        return pair_recursion(newmark_propagator<Extended>(m->params, lam, h), lam, h);
    }
    if (auto m = std::get_if<LobattoMethod>(&method)) {
        const auto tab = lobatto_iiic<Extended>(m->stages);
        return pair_recursion(irk_step_matrix(tab, oscillator_operator_t<Extended>(lam), h), lam, h);
    }
    if (auto m = std::get_if<Dg2Method>(&method)) {
        const DG2Config cfg{m->r, m->s_mode, m->a, prob.lambda, dt};
        const ExtMatrix G = matrix_cast<Extended>(propagator_ext(cfg));
        const std::size_t n = G.rows();
        ExtMatrix P(n, 2);  // slab samples from the state at the slab's right end
        for (std::size_t i = 0; i < n; ++i) {
            const ExtMatrix F = exact_flow(lam, (Extended(static_cast<double>(i)) / m->r - 1) * h);
            P(i, 0) = F(0, 0);
            P(i, 1) = F(0, 1);
        }
        ErrorRecursion rec;
        rec.Ms = rec.Mo = matrix_cast<double>(G);
        rec.Es = rec.Eo = matrix_cast<double>(G * P - P * exact_flow(lam, h));
        rec.e0 = vsub(initial_slab(cfg, prob, m->init), exact_slab(cfg, prob, 0.0));
        rec.final_last_component = true;
        return rec;
    }
    const auto& m = std::get<Dg1Method>(method);
    const DG1Config cfg{m.r, prob.lambda, dt};
    const auto blocks = dg1_blocks<Extended>(cfg);
    const std::size_t n = static_cast<std::size_t>(m.r) + 1;
    // the step reads only the last (u, w) pair: zhat_{n+1} = K^{-1} (1 (x) I2) z_n
    ExtMatrix rhs(2 * n, 2), Q(2 * n, 2);
    const auto nodes = gauss_lobatto<Extended>(m.r).nodes;
    for (std::size_t i = 0; i < n; ++i) {
        rhs(2 * i, 0) = rhs(2 * i + 1, 1) = 1;
        Q.set_block(2 * i, 0, exact_flow(lam, nodes[i] * h));
    }
    ExtMatrix M;
    try {
        M = solve(blocks.K, rhs);
    } catch (const SingularMatrix& e) {
        throw SingularK(e.what());
    }
    const ExtMatrix Ms = M.block(2 * n - 2, 0, 2, 2);
    ErrorRecursion rec;
    rec.Ms = matrix_cast<double>(Ms);
    rec.Es = matrix_cast<double>(Ms - exact_flow(lam, h));
    rec.Mo = matrix_cast<double>(M);
    rec.Eo = matrix_cast<double>(M - Q);
    rec.e0 = Vec(2, 0.0);
    return rec;
}

}  // namespace detail

// Marches the error recursion of the method; see detail::ErrorRecursion.
inline ErrorSample simulate(const MethodSpec& method, const Oscillator& prob, double dt) {
    prob.validate();
    const std::size_t n = step_count(prob.T, dt);
    const detail::ErrorRecursion rec = detail::build_recursion(method, prob, dt);
    ErrorSample out{dt, 0.0, 0.0};
    Vec e = rec.e0;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * dt;
        const Vec z{prob.exact(t), prob.exact_velocity(t)};
        const double slab = norm2(vadd(rec.Mo * e, rec.Eo * z));
        e = vadd(rec.Ms * e, rec.Es * z);
        out.slab_error = std::max(out.slab_error, slab);
        if (detail::blown(slab)) {
            out.unstable = true;
            out.final_error = slab;
            return out;
        }
    }
    out.final_error = rec.final_last_component ? std::abs(e.back()) : norm2(e);
    return out;
}

namespace detail {

inline ErrorSample march_pair(const Oscillator& prob, double dt, std::size_t n,
                              const std::function<Vec(const Vec&)>& step) {
    ErrorSample out{dt, 0.0, 0.0};
    Vec z{prob.u0, prob.v0};
    for (std::size_t k = 1; k <= n; ++k) {
        z = step(z);
        const double t = static_cast<double>(k) * dt;
        const double e = norm2(vsub(z, Vec{prob.exact(t), prob.exact_velocity(t)}));
        out.slab_error = std::max(out.slab_error, e);
        if (blown(e)) {
            out.unstable = true;
            out.final_error = e;
            return out;
        }
        if (k == n) out.final_error = e;
    }
    return out;
}

}  // namespace detail

// Plain double-precision march of the solution, compared against the exact
// solution at every slab. Hits a roundoff floor near 1e-11 on long runs.
inline ErrorSample simulate_direct(const MethodSpec& method, const Oscillator& prob, double dt) {
    prob.validate();
    const std::size_t n = step_count(prob.T, dt);

    if (auto m = std::get_if<NewmarkMethod>(&method)) {
        m->params.validate();
        return detail::march_pair(prob, dt, n, [&](const Vec& z) {
            const PairState s = newmark_step(m->params, prob, dt, {z[0], z[1]});
            return Vec{s.u, s.v};
        });
    }
    if (auto m = std::get_if<LobattoMethod>(&method)) {
        const ButcherTableau tab = lobatto_iiic(m->stages);
        const RealMatrix L = oscillator_operator(prob.lambda);
        return detail::march_pair(prob, dt, n, [&](const Vec& z) { return irk_step(tab, L, dt, z).z_next; });
    }
    if (auto m = std::get_if<Dg2Method>(&method)) {
        const DG2Config cfg{m->r, m->s_mode, m->a, prob.lambda, dt};
        const SlabSystem sys = assemble(cfg);
        ErrorSample out{dt, 0.0, 0.0};
        Vec u = initial_slab(cfg, prob, m->init);
        for (std::size_t k = 1; k <= n; ++k) {
            u = dg2_step(sys, u);
            const double t = static_cast<double>(k) * dt;
            const double e = norm2(vsub(u, exact_slab(cfg, prob, t)));
            out.slab_error = std::max(out.slab_error, e);
            if (detail::blown(e)) {
                out.unstable = true;
                out.final_error = e;
                return out;
            }
            if (k == n) out.final_error = std::abs(u.back() - prob.exact(t));
        }
        return out;
    }
    const auto& m = std::get<Dg1Method>(method);
    const DG1Config cfg{m.r, prob.lambda, dt};
    const DG1SlabSystem sys = assemble_dg1(cfg);
    const Vec nodes = gauss_lobatto(m.r).nodes;
    ErrorSample out{dt, 0.0, 0.0};
    Vec z = initial_slab_dg1(cfg, prob);
    Vec exact(z.size());
    for (std::size_t k = 1; k <= n; ++k) {
        z = dg1_step(sys, z);
        const double t = static_cast<double>(k) * dt;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const double ti = t + (nodes[i] - 1.0) * dt;
            exact[2 * i] = prob.exact(ti);
            exact[2 * i + 1] = prob.exact_velocity(ti);
        }
        const double e = norm2(vsub(z, exact));
        out.slab_error = std::max(out.slab_error, e);
        if (detail::blown(e)) {
            out.unstable = true;
            out.final_error = e;
            return out;
        }
        if (k == n) out.final_error = norm2(vsub(last_pair(z), Vec{prob.exact(t), prob.exact_velocity(t)}));
    }
    return out;
}

inline std::size_t worker_count(std::size_t jobs) {
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("CHRONODG_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) n = std::min(n, static_cast<std::size_t>(v));
    }
    return std::max<std::size_t>(1, std::min(n, jobs));
}

// Runs f(i) for i < jobs on a small pool; results land by index so order never
// depends on scheduling.
template <class R, class F>
std::vector<R> parallel_map(std::size_t jobs, F f) {
    std::vector<R> out(jobs);
    std::vector<std::exception_ptr> errs(jobs);
    const std::size_t workers = worker_count(jobs);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < jobs; i += workers) try {
                    out[i] = f(i);
                } catch (...) {
                    errs[i] = std::current_exception();
                }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
    return out;
}

struct ConvergenceReport {
    std::string method;
    std::vector<std::pair<std::string, double>> params;
    std::vector<ErrorSample> rows;  // dt strictly decreasing
    double slab_order = std::numeric_limits<double>::quiet_NaN();
    double slab_r2 = std::numeric_limits<double>::quiet_NaN();
    double final_order = std::numeric_limits<double>::quiet_NaN();
    double final_r2 = std::numeric_limits<double>::quiet_NaN();
    bool unstable = false;

    void require_stable() const {
        if (unstable) throw UnstableRun("error exceeded 1e6 for method " + method);
    }
};

// 0.2 / 2^k, k = 0..5; with T = 20 every step count is an integer
inline std::vector<double> reference_dts() {
    std::vector<double> d;
    for (int k = 0; k <= 5; ++k) d.push_back(0.2 / std::pow(2.0, k));
    return d;
}

enum class MarchMode { error_recursion, direct };

inline ConvergenceReport run_convergence(const MethodSpec& method, const Oscillator& prob, std::vector<double> dts,
                                         MarchMode mode = MarchMode::error_recursion) {
    if (dts.empty()) throw InvalidArgument("empty dt list");
    std::sort(dts.begin(), dts.end(), std::greater<>());
    if (std::adjacent_find(dts.begin(), dts.end()) != dts.end()) throw InvalidArgument("duplicate dt values");
    for (double dt : dts) step_count(prob.T, dt);

    ConvergenceReport rep{method_id(method), method_params(method), {}};
    rep.rows = parallel_map<ErrorSample>(dts.size(), [&](std::size_t i) {
        return mode == MarchMode::direct ? simulate_direct(method, prob, dts[i]) : simulate(method, prob, dts[i]);
    });
    for (const auto& r : rep.rows) rep.unstable = rep.unstable || r.unstable;
    if (!rep.unstable && rep.rows.size() >= 3) {
        std::vector<std::pair<double, double>> slab, fin;
        for (const auto& r : rep.rows) {
            slab.emplace_back(r.dt, r.slab_error);
            fin.emplace_back(r.dt, r.final_error);
        }
        const OrderFit fs = observed_order(slab), ff = observed_order(fin);
        rep.slab_order = fs.slope;
        rep.slab_r2 = fs.r2;
        rep.final_order = ff.slope;
        rep.final_r2 = ff.r2;
    }
    return rep;
}

struct SweepCurve {
    std::string label;
    std::vector<std::pair<double, double>> samples;  // x strictly increasing
    double slope = std::numeric_limits<double>::quiet_NaN();
};

// rho(G) over x = sqrt(lambda) dt with lambda = 1; G depends on (lambda dt^2, a) only.
inline SweepCurve spectral_sweep(int r, double a, double x_min, double x_max, std::size_t samples) {
    if (!(x_min > 0.0) || !(x_max >= x_min)) throw InvalidArgument("need 0 < x_min <= x_max");
    if (samples < 1) throw InvalidArgument("need at least one sample");
    if (samples == 1 && x_max != x_min) throw InvalidArgument("a single sample needs x_min == x_max");
    SweepCurve c{"x", {}};
    const auto rho = parallel_map<double>(samples, [&](std::size_t i) {
        const double x = samples == 1 ? x_min : x_min + (x_max - x_min) * static_cast<double>(i) / (samples - 1);
        return spectral_radius(assemble({r, SMode::a_dt2, a, 1.0, x}).G);
    });
    for (std::size_t i = 0; i < samples; ++i) {
        const double x = samples == 1 ? x_min : x_min + (x_max - x_min) * static_cast<double>(i) / (samples - 1);
        c.samples.emplace_back(x, rho[i]);
    }
    return c;
}

struct ConsistencyRow {
    double dt;
    double theta;       // max_n |theta_n|
    double winv_theta;  // max_n |W^{-1} theta_n|
};

struct ConsistencyReport {
    std::vector<ConsistencyRow> rows;
    double theta_order;
    double winv_theta_order;
};

inline ConsistencyReport consistency_sweep(int r, SMode s_mode, double a, const Oscillator& prob,
                                           std::vector<double> dts) {
    std::sort(dts.begin(), dts.end(), std::greater<>());
    ConsistencyReport rep;
    rep.rows = parallel_map<ConsistencyRow>(dts.size(), [&](std::size_t i) {
        const double dt = dts[i];
        const std::size_t n = step_count(prob.T, dt);
        const DG2Config cfg{r, s_mode, a, prob.lambda, dt};
        const SlabSystem sys = assemble(cfg);
        const EigenDecomposition e = eig(sys.G);
        ConsistencyRow row{dt, 0.0, 0.0};
        for (std::size_t k = 0; k < n; ++k) {
            const TruncationVector tv = truncation_vector(sys, e, cfg, prob, static_cast<double>(k) * dt);
            row.theta = std::max(row.theta, norm2(tv.theta));
            row.winv_theta = std::max(row.winv_theta, norm2(tv.winv_theta));
        }
        return row;
    });
    std::vector<double> d, th, wt;
    for (const auto& row : rep.rows) {
        d.push_back(row.dt);
        th.push_back(row.theta);
        wt.push_back(row.winv_theta);
    }
    rep.theta_order = fit_slope(d, th);
    rep.winv_theta_order = fit_slope(d, wt);
    return rep;
}

enum class SlabMatrixKind { dg2_aplus, dg1_bplus };

inline SweepCurve conditioning_sweep(SlabMatrixKind which, int r, double lambda, std::vector<double> dts) {
    for (double dt : dts)
        if (!(dt > 0.0)) throw InvalidArgument("dt values must be positive");
    std::sort(dts.begin(), dts.end());
    SweepCurve c{"dt", {}};
    for (double dt : dts) {
        const double k = which == SlabMatrixKind::dg2_aplus ? cond2(assemble({r, SMode::zero, 0.0, lambda, dt}).Aplus)
                                                            : cond2(assemble_dg1({r, lambda, dt}).Bplus);
        c.samples.emplace_back(dt, k);
    }
    if (c.samples.size() >= 3) c.slope = observed_order(c.samples).slope;
    return c;
}

// ---------------------------------------------------------------------------
// Equivalence checks: each returns the largest deviation seen.

struct Dg1LobattoDeviation {
    double state;   // last (u, w) pair against the IRK state
    double stages;  // whole slab vector against (I (x) L^{-1}) k
};

inline Dg1LobattoDeviation dg1_lobatto_deviation(int r, double lambda, double dt, std::size_t steps,
                                                 const Oscillator& prob = {}) {
    const DG1SlabSystem sys = assemble_dg1({r, lambda, dt});
    const ButcherTableau tab = lobatto_iiic(r + 1);
    const RealMatrix L = oscillator_operator(lambda);
    Vec zhat = initial_slab_dg1({r, lambda, dt}, prob);
    Vec z{prob.u0, prob.v0};
    Dg1LobattoDeviation dev{0.0, 0.0};
    for (std::size_t n = 0; n < steps; ++n) {
        const IrkStepResult irk = irk_step(tab, L, dt, z);
        zhat = dg1_step(sys, zhat);
        z = irk.z_next;
        dev.state = std::max(dev.state, norm2(vsub(last_pair(zhat), z)));
        if (lambda != 0.0) dev.stages = std::max(dev.stages, norm2(vsub(zhat, stage_values(irk.stages, lambda))));
    }
    return dev;
}

struct NewmarkDeviation {
    double similarity;  // max |T G T^{-1} - G_New|
    double march;       // max |T u_n - (u_n, v_n)| along a trajectory
};

inline NewmarkDeviation newmark_p1_deviation(double a, double lambda, double dt, std::size_t steps,
                                             const Oscillator& prob = {}) {
    const DG2Config cfg{1, SMode::a_dt2, a, lambda, dt};
    const RealMatrix G = assemble(cfg).G;
    const RealMatrix T = newmark_map(a, lambda, dt);
    const NewmarkParams p{1.0 - a, (1.0 - a) / 2.0};
    NewmarkDeviation dev{max_abs_diff(T * G * inverse(T), newmark_propagator(p, lambda, dt)), 0.0};
    Oscillator local = prob;
    local.lambda = lambda;
    Vec u = initial_slab(cfg, local, InitialMode::newmark_T);
    PairState s{prob.u0, prob.v0};
    for (std::size_t n = 0; n < steps; ++n) {
        u = G * u;
        s = newmark_step(p, local, dt, s);
        dev.march = std::max(dev.march, norm2(vsub(T * u, Vec{s.u, s.v})));
    }
    return dev;
}

inline double glm_newmark_deviation(const NewmarkParams& p, double lambda, double dt, std::size_t steps,
                                    const Oscillator& prob = {}) {
    const GeneralLinearMethod m = newmark_as_glm(p);
    Oscillator local = prob;
    local.lambda = lambda;
    PairState s{prob.u0, prob.v0};
    Vec y = newmark_glm_history(lambda, dt, s);
    double dev = 0;
    for (std::size_t n = 0; n < steps; ++n) {
        const GlmStepResult g = glm_step(m, lambda, dt, y);
        s = newmark_step(p, local, dt, s);
        y = g.y_next;
        dev = std::max(dev, std::abs(g.Y[0] - s.u));
        dev = std::max(dev, norm2(vsub(y, newmark_glm_history(lambda, dt, s))));
    }
    return dev;
}

// GLM embedding of DG2 against the slab recursion, both marched independently.
inline double glm_dg2_deviation(int r, double a, double lambda, double dt, std::size_t steps,
                                const Oscillator& prob = {}) {
    const DG2Config cfg{r, SMode::a_dt2, a, lambda, dt};
    const SlabSystem sys = assemble(cfg);
    const Dg2Embedding e = dg2_embedding(r, a);
    Oscillator local = prob;
    local.lambda = lambda;
    Vec u = initial_slab(cfg, local);
    Vec y = dg2_glm_history(e, cfg.mu(), u);
    const std::size_t n = u.size();
    double dev = 0;
    for (std::size_t k = 0; k < steps; ++k) {
        u = dg2_step(sys, u);
        y = glm_step(e.method, lambda, dt, y).y_next;
        dev = std::max(dev, norm2(vsub(Vec(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n)), u)));
    }
    return dev;
}

}  // namespace chronodg
