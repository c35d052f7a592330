#pragma once

// Command-line front end. Kept apart from main() so tests can call run_cli with
// string streams. Data goes to `out` as CSV, diagnostics to `err`.

#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "chronodg/analysis.hpp"
#include "chronodg/errors.hpp"
#include "chronodg/glm.hpp"
#include "chronodg/irk.hpp"
#include "chronodg/newmark.hpp"

namespace chronodg {

namespace cli_detail {

constexpr int kExitBadFlags = 2;
constexpr int kExitUnstable = 3;
constexpr int kExitDeviation = 1;
constexpr double kEquivTol = 1e-9;
constexpr double kConditionTol = 1e-10;

inline std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

struct ProblemFlags {
    std::string file;
    std::optional<double> lambda, u0, v0, T;

    void attach(CLI::App* cmd) {
        cmd->add_option("--problem", file, "JSON file with lambda, u0, v0, T")->check(CLI::ExistingFile);
        cmd->add_option("--lambda", lambda, "overrides the file value");
        cmd->add_option("--u0", u0);
        cmd->add_option("--v0", v0);
        cmd->add_option("--T", T);
    }
};

// Defaults are lambda = 1, u0 = v0 = 1, T = 20; file values, then flags, override.
inline Oscillator load_problem(const ProblemFlags& f) {
    Oscillator p;
    if (!f.file.empty()) {
        std::ifstream in(f.file);
        if (!in) throw InvalidArgument("cannot open " + f.file);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw InvalidArgument(std::string("problem file: ") + e.what());
        }
        if (!j.is_object()) throw InvalidArgument("problem file must hold a JSON object");
        for (const auto& [key, value] : j.items()) {
            if (!value.is_number()) throw InvalidArgument("problem field '" + key + "' must be a number");
            const double v = value.get<double>();
            if (key == "lambda")
                p.lambda = v;
            else if (key == "u0")
                p.u0 = v;
            else if (key == "v0")
                p.v0 = v;
            else if (key == "T")
                p.T = v;
            else
                throw InvalidArgument("unknown problem field '" + key + "'");
        }
    }
    if (f.lambda) p.lambda = *f.lambda;
    if (f.u0) p.u0 = *f.u0;
    if (f.v0) p.v0 = *f.v0;
    if (f.T) p.T = *f.T;
    p.validate();
    return p;
}

inline std::string problem_comment(const Oscillator& p) {
    return "lambda=" + num(p.lambda) + " u0=" + num(p.u0) + " v0=" + num(p.v0) + " T=" + num(p.T);
}

struct ConvergeFlags {
    std::string method;
    int r = 1;
    int stages = 3;
    double gamma = 0.5;
    double beta = 0.25;
    double a = 0.0;
    std::string s_mode = "zero";
    std::string init = "exact";
    std::string march = "recursion";
    std::vector<double> dts = reference_dts();
    ProblemFlags problem;
};

inline int cmd_converge(const ConvergeFlags& f, std::ostream& out, std::ostream& err) {
    const Oscillator prob = load_problem(f.problem);
    MethodSpec method;
    if (f.method == "newmark") {
        const NewmarkParams p{f.gamma, f.beta};
        p.validate();
        method = NewmarkMethod{p};
    } else if (f.method == "lobatto3c") {
        method = LobattoMethod{f.stages};
    } else if (f.method == "dg2") {
        const InitialMode init = f.init == "taylor"       ? InitialMode::taylor
                                 : f.init == "newmark-T" ? InitialMode::newmark_T
                                                          : InitialMode::exact_samples;
        method = Dg2Method{f.r, f.s_mode == "a-dt2" ? SMode::a_dt2 : SMode::zero, f.a, init};
    } else {
        method = Dg1Method{f.r};
    }
    const ConvergenceReport rep =
        run_convergence(method, prob, f.dts, f.march == "direct" ? MarchMode::direct : MarchMode::error_recursion);

    out << "# method=" << rep.method;
    for (const auto& [k, v] : rep.params) out << ' ' << k << '=' << num(v);
    out << ' ' << problem_comment(prob) << '\n';
    out << "dt,slab_error,final_error\n";
    for (const auto& row : rep.rows) out << num(row.dt) << ',' << num(row.slab_error) << ',' << num(row.final_error) << '\n';
    if (rep.unstable) {
        out << "# unstable: error exceeded 1e6\n";
        err << "UnstableRun: error exceeded 1e6\n";
        return kExitUnstable;
    }
    out << "# slab_order=" << num(rep.slab_order) << " slab_r2=" << num(rep.slab_r2)
        << " final_order=" << num(rep.final_order) << " final_r2=" << num(rep.final_r2) << '\n';
    return 0;
}

struct EquivFlags {
    std::string check;
    std::size_t steps = 200;
    double dt = 0.05;
    double lambda = 1.0;
    double a = 0.5;
};

inline int cmd_equiv(const EquivFlags& f, std::ostream& out) {
    if (!(f.dt > 0.0)) throw InvalidArgument("--dt must be positive");
    if (!(f.lambda > 0.0)) throw InvalidArgument("--lambda must be positive");
    double dev = 0;
    if (f.check == "newmark-p1") {
        const NewmarkDeviation d = newmark_p1_deviation(f.a, f.lambda, f.dt, f.steps);
        out << "similarity_deviation=" << num(d.similarity) << '\n';
        out << "march_deviation=" << num(d.march) << '\n';
        dev = std::max(d.similarity, d.march);
    } else if (f.check.rfind("lobatto-r", 0) == 0) {
        const int r = f.check.back() - '0';
        const Dg1LobattoDeviation d = dg1_lobatto_deviation(r, f.lambda, f.dt, f.steps);
        out << "state_deviation=" << num(d.state) << '\n';
        out << "stage_deviation=" << num(d.stages) << '\n';
        dev = std::max(d.state, d.stages);
    } else if (f.check == "glm-newmark") {
        dev = glm_newmark_deviation({}, f.lambda, f.dt, f.steps);
    } else {
        dev = glm_dg2_deviation(1, f.a, f.lambda, f.dt, f.steps);
    }
    const bool ok = dev <= kEquivTol;
    out << "max_deviation=" << num(dev) << '\n' << (ok ? "PASS" : "FAIL") << '\n';
    return ok ? 0 : kExitDeviation;
}

struct SpectralFlags {
    int r = 1;
    double a = 0.0;
    double x_min = 0.1;
    double x_max = 20.0;
    std::size_t samples = 200;
};

inline int cmd_spectral(const SpectralFlags& f, std::ostream& out) {
    const SweepCurve c = spectral_sweep(f.r, f.a, f.x_min, f.x_max, f.samples);
    out << "# r=" << f.r << " a=" << num(f.a) << '\n' << "x,rho\n";
    for (const auto& [x, rho] : c.samples) out << num(x) << ',' << num(rho) << '\n';
    return 0;
}

struct CondFlags {
    std::string which;
    int r = 1;
    double lambda = 1.0;
    std::vector<double> dts = reference_dts();
};

inline int cmd_cond(const CondFlags& f, std::ostream& out) {
    const SweepCurve c = conditioning_sweep(f.which == "dg2-aplus" ? SlabMatrixKind::dg2_aplus : SlabMatrixKind::dg1_bplus,
                                            f.r, f.lambda, f.dts);
    out << "# which=" << f.which << " r=" << f.r << " lambda=" << num(f.lambda) << '\n' << "dt,cond2\n";
    for (const auto& [dt, k] : c.samples) out << num(dt) << ',' << num(k) << '\n';
    if (c.samples.size() >= 3) out << "# slope=" << num(c.slope) << '\n';
    return 0;
}

struct OrderFlags {
    std::string target;
    int max_order = -1;  // default: the order the method is known to reach
};

inline void condition_row(std::ostream& out, const std::string& name, int k, double residual) {
    out << name << ',' << k << ',' << num(residual) << ',' << (residual <= kConditionTol ? "PASS" : "FAIL") << '\n';
}

inline int cmd_order_conditions(const OrderFlags& f, std::ostream& out) {
    out << "condition,k,residual,status\n";
    if (f.target == "newmark-glm") {
        const GeneralLinearMethod m = newmark_as_glm();
        QVectors qv = newmark_q_vectors();
        const int p = f.max_order < 0 ? 4 : f.max_order;
        for (const auto& c : order_condition_residuals(m, qv, std::min(p, 3))) condition_row(out, c.kind, c.k, c.residual);
        // beyond the known expansion: best least-squares q_k
        for (int k = 4; k <= p; ++k) {
            const BestFit fit = best_fit_q(m, qv, k);
            condition_row(out, "best_fit", k, fit.residual);
            qv.q.push_back(fit.q);
        }
        return 0;
    }
    const int s = f.target.back() - '0';
    const ButcherTableau tab = lobatto_iiic(s);
    const int p = f.max_order < 0 ? 2 * s - 2 : f.max_order;
    const Vec B = order_condition_B(tab, p);
    for (int k = 1; k <= p; ++k) condition_row(out, "B", k, std::abs(B[static_cast<std::size_t>(k - 1)]));
    const RealMatrix C = order_condition_C(tab, s - 1), D = order_condition_D(tab, s - 1);
    for (int k = 1; k < s; ++k) {
        double c = 0, d = 0;
        for (std::size_t i = 0; i < tab.stages(); ++i) {
            c = std::max(c, std::abs(C(i, static_cast<std::size_t>(k - 1))));
            d = std::max(d, std::abs(D(i, static_cast<std::size_t>(k - 1))));
        }
        condition_row(out, "C", k, c);
        condition_row(out, "D", k, d);
    }
    double last = 0, first = 0;
    for (std::size_t j = 0; j < tab.stages(); ++j) {
        last = std::max(last, std::abs(tab.A(tab.stages() - 1, j) - tab.b[j]));
        first = std::max(first, std::abs(tab.A(j, 0) - tab.b[0]));
    }
    condition_row(out, "last_row_equals_b", 0, last);
    condition_row(out, "first_column_equals_b1", 0, first);
    return 0;
}

}  // namespace cli_detail

// Returns the process exit code. args excludes the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    using namespace cli_detail;
    CLI::App app{"chronodg: time integrators for u'' + lambda u = 0"};
    app.require_subcommand(1);

    ConvergeFlags cf;
    auto* conv = app.add_subcommand("converge", "errors and fitted orders over a dt grid");
    conv->add_option("--method", cf.method)->required()->check(CLI::IsMember({"newmark", "lobatto3c", "dg2", "dg1"}));
    conv->add_option("--r", cf.r, "polynomial degree for dg2/dg1")->check(CLI::Range(1, 3));
    conv->add_option("--stages", cf.stages, "stage count for lobatto3c")->check(CLI::Range(2, 4));
    conv->add_option("--gamma", cf.gamma)->check(CLI::Range(0.0, 1.0));
    conv->add_option("--beta", cf.beta)->check(CLI::Range(0.0, 0.5));
    conv->add_option("--a", cf.a, "s = a dt^2 with --s-mode a-dt2");
    conv->add_option("--s-mode", cf.s_mode)->check(CLI::IsMember({"zero", "a-dt2"}));
    conv->add_option("--init", cf.init, "dg2 starting slab")->check(CLI::IsMember({"exact", "taylor", "newmark-T"}));
    conv->add_option("--march", cf.march)->check(CLI::IsMember({"recursion", "direct"}));
    conv->add_option("--dt-list", cf.dts)->delimiter(',')->check(CLI::PositiveNumber);
    cf.problem.attach(conv);

    EquivFlags ef;
    auto* eq = app.add_subcommand("equiv", "numerical equivalence checks");
    eq->add_option("--check", ef.check)
        ->required()
        ->check(CLI::IsMember({"newmark-p1", "lobatto-r1", "lobatto-r2", "lobatto-r3", "glm-newmark", "glm-dg2-p1"}));
    eq->add_option("--steps", ef.steps);
    eq->add_option("--dt", ef.dt);
    eq->add_option("--lambda", ef.lambda);
    eq->add_option("--a", ef.a, "stabilization coefficient for newmark-p1 and glm-dg2-p1");

    SpectralFlags sf;
    auto* spec = app.add_subcommand("spectral", "rho(G) against x = sqrt(lambda) dt");
    spec->add_option("--r", sf.r)->check(CLI::Range(1, 3));
    spec->add_option("--a", sf.a);
    spec->add_option("--x-min", sf.x_min)->check(CLI::PositiveNumber);
    spec->add_option("--x-max", sf.x_max)->check(CLI::PositiveNumber);
    spec->add_option("--samples", sf.samples)->check(CLI::PositiveNumber);

    CondFlags kf;
    auto* cond = app.add_subcommand("cond", "condition numbers of slab matrices");
    cond->add_option("--which", kf.which)->required()->check(CLI::IsMember({"dg2-aplus", "dg1-bplus"}));
    cond->add_option("--r", kf.r)->check(CLI::Range(1, 3));
    cond->add_option("--lambda", kf.lambda)->check(CLI::PositiveNumber);
    cond->add_option("--dt-list", kf.dts)->delimiter(',')->check(CLI::PositiveNumber);

    OrderFlags of;
    auto* ord = app.add_subcommand("order-conditions", "order-condition residuals");
    ord->add_option("--target", of.target)
        ->required()
        ->check(CLI::IsMember({"lobatto2", "lobatto3", "lobatto4", "newmark-glm"}));
    ord->add_option("--max-order", of.max_order)->check(CLI::Range(0, 12));

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n';
        return kExitBadFlags;
    }

    try {
        if (conv->parsed()) return cmd_converge(cf, out, err);
        if (eq->parsed()) return cmd_equiv(ef, out);
        if (spec->parsed()) return cmd_spectral(sf, out);
        if (cond->parsed()) return cmd_cond(kf, out);
        return cmd_order_conditions(of, out);
    } catch (const InvalidArgument& e) {
        err << e.what() << '\n';
        return kExitBadFlags;
    } catch (const Unsupported& e) {
        err << e.what() << '\n';
        return kExitBadFlags;
    } catch (const ModeUnavailable& e) {
        err << e.what() << '\n';
        return kExitBadFlags;
    }
}

}  // namespace chronodg
