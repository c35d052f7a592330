// Observed orders of every integrator on u'' + u = 0, u(0) = u'(0) = 1, T = 20.
#include <cstdio>
#include <string>
#include <vector>

#include "chronodg/chronodg.hpp"

using namespace chronodg;

int main() {
    const Oscillator prob;
    const std::vector<MethodSpec> methods{
        NewmarkMethod{{0.5, 0.25}}, NewmarkMethod{{0.6, 0.3}},         LobattoMethod{2},
        LobattoMethod{3},           Dg2Method{1, SMode::zero, 0.0},     Dg2Method{1, SMode::a_dt2, 0.5},
        Dg2Method{2, SMode::zero, 0.0}, Dg2Method{3, SMode::zero, 0.0}, Dg1Method{1},
        Dg1Method{2},               Dg1Method{3}};
    std::printf("%-10s %-22s %10s %10s\n", "method", "params", "slab", "final");
    for (const MethodSpec& m : methods) {
        const ConvergenceReport rep = run_convergence(m, prob, reference_dts());
        std::string params;
        for (const auto& [k, v] : rep.params) {
            char buf[48];
            std::snprintf(buf, sizeof buf, "%s=%g ", k.c_str(), v);
            params += buf;
        }
        std::printf("%-10s %-22s %10.3f %10.3f\n", rep.method.c_str(), params.c_str(), rep.slab_order, rep.final_order);
    }
}
