// DG for the first-order system against Lobatto IIIC, step by step, and the
// assembled slab block against dt * A of the tableau.
#include <cstdio>

#include "chronodg/chronodg.hpp"

using namespace chronodg;

int main() {
    const double dt = 0.1, lambda = 4.0;
    for (int r = 1; r <= 3; ++r) {
        const Dg1LobattoDeviation d = dg1_lobatto_deviation(r, lambda, dt, 200, Oscillator{lambda, 1, 1, 20});
        const DG1SlabSystem sys = assemble_dg1({r, lambda, dt});
        const double block = max_abs_diff(sys.N[4], dt * lobatto_iiic(r + 1).A);
        std::printf("r=%d stages=%d  state=%.2e  stage values=%.2e  N4 vs dt*A=%.2e  det K=%.15f\n", r, r + 1, d.state,
                    d.stages, block, determinant(sys.K));
    }
}
