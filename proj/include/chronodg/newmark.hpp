#pragma once

// Newmark family for u'' = -lambda u, plus the trapezoidal rule on the
// equivalent first-order system.

#include <cmath>

#include "chronodg/errors.hpp"
#include "chronodg/smallmat.hpp"

namespace chronodg {

struct NewmarkParams {
    double gamma = 0.5;
    double beta = 0.25;

    void validate() const {
        if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidArgument("gamma must lie in [0, 1]");
        if (!(beta >= 0.0 && beta <= 0.5)) throw InvalidArgument("beta must lie in [0, 1/2]");
    }
};

// u'' + lambda u = 0, u(0) = u0, u'(0) = v0, on (0, T].
struct Oscillator {
    double lambda = 1.0;
    double u0 = 1.0;
    double v0 = 1.0;
    double T = 20.0;

    void validate() const {
        if (!(lambda > 0.0)) throw InvalidArgument("lambda must be positive");
        if (!(T > 0.0)) throw InvalidArgument("T must be positive");
    }

    double omega() const { return std::sqrt(lambda); }

    // k-th time derivative of the exact solution.
    double derivative(int k, double t) const {
        const double w = omega();
        const double c = std::cos(w * t), s = std::sin(w * t);
        // u = u0 cos + (v0/w) sin; each derivative rotates (cos, sin) by a quarter turn
        double a = u0, b = v0 / w;
        for (int i = 0; i < k; ++i) {
            const double na = b * w, nb = -a * w;
            a = na;
            b = nb;
        }
        return a * c + b * s;
    }

    double exact(double t) const { return derivative(0, t); }
    double exact_velocity(double t) const { return derivative(1, t); }
};

struct PairState {
    double u = 0.0;
    double v = 0.0;
};

inline PairState newmark_step(const NewmarkParams& p, const Oscillator& prob, double dt, const PairState& s) {
    if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
    const double lam = prob.lambda;
    const double denom = 1.0 + p.beta * lam * dt * dt;
    if (denom == 0.0) throw DegenerateStep("1 + beta lambda dt^2 vanishes");
    const double u1 = (s.u + dt * s.v - dt * dt * (0.5 - p.beta) * lam * s.u) / denom;
    const double v1 = s.v - dt * lam * ((1.0 - p.gamma) * s.u + p.gamma * u1);
    return {u1, v1};
}

// (u, v)_{n+1} = G (u, v)_n.
template <class T = double>
Matrix<T> newmark_propagator(const NewmarkParams& p, T lambda, T dt) {
    const T x = lambda * dt * dt, beta = p.beta, gamma = p.gamma;
    const T den = 2 + 2 * beta * x;
    if (den == 0) throw DegenerateStep("1 + beta lambda dt^2 vanishes");
    return Matrix<T>{
        {(2 - (1 - 2 * beta) * x) / den, 2 * dt / den},
        {(-2 * dt * lambda + (gamma - 2 * beta) * dt * x * lambda) / den, (2 + 2 * (beta - gamma) * x) / den},
    };
}

inline RealMatrix oscillator_operator(double lambda) { return RealMatrix{{0.0, 1.0}, {-lambda, 0.0}}; }

inline PairState crank_nicolson_step(double lambda, double dt, const PairState& s) {
    const RealMatrix L = oscillator_operator(lambda);
    const RealMatrix I = RealMatrix::identity(2);
    const Vec rhs = (I + (0.5 * dt) * L) * Vec{s.u, s.v};
    const Vec z = solve(I - (0.5 * dt) * L, rhs);
    return {z[0], z[1]};
}

inline double oscillator_energy(double lambda, const PairState& s) { return s.v * s.v + lambda * s.u * s.u; }

}  // namespace chronodg
