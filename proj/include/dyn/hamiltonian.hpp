#pragma once

#include <functional>

#include "dyn/core.hpp"
#include "dyn/ifs.hpp"

namespace dyn {

// H with its gradient; coordinates in interleaved pairs (a_1, b_1, ...), and
// a' = -dH/db, b' = dH/da.
struct Hamiltonian {
    std::function<double(const Vec&)> value;
    std::function<Vec(const Vec&)> gradient;

    Vec field(const Vec& x) const;
};

// One implicit midpoint step, solved by Newton with a finite-difference Hessian.
Vec implicit_midpoint_step(const Hamiltonian& h, const Vec& x, double dt, double tol = 1e-14, int max_iter = 30);

// Time-tau map with `steps` fixed midpoint steps; the result is flagged symplectic
// and its inverse is the time -tau map.
SmoothMap hamiltonian_flow(const StateSpace& space, const Hamiltonian& h, double tau, int steps);

// 0 for t <= 0, 1 for t >= 1, degree 7 with three vanishing derivatives at both ends.
double smoothstep7(double t);
double smoothstep7_deriv(double t);

// Symplectic map equal to the translation by (u, v) on U and to the identity
// outside U_outer. The cut-off Hamiltonian is a.v - b.u on the hull of U and
// U + (u, v); the collar up to U_outer is integrated numerically.
SmoothMap hamiltonian_bump_translation(const StateSpace& space, const Vec& u, const Vec& v, const Region& U,
                                       const Region& U_outer, int steps = 256);

}  // namespace dyn
