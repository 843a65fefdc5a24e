#pragma once

#include <functional>
#include <vector>

#include "dyn/core.hpp"
#include "dyn/hamiltonian.hpp"
#include "dyn/ifs.hpp"

namespace dyn {

// exp(-1 / (x (1 - x))) scaled so that eta(1/2) = 1; zero outside (0, 1).
double bump_eta(double x);
double bump_eta_deriv(double x);

// Coordinates (I, theta) on I x T with the circle of period 1; angles enter trig as 2 pi theta.
struct TwistMap {
    std::function<double(double)> omega;
    std::function<double(double)> omega_deriv;
    StateSpace space = StateSpace::annulus();

    SmoothMap map() const;
};

TwistMap twist_map(std::function<double(double)> omega, std::function<double(double)> omega_deriv,
                   const StateSpace& space = StateSpace::annulus());
// omega(I) = a + b I
TwistMap linear_twist(double a, double b, const StateSpace& space = StateSpace::annulus());

// (I, theta) -> (I + eps cos(2 pi (theta + phase)), theta), exact inverse attached.
// DomainOverflow when 2 |eps| is not below the width of the action interval.
SmoothMap conjugating_shear(double eps, const StateSpace& space = StateSpace::annulus(), double phase = 0.0);

// phi o T o phi^-1
SmoothMap conjugate(const SmoothMap& phi, const SmoothMap& T);

// Time-tau map of h_eps on (r, theta) in [0, 2] x T with (r, theta) canonical.
Hamiltonian h_epsilon(double eps);
SmoothMap flow_h_epsilon(double eps, double tau, int steps = 256);

struct Circle {
    int map = 1;       // 1: {I = level}; 2: phi({I = level}) for the conjugating shear
    double level = 0;
};

struct ToriChain {
    double eps = 0;    // shear amplitude of phi
    double phase = 0;  // shear phase
    std::vector<Circle> circles;
    std::vector<Vec> transitions;       // transitions[j] lies on circles[j] and circles[j + 1]
    std::vector<double> crossing_angle;  // angle between the two curves at each transition

    int length() const { return static_cast<int>(circles.size()); }
};

// BFS over the level grid of T1-circles {I = c} and T2-circles phi({I = c}), with
// phi = conjugating_shear(eps, space, phase). NoChain when U and V are not linked.
ToriChain chain_of_tori_search(const TwistMap& T1, double eps, const Region& U, const Region& V, double level_grid,
                               double phase = 0.0);

// Smallest q such that any arc of length `arc` on the circle is hit by every
// rotation orbit by alpha within q steps, from continued-fraction convergents.
long rotation_hit_bound(double alpha, double arc, long max_q = 1000000);

struct ShadowResult {
    Word word;                       // symbols 0 (T1) and 1 (T2)
    std::vector<long> visit_index;   // prefix length at which each transition ball is reached
    Vec end;
};

// ifs generators are {T1, T2}; greedy blocks along the chain, first visit within eps / 2
// of each transition point, then a final block into V.
ShadowResult shadow_chain(const IFS& ifs, const ToriChain& chain, const Vec& start, double eps, const Region& V,
                          long horizon = 200000);

enum class PackMode { paper_m, three };

// {T1} followed by conjugates phi_j T1 phi_j^-1 with phi_j shears of amplitude eps and
// seeded random phases; m = dim + 2 maps in paper mode, 3 otherwise.
std::vector<SmoothMap> minimal_generator_pack(const TwistMap& T1, PackMode mode, double eps = 0.1,
                                              std::uint64_t seed = 1);

}  // namespace dyn
