#pragma once

#include <cstdint>

#include "dyn/core.hpp"
#include "dyn/ifs.hpp"

namespace dyn {

// G + eta P with |P| <= 1 and |DP| <= 1 in the max norm, P a sum of seeded
// trigonometric modes. Symplectic maps are instead post-composed with paired
// shears (a + s1(b), b) then (a, b + s2(a)), scaled so that the value moves by at
// most eta and the Jacobian by at most eta times the Lipschitz bound of G.
// Metadata: K + eta, lambda - eta; eta = 0 returns G itself.
SmoothMap perturb_map(const SmoothMap& G, double eta, std::uint64_t seed);

// Each generator perturbed with seed + index; fixed points recomputed.
IFS perturb_ifs(const IFS& ifs, double eta, std::uint64_t seed);

}  // namespace dyn
