#pragma once

#include <vector>

#include "dyn/core.hpp"
#include "dyn/ifs.hpp"
#include "dyn/shift.hpp"

namespace dyn {

// Affine horseshoe on [0, 1]^2 with coordinates (s, u): s is contracted by mu_ss,
// u expanded by mu_uu. R_i = [0, 1] x [c_i, c_i + 1/mu_uu] and
// f(s, u) = (mu_ss s + e_i, mu_uu (u - c_i)) on R_i, so f(R_i) = [e_i, e_i + mu_ss] x [0, 1].
struct HorseshoeBase {
    StateSpace ambient;
    double mu_ss = 0.1, mu_uu = 10.0;
    std::vector<Region> rects;
    std::vector<double> c, e;
    SmoothMap f;

    int symbols() const { return static_cast<int>(rects.size()); }
    // rectangle containing b, -1 if none
    int label(const Vec& b, double tol = 1e-12) const;
    // symbol of the image strip containing b, -1 if none
    int image_label(const Vec& b, double tol = 1e-12) const;
    // the point of the maximal invariant set with itinerary x
    Vec point(const ShiftPoint& x) const;
    // itinerary x_{-past} .. x_{future - 1} by iteration; -1 where the orbit leaves the rectangles
    std::vector<int> itinerary(const Vec& b, int past, int future) const;
    // pairwise disjoint rectangles and full crossings, checked on corners
    bool markov() const;
};

// symbols rectangles centered in [0, 1]; RectanglesOverlap when they do not fit.
HorseshoeBase affine_horseshoe(int symbols, double mu_ss, double mu_uu);

}  // namespace dyn
