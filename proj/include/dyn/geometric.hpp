#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dyn/horseshoe.hpp"
#include "dyn/ifs.hpp"
#include "dyn/skew.hpp"

namespace dyn {

// F = f x phi^s_i [x phi^u_i] on R_i x fiber. State layout: (s, u) then the fiber;
// with a cu part the fiber coordinates are interleaved (y_1, z_1, y_2, z_2, ...).
struct GeometricBlenderModel {
    HorseshoeBase base;
    std::vector<SmoothMap> fiber_cs;
    std::vector<SmoothMap> fiber_cu;
    Region D;   // cs fiber region
    Region D2;  // cu fiber region (double models)
    bool symplectic = false;
    SmoothMap F;

    int fiber_dim() const { return D.dim(); }
    bool is_double() const { return !fiber_cu.empty(); }
    Vec fiber_y(const Vec& state) const;
    Vec fiber_z(const Vec& state) const;
    Vec pack(const Vec& b, const Vec& y, const Vec& z = Vec()) const;
    // the contracting fiber IFS on D
    IFS cs_ifs() const;
    // the IFS of the inverses of the expanding fibers on D2
    IFS cu_ifs() const;
};

// Checks disjointness, domination (mu_ss below every cs lambda, cu expansion below
// mu_uu) and, with the symplectic flag, fills fiber_cu with the cs inverses when
// empty and checks the pairing. DominationViolated, RectanglesOverlap, NotInvertible.
GeometricBlenderModel build_geometric_model(const HorseshoeBase& base, std::vector<SmoothMap> fibers_cs,
                                            std::vector<SmoothMap> fibers_cu, const Region& D,
                                            const Region& D2 = Region(), bool symplectic = false);

struct GeometricCoveringReport {
    CoveringCertificate cs;
    std::optional<CoveringCertificate> cu;
    bool well_distributed_cs = false;
    bool well_distributed_cu = false;
    bool pass = false;
    std::string reduction;
};

// Covering of every ss-leaf representative R_j x {y} reduces to the fiber covering of D,
// since F(R_i x D) = f(R_i) x phi_i(D) and f(R_i) crosses every R_j. Throws Uncovered.
GeometricCoveringReport verify_covering_geometric(const GeometricBlenderModel& model, double grid_step);

// s-strip: the ss-leaf [0, 1] x {leaf} of rectangle rect times a fiber ball in the cs factor;
// u-strip: the uu-leaf {leaf} x [c_rect, c_rect + h] times a ball in the cu factor.
struct Strip {
    enum class Kind { s, u };
    Kind kind = Kind::s;
    int rect = 0;
    double leaf = 0.0;
    Vec center;
    double radius = 0.0;
};

std::vector<Strip> sample_strips(const GeometricBlenderModel& model, Strip::Kind kind, int count, double radius,
                                 std::uint64_t seed);

struct StripReport {
    bool hit = false;
    Word word;           // g_word(q) lands in the strip's fiber ball
    Vec witness_fiber;
    Vec witness_base;    // a point of the leaf whose backward itinerary realizes the word
    double bound = 0.0;  // analytic depth bound from K and the radius
    std::string method;  // "certificate" or "search"
};

// With a valid certificate: pull the ball back through the certificate until it captures
// a fixed point, then replay the word from the fixed point of `fixed_symbol`.
// Otherwise a forward search restricted to the region, reporting a miss.
// DepthExhausted when a certified pull-back needs more than `depth` steps.
StripReport verify_strip_intersection(const IFS& fibers, const CoveringCertificate& cert, const Strip& strip,
                                      int fixed_symbol, int depth, double eps, const HorseshoeBase* base = nullptr);

struct DoubleStripReport {
    bool pass = false;
    std::vector<StripReport> s_side, u_side;
};

// s-strips against the cs fibers; u-strips against the inverses of the cu fibers.
DoubleStripReport verify_double_blender(const GeometricBlenderModel& model, const std::vector<Strip>& strips_s,
                                        const std::vector<Strip>& strips_u, int depth, double eps, double grid_step);
DoubleStripReport verify_double_blender(const IFS& cs, const IFS& cu, const Region& D, const Region& D2,
                                        const std::vector<Strip>& strips_s, const std::vector<Strip>& strips_u,
                                        int depth, double eps, double grid_step);

// Cone of vectors within `aperture` (radians) of span(basis).
struct Cone {
    std::string name;
    Mat basis;  // orthonormal columns
    double aperture = 0.2;
    bool unstable_type = true;  // DF keeps it invariant; otherwise DF^-1
};

struct ConeField {
    std::vector<Cone> cones;
};

// ss around the base s axis, s around s + cs fiber, u around u + cu fiber, uu around the base u axis.
ConeField axis_cones(const GeometricBlenderModel& model, double aperture);

struct ConeReport {
    bool pass = false;
    double margin = 0.0;  // min over cones, samples and boundary rays of aperture - image angle
    std::string witness_cone;
    Vec witness_point;
    Vec witness_ray;
};

ConeReport verify_cone_invariance(const SmoothMap& F, const ConeField& cones, const std::vector<Vec>& samples,
                                  int rays = 32, std::uint64_t seed = 1);

enum class Verifier { covering, strip_intersection, double_blender };

struct SweepRow {
    double eta = 0;
    int trials = 0;
    int passes = 0;
    double rate() const { return trials ? static_cast<double>(passes) / trials : 0.0; }
};

struct SweepOptions {
    int strips = 100;
    double radius = 1.0 / 32;
    int depth = 16;
    double grid_step = 1.0 / 128;
    int jobs = 1;
};

// Fibers perturbed per generator (perturb_map, seed + trial); the base stays affine.
std::vector<SweepRow> robustness_sweep(const GeometricBlenderModel& model, Verifier verifier,
                                       const std::vector<double>& etas, int trials, std::uint64_t seed,
                                       const SweepOptions& opt = {});

// Distance from y to the depth-n projected unstable set of the fixed point (a^Z, q_a):
// nonincreasing in depth.
double witness_distance(const IFS& fibers, int fixed_symbol, const Vec& y, int depth);

// Whether the uu-manifold of the point meets the base-times-U set: some enumerated leaf
// fiber at the given depth lies in U.
bool uu_leaf_meets(const SkewProduct& f, const SkewPoint& p, const Region& U, int depth);
bool ss_leaf_meets(const SkewProduct& f, const SkewPoint& p, const Region& U, int depth);

}  // namespace dyn
