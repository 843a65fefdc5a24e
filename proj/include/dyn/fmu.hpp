#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dyn/geometric.hpp"
#include "dyn/horseshoe.hpp"
#include "dyn/ifs.hpp"

namespace dyn {

// Cylinder blocks A_ij = {x_0 = i, x_1 = j} of the horseshoe base and the roles
// the perturbation assigns to them. Symbols 1..l carry row translations, l+1..2l
// column translations, J1 = {0, 2l+1, 2l+2} and J2 = {0, 2l+3, 2l+4} the
// integrable perturbations.
struct BlockSchedule {
    int symbols = 0;
    int l = 0;
    std::vector<int> J1, J2;

    bool translation_row(int i) const { return 1 <= i && i <= l; }
    bool translation_col(int j) const { return l + 1 <= j && j <= 2 * l; }
    // 1 or 2 when block (i, j) carries the forward pack map, 0 otherwise
    int pack_row(int i, int j) const;
    // 1 or 2 when block (i, j) carries the backward pack map, 0 otherwise
    int pack_col(int i, int j) const;
    std::string role(int i, int j) const;

    Region block(const HorseshoeBase& base, int i, int j) const;
    // block grown by a third of the gap to its neighbours
    Region enlarged(const HorseshoeBase& base, int i, int j) const;
    // enlarged blocks pairwise disjoint and each block compactly inside its enlargement
    bool consistent(const HorseshoeBase& base) const;
};

// ScheduleTooSmall unless symbols - 1 >= 2l + 4 (2l + 2 dim(N) + 2 with all_generators).
BlockSchedule make_schedule(int symbols, int l, bool all_generators = false, int fiber_dim = 2);

// (1 - delta)^k > 1/2, else InfeasibleParameters naming the largest admissible k.
void check_weak_power(double delta, int k);

struct FMuParams {
    double zeta = 0.1;          // eps(mu) = zeta mu
    std::vector<Vec> c;         // row translations, one per symbol 1..l
    std::vector<Vec> c_col;     // column translations, one per symbol l+1..2l
    Region U, U_outer;          // support of the bump translations in N
    double pack_amplitude = 1;  // shear amplitude of the integrable pair at eps(mu) = 1
};

struct FMu {
    HorseshoeBase base;
    SmoothMap f2;
    BlockSchedule schedule;
    FMuParams params;
    double mu = 0.0;
    double eps_mu = 0.0;
    std::vector<SmoothMap> phi;     // the two pack maps
    std::vector<SmoothMap> row_psi;  // per symbol: translation applied after f2 (identity if none)
    std::vector<SmoothMap> col_phi;  // per symbol: translation applied before f2 (identity if none)
    SmoothMap F;

    Region base_region() const { return Region::box(Vec::Zero(2), Vec::Ones(2)); }
    // fiber map on block (i, j)
    Vec fiber(int i, int j, const Vec& y) const;
    Vec fiber_inverse(int i, int j, const Vec& y) const;
    // T1 = f2, T2 = phi_1 o f2, T3 = phi_2 o f2
    std::vector<SmoothMap> forward_pack() const;
    // inverses of f2, f2 o phi_1, f2 o phi_2
    std::vector<SmoothMap> backward_pack() const;
};

// F_mu = Psi o (f1 x f2) o Phi^-1 with block-supported fiber perturbations. `pack`
// replaces the default integrable pair (shears of amplitude eps(mu) pack_amplitude).
FMu build_F_mu(const HorseshoeBase& f1, const SmoothMap& f2, const BlockSchedule& schedule, double mu,
               const FMuParams& params, std::optional<std::vector<SmoothMap>> pack = std::nullopt);

// The affine model of the blender blocks: three rectangles, fibers 0.6 y + {0, 0.4, -0.4}
// on [-1, 1], cu fibers their inverses.
GeometricBlenderModel desk_blender_model();

struct DeskModel {
    FMu fmu;
    GeometricBlenderModel blender;
    Region fiber_box;  // fiber part of the blender region in N
};

// Twist fiber on the annulus; translations alternate between the two axes.
DeskModel desk_model(double mu, double zeta = 0.1, int symbols = 9, int l = 2);

struct Connection {
    bool found = false;
    Word word;          // pack indices after the forced first T1 step
    Vec base;           // base point on the local strong leaf of the fixed point
    Vec landing;        // state after replay on F_mu
    double segment = 0;  // diameter of the strong segment joining (p, q) to (base, q)
};

struct MinimalitySample {
    Vec q;
    Connection unstable, stable;
};

struct AlmostMinimalityReport {
    double connected_fraction = 0.0;
    int depth = 0;
    double L = 0.0;
    std::vector<MinimalitySample> samples;
};

// Forward: a point (x, q) on the uu-leaf of (p, q), x = (..0; 0, a_1, .., a_m, 0, ..)
// with a_k in J1, whose F_mu orbit lands in the blender region; symmetric backward
// with J2. Searches pack words up to `depth`, replays each on F_mu and demands the
// joining segment has diameter at most L. PreconditionError without a blender pass.
AlmostMinimalityReport almost_minimality_experiment(const FMu& F, const GeometricCoveringReport& blender_report,
                                                    const Region& fiber_box, const std::vector<Vec>& fiber_samples,
                                                    double L, int depth, double eps);

Connection connect_unstable(const FMu& F, const Region& fiber_box, const Vec& q, int depth, double eps);
Connection connect_stable(const FMu& F, const Region& fiber_box, const Vec& q, int depth, double eps);

}  // namespace dyn
