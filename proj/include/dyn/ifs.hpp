#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dyn/core.hpp"
#include "dyn/fixed_point.hpp"

namespace dyn {

using Word = std::vector<int>;

std::string word_to_string(const Word& w);

// Axis-aligned box; a max-metric ball is a box.
struct Region {
    Vec lo, hi;
    bool open = false;

    static Region box(const Vec& lo, const Vec& hi, bool open = false);
    static Region interval(double lo, double hi, bool open = false);
    static Region cube(int n, double radius, bool open = false);  // [-r, r]^n
    static Region ball(const Vec& center, double radius);

    int dim() const { return static_cast<int>(lo.size()); }
    bool contains(const Vec& x, double tol = 0.0) const;
    // min over faces of the signed distance to the boundary (positive inside)
    double inside_distance(const Vec& x) const;
    Vec center() const { return 0.5 * (lo + hi); }
    double diameter() const { return (hi - lo).maxCoeff(); }
    Region intersect(const Region& o) const;
    Region grow(double r) const;
};

struct IFS {
    std::vector<SmoothMap> generators;
    std::vector<FixedPointRecord> fixed_points;
    Region region;

    IFS() = default;
    IFS(std::vector<SmoothMap> gens, Region region);

    int size() const { return static_cast<int>(generators.size()); }
    const StateSpace& space() const { return generators.front().domain(); }
    void compute_fixed_points(double tol = 1e-12);
    std::vector<Vec> fixed_point_coords() const;
    // g_sigma = g_{sigma_k} o ... o g_{sigma_1}: first symbol applied first.
    Vec apply(const Word& w, Vec x) const;
};

using CellKey = std::vector<std::int64_t>;

struct CellKeyHash {
    size_t operator()(const CellKey& k) const;
};

// Uniform grid keyed by floor(x / eps) per factor, wrapping on circles.
class CellGrid {
public:
    CellGrid() = default;
    CellGrid(StateSpace space, double eps);

    CellKey key(const Vec& x) const;
    Vec cell_center(const CellKey& k) const;
    bool in_cell(const Vec& x, const CellKey& k) const;
    double eps() const { return eps_; }
    // total number of cells, or -1 when a factor is unbounded
    std::int64_t total_cells() const;
    const StateSpace& space() const { return space_; }

private:
    StateSpace space_;
    double eps_ = 1.0;
    std::vector<std::int64_t> first_;
    std::vector<std::int64_t> counts_;
};

struct ReachEntry {
    Word word;
    Vec point;
};

struct ReachSet {
    double eps = 0.0;
    Vec seed;
    CellGrid grid;
    std::unordered_map<CellKey, ReachEntry, CellKeyHash> cells;
    std::int64_t visited = 0;
    int depth_reached = 0;
    bool truncated = false;  // budget ran out; witness words may depend on order

    std::vector<CellKey> sorted_keys() const;
    // one line per cell: cell index, representative coordinates, witness word
    std::string to_text() const;
};

enum class Dedup {
    exact,  // expand every distinct point; the cell set is exactly that of all words
    cell    // expand only the first point reaching a sub-cell of size eps / refine
};

// depth < 0 explores until the frontier empties or the budget runs out.
ReachSet forward_orbit(const IFS& ifs, const Vec& seed, int depth, double eps, std::int64_t budget,
                       Dedup mode = Dedup::exact, int refine = 1);

struct CoveringCertificate {
    Region region;
    double grid_step = 0.0;
    std::vector<int> counts;       // cells per axis
    std::vector<int> assignment;   // lowest generator whose image contains the cell, -1 if none
    std::vector<int> best;         // generator with the largest slack
    std::vector<double> best_slack;
    bool covered = false;
    double margin = 0.0;   // min over cells of the best slack
    double d_value = 0.0;  // lower estimate of max{r : B_r(x) inside some image for all x}
    bool well_distributed = false;

    bool valid() const { return covered && margin > 0; }
    int num_cells() const { return static_cast<int>(assignment.size()); }
    int cell_index(const Vec& x) const;
    Vec cell_center(int idx) const;
    double half_width() const { return grid_step / 2; }
};

// Throws NoMetadata when a generator lacks lambda, Uncovered with a witness cell.
CoveringCertificate verify_covering(const IFS& ifs, const Region& region, double grid_step);
// Same computation, but returns an uncovered certificate instead of throwing.
CoveringCertificate covering_report(const IFS& ifs, const Region& region, double grid_step);
double compute_d(const IFS& ifs, const Region& region, double grid_step);

struct WellDistributedResult {
    bool ok = false;
    Vec witness;  // grid center farthest from every fixed point
};

WellDistributedResult verify_well_distributed(const std::vector<Vec>& fixed_points, const Region& region, double d);
WellDistributedResult verify_well_distributed(const IFS& ifs, const Region& region, double d);

// Centers of a minimal cover of [-1,1]^n by max-metric balls of radius r:
// ceil(1/r) per axis, placed symmetrically.
std::vector<Vec> cube_cover_centers(int n, double r);

struct TranslationConstruction {
    IFS ifs;          // phi first, then phi + c_1 .. phi + c_k
    int k1 = 0;       // translations used for covering
    int k = 0;        // total translations, 2 k1
    double cover_radius = 0.0;
    double C_n = 0.0;  // k1 = C_n 2^n lambda^-n
    double scale = 1.0;
};

// phi contracting on the unit ball with lower bound lambda and phi(0) = 0.
// density > 0 sets the covering radius lambda / (2 density).
TranslationConstruction construct_translations(const SmoothMap& phi, double lambda, double eps = 1.0,
                                               double density = 4.0);

Word certify_density(const IFS& ifs, const CoveringCertificate* cert, const Vec& seed, const Vec& target,
                     double radius, int max_steps);
Word backward_itinerary(const IFS& ifs, const CoveringCertificate& cert, const Vec& x, int steps);

struct MinimalityReport {
    std::vector<double> per_seed_coverage;
    double min_coverage = 0.0;
    bool truncated = false;
};

MinimalityReport minimality_experiment(const IFS& ifs, const std::vector<Vec>& seeds, double eps,
                                       std::int64_t budget, int jobs = 1, int refine = 16);

struct RecurrenceReport {
    double recurrent_fraction = 0.0;
    std::vector<bool> recurrent;
};

RecurrenceReport recurrence_experiment(const SmoothMap& f, const std::vector<Vec>& samples, double eps, int horizon);

// Runs fn(i) for i in [0, n) on up to jobs threads.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn);

}  // namespace dyn
