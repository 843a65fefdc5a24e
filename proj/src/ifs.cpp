#include "dyn/ifs.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_set>

namespace dyn {

std::string word_to_string(const Word& w)
{
    std::string s = "(";
    for (size_t i = 0; i < w.size(); ++i) {
        if (i)
            s += ",";
        s += std::to_string(w[i]);
    }
    return s + ")";
}

Region Region::box(const Vec& lo, const Vec& hi, bool open)
{
    Region r;
    r.lo = lo;
    r.hi = hi;
    r.open = open;
    return r;
}

Region Region::interval(double lo, double hi, bool open)
{
    return box(Vec::Constant(1, lo), Vec::Constant(1, hi), open);
}

Region Region::cube(int n, double radius, bool open)
{
    return box(Vec::Constant(n, -radius), Vec::Constant(n, radius), open);
}

Region Region::ball(const Vec& center, double radius)
{
    return box(center.array() - radius, center.array() + radius, true);
}

bool Region::contains(const Vec& x, double tol) const
{
    for (int i = 0; i < dim(); ++i) {
        if (open) {
            if (!(x[i] > lo[i] - tol && x[i] < hi[i] + tol))
                return false;
        } else if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) {
            return false;
        }
    }
    return true;
}

double Region::inside_distance(const Vec& x) const
{
    double m = std::numeric_limits<double>::infinity();
    for (int i = 0; i < dim(); ++i)
        m = std::min({m, x[i] - lo[i], hi[i] - x[i]});
    return m;
}

Region Region::intersect(const Region& o) const
{
    Region r = *this;
    r.lo = lo.cwiseMax(o.lo);
    r.hi = hi.cwiseMin(o.hi);
    return r;
}

Region Region::grow(double r) const
{
    Region g = *this;
    g.lo.array() -= r;
    g.hi.array() += r;
    return g;
}

IFS::IFS(std::vector<SmoothMap> gens, Region reg) : generators(std::move(gens)), region(std::move(reg))
{
    if (generators.empty())
        throw PreconditionError("an IFS needs at least one generator");
}

void IFS::compute_fixed_points(double tol)
{
    fixed_points.clear();
    for (const auto& g : generators)
        fixed_points.push_back(find_fixed_point(g, region.center(), tol, 5000));
}

std::vector<Vec> IFS::fixed_point_coords() const
{
    std::vector<Vec> out;
    for (const auto& r : fixed_points)
        out.push_back(r.point);
    return out;
}

Vec IFS::apply(const Word& w, Vec x) const
{
    for (int s : w)
        x = generators.at(s)(x);
    return x;
}

size_t CellKeyHash::operator()(const CellKey& k) const
{
    size_t h = 1469598103934665603ull;
    for (auto v : k) {
        h ^= static_cast<size_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return h;
}

CellGrid::CellGrid(StateSpace space, double eps) : space_(std::move(space)), eps_(eps)
{
    if (!(eps > 0))
        throw PreconditionError("cell size must be positive");
    for (const auto& f : space_.factors()) {
        if (!f.bounded()) {
            first_.push_back(0);
            counts_.push_back(-1);
        } else if (f.periodic()) {
            first_.push_back(0);
            counts_.push_back(std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(f.width() / eps_ - 1e-9))));
        } else {
            auto a = static_cast<std::int64_t>(std::floor(f.lo / eps_ + 1e-9));
            auto b = static_cast<std::int64_t>(std::ceil(f.hi / eps_ - 1e-9)) - 1;
            first_.push_back(a);
            counts_.push_back(std::max<std::int64_t>(1, b - a + 1));
        }
    }
}

CellKey CellGrid::key(const Vec& x) const
{
    CellKey k(space_.dim());
    for (int i = 0; i < space_.dim(); ++i) {
        auto c = static_cast<std::int64_t>(std::floor(x[i] / eps_));
        if (counts_[i] > 0) {
            if (space_.factor(i).periodic()) {
                c %= counts_[i];
                if (c < 0)
                    c += counts_[i];
            } else {
                c = std::clamp<std::int64_t>(c, first_[i], first_[i] + counts_[i] - 1);
            }
        }
        k[i] = c;
    }
    return k;
}

Vec CellGrid::cell_center(const CellKey& k) const
{
    Vec c(space_.dim());
    for (int i = 0; i < space_.dim(); ++i)
        c[i] = (static_cast<double>(k[i]) + 0.5) * eps_;
    return c;
}

bool CellGrid::in_cell(const Vec& x, const CellKey& k) const
{
    return key(x) == k;
}

std::int64_t CellGrid::total_cells() const
{
    std::int64_t t = 1;
    for (auto c : counts_) {
        if (c < 0)
            return -1;
        t *= c;
    }
    return t;
}

std::vector<CellKey> ReachSet::sorted_keys() const
{
    std::vector<CellKey> keys;
    keys.reserve(cells.size());
    for (const auto& [k, _] : cells)
        keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    return keys;
}

std::string ReachSet::to_text() const
{
    std::ostringstream os;
    os.precision(17);
    for (const auto& k : sorted_keys()) {
        const auto& e = cells.at(k);
        for (size_t i = 0; i < k.size(); ++i)
            os << (i ? " " : "") << k[i];
        os << " :";
        for (int i = 0; i < e.point.size(); ++i)
            os << " " << e.point[i];
        os << " : " << word_to_string(e.word) << "\n";
    }
    return os.str();
}

namespace {

struct PointHash {
    size_t operator()(const std::vector<std::uint64_t>& v) const
    {
        size_t h = 0;
        for (auto b : v)
            h ^= std::hash<std::uint64_t>()(b) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        return h;
    }
};

std::vector<std::uint64_t> point_bits(const Vec& x)
{
    std::vector<std::uint64_t> b(x.size());
    for (int i = 0; i < x.size(); ++i) {
        double v = x[i] == 0.0 ? 0.0 : x[i];
        std::memcpy(&b[i], &v, sizeof v);
    }
    return b;
}

}  // namespace

ReachSet forward_orbit(const IFS& ifs, const Vec& seed, int depth, double eps, std::int64_t budget, Dedup mode,
                       int refine)
{
    const auto& space = ifs.space();
    if (!space.contains(seed))
        throw PointOutsideDomain("seed outside the state space");
    ReachSet rs;
    rs.eps = eps;
    rs.seed = seed;
    rs.grid = CellGrid(space, eps);
    CellGrid fine(space, eps / std::max(1, refine));
    std::unordered_set<CellKey, CellKeyHash> fine_seen;

    std::unordered_set<std::vector<std::uint64_t>, PointHash> seen;
    Vec s = space.reduce(seed);
    rs.cells[rs.grid.key(s)] = ReachEntry{{}, s};
    seen.insert(point_bits(s));
    fine_seen.insert(fine.key(s));

    std::vector<ReachEntry> frontier{ReachEntry{{}, s}};
    for (int level = 1; (depth < 0 || level <= depth) && !frontier.empty(); ++level) {
        std::vector<ReachEntry> next;
        for (const auto& e : frontier) {
            for (int i = 0; i < ifs.size(); ++i) {
                if (rs.visited >= budget) {
                    rs.truncated = true;
                    return rs;
                }
                ++rs.visited;
                Vec y = ifs.generators[i](e.point);
                if (!space.contains(y, 1e-12))
                    continue;
                auto key = rs.grid.key(y);
                bool new_cell = !rs.cells.count(key);
                if (mode == Dedup::cell && !fine_seen.insert(fine.key(y)).second)
                    continue;
                if (mode == Dedup::exact && !seen.insert(point_bits(y)).second)
                    continue;
                Word w = e.word;
                w.push_back(i);
                if (new_cell)
                    rs.cells[key] = ReachEntry{w, y};
                next.push_back(ReachEntry{std::move(w), std::move(y)});
            }
        }
        frontier = std::move(next);
        rs.depth_reached = level;
    }
    return rs;
}

int CoveringCertificate::cell_index(const Vec& x) const
{
    int idx = 0, stride = 1;
    for (int k = 0; k < region.dim(); ++k) {
        int c = static_cast<int>(std::floor((x[k] - region.lo[k]) / grid_step));
        c = std::clamp(c, 0, counts[k] - 1);
        idx += c * stride;
        stride *= counts[k];
    }
    return idx;
}

Vec CoveringCertificate::cell_center(int idx) const
{
    Vec c(region.dim());
    for (int k = 0; k < region.dim(); ++k) {
        int i = idx % counts[k];
        idx /= counts[k];
        double a = region.lo[k] + i * grid_step;
        double b = std::min(region.hi[k], a + grid_step);
        c[k] = 0.5 * (a + b);
    }
    return c;
}

namespace {

constexpr double kClosedTol = 1e-13;
constexpr double kSlackFloor = 1e-11;

// x -> A x + b stored as inverse data for allocation-free vertex preimages.
struct AffineInverse {
    int n = 0;
    std::vector<double> ainv;  // row-major
    std::vector<double> b;
};

class SlackEval {
public:
    SlackEval(const IFS& ifs, const Region& region) : ifs_(ifs), region_(region)
    {
        clip_ = region.open ? region.grow(-1e-9 * region.diameter()) : region;
        int n = region.dim();
        for (const auto& g : ifs.generators) {
            if (!g.meta().lambda)
                throw NoMetadata("generator without a lower Lipschitz bound");
            AffineInverse a;
            if (g.meta().affine) {
                Vec zero = Vec::Zero(n);
                Mat A = g.jacobian(zero);
                Eigen::FullPivLU<Mat> lu(A);
                if (lu.isInvertible()) {
                    a.n = n;
                    Mat Ai = lu.inverse();
                    for (int r = 0; r < n; ++r)
                        for (int c = 0; c < n; ++c)
                            a.ainv.push_back(Ai(r, c));
                    Vec b = g(zero);
                    a.b.assign(b.data(), b.data() + n);
                }
            }
            aff_.push_back(std::move(a));
        }
    }

    bool affine(int i) const { return aff_[i].n > 0; }
    double lambda(int i) const { return *ifs_.generators[i].meta().lambda; }

    // Min over vertices of clip(cell + r) of the inside distance of the preimage;
    // stops early once it drops below stop.
    double pre_margin(int i, const Region& cell, double r, double stop = -INFINITY) const
    {
        const auto& a = aff_[i];
        int n = a.n;
        double lo[8], hi[8], v[8];
        for (int k = 0; k < n; ++k) {
            lo[k] = std::max(cell.lo[k] - r, clip_.lo[k]) - a.b[k];
            hi[k] = std::min(cell.hi[k] + r, clip_.hi[k]) - a.b[k];
        }
        double m = INFINITY;
        for (int mask = 0; mask < (1 << n); ++mask) {
            for (int k = 0; k < n; ++k)
                v[k] = (mask >> k & 1) ? hi[k] : lo[k];
            for (int row = 0; row < n; ++row) {
                double p = 0;
                for (int c = 0; c < n; ++c)
                    p += a.ainv[row * n + c] * v[c];
                m = std::min({m, p - region_.lo[row], region_.hi[row] - p});
            }
            if (m < stop)
                return m;
        }
        return m;
    }

    bool accept(double m) const { return region_.open ? m > kClosedTol : m >= -kClosedTol; }
    double reject_below() const { return region_.open ? kClosedTol : -kClosedTol; }

    bool inside_at(int i, const Region& cell, double r) const
    {
        return accept(pre_margin(i, cell, r, reject_below()));
    }

    // Largest r >= from with clip(cell + r) inside the image, assuming it holds at from.
    double grow_slack(int i, const Region& cell, double from) const
    {
        double lo = from, hi = region_.diameter();
        if (inside_at(i, cell, hi))
            return hi;
        while (hi - lo > 1e-12) {
            double mid = 0.5 * (lo + hi);
            if (inside_at(i, cell, mid))
                lo = mid;
            else
                hi = mid;
        }
        return lo > kSlackFloor ? lo : 0.0;
    }

    // Expansion bound around the preimage of the cell center, for non-affine maps.
    double center_slack(int i, const Region& cell) const
    {
        const auto& g = ifs_.generators[i];
        double w = 0.5 * (cell.hi - cell.lo).maxCoeff();
        Vec c = cell.center();
        Vec p = g.preimage(c, c);
        return lambda(i) * region_.inside_distance(p) - w;
    }

private:
    const IFS& ifs_;
    const Region& region_;
    Region clip_;
    std::vector<AffineInverse> aff_;
};

CoveringCertificate build_certificate(const IFS& ifs, const Region& region, double grid_step, int* first_bad)
{
    if (!(grid_step > 0))
        throw PreconditionError("grid step must be positive");
    int n = region.dim();
    if (n > 8)
        throw PreconditionError("covering certificates support up to 8 dimensions");
    SlackEval eval(ifs, region);
    CoveringCertificate cert;
    cert.region = region;
    cert.grid_step = grid_step;
    int total = 1;
    for (int k = 0; k < n; ++k) {
        int c = std::max(1, static_cast<int>(std::ceil((region.hi[k] - region.lo[k]) / grid_step - 1e-9)));
        cert.counts.push_back(c);
        total *= c;
    }
    cert.assignment.assign(total, -1);
    cert.best.assign(total, -1);
    cert.best_slack.assign(total, -region.diameter());
    *first_bad = -1;

    // Candidate generators per cell: cells inside the bounding box of the image of the region.
    std::vector<std::vector<int>> cand(total);
    for (int i = 0; i < ifs.size(); ++i) {
        const auto& g = ifs.generators[i];
        Vec lo, hi;
        if (g.meta().affine) {
            Vec v(n);
            for (int mask = 0; mask < (1 << n); ++mask) {
                for (int k = 0; k < n; ++k)
                    v[k] = (mask >> k & 1) ? region.hi[k] : region.lo[k];
                Vec y = g(v);
                lo = mask ? lo.cwiseMin(y) : y;
                hi = mask ? hi.cwiseMax(y) : y;
            }
        } else if (g.meta().lipschitz) {
            Vec y = g(region.center());
            double reach = *g.meta().lipschitz * region.diameter() / 2;
            lo = y.array() - reach;
            hi = y.array() + reach;
        } else {
            lo = region.lo;
            hi = region.hi;
        }
        std::vector<int> a(n), b(n);
        bool empty = false;
        for (int k = 0; k < n; ++k) {
            double tol = 1e-9 * grid_step;
            a[k] = std::max(0, static_cast<int>(std::floor((lo[k] - region.lo[k]) / grid_step + tol)));
            b[k] = std::min(cert.counts[k] - 1, static_cast<int>(std::ceil((hi[k] - region.lo[k]) / grid_step - tol)) - 1);
            empty = empty || a[k] > b[k];
        }
        if (empty)
            continue;
        std::vector<int> cur = a;
        while (true) {
            int idx = 0, stride = 1;
            for (int k = 0; k < n; ++k) {
                idx += cur[k] * stride;
                stride *= cert.counts[k];
            }
            cand[idx].push_back(i);
            int k = 0;
            while (k < n && cur[k] == b[k]) {
                cur[k] = a[k];
                ++k;
            }
            if (k == n)
                break;
            ++cur[k];
        }
    }

    for (int idx = 0; idx < total; ++idx) {
        Region cell = region;
        int rem = idx;
        for (int k = 0; k < n; ++k) {
            int i = rem % cert.counts[k];
            rem /= cert.counts[k];
            cell.lo[k] = region.lo[k] + i * grid_step;
            cell.hi[k] = std::min(region.hi[k], cell.lo[k] + grid_step);
        }
        double best_in = -INFINITY, best_out = -INFINITY;
        int i_in = -1, i_out = -1;
        int& assign = cert.assignment[idx];
        for (int i : cand[idx]) {
            if (!eval.affine(i)) {
                double s = eval.center_slack(i, cell);
                if (eval.accept(s)) {
                    if (assign < 0)
                        assign = i;
                    if (s > best_in) {
                        best_in = s;
                        i_in = i;
                    }
                } else if (s > best_out) {
                    best_out = s;
                    i_out = i;
                }
                continue;
            }
            if (best_in > 0 && assign >= 0 && !eval.inside_at(i, cell, best_in))
                continue;
            double m0 = eval.pre_margin(i, cell, 0.0);
            if (!eval.accept(m0)) {
                double s = std::min(eval.lambda(i) * m0, 0.0);
                if (s > best_out) {
                    best_out = s;
                    i_out = i;
                }
                continue;
            }
            if (assign < 0)
                assign = i;
            double from = std::max(0.0, best_in);
            if (best_in > 0 && !eval.inside_at(i, cell, best_in))
                continue;
            double s = eval.grow_slack(i, cell, from);
            if (s > best_in || i_in < 0) {
                best_in = s;
                i_in = i;
            }
        }
        if (i_in >= 0) {
            cert.best[idx] = i_in;
            cert.best_slack[idx] = best_in;
        } else if (i_out >= 0) {
            cert.best[idx] = i_out;
            cert.best_slack[idx] = best_out;
        }
        if (assign < 0 && *first_bad < 0)
            *first_bad = idx;
    }
    cert.covered = (*first_bad < 0);
    cert.margin = *std::min_element(cert.best_slack.begin(), cert.best_slack.end());
    cert.d_value = cert.covered ? cert.margin : 0.0;
    return cert;
}

}  // namespace

CoveringCertificate covering_report(const IFS& ifs, const Region& region, double grid_step)
{
    int bad;
    return build_certificate(ifs, region, grid_step, &bad);
}

CoveringCertificate verify_covering(const IFS& ifs, const Region& region, double grid_step)
{
    int bad;
    auto cert = build_certificate(ifs, region, grid_step, &bad);
    if (bad >= 0) {
        Vec c = cert.cell_center(bad);
        std::ostringstream os;
        os << "cell centered at (" << c.transpose() << ") is in no generator image";
        throw Uncovered(os.str(), c[0]);
    }
    return cert;
}

double compute_d(const IFS& ifs, const Region& region, double grid_step)
{
    return std::max(0.0, verify_covering(ifs, region, grid_step).margin);
}

WellDistributedResult verify_well_distributed(const std::vector<Vec>& fixed_points, const Region& region, double d)
{
    if (!(d > 0))
        throw PreconditionError("well-distributed check needs d > 0");
    int n = region.dim();
    // Every center x is within d/16 of a grid point g, and B(g, d/2 - d/16) lies in B(x, d/2).
    double h = d / 8;
    double rad = d / 2 - d / 16;
    std::vector<int> counts(n);
    long total = 1;
    for (int k = 0; k < n; ++k) {
        counts[k] = static_cast<int>(std::ceil((region.hi[k] - region.lo[k]) / h - 1e-9)) + 1;
        total *= counts[k];
    }
    std::unordered_map<CellKey, std::vector<int>, CellKeyHash> bins;
    auto bin_of = [&](const Vec& x) {
        CellKey k(n);
        for (int j = 0; j < n; ++j)
            k[j] = static_cast<std::int64_t>(std::floor(x[j] / rad));
        return k;
    };
    for (int i = 0; i < static_cast<int>(fixed_points.size()); ++i)
        bins[bin_of(fixed_points[i])].push_back(i);

    WellDistributedResult res;
    res.ok = true;
    double worst = -1.0;
    int failures = 0;
    Vec x(n);
    for (long idx = 0; idx < total; ++idx) {
        long rem = idx;
        for (int k = 0; k < n; ++k) {
            x[k] = std::min(region.hi[k], region.lo[k] + (rem % counts[k]) * h);
            rem /= counts[k];
        }
        CellKey base = bin_of(x), nb = base;
        bool hit = false;
        int neighbours = 1;
        for (int k = 0; k < n; ++k)
            neighbours *= 3;
        for (int m = 0; m < neighbours && !hit; ++m) {
            int r = m;
            for (int k = 0; k < n; ++k) {
                nb[k] = base[k] + (r % 3) - 1;
                r /= 3;
            }
            auto it = bins.find(nb);
            if (it == bins.end())
                continue;
            for (int i : it->second) {
                if ((fixed_points[i] - x).cwiseAbs().maxCoeff() < rad) {
                    hit = true;
                    break;
                }
            }
        }
        if (!hit) {
            res.ok = false;
            double nearest = std::numeric_limits<double>::infinity();
            for (const auto& z : fixed_points)
                nearest = std::min(nearest, (z - x).cwiseAbs().maxCoeff());
            if (nearest > worst) {
                worst = nearest;
                res.witness = x;
            }
            if (++failures > 1000)
                break;
        }
    }
    return res;
}

WellDistributedResult verify_well_distributed(const IFS& ifs, const Region& region, double d)
{
    if (ifs.fixed_points.size() != ifs.generators.size())
        throw PreconditionError("fixed points not computed");
    return verify_well_distributed(ifs.fixed_point_coords(), region, d);
}

std::vector<Vec> cube_cover_centers(int n, double r)
{
    if (!(r > 0) || n < 1)
        throw PreconditionError("cover radius must be positive");
    int m = static_cast<int>(std::ceil(1.0 / r - 1e-12));
    std::vector<double> axis(m);
    double span = 2.0 * r * m;
    double start = -span / 2 + r;
    for (int j = 0; j < m; ++j)
        axis[j] = start + 2.0 * r * j;
    long total = 1;
    for (int k = 0; k < n; ++k)
        total *= m;
    std::vector<Vec> out;
    out.reserve(total);
    for (long idx = 0; idx < total; ++idx) {
        Vec c(n);
        long rem = idx;
        for (int k = 0; k < n; ++k) {
            c[k] = axis[rem % m];
            rem /= m;
        }
        out.push_back(c);
    }
    return out;
}

TranslationConstruction construct_translations(const SmoothMap& phi, double lambda, double eps, double density)
{
    if (!(lambda > 0 && lambda < 1))
        throw LambdaOutOfRange("lambda must lie in (0, 1)");
    if (!(eps > 0) || !(density > 0))
        throw PreconditionError("scale and density must be positive");
    const auto& space = phi.domain();
    int n = space.dim();
    Vec zero = Vec::Zero(n);
    if (phi(zero).cwiseAbs().maxCoeff() > 1e-12)
        throw PreconditionError("phi(0) must be 0");
    double K = phi.meta().lipschitz.value_or(1.0);

    TranslationConstruction tc;
    tc.scale = eps;
    tc.cover_radius = lambda / (2 * density);
    auto centers = cube_cover_centers(n, tc.cover_radius);
    tc.k1 = static_cast<int>(centers.size());
    tc.k = 2 * tc.k1;
    tc.C_n = tc.k1 * std::pow(lambda / 2, n);

    std::vector<Vec> shifts = centers;
    for (const auto& z : centers)
        shifts.push_back(z - phi(z));

    std::vector<Factor> fs;
    for (const auto& f : space.factors())
        fs.push_back(f.periodic() ? f : Factor::interval(f.lo * eps, f.hi * eps));
    StateSpace scaled(fs);

    Region region = Region::cube(n, eps);
    auto image_bound = [&](const Vec& c) {
        if (phi.meta().affine) {
            double m = 0;
            Vec v(n);
            for (int mask = 0; mask < (1 << n); ++mask) {
                for (int k = 0; k < n; ++k)
                    v[k] = (mask >> k & 1) ? 1.0 : -1.0;
                m = std::max(m, (phi(v) + c).cwiseAbs().maxCoeff());
            }
            return m;
        }
        return K + c.cwiseAbs().maxCoeff();
    };

    std::vector<SmoothMap> gens{};
    std::vector<Vec> all_shifts{Vec::Zero(n)};
    all_shifts.insert(all_shifts.end(), shifts.begin(), shifts.end());
    for (const auto& c : all_shifts) {
        double b = image_bound(c);
        for (int k = 0; k < n; ++k) {
            const auto& f = space.factor(k);
            if (!f.periodic() && (b > f.hi + 1e-12 || -b < f.lo - 1e-12))
                throw DomainOverflow("generator image leaves the domain of phi");
        }
        MapMeta meta = phi.meta();
        meta.lambda = lambda;
        meta.lipschitz = K;
        SmoothMap g(
            scaled, scaled, [phi, c, eps](const Vec& y) { return Vec(eps * (phi(y / eps) + c)); },
            [phi, eps](const Vec& y) { return phi.jacobian(y / eps); }, meta);
        if (phi.invertible()) {
            auto pinv = phi.inverse();
            MapMeta mi = pinv.meta();
            mi.lambda = 1.0 / K;
            mi.lipschitz = 1.0 / lambda;
            SmoothMap gi(
                scaled, scaled, [pinv, c, eps](const Vec& y) { return Vec(eps * pinv(y / eps - c)); },
                [pinv, c, eps](const Vec& y) { return pinv.jacobian(y / eps - c); }, mi);
            g = g.with_inverse(gi);
        }
        gens.push_back(g);
    }
    tc.ifs = IFS(std::move(gens), region);
    tc.ifs.compute_fixed_points();
    return tc;
}

Word certify_density(const IFS& ifs, const CoveringCertificate* cert, const Vec& seed, const Vec& target,
                     double radius, int max_steps)
{
    if (!cert || !cert->covered)
        throw PreconditionError("density certification needs a covering certificate");
    if (!(radius > 0))
        throw PreconditionError("target radius must be positive");
    const auto& space = ifs.space();
    auto fps = ifs.fixed_point_coords();

    std::vector<double> K(ifs.size());
    for (int i = 0; i < ifs.size(); ++i) {
        const auto& m = ifs.generators[i].meta();
        if (!m.lipschitz)
            throw NoMetadata("generator without a Lipschitz bound");
        K[i] = *m.lipschitz;
    }

    Word pulls;
    Vec y = target;
    double r = radius;
    Word best;
    size_t best_len = std::numeric_limits<size_t>::max();
    for (int m = 0;; ++m) {
        auto candidate = [&](int j, int reps) {
            Word w(reps, j);
            w.insert(w.end(), pulls.rbegin(), pulls.rend());
            if (w.size() < best_len) {
                best_len = w.size();
                best = std::move(w);
            }
        };
        if (space.distance(seed, y) < r * (1 - 1e-9))
            candidate(0, 0);
        for (int j = 0; j < static_cast<int>(fps.size()) && !fps.empty(); ++j) {
            if (K[j] >= 1)
                continue;
            double room = (r - space.distance(fps[j], y)) * (1 - 1e-9);
            if (room <= 0)
                continue;
            double dist = space.distance(seed, fps[j]);
            int reps = 0;
            while (dist >= room && reps < 10000) {
                dist *= K[j];
                ++reps;
            }
            if (dist < room)
                candidate(j, reps);
        }
        if (pulls.size() + 1 >= best_len || m >= max_steps)
            break;
        int idx = cert->cell_index(y);
        int i = cert->best[idx];
        if (i < 0 || cert->best_slack[idx] < 0)
            throw Uncovered("pullback left the covered region", y[0]);
        y = ifs.generators[i].preimage(y, y);
        r /= K[i];
        pulls.push_back(i);
    }
    if (best_len == std::numeric_limits<size_t>::max())
        throw StepLimit("no word found within the step limit");
    return best;
}

Word backward_itinerary(const IFS& ifs, const CoveringCertificate& cert, const Vec& x, int steps)
{
    Word w;
    Vec y = x;
    for (int s = 0; s < steps; ++s) {
        int i = cert.assignment[cert.cell_index(y)];
        if (i < 0)
            throw Uncovered("point has no assigned generator", y[0]);
        y = ifs.generators[i].preimage(y, y);
        w.push_back(i);
    }
    return w;
}

MinimalityReport minimality_experiment(const IFS& ifs, const std::vector<Vec>& seeds, double eps,
                                       std::int64_t budget, int jobs, int refine)
{
    MinimalityReport rep;
    rep.per_seed_coverage.assign(seeds.size(), 0.0);
    std::vector<char> trunc(seeds.size(), 0);
    CellGrid grid(ifs.space(), eps);
    auto total = grid.total_cells();
    if (total <= 0)
        throw PreconditionError("coverage needs a bounded state space");
    parallel_for(static_cast<int>(seeds.size()), jobs, [&](int i) {
        auto rs = forward_orbit(ifs, seeds[i], -1, eps, budget, Dedup::cell, refine);
        rep.per_seed_coverage[i] = static_cast<double>(rs.cells.size()) / static_cast<double>(total);
        trunc[i] = rs.truncated;
    });
    rep.min_coverage = seeds.empty() ? 0.0
                                     : *std::min_element(rep.per_seed_coverage.begin(), rep.per_seed_coverage.end());
    rep.truncated = std::any_of(trunc.begin(), trunc.end(), [](char c) { return c != 0; });
    return rep;
}

RecurrenceReport recurrence_experiment(const SmoothMap& f, const std::vector<Vec>& samples, double eps, int horizon)
{
    if (!f.invertible())
        throw NotInvertible("backward recurrence needs an inverse");
    auto finv = f.inverse();
    const auto& space = f.domain();
    RecurrenceReport rep;
    int hits = 0;
    for (const auto& x : samples) {
        auto returns = [&](const SmoothMap& g) {
            Vec y = x;
            for (int t = 0; t < horizon; ++t) {
                y = g(y);
                if (space.distance(x, y) < eps)
                    return true;
            }
            return false;
        };
        bool ok = returns(f) && returns(finv);
        rep.recurrent.push_back(ok);
        hits += ok;
    }
    rep.recurrent_fraction = samples.empty() ? 0.0 : static_cast<double>(hits) / samples.size();
    return rep;
}

void parallel_for(int n, int jobs, const std::function<void(int)>& fn)
{
    jobs = std::max(1, std::min(jobs, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex mu;
    for (int t = 0; t < jobs; ++t) {
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(mu);
                    if (!err)
                        err = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool)
        th.join();
    if (err)
        std::rethrow_exception(err);
}

}  // namespace dyn
