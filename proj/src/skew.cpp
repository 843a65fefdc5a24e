#include "dyn/skew.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

namespace dyn {

SkewProduct::SkewProduct(std::vector<SmoothMap> phi_, std::vector<SmoothMap> psi_)
    : d(static_cast<int>(phi_.size())), phi(std::move(phi_)), psi(std::move(psi_))
{
    if (phi.empty())
        throw PreconditionError("a skew product needs at least one fiber map");
    if (!psi.empty() && psi.size() != phi.size())
        throw PreconditionError("expanding part must have one map per symbol");
}

bool SkewProduct::invertible() const
{
    return std::all_of(phi.begin(), phi.end(), [](const SmoothMap& g) { return g.invertible(); });
}

double SkewProduct::bilipschitz() const
{
    double L = 1.0;
    auto take = [&](const SmoothMap& g) {
        const auto& m = g.meta();
        if (!m.lambda || !m.lipschitz)
            throw NoMetadata("fiber map without Lipschitz bounds");
        L = std::max({L, *m.lipschitz, 1.0 / *m.lambda});
    };
    for (const auto& g : phi)
        take(g);
    for (const auto& g : psi)
        take(g);
    return L;
}

IFS SkewProduct::phi_ifs(const Region& region) const
{
    IFS ifs(phi, region);
    ifs.compute_fixed_points();
    return ifs;
}

IFS SkewProduct::psi_inverse_ifs(const Region& region) const
{
    if (psi.empty())
        throw PreconditionError("skew product has no expanding part");
    std::vector<SmoothMap> inv;
    for (const auto& g : psi) {
        if (!g.invertible())
            throw NotInvertible("expanding fiber map without inverse");
        inv.push_back(g.inverse());
    }
    IFS ifs(inv, region);
    ifs.compute_fixed_points();
    return ifs;
}

namespace {

void require_inverses(const SkewProduct& f)
{
    if (!f.invertible())
        throw NotInvertible("backward iteration needs inverse fiber maps");
}

auto vec_ops(const SkewProduct& f)
{
    auto fwd = [&f](int s, const Vec& y) { return f.phi[s](y); };
    auto inv = [&f](int s, const Vec& y) { return f.phi[s].inverse()(y); };
    return std::make_pair(fwd, inv);
}

}  // namespace

SkewPoint iterate_skew(const SkewProduct& f, const SkewPoint& p, long n)
{
    if (n < 0)
        require_inverses(f);
    auto [fwd, inv] = vec_ops(f);
    auto [x, y] = iterate_fibers(p.x, p.y, n, fwd, inv);
    return SkewPoint{x, y};
}

bool LocalUnstable::same_as(const LocalUnstable& o) const
{
    return left == o.left && fiber.size() == o.fiber.size() && fiber == o.fiber;
}

bool LocalUnstable::disjoint_from(const LocalUnstable& o) const
{
    return !same_as(o);
}

std::string LocalUnstable::describe() const
{
    std::ostringstream os;
    os << "z_i = x_i for i <= 0 with (x_0, x_-1, ...) = ";
    for (size_t i = 0; i < left.pre().size(); ++i)
        os << left.pre()[i] << ",";
    os << "[";
    for (size_t i = 0; i < left.per().size(); ++i)
        os << (i ? "," : "") << left.per()[i];
    os << "]; fiber {" << fiber.transpose() << "}";
    return os.str();
}

LocalUnstable local_unstable(const SkewProduct&, const SkewPoint& p)
{
    return LocalUnstable{p.x.left, p.y};
}

UnstableEnumeration enumerate_unstable(const SkewProduct& f, const SkewPoint& p, int depth, double eps)
{
    if (depth > 0)
        require_inverses(f);
    auto [fwd, inv] = vec_ops(f);
    UnstableEnumeration e;
    e.base = p;
    e.depth = depth;
    e.leaves = enumerate_leaves(p.x, p.y, depth, fwd, inv);
    auto& rs = e.projection;
    rs.eps = eps;
    rs.seed = p.y;
    rs.grid = CellGrid(f.fiber(), eps);
    for (const auto& leaf : e.leaves) {
        ++rs.visited;
        if (!f.fiber().contains(leaf.fiber, 1e-12))
            continue;
        rs.cells.try_emplace(rs.grid.key(leaf.fiber), ReachEntry{leaf.sigma, leaf.fiber});
    }
    rs.depth_reached = depth;
    return e;
}

namespace {

void check_fixed(const SkewProduct& f, const SkewPoint& p)
{
    if (!p.x.is_fixed())
        throw NotFixedPoint("base point is not fixed by the shift");
    int a = p.x.at(0);
    if (f.fiber().distance(f.phi[a](p.y), p.y) > 1e-9)
        throw NotFixedPoint("fiber point is not fixed by its fiber map");
}

}  // namespace

ProjectionReport project_unstable_equals_ifs(const SkewProduct& f, const SkewPoint& p, int depth, double eps,
                                             const IFS* orbit_ifs)
{
    check_fixed(f, p);
    auto e = enumerate_unstable(f, p, depth, eps);
    IFS own(f.phi, Region::box(Vec::Zero(0), Vec::Zero(0)));
    const IFS& ifs = orbit_ifs ? *orbit_ifs : own;
    auto rs = forward_orbit(ifs, p.y, depth, eps, std::numeric_limits<std::int64_t>::max(), Dedup::exact);

    std::set<CellKey> a, b;
    for (const auto& [k, _] : e.projection.cells)
        a.insert(k);
    for (const auto& [k, _] : rs.cells)
        b.insert(k);
    ProjectionReport rep;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(rep.only_unstable));
    std::set_difference(b.begin(), b.end(), a.begin(), a.end(), std::back_inserter(rep.only_orbit));
    rep.match = rep.only_unstable.empty() && rep.only_orbit.empty();
    return rep;
}

namespace {

struct LevelPoint {
    Vec y;
    Word sigma;
};

}  // namespace

BlenderReport verify_symbolic_cs_blender(const SkewProduct& f, const Region& D, const BlenderOptions& opt)
{
    if (!(opt.eps > 0))
        throw PreconditionError("strip radius must be positive");
    if (opt.fixed_symbol < 0 || opt.fixed_symbol >= f.d)
        throw PreconditionError("fixed symbol out of range");
    BlenderReport rep;
    IFS ifs = f.phi_ifs(D);
    double step = opt.grid_step > 0 ? opt.grid_step : opt.eps / 4;
    auto cert = covering_report(ifs, D, step);
    rep.covering = cert.covered;
    rep.covering_margin = cert.margin;
    rep.well_distributed = cert.covered && cert.margin > 0 && verify_well_distributed(ifs, D, cert.margin).ok;

    int a = opt.fixed_symbol;
    Vec q = ifs.fixed_points[a].point;
    ShiftPoint p = ShiftPoint::constant(a, f.d);

    // strips W^s_loc(x) x U: the base constraint fixes x_i for i >= 1 only, so a
    // leaf meets the strip exactly when its fiber point lies in U
    std::mt19937_64 rng(opt.seed);
    std::uniform_int_distribution<int> sym(0, f.d - 1);
    int n = D.dim();
    for (int s = 0; s < opt.strip_samples; ++s) {
        StripOutcome out;
        std::vector<int> lw(12), rw(12);
        for (auto& v : lw)
            v = sym(rng);
        for (auto& v : rw)
            v = sym(rng);
        out.strip_base = ShiftPoint{Periodic(lw, {0}), Periodic(rw, {0}), f.d};
        out.radius = opt.eps;
        out.center = Vec(n);
        for (int k = 0; k < n; ++k) {
            double lo = D.lo[k] + opt.eps, hi = D.hi[k] - opt.eps;
            out.center[k] = lo < hi ? std::uniform_real_distribution<>(lo, hi)(rng) : 0.5 * (D.lo[k] + D.hi[k]);
        }
        rep.strips.push_back(std::move(out));
    }

    std::vector<int> pending(rep.strips.size());
    for (size_t i = 0; i < pending.size(); ++i)
        pending[i] = static_cast<int>(i);
    CellGrid fine(f.fiber(), opt.eps / 64);
    std::unordered_set<CellKey, CellKeyHash> seen{fine.key(q)};
    std::vector<LevelPoint> level{LevelPoint{q, {}}};
    for (int depth = 0; depth <= opt.max_depth && !pending.empty() && !level.empty(); ++depth) {
        if (depth > 0) {
            std::vector<LevelPoint> next;
            for (const auto& lp : level) {
                for (int sidx = 0; sidx < f.d; ++sidx) {
                    Vec y = f.phi[sidx](lp.y);
                    if (!D.contains(y, 1e-12) || !seen.insert(fine.key(y)).second)
                        continue;
                    Word w = lp.sigma;
                    w.push_back(sidx);
                    next.push_back(LevelPoint{std::move(y), std::move(w)});
                }
            }
            level = std::move(next);
        }
        std::vector<int> still;
        for (int si : pending) {
            auto& st = rep.strips[si];
            const LevelPoint* hit = nullptr;
            for (const auto& lp : level) {
                if ((lp.y - st.center).cwiseAbs().maxCoeff() < st.radius) {
                    hit = &lp;
                    break;
                }
            }
            if (!hit) {
                still.push_back(si);
                continue;
            }
            st.depth = depth;
            st.sigma = hit->sigma;
            st.witness_fiber = hit->y;
            std::vector<int> prefix{a};
            prefix.insert(prefix.end(), hit->sigma.rbegin(), hit->sigma.rend());
            st.witness_base = ShiftPoint{Periodic::constant(a).prepend(prefix), st.strip_base.right, f.d};
            rep.worst_depth = std::max(rep.worst_depth, depth);
        }
        pending = std::move(still);
    }
    rep.pass = pending.empty();
    return rep;
}

DoubleBlenderReport verify_symbolic_double_blender(const SkewProduct& f, const Region& D1, const Region& D2,
                                                   const BlenderOptions& opt)
{
    if (!f.has_expanding_part())
        throw PreconditionError("double blender needs the expanding part");
    DoubleBlenderReport rep;
    rep.cs = verify_symbolic_cs_blender(f, D1, opt);
    std::vector<SmoothMap> inv;
    for (const auto& g : f.psi) {
        if (!g.invertible())
            throw NotInvertible("expanding fiber map without inverse");
        inv.push_back(g.inverse());
    }
    rep.cu = verify_symbolic_cs_blender(SkewProduct(inv), D2, opt);
    rep.pass = rep.cs.pass && rep.cu.pass;
    return rep;
}

std::vector<Leaf<Rational>> enumerate_unstable_exact(const std::vector<RationalAffine>& maps, const ShiftPoint& x,
                                                     const Rational& y, int depth)
{
    auto fwd = [&maps](int s, const Rational& v) { return maps[s](v); };
    auto inv = [&maps](int s, const Rational& v) { return maps[s].inv(v); };
    return enumerate_leaves(x, y, depth, fwd, inv);
}

std::pair<ShiftPoint, Rational> iterate_skew_exact(const std::vector<RationalAffine>& maps, const ShiftPoint& x,
                                                   const Rational& y, long n)
{
    auto fwd = [&maps](int s, const Rational& v) { return maps[s](v); };
    auto inv = [&maps](int s, const Rational& v) { return maps[s].inv(v); };
    return iterate_fibers(x, y, n, fwd, inv);
}

}  // namespace dyn
