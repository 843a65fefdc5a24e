#include "dyn/geometric.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_set>

#include "dyn/perturb.hpp"

namespace dyn {

Vec GeometricBlenderModel::fiber_y(const Vec& state) const
{
    int n = fiber_dim();
    Vec y(n);
    for (int k = 0; k < n; ++k)
        y[k] = is_double() ? state[2 + 2 * k] : state[2 + k];
    return y;
}

Vec GeometricBlenderModel::fiber_z(const Vec& state) const
{
    int n = fiber_dim();
    Vec z(n);
    for (int k = 0; k < n; ++k)
        z[k] = state[3 + 2 * k];
    return z;
}

Vec GeometricBlenderModel::pack(const Vec& b, const Vec& y, const Vec& z) const
{
    int n = fiber_dim();
    Vec s(2 + (is_double() ? 2 * n : n));
    s.head(2) = b;
    for (int k = 0; k < n; ++k) {
        if (is_double()) {
            s[2 + 2 * k] = y[k];
            s[3 + 2 * k] = z[k];
        } else {
            s[2 + k] = y[k];
        }
    }
    return s;
}

IFS GeometricBlenderModel::cs_ifs() const
{
    IFS ifs(fiber_cs, D);
    ifs.compute_fixed_points();
    return ifs;
}

IFS GeometricBlenderModel::cu_ifs() const
{
    if (!is_double())
        throw PreconditionError("model has no cu fibers");
    std::vector<SmoothMap> inv;
    for (const auto& g : fiber_cu) {
        if (!g.invertible())
            throw NotInvertible("cu fiber map without inverse");
        inv.push_back(g.inverse());
    }
    IFS ifs(inv, D2);
    ifs.compute_fixed_points();
    return ifs;
}

GeometricBlenderModel build_geometric_model(const HorseshoeBase& base, std::vector<SmoothMap> fibers_cs,
                                            std::vector<SmoothMap> fibers_cu, const Region& D, const Region& D2,
                                            bool symplectic)
{
    int k = base.symbols();
    if (static_cast<int>(fibers_cs.size()) != k)
        throw PreconditionError("one cs fiber map per rectangle");
    if (!base.markov())
        throw RectanglesOverlap("base rectangles overlap or do not cross fully");
    for (const auto& g : fibers_cs) {
        const auto& m = g.meta();
        if (!m.lambda)
            throw NoMetadata("cs fiber map without a contraction lower bound");
        if (!(base.mu_ss < *m.lambda))
            throw DominationViolated("mu_ss must be below every fiber contraction bound");
    }
    if (symplectic) {
        if (std::abs(base.mu_ss * base.mu_uu - 1) > 1e-12)
            throw PreconditionError("symplectic model needs mu_ss mu_uu = 1");
        if (fibers_cu.empty()) {
            for (const auto& g : fibers_cs) {
                if (!g.invertible())
                    throw NotInvertible("symplectic pairing needs invertible cs fibers");
                fibers_cu.push_back(g.inverse());
            }
        }
    }
    if (!fibers_cu.empty()) {
        if (static_cast<int>(fibers_cu.size()) != k)
            throw PreconditionError("one cu fiber map per rectangle");
        for (const auto& g : fibers_cu) {
            const auto& m = g.meta();
            if (!m.lipschitz)
                throw NoMetadata("cu fiber map without a Lipschitz bound");
            if (!(*m.lipschitz < base.mu_uu))
                throw DominationViolated("cu fiber expansion must stay below mu_uu");
        }
        if (D2.dim() != D.dim())
            throw PreconditionError("cu region must match the fiber dimension");
    }

    GeometricBlenderModel M;
    M.base = base;
    M.fiber_cs = std::move(fibers_cs);
    M.fiber_cu = std::move(fibers_cu);
    M.D = D;
    M.D2 = M.fiber_cu.empty() ? Region() : D2;
    M.symplectic = symplectic;

    if (symplectic) {
        std::mt19937_64 rng(3);
        for (int i = 0; i < k; ++i)
            for (int s = 0; s < 32; ++s) {
                Vec y(D.dim());
                for (int q = 0; q < D.dim(); ++q)
                    y[q] = std::uniform_real_distribution<double>(D.lo[q], D.hi[q])(rng);
                Vec back = M.fiber_cu[i](M.fiber_cs[i](y));
                if ((back - y).cwiseAbs().maxCoeff() > 1e-12)
                    throw PreconditionError("paired fiber maps do not compose to the identity");
            }
    }

    // the product map
    int n = D.dim();
    bool dbl = M.is_double();
    std::vector<Factor> fac = base.ambient.factors();
    for (int q = 0; q < n; ++q) {
        fac.push_back(M.fiber_cs[0].domain().factor(q));
        if (dbl)
            fac.push_back(M.fiber_cu[0].domain().factor(q));
    }
    StateSpace space(fac);
    auto H = M.base;
    auto cs = M.fiber_cs;
    auto cu = M.fiber_cu;
    auto split = [n, dbl](const Vec& x, Vec& y, Vec& z) {
        y.resize(n);
        z.resize(dbl ? n : 0);
        for (int q = 0; q < n; ++q) {
            y[q] = dbl ? x[2 + 2 * q] : x[2 + q];
            if (dbl)
                z[q] = x[3 + 2 * q];
        }
    };
    auto label = [H](const Vec& x) {
        int l = H.label(x.head(2), 1e-9);
        if (l >= 0)
            return l;
        // off the rectangles: nearest in u
        int best = 0;
        double bd = INFINITY;
        for (int i = 0; i < H.symbols(); ++i) {
            double d = std::max(H.rects[i].lo[1] - x[1], x[1] - H.rects[i].hi[1]);
            if (d < bd) {
                bd = d;
                best = i;
            }
        }
        return best;
    };
    auto eval = [=](const Vec& x) {
        int i = label(x);
        Vec y, z;
        split(x, y, z);
        Vec out(x.size());
        out.head(2) = H.f(x.head(2));
        Vec fy = cs[i](y);
        for (int q = 0; q < n; ++q) {
            if (dbl) {
                out[2 + 2 * q] = fy[q];
            } else {
                out[2 + q] = fy[q];
            }
        }
        if (dbl) {
            Vec fz = cu[i](z);
            for (int q = 0; q < n; ++q)
                out[3 + 2 * q] = fz[q];
        }
        return out;
    };
    auto jac = [=](const Vec& x) {
        int i = label(x);
        Vec y, z;
        split(x, y, z);
        int N = static_cast<int>(x.size());
        Mat J = Mat::Zero(N, N);
        J.block(0, 0, 2, 2) = H.f.jacobian(x.head(2));
        Mat Jy = cs[i].jacobian(y);
        Mat Jz = dbl ? cu[i].jacobian(z) : Mat();
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                if (dbl) {
                    J(2 + 2 * a, 2 + 2 * b) = Jy(a, b);
                    J(3 + 2 * a, 3 + 2 * b) = Jz(a, b);
                } else {
                    J(2 + a, 2 + b) = Jy(a, b);
                }
            }
        return J;
    };
    MapMeta meta;
    meta.symplectic = symplectic;
    M.F = SmoothMap(space, space, eval, jac, meta);
    return M;
}

GeometricCoveringReport verify_covering_geometric(const GeometricBlenderModel& model, double grid_step)
{
    GeometricCoveringReport rep;
    auto cs = model.cs_ifs();
    rep.cs = verify_covering(cs, model.D, grid_step);
    rep.well_distributed_cs = rep.cs.margin > 0 && verify_well_distributed(cs, model.D, rep.cs.d_value).ok;
    // well-distribution is reported; density only needs the covering with positive margin
    bool ok = rep.cs.valid();
    rep.reduction = "ss-leaf covering of R_j x D reduced to the fiber covering of D (" +
                    std::to_string(model.base.symbols()) + " rectangles, full crossings)";
    if (model.is_double()) {
        auto cu = model.cu_ifs();
        rep.cu = verify_covering(cu, model.D2, grid_step);
        rep.well_distributed_cu = rep.cu->margin > 0 && verify_well_distributed(cu, model.D2, rep.cu->d_value).ok;
        ok = ok && rep.cu->valid();
        rep.reduction += "; uu-leaf covering reduced to the inverse cu fibers on D2";
    }
    rep.pass = ok;
    return rep;
}

std::vector<Strip> sample_strips(const GeometricBlenderModel& model, Strip::Kind kind, int count, double radius,
                                 std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const Region& R = kind == Strip::Kind::s ? model.D : model.D2;
    std::vector<Strip> out;
    for (int t = 0; t < count; ++t) {
        Strip s;
        s.kind = kind;
        s.rect = static_cast<int>(U(rng) * model.base.symbols()) % model.base.symbols();
        const auto& rc = model.base.rects[s.rect];
        s.leaf = kind == Strip::Kind::s ? rc.lo[1] + U(rng) * (rc.hi[1] - rc.lo[1]) : U(rng);
        s.center = Vec(R.dim());
        for (int k = 0; k < R.dim(); ++k) {
            double lo = R.lo[k] + radius, hi = R.hi[k] - radius;
            s.center[k] = lo < hi ? lo + U(rng) * (hi - lo) : 0.5 * (R.lo[k] + R.hi[k]);
        }
        s.radius = radius;
        out.push_back(std::move(s));
    }
    return out;
}

namespace {

double max_lipschitz(const IFS& ifs)
{
    double K = 0;
    for (const auto& g : ifs.generators) {
        if (!g.meta().lipschitz)
            throw NoMetadata("fiber map without a Lipschitz bound");
        K = std::max(K, *g.meta().lipschitz);
    }
    return K;
}

// forward levels from q, restricted to the region and deduplicated on a fine grid
bool search_hit(const IFS& fibers, const Vec& q, const Vec& center, double radius, int depth, double eps, Word* word,
                Vec* point)
{
    struct Node {
        Vec y;
        Word w;
    };
    const auto& space = fibers.space();
    CellGrid fine(space, std::max(eps, 1e-12) / 64);
    std::unordered_set<CellKey, CellKeyHash> seen{fine.key(q)};
    std::vector<Node> level{Node{q, {}}};
    for (int d = 0; d <= depth && !level.empty(); ++d) {
        if (d > 0) {
            std::vector<Node> next;
            for (const auto& nd : level)
                for (int i = 0; i < fibers.size(); ++i) {
                    Vec y = fibers.generators[i](nd.y);
                    if (!fibers.region.contains(y, 1e-12) || !seen.insert(fine.key(y)).second)
                        continue;
                    Word w = nd.w;
                    w.push_back(i);
                    next.push_back(Node{std::move(y), std::move(w)});
                }
            level = std::move(next);
        }
        for (const auto& nd : level)
            if (space.distance(nd.y, center) < radius) {
                *word = nd.w;
                *point = nd.y;
                return true;
            }
    }
    return false;
}

}  // namespace

StripReport verify_strip_intersection(const IFS& fibers, const CoveringCertificate& cert, const Strip& strip,
                                      int fixed_symbol, int depth, double eps, const HorseshoeBase* base)
{
    if (fixed_symbol < 0 || fixed_symbol >= fibers.size())
        throw PreconditionError("fixed symbol out of range");
    if (static_cast<int>(fibers.fixed_points.size()) != fibers.size())
        throw PreconditionError("fiber IFS needs its fixed points");
    StripReport rep;
    const Vec& q = fibers.fixed_points[fixed_symbol].point;
    double K = max_lipschitz(fibers);
    double diam = fibers.region.diameter();
    double steps = K < 1 ? std::log(std::max(diam / strip.radius, 1.0)) / std::log(1 / K) : INFINITY;
    rep.bound = 2 * std::ceil(steps) + 1;

    if (cert.valid()) {
        rep.method = "certificate";
        try {
            rep.word = certify_density(fibers, &cert, q, strip.center, strip.radius, depth);
        } catch (const StepLimit&) {
            throw DepthExhausted("no capture within depth " + std::to_string(depth) + "; analytic bound " +
                                 std::to_string(rep.bound));
        }
        rep.witness_fiber = fibers.apply(rep.word, q);
        rep.hit = fibers.space().distance(rep.witness_fiber, strip.center) < strip.radius;
    } else {
        rep.method = "search";
        rep.hit = search_hit(fibers, q, strip.center, strip.radius, depth, eps, &rep.word, &rep.witness_fiber);
    }
    if (rep.hit && base) {
        // past: the strip's rectangle, then the word read backwards, then the fixed symbol.
        // The past fixes s; every u on the leaf has that backward orbit.
        std::vector<int> prefix{strip.rect};
        prefix.insert(prefix.end(), rep.word.rbegin(), rep.word.rend());
        ShiftPoint x{Periodic::constant(fixed_symbol).prepend(prefix), Periodic::constant(fixed_symbol),
                     base->symbols()};
        rep.witness_base = (Vec(2) << base->point(x)[0], strip.leaf).finished();
    }
    return rep;
}

DoubleStripReport verify_double_blender(const IFS& cs, const IFS& cu, const Region& D, const Region& D2,
                                        const std::vector<Strip>& strips_s, const std::vector<Strip>& strips_u,
                                        int depth, double eps, double grid_step)
{
    DoubleStripReport rep;
    auto cert_s = covering_report(cs, D, grid_step);
    auto cert_u = covering_report(cu, D2, grid_step);
    bool ok = true;
    for (const auto& s : strips_s) {
        rep.s_side.push_back(verify_strip_intersection(cs, cert_s, s, 0, depth, eps));
        ok = ok && rep.s_side.back().hit;
    }
    for (const auto& s : strips_u) {
        rep.u_side.push_back(verify_strip_intersection(cu, cert_u, s, 0, depth, eps));
        ok = ok && rep.u_side.back().hit;
    }
    rep.pass = ok;
    return rep;
}

DoubleStripReport verify_double_blender(const GeometricBlenderModel& model, const std::vector<Strip>& strips_s,
                                        const std::vector<Strip>& strips_u, int depth, double eps, double grid_step)
{
    return verify_double_blender(model.cs_ifs(), model.cu_ifs(), model.D, model.D2, strips_s, strips_u, depth, eps,
                                 grid_step);
}

ConeField axis_cones(const GeometricBlenderModel& model, double aperture)
{
    int n = model.fiber_dim();
    bool dbl = model.is_double();
    int N = 2 + (dbl ? 2 * n : n);
    auto basis = [N](const std::vector<int>& idx) {
        Mat B = Mat::Zero(N, static_cast<int>(idx.size()));
        for (size_t j = 0; j < idx.size(); ++j)
            B(idx[j], static_cast<int>(j)) = 1;
        return B;
    };
    std::vector<int> ys, zs;
    for (int q = 0; q < n; ++q) {
        ys.push_back(dbl ? 2 + 2 * q : 2 + q);
        if (dbl)
            zs.push_back(3 + 2 * q);
    }
    ConeField cf;
    std::vector<int> s_idx{0};
    s_idx.insert(s_idx.end(), ys.begin(), ys.end());
    cf.cones.push_back(Cone{"ss", basis({0}), aperture, false});
    cf.cones.push_back(Cone{"s", basis(s_idx), aperture, false});
    if (dbl) {
        std::vector<int> u_idx{1};
        u_idx.insert(u_idx.end(), zs.begin(), zs.end());
        cf.cones.push_back(Cone{"u", basis(u_idx), aperture, true});
    }
    cf.cones.push_back(Cone{"uu", basis({1}), aperture, true});
    return cf;
}

namespace {

double angle_to(const Mat& B, const Vec& w)
{
    Vec in = B * (B.transpose() * w);
    double a = in.norm(), b = (w - in).norm();
    return std::atan2(b, a);
}

}  // namespace

ConeReport verify_cone_invariance(const SmoothMap& F, const ConeField& cones, const std::vector<Vec>& samples,
                                  int rays, std::uint64_t seed)
{
    ConeReport rep;
    rep.margin = INFINITY;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> G(0.0, 1.0);
    for (const auto& x : samples) {
        Mat J = F.jacobian(x);
        Mat Jinv = J.inverse();
        for (const auto& c : cones.cones) {
            int N = static_cast<int>(c.basis.rows());
            Mat P = c.basis * c.basis.transpose();
            Mat Q = Mat::Identity(N, N) - P;
            const Mat& A = c.unstable_type ? J : Jinv;
            // boundary rays cos(a) e + sin(a) f, e in the cone axis, f orthogonal to it
            std::vector<std::pair<Vec, Vec>> pairs;
            for (int i = 0; i < c.basis.cols(); ++i)
                for (int j = 0; j < N; ++j) {
                    Vec f = Q.col(j);
                    if (f.norm() < 1e-12)
                        continue;
                    pairs.emplace_back(c.basis.col(i), f.normalized());
                    pairs.emplace_back(c.basis.col(i), -f.normalized());
                }
            for (int r = 0; r < rays; ++r) {
                Vec e = c.basis * Vec::NullaryExpr(c.basis.cols(), [&] { return G(rng); });
                Vec f = Q * Vec::NullaryExpr(N, [&] { return G(rng); });
                if (e.norm() < 1e-12 || f.norm() < 1e-12)
                    continue;
                pairs.emplace_back(e.normalized(), f.normalized());
            }
            for (const auto& [e, f] : pairs) {
                Vec w = std::cos(c.aperture) * e + std::sin(c.aperture) * f;
                double m = c.aperture - angle_to(c.basis, A * w);
                if (m < rep.margin) {
                    rep.margin = m;
                    rep.witness_cone = c.name;
                    rep.witness_point = x;
                    rep.witness_ray = w;
                }
            }
        }
    }
    rep.pass = rep.margin > 1e-12;
    return rep;
}

std::vector<SweepRow> robustness_sweep(const GeometricBlenderModel& model, Verifier verifier,
                                       const std::vector<double>& etas, int trials, std::uint64_t seed,
                                       const SweepOptions& opt)
{
    std::vector<SweepRow> rows;
    auto strips_s = sample_strips(model, Strip::Kind::s, opt.strips, opt.radius, seed);
    auto strips_u = model.is_double() ? sample_strips(model, Strip::Kind::u, opt.strips, opt.radius, seed + 1)
                                      : std::vector<Strip>{};
    IFS cs0 = model.cs_ifs();
    std::optional<IFS> cu0;
    if (model.is_double())
        cu0 = model.cu_ifs();
    for (double eta : etas) {
        SweepRow row;
        row.eta = eta;
        row.trials = trials;
        std::vector<char> ok(trials, 0);
        parallel_for(trials, opt.jobs, [&](int t) {
            std::uint64_t s = seed + 1000 * static_cast<std::uint64_t>(t + 1);
            try {
                IFS cs = perturb_ifs(cs0, eta, s);
                switch (verifier) {
                case Verifier::covering: {
                    auto cert = covering_report(cs, model.D, opt.grid_step);
                    ok[t] = cert.valid();
                    break;
                }
                case Verifier::strip_intersection: {
                    auto cert = covering_report(cs, model.D, opt.grid_step);
                    bool all = true;
                    for (const auto& st : strips_s)
                        all = all && verify_strip_intersection(cs, cert, st, 0, opt.depth, opt.radius).hit;
                    ok[t] = all;
                    break;
                }
                case Verifier::double_blender: {
                    if (!cu0)
                        throw PreconditionError("double verifier needs cu fibers");
                    IFS cu = perturb_ifs(*cu0, eta, s + 500);
                    ok[t] = verify_double_blender(cs, cu, model.D, model.D2, strips_s, strips_u, opt.depth,
                                                  opt.radius, opt.grid_step)
                                .pass;
                    break;
                }
                }
            } catch (const DepthExhausted&) {
                ok[t] = 0;
            } catch (const Uncovered&) {
                ok[t] = 0;
            }
        });
        row.passes = static_cast<int>(std::count(ok.begin(), ok.end(), 1));
        rows.push_back(row);
    }
    return rows;
}

double witness_distance(const IFS& fibers, int fixed_symbol, const Vec& y, int depth)
{
    const Vec& q = fibers.fixed_points.at(fixed_symbol).point;
    const auto& space = fibers.space();
    double best = space.distance(q, y);
    std::vector<Vec> level{q};
    for (int d = 1; d <= depth; ++d) {
        std::vector<Vec> next;
        next.reserve(level.size() * fibers.size());
        for (const auto& p : level)
            for (const auto& g : fibers.generators) {
                Vec z = g(p);
                best = std::min(best, space.distance(z, y));
                next.push_back(std::move(z));
            }
        level = std::move(next);
    }
    return best;
}

bool uu_leaf_meets(const SkewProduct& f, const SkewPoint& p, const Region& U, int depth)
{
    auto e = enumerate_unstable(f, p, depth, std::max(U.diameter(), 1e-6));
    for (const auto& leaf : e.leaves)
        if (U.contains(leaf.fiber))
            return true;
    return false;
}

bool ss_leaf_meets(const SkewProduct& f, const SkewPoint& p, const Region& U, int depth)
{
    // F^-1 is the skew product of the inverse fibers over the mirrored sequence x~_i = x_{-i-1}
    std::vector<SmoothMap> inv;
    for (const auto& g : f.phi) {
        if (!g.invertible())
            throw NotInvertible("stable leaves need inverse fibers");
        inv.push_back(g.inverse());
    }
    SkewProduct g(inv);
    std::vector<int> head{p.x.at(-1), p.x.at(0)};
    std::vector<int> rpre = p.x.right.pre();
    head.insert(head.end(), rpre.begin(), rpre.end());
    ShiftPoint xt{Periodic(head, p.x.right.per()), p.x.left.drop(2), p.x.d};
    return uu_leaf_meets(g, SkewPoint{xt, p.y}, U, depth);
}

}  // namespace dyn
