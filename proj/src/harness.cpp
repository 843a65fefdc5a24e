#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "dyn/fmu.hpp"
#include "dyn/geometric.hpp"
#include "dyn/harness.hpp"
#include "dyn/integrable.hpp"
#include "dyn/perturb.hpp"
#include "dyn/skew.hpp"

namespace dyn {

namespace {

using json = nlohmann::json;

constexpr double kTwoPi = 6.283185307179586;

Vec v1(double a) { return Vec::Constant(1, a); }
Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

std::string num(double x)
{
    std::ostringstream s;
    s << std::setprecision(17) << x;
    return s.str();
}

std::string coords(const Vec& x)
{
    std::string out;
    for (int i = 0; i < x.size(); ++i)
        out += (i ? " " : "") + num(x[i]);
    return out;
}

void check(Report& r, const std::string& name, bool pass, const std::string& detail)
{
    r.checks[name] = CheckOutcome{pass, detail};
}

// FNV-1a over the sorted cell keys
std::string cell_digest(const ReachSet& rs)
{
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& k : rs.sorted_keys())
        for (auto v : k)
            for (int b = 0; b < 8; ++b) {
                h ^= static_cast<std::uint64_t>(v) >> (8 * b) & 0xff;
                h *= 1099511628211ull;
            }
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << h;
    return s.str();
}

IFS affine_ifs_1d(const std::vector<std::pair<double, double>>& ab, double lo = 0, double hi = 1)
{
    auto I = StateSpace::interval(-1, 2);
    std::vector<SmoothMap> g;
    for (auto [a, b] : ab)
        g.push_back(SmoothMap::affine(I, Mat::Constant(1, 1, a), v1(b)));
    IFS ifs(g, Region::interval(lo, hi));
    ifs.compute_fixed_points();
    return ifs;
}

SkewProduct affine_skew(const std::vector<double>& shifts)
{
    auto I = StateSpace::interval(-4, 4);
    std::vector<SmoothMap> g;
    for (double c : shifts)
        g.push_back(SmoothMap::affine(I, Mat::Constant(1, 1, 0.5), v1(c)));
    return SkewProduct(g);
}

GeometricBlenderModel triple_model(bool symplectic)
{
    auto I = StateSpace::interval(-1, 2);
    std::vector<SmoothMap> g;
    for (double c : {0.0, 0.25, 0.5})
        g.push_back(SmoothMap::affine(I, Mat::Constant(1, 1, 0.5), v1(c)));
    if (symplectic)
        return build_geometric_model(affine_horseshoe(3, 0.1, 10), g, {}, Region::interval(0, 1),
                                     Region::interval(0, 1), true);
    return build_geometric_model(affine_horseshoe(3, 0.1, 10), g, {}, Region::interval(0, 1));
}

std::vector<Vec> model_samples(const GeometricBlenderModel& M, int n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0, 1);
    std::vector<Vec> out;
    for (int t = 0; t < n; ++t) {
        int i = static_cast<int>(U(rng) * M.base.symbols()) % M.base.symbols();
        const auto& R = M.base.rects[i];
        Vec b = v2(U(rng), R.lo[1] + U(rng) * (R.hi[1] - R.lo[1]));
        Vec y = v1(M.D.lo[0] + U(rng) * (M.D.hi[0] - M.D.lo[0]));
        Vec z = M.is_double() ? v1(M.D2.lo[0] + U(rng) * (M.D2.hi[0] - M.D2.lo[0])) : Vec();
        out.push_back(M.pack(b, y, z));
    }
    return out;
}

ShiftPoint random_point(std::mt19937_64& rng, int d)
{
    std::uniform_int_distribution<int> s(0, d - 1), len(0, 4), plen(1, 3);
    auto word = [&](int n) {
        std::vector<int> w(n);
        for (auto& v : w)
            v = s(rng);
        return w;
    };
    return ShiftPoint{Periodic(word(len(rng)), word(plen(rng))), Periodic(word(len(rng)), word(plen(rng))), d};
}

// ---------------------------------------------------------------- presets

void run_ifs_density(const RunContext& c, Report& r)
{
    auto ifs = affine_ifs_1d({{0.5, 0.0}, {0.5, 0.5}});
    Region D = Region::interval(0, 1);
    double eps = c.p("eps");
    auto cert = covering_report(ifs, D, c.p("grid_step"));
    // the dyadic images tile D exactly: covered, with zero margin
    check(r, "covering", cert.covered, "margin " + num(cert.margin));
    r.metrics["covering_margin"] = cert.margin;

    std::mt19937_64 rng(c.cfg.seed);
    std::uniform_real_distribution<double> U(0, 1);
    int bound = static_cast<int>(std::ceil(std::log2(1 / eps))) + 1;
    Table t{{"target", "word", "endpoint", "error"}, {}};
    bool hit = cert.covered, short_words = true;
    size_t longest = 0;
    for (int k = 0; k < c.n("targets") && cert.covered; ++k) {
        Vec target = v1(U(rng));
        Word w = certify_density(ifs, &cert, v1(0), target, eps, c.n("max_steps"));
        Vec end = ifs.apply(w, v1(0));
        double err = std::abs(end[0] - target[0]);
        hit = hit && err < eps;
        short_words = short_words && static_cast<int>(w.size()) <= bound;
        longest = std::max(longest, w.size());
        t.add({num(target[0]), word_to_string(w), num(end[0]), num(err)});
    }
    check(r, "density-words", hit, std::to_string(c.n("targets")) + " targets within " + num(eps));
    check(r, "word-length", short_words, "longest " + std::to_string(longest) + ", bound " + std::to_string(bound));
    r.tables["witnesses"] = std::move(t);

    auto orbit = forward_orbit(ifs, v1(0), c.n("orbit_depth"), eps, *c.cfg.budget);
    r.budget_exhausted = r.budget_exhausted || orbit.truncated;
    r.metrics["orbit_cells"] = orbit.cells.size();
    r.metrics["orbit_digest"] = cell_digest(orbit);
    Table cells{{"cell", "x", "word"}, {}};
    for (const auto& k : orbit.sorted_keys()) {
        const auto& e = orbit.cells.at(k);
        cells.add({std::to_string(k[0]), num(e.point[0]), word_to_string(e.word)});
    }
    r.tables["orbit"] = std::move(cells);
}

void run_ifs_construct(const RunContext& c, Report& r)
{
    int n = c.n("n");
    double lam = c.p("lambda"), radius = c.p("radius");
    auto P = StateSpace::box(n, -4, 4);
    auto phi = SmoothMap::affine(P, lam * Mat::Identity(n, n), Vec::Zero(n));
    auto tc = construct_translations(phi, lam);
    double step = c.p("grid_step") > 0 ? c.p("grid_step") : (n == 1 ? 0.01 : 0.05);
    r.metrics["generators"] = tc.ifs.size();
    r.metrics["k1"] = tc.k1;
    r.metrics["C_n"] = tc.C_n;

    std::mt19937_64 rng(c.cfg.seed);
    std::uniform_real_distribution<double> U(-1, 1);
    std::vector<Vec> targets;
    for (int k = 0; k < c.n("targets"); ++k) {
        Vec t(n);
        for (int i = 0; i < n; ++i)
            t[i] = U(rng);
        targets.push_back(t);
    }

    Table words{{"trial", "target", "length", "bound"}, {}};
    struct Tally {
        int covering = 0, well = 0, density = 0, length = 0, trials = 0;
    };
    auto evaluate = [&](const IFS& ifs, int trial, Tally& tally) {
        ++tally.trials;
        auto cert = covering_report(ifs, ifs.region, step);
        bool cov = cert.valid();
        tally.covering += cov;
        tally.well += cov && verify_well_distributed(ifs, ifs.region, cert.margin).ok;
        if (!cov)
            return;
        double K = 0;
        for (const auto& g : ifs.generators)
            K = std::max(K, *g.meta().lipschitz);
        double bound = std::log(1 / radius) / std::log(1 / K);
        bool dense = true, within = true;
        for (const auto& t : targets) {
            try {
                Word w = certify_density(ifs, &cert, Vec::Zero(n), t, radius, c.n("max_steps"));
                dense = dense && ifs.space().distance(ifs.apply(w, Vec::Zero(n)), t) < radius;
                within = within && w.size() <= 2 * bound;
                words.add({std::to_string(trial), coords(t), std::to_string(w.size()), num(bound)});
            } catch (const StepLimit&) {
                dense = false;
            }
        }
        tally.density += dense;
        tally.length += within;
    };

    Tally base;
    evaluate(tc.ifs, 0, base);
    check(r, "covering", base.covering == 1, "grid step " + num(step));
    check(r, "well-distributed", base.well == 1, "d from the covering margin");
    check(r, "density", base.density == 1, std::to_string(targets.size()) + " targets at radius " + num(radius));
    check(r, "word-length", base.length == 1, "within twice log(1/r)/log(1/K)");

    int trials = c.n("perturbations");
    if (trials > 0) {
        double eta = c.p("eta_factor") * lam;
        Tally pert;
        for (int t = 0; t < trials; ++t)
            evaluate(perturb_ifs(tc.ifs, eta, c.cfg.seed * 1000 + t), t + 1, pert);
        auto frac = [&](int k) { return std::to_string(k) + "/" + std::to_string(trials); };
        check(r, "perturbed-covering", pert.covering == trials, frac(pert.covering) + " at eta " + num(eta));
        check(r, "perturbed-well-distributed", pert.well == trials, frac(pert.well));
        check(r, "perturbed-density", pert.density == trials, frac(pert.density));
        check(r, "perturbed-word-length", pert.length == trials, frac(pert.length));
    }
    r.tables["words"] = std::move(words);
}

// every leaf of the exact enumeration against direct iteration of the skew product
bool exact_leaves_match(int d, int depth, std::uint64_t seed, long* leaves_checked)
{
    std::mt19937_64 rng(seed);
    std::vector<RationalAffine> maps;
    for (int i = 0; i < d; ++i)
        maps.push_back({Rational(1, 2 + i), Rational(i, 3)});
    auto x = random_point(rng, d);
    Rational y(2, 5);
    auto leaves = enumerate_unstable_exact(maps, x, y, depth);
    long expect = 0;
    for (int n = 0; n <= depth; ++n)
        expect += static_cast<long>(std::pow(d, n));
    bool ok = static_cast<long>(leaves.size()) == expect;
    for (const auto& leaf : leaves) {
        int n = static_cast<int>(leaf.sigma.size());
        auto [qx, qy] = iterate_skew_exact(maps, x, y, -(n + 1));
        std::vector<int> right(leaf.sigma.begin(), leaf.sigma.end());
        right.push_back(x.at(0));
        ShiftPoint w{qx.left, x.right.prepend(right), d};
        auto [bx, by] = iterate_skew_exact(maps, w, qy, n + 1);
        ok = ok && bx == leaf.base && by == leaf.fiber;
    }
    *leaves_checked += static_cast<long>(leaves.size());
    return ok;
}

void run_skew_equivalence(const RunContext& c, Report& r)
{
    double eps = c.p("eps");
    int depth = c.n("depth");
    Table t{{"model", "depth", "cells", "match"}, {}};
    auto sweep = [&](const std::string& name, const SkewProduct& f, const SkewPoint& p) {
        bool all = true;
        for (int n = 0; n <= depth; ++n) {
            auto rep = project_unstable_equals_ifs(f, p, n, eps);
            auto e = enumerate_unstable(f, p, n, eps);
            all = all && rep.match;
            t.add({name, std::to_string(n), std::to_string(e.projection.cells.size()), rep.match ? "1" : "0"});
        }
        check(r, "projection-" + name, all, "depths 0.." + std::to_string(depth) + " at eps " + num(eps));
    };
    sweep("dyadic", affine_skew({0.0, 0.5}), SkewPoint{ShiftPoint::constant(0, 2), v1(0.0)});
    sweep("overlap", affine_skew({0.0, 0.25, 0.5}), SkewPoint{ShiftPoint::constant(2, 3), v1(1.0)});
    r.tables["projection"] = std::move(t);

    long checked = 0;
    bool ok = true;
    for (int d = 2; d <= c.n("symbols"); ++d)
        for (int k = 0; k < c.n("points"); ++k)
            ok = exact_leaves_match(d, c.n("exact_depth"), c.cfg.seed * 100 + 10 * d + k, &checked) && ok;
    check(r, "exact-leaves", ok, std::to_string(checked) + " leaves against direct iteration");
}

void run_symbolic_blender(const RunContext& c, Report& r)
{
    auto f = affine_skew({0.0, 0.25, 0.5});
    Region D = Region::interval(0, 1);
    BlenderOptions opt;
    opt.eps = c.p("eps");
    opt.strip_samples = c.n("strips");
    opt.seed = c.cfg.seed;
    opt.max_depth = c.n("max_depth");
    auto rep = verify_symbolic_cs_blender(f, D, opt);
    check(r, "covering", rep.covering, "margin " + num(rep.covering_margin));
    check(r, "strips-hit", rep.pass, std::to_string(rep.strips.size()) + " strips, worst depth " +
                                         std::to_string(rep.worst_depth));
    r.metrics["worst_depth"] = rep.worst_depth;
    r.metrics["covering_margin"] = rep.covering_margin;
    Table t{{"trial", "center", "radius", "depth", "word"}, {}};
    for (const auto& s : rep.strips)
        t.add({"0", num(s.center[0]), num(s.radius), std::to_string(s.depth), word_to_string(s.sigma)});

    int trials = c.n("trials");
    if (trials > 0) {
        double eta = c.p("eta_factor") * rep.covering_margin;
        int passes = 0;
        for (int k = 0; k < trials; ++k) {
            std::vector<SmoothMap> g;
            for (int i = 0; i < f.d; ++i)
                g.push_back(perturb_map(f.phi[i], eta, c.cfg.seed * 1000 + 10 * k + i));
            auto pr = verify_symbolic_cs_blender(SkewProduct(g), D, opt);
            passes += pr.pass;
            for (const auto& s : pr.strips)
                t.add({std::to_string(k + 1), num(s.center[0]), num(s.radius), std::to_string(s.depth),
                       word_to_string(s.sigma)});
        }
        check(r, "perturbed-strips-hit", passes == trials,
              std::to_string(passes) + "/" + std::to_string(trials) + " at eta " + num(eta));
    }
    r.tables["strips"] = std::move(t);
}

void strip_rows(Table& t, const std::string& side, const std::vector<Strip>& strips,
                const std::vector<StripReport>& reps)
{
    for (size_t i = 0; i < reps.size(); ++i)
        t.add({side, std::to_string(strips[i].rect), num(strips[i].leaf), coords(strips[i].center),
               num(strips[i].radius), reps[i].hit ? "1" : "0", word_to_string(reps[i].word)});
}

void run_geometric_blender(const RunContext& c, Report& r)
{
    auto M = triple_model(false);
    GeometricCoveringReport cov;
    try {
        cov = verify_covering_geometric(M, c.p("grid_step"));
    } catch (const Uncovered& e) {
        check(r, "covering", false, e.what());
        return;
    }
    check(r, "covering", cov.pass, "margin " + num(cov.cs.margin));
    r.metrics["covering_margin"] = cov.cs.margin;
    auto strips = sample_strips(M, Strip::Kind::s, c.n("strips"), c.p("radius"), c.cfg.seed);
    std::vector<StripReport> reps;
    bool all = true;
    for (const auto& s : strips) {
        reps.push_back(verify_strip_intersection(M.cs_ifs(), cov.cs, s, 0, c.n("depth"), c.p("radius"), &M.base));
        all = all && reps.back().hit;
    }
    check(r, "strips-hit", all, std::to_string(strips.size()) + " s-strips at depth " + std::to_string(c.n("depth")));
    auto cones = verify_cone_invariance(M.F, axis_cones(M, c.p("aperture")), model_samples(M, c.n("samples"), c.cfg.seed));
    check(r, "cone-invariance", cones.pass, "margin " + num(cones.margin));
    Table t{{"side", "rect", "leaf", "center", "radius", "hit", "word"}, {}};
    strip_rows(t, "s", strips, reps);
    r.tables["strips"] = std::move(t);
}

void run_double_blender(const RunContext& c, Report& r)
{
    auto M = triple_model(true);
    auto ss = sample_strips(M, Strip::Kind::s, c.n("strips"), c.p("radius"), c.cfg.seed);
    auto su = sample_strips(M, Strip::Kind::u, c.n("strips"), c.p("radius"), c.cfg.seed + 1);
    auto rep = verify_double_blender(M, ss, su, c.n("depth"), c.p("radius"), c.p("grid_step"));
    auto side = [](const std::vector<StripReport>& v) {
        return std::all_of(v.begin(), v.end(), [](const StripReport& s) { return s.hit; });
    };
    check(r, "s-strips", side(rep.s_side), std::to_string(rep.s_side.size()) + " s-strips");
    check(r, "u-strips", side(rep.u_side), std::to_string(rep.u_side.size()) + " u-strips");
    auto sym = check_symplectic(M.F, model_samples(M, c.n("samples"), c.cfg.seed), c.p("tol"));
    check(r, "symplectic", sym.pass, "residual " + num(sym.max_residual));
    r.metrics["symplectic_residual"] = sym.max_residual;
    auto cones = verify_cone_invariance(M.F, axis_cones(M, c.p("aperture")), model_samples(M, c.n("samples"), c.cfg.seed));
    check(r, "cone-invariance", cones.pass, "margin " + num(cones.margin));
    Table t{{"side", "rect", "leaf", "center", "radius", "hit", "word"}, {}};
    strip_rows(t, "s", ss, rep.s_side);
    strip_rows(t, "u", su, rep.u_side);
    r.tables["strips"] = std::move(t);
}

Vec block_point(const HorseshoeBase& H, int i, int j, std::mt19937_64& rng)
{
    std::uniform_int_distribution<int> s(0, H.symbols() - 1);
    ShiftPoint x{Periodic({i, s(rng), s(rng)}, {s(rng)}), Periodic({j, s(rng), s(rng)}, {s(rng)}), H.symbols()};
    return H.point(x);
}

void run_f_mu(const RunContext& c, Report& r)
{
    check_weak_power(c.p("delta"), c.n("k"));
    int symbols = c.n("symbols"), l = c.n("l");
    auto d0 = desk_model(0.0, c.p("zeta"), symbols, l);
    auto d = desk_model(c.p("mu"), c.p("zeta"), symbols, l);
    const auto& F = d.fmu;
    r.metrics["eps_mu"] = F.eps_mu;

    std::mt19937_64 rng(c.cfg.seed);
    std::uniform_int_distribution<int> sym(0, symbols - 1);
    auto N = F.f2.domain();
    bool product = true;
    for (int t = 0; t < c.n("product_samples"); ++t) {
        Vec b = block_point(d0.fmu.base, sym(rng), sym(rng), rng);
        Vec y = N.sample(rng);
        Vec out = d0.fmu.F((Vec(4) << b, y).finished());
        product = product && out.head(2) == d0.fmu.base.f(b) && out.tail(2) == d0.fmu.f2(y);
    }
    check(r, "product-at-zero", product, std::to_string(c.n("product_samples")) + " samples, exact");

    // pack rows against J1 columns: f1 x (phi_k o f2); J2 rows against pack columns: f1 x (f2 o phi_k)
    bool blocks = true;
    int tested = 0;
    for (int t = 0; t < 20; ++t) {
        Vec y = N.sample(rng);
        for (int k = 0; k < 2; ++k) {
            for (int j : F.schedule.J1) {
                Vec b = block_point(F.base, 2 * l + 1 + k, j, rng);
                Vec out = F.F((Vec(4) << b, y).finished());
                blocks = blocks && out.head(2) == F.base.f(b) && out.tail(2) == F.phi[k](F.f2(y));
                ++tested;
            }
            for (int i : F.schedule.J2) {
                Vec b = block_point(F.base, i, 2 * l + 3 + k, rng);
                blocks = blocks && F.F((Vec(4) << b, y).finished()).tail(2) == F.f2(F.phi[k](y));
                ++tested;
            }
        }
    }
    check(r, "block-restricted", blocks, std::to_string(tested) + " block samples, exact");

    auto blender = verify_covering_geometric(d.blender, 1.0 / 64);
    check(r, "blender", blender.pass, "margin " + num(blender.cs.margin));
    auto qs = sample_points(N, c.n("samples"), rng);
    auto rep = almost_minimality_experiment(F, blender, d.fiber_box, qs, c.p("L"), c.n("depth"), c.p("eps"));
    check(r, "almost-minimality", rep.connected_fraction >= c.p("threshold"),
          "connected fraction " + num(rep.connected_fraction));
    r.metrics["connected_fraction"] = rep.connected_fraction;
    Table t{{"I", "theta", "unstable", "stable", "unstable_word", "stable_word", "unstable_segment", "stable_segment"},
            {}};
    for (const auto& s : rep.samples)
        t.add({num(s.q[0]), num(s.q[1]), s.unstable.found ? "1" : "0", s.stable.found ? "1" : "0",
               word_to_string(s.unstable.word), word_to_string(s.stable.word), num(s.unstable.segment),
               num(s.stable.segment)});
    r.tables["connections"] = std::move(t);
}

void run_twist_transitivity(const RunContext& c, Report& r)
{
    auto T1 = linear_twist(c.p("a"), c.p("b"));
    auto pack = minimal_generator_pack(T1, c.n("generators") == 3 ? PackMode::three : PackMode::paper_m,
                                       c.p("shear"), c.cfg.seed);
    Region box = Region::box(v2(0, 0), v2(1, 1));
    IFS ifs(pack, box);
    std::mt19937_64 rng(c.cfg.seed);
    std::uniform_real_distribution<double> I(0.2, 0.8), T(0, 1);
    std::vector<Vec> seeds;
    for (int k = 0; k < c.n("seeds"); ++k)
        seeds.push_back(v2(I(rng), T(rng)));
    double eps = 1.0 / c.n("grid");
    auto budget = *c.cfg.budget;
    auto rep = minimality_experiment(ifs, seeds, eps, budget, c.cfg.jobs, c.n("refine"));
    bool covered = rep.min_coverage >= c.p("coverage");
    check(r, "pack-coverage", covered, "min coverage " + num(rep.min_coverage));
    r.budget_exhausted = r.budget_exhausted || (rep.truncated && !covered);

    IFS lone({T1.map()}, box);
    // a single orbit stops at its first repeated sub-cell, so the control runs at the finest refinement
    auto neg = minimality_experiment(lone, seeds, eps, budget, c.cfg.jobs, 64);
    check(r, "single-twist-control", neg.min_coverage <= c.p("control"), "coverage " + num(neg.min_coverage));
    r.metrics["pack_coverage"] = rep.per_seed_coverage;
    r.metrics["single_coverage"] = neg.per_seed_coverage;

    auto orbit = forward_orbit(ifs, seeds.front(), -1, eps, budget, Dedup::cell, c.n("refine"));
    r.metrics["orbit_digest"] = cell_digest(orbit);
    Table t{{"I", "theta", "word_length"}, {}};
    for (const auto& k : orbit.sorted_keys()) {
        const auto& e = orbit.cells.at(k);
        t.add({num(e.point[0]), num(e.point[1]), std::to_string(e.word.size())});
    }
    r.tables["orbit"] = std::move(t);
}

void run_chain_shadow(const RunContext& c, Report& r)
{
    auto T1 = linear_twist(0.0, 1.0);
    double eps = c.p("eps");
    double uw = c.p("u_width"), vw = c.p("v_width");
    Region U = Region::box(v2(c.p("u_level") - uw, 0.0), v2(c.p("u_level") + uw, 1.0));
    Region V = Region::box(v2(c.p("v_level") - vw, 0.0), v2(c.p("v_level") + vw, 1.0));
    auto ch = chain_of_tori_search(T1, eps, U, V, c.p("level_grid"));
    check(r, "chain-length", ch.length() <= c.n("max_links"), std::to_string(ch.length()) + " links");
    r.metrics["links"] = ch.length();
    Table chain{{"index", "map", "level", "I", "theta", "angle"}, {}};
    for (int j = 0; j < ch.length(); ++j) {
        bool has = j + 1 < ch.length();
        chain.add({std::to_string(j), std::to_string(ch.circles[j].map), num(ch.circles[j].level),
                   has ? num(ch.transitions[j][0]) : "", has ? num(ch.transitions[j][1]) : "",
                   has ? num(ch.crossing_angle[j]) : ""});
    }
    r.tables["chain"] = std::move(chain);

    auto phi = conjugating_shear(eps);
    IFS ifs({T1.map(), conjugate(phi, T1.map())}, Region::box(v2(0, 0), v2(1, 1)));
    std::mt19937_64 rng(c.cfg.seed);
    double th = std::uniform_real_distribution<double>(0, 1)(rng);
    double c0 = ch.circles[0].level;
    Vec start = ch.circles[0].map == 1 ? v2(c0, th) : v2(c0 + eps * std::cos(kTwoPi * th), th);
    try {
        auto res = shadow_chain(ifs, ch, start, c.p("shadow_eps"), V, static_cast<long>(c.p("horizon")));
        Vec p = start;
        size_t next = 0;
        bool in_order = true;
        for (size_t k = 0; k <= res.word.size(); ++k) {
            while (next < res.visit_index.size() && static_cast<size_t>(res.visit_index[next]) == k) {
                in_order = in_order && ifs.space().distance(p, ch.transitions[next]) < c.p("shadow_eps");
                ++next;
            }
            if (k < res.word.size())
                p = ifs.generators[res.word[k]](p);
        }
        in_order = in_order && next == ch.transitions.size() && V.contains(p);
        check(r, "shadow-replay", in_order, "word length " + std::to_string(res.word.size()));
        r.metrics["shadow_word_length"] = res.word.size();
    } catch (const HorizonExhausted& e) {
        check(r, "shadow-replay", false, e.what());
    }

    auto psi = flow_h_epsilon(c.p("h_eps"), c.p("tau"), c.n("steps"));
    std::uniform_real_distribution<double> Th(0, 1), Out(1, 2), In(0.1, 0.9);
    bool fixed = true;
    std::vector<Vec> inside;
    for (int k = 0; k < 50; ++k) {
        Vec x = v2(Out(rng), Th(rng));
        fixed = fixed && psi(x) == x;
        inside.push_back(v2(In(rng), Th(rng)));
    }
    check(r, "h-flow-identity-outside", fixed, "50 samples with r >= 1, exact");
    auto sym = check_symplectic(psi, inside, 1e-6);
    check(r, "h-flow-symplectic", sym.pass, "residual " + num(sym.max_residual));
    double moved = 0, level = c.p("circle");
    for (int k = 0; k < 200; ++k)
        moved = std::max(moved, std::abs(psi(v2(level, k / 200.0))[0] - level));
    check(r, "h-flow-moves-circle", moved > 1e-3, "Hausdorff distance " + num(moved));
}

void run_robustness(const RunContext& c, Report& r)
{
    auto M = triple_model(c.n("symplectic") == 1);
    SweepOptions opt;
    opt.strips = c.n("strips");
    opt.radius = c.p("radius");
    opt.depth = c.n("depth");
    opt.grid_step = c.p("grid_step");
    opt.jobs = c.cfg.jobs;
    auto cert = verify_covering(M.cs_ifs(), M.D, opt.grid_step);
    double top = c.p("eta_factor") * cert.margin;
    std::vector<double> etas;
    int steps = c.n("eta_steps");
    for (int k = 0; k < steps; ++k)
        etas.push_back(steps == 1 ? top : top * k / (steps - 1));
    Verifier v = c.n("verifier") == 0 ? Verifier::covering
                 : c.n("verifier") == 1 ? Verifier::strip_intersection
                                        : Verifier::double_blender;
    auto rows = robustness_sweep(M, v, etas, c.n("trials"), c.cfg.seed, opt);
    Table t{{"eta", "trials", "passes", "rate"}, {}};
    bool all = true;
    for (const auto& row : rows) {
        all = all && row.passes == row.trials;
        t.add({num(row.eta), std::to_string(row.trials), std::to_string(row.passes), num(row.rate())});
    }
    check(r, "robust-verdicts", all, "eta up to " + num(top) + " (margin " + num(cert.margin) + ")");
    r.tables["sweep"] = std::move(t);
}

void run_recurrence(const RunContext& c, Report& r)
{
    auto tw = linear_twist(0.0, c.p("slope")).map();
    std::mt19937_64 rng(c.cfg.seed);
    auto pts = sample_points(tw.domain(), c.n("samples"), rng);
    auto rep = recurrence_experiment(tw, pts, c.p("eps"), c.n("horizon"));
    check(r, "twist-recurrent", rep.recurrent_fraction >= c.p("threshold"),
          "fraction " + num(rep.recurrent_fraction));
    r.metrics["recurrent_fraction"] = rep.recurrent_fraction;

    auto R = StateSpace(std::vector<Factor>{Factor::interval(-INFINITY, INFINITY)});
    auto tr = SmoothMap(R, R, [](const Vec& x) { return Vec(x.array() + 1.0); })
                  .with_inverse(SmoothMap(R, R, [](const Vec& x) { return Vec(x.array() - 1.0); }));
    std::vector<Vec> line;
    for (const auto& p : pts)
        line.push_back(v1(p[0]));
    auto ctrl = recurrence_experiment(tr, line, c.p("eps"), c.n("horizon"));
    check(r, "translation-control", ctrl.recurrent_fraction == 0.0, "fraction " + num(ctrl.recurrent_fraction));
    Table t{{"I", "theta", "recurrent"}, {}};
    for (size_t i = 0; i < pts.size(); ++i)
        t.add({num(pts[i][0]), num(pts[i][1]), rep.recurrent[i] ? "1" : "0"});
    r.tables["samples"] = std::move(t);
}

ParamSpec P(std::string key, double value, double lo, double hi, std::string help, bool integer = false)
{
    return ParamSpec{std::move(key), value, lo, hi, integer, std::move(help)};
}
ParamSpec I(std::string key, double value, double lo, double hi, std::string help)
{
    return P(std::move(key), value, lo, hi, std::move(help), true);
}

std::vector<Preset> build_registry()
{
    std::vector<Preset> v;
    v.push_back({"ifs-density",
                 "covering IFS orbits are dense: density words for the dyadic pair",
                 {P("eps", std::ldexp(1.0, -8), 1e-12, 0.5, "target radius and orbit cell size"),
                  I("targets", 16, 1, 100000, "random targets"),
                  P("grid_step", 1.0 / 64, 1e-4, 0.5, "certificate grid"),
                  I("max_steps", 64, 1, 100000, "pull-back steps"),
                  I("orbit_depth", 8, 0, 24, "forward orbit depth")},
                 1000000,
                 run_ifs_density});
    v.push_back({"ifs-construct",
                 "translated contractions cover, are well distributed and dense, robustly",
                 {I("n", 1, 1, 3, "dimension"), P("lambda", 0.5, 0.01, 0.99, "contraction rate"),
                  P("radius", 1e-3, 1e-9, 1, "target radius"), I("targets", 10, 1, 10000, "random targets"),
                  P("grid_step", 0, 0, 1, "certificate grid, 0 picks by dimension"),
                  I("max_steps", 200, 1, 100000, "pull-back steps"),
                  I("perturbations", 0, 0, 10000, "seeded perturbations"),
                  P("eta_factor", 0.05, 0, 1, "perturbation size over lambda")},
                 std::nullopt,
                 run_ifs_construct});
    v.push_back({"skew-unstable-equivalence",
                 "projected strong unstable sets equal IFS orbits; leaves enumerate exactly",
                 {I("depth", 6, 0, 12, "enumeration depth"), P("eps", std::ldexp(1.0, -8), 1e-12, 1, "cell size"),
                  I("exact_depth", 6, 0, 8, "rational enumeration depth"),
                  I("symbols", 3, 2, 4, "largest alphabet for the exact check"),
                  I("points", 4, 1, 100, "random base points per alphabet")},
                 std::nullopt,
                 run_skew_equivalence});
    v.push_back({"symbolic-blender",
                 "the symbolic skew model is a cs-blender, robust below the covering margin",
                 {I("strips", 100, 1, 100000, "sampled s-strips"), P("eps", 1.0 / 32, 1e-9, 2, "fiber radius"),
                  I("max_depth", 8, 0, 64, "depth limit"), I("trials", 5, 0, 1000, "perturbed models"),
                  P("eta_factor", 0.3, 0, 1, "perturbation size over the covering margin")},
                 std::nullopt,
                 run_symbolic_blender});
    v.push_back({"geometric-blender",
                 "the affine geometric model is a cs-blender with invariant cones",
                 {I("strips", 100, 1, 100000, "sampled s-strips"), P("radius", 1.0 / 32, 1e-9, 1, "fiber radius"),
                  I("depth", 8, 0, 64, "depth limit"), P("grid_step", 1.0 / 64, 1e-4, 0.5, "certificate grid"),
                  P("aperture", 0.2, 1e-3, 1.5, "cone aperture"), I("samples", 200, 1, 100000, "cone samples")},
                 std::nullopt,
                 run_geometric_blender});
    v.push_back({"double-blender",
                 "the symplectic product model is a double blender",
                 {I("strips", 100, 1, 100000, "strips per direction"), P("radius", 1.0 / 32, 1e-9, 1, "fiber radius"),
                  I("depth", 8, 0, 64, "depth limit"), P("grid_step", 1.0 / 64, 1e-4, 0.5, "certificate grid"),
                  I("samples", 200, 1, 100000, "symplectic and cone samples"),
                  P("tol", 1e-8, 1e-16, 1, "symplectic tolerance"), P("aperture", 0.2, 1e-3, 1.5, "cone aperture")},
                 std::nullopt,
                 run_double_blender});
    v.push_back({"f-mu-minimality",
                 "the perturbed product family is almost minimal",
                 {P("mu", 1, 0, 4, "family parameter"), P("zeta", 0.1, 0, 0.12, "eps(mu) = zeta mu"),
                  I("samples", 64, 1, 100000, "fiber samples"), I("depth", 12, 1, 40, "connection depth"),
                  P("L", 1, 1e-6, 10, "segment diameter bound"), P("eps", 1e-3, 1e-9, 0.1, "search cell size"),
                  I("symbols", 9, 2, 11, "horseshoe symbols"), I("l", 2, 1, 3, "translation blocks"),
                  P("delta", 0.1, 1e-6, 0.999, "weakness of the hyperbolic point"),
                  I("k", 6, 1, 1000, "power of the weak point"),
                  I("product_samples", 1000, 1, 1000000, "samples for the mu = 0 check"),
                  P("threshold", 0.95, 0, 1, "required connected fraction")},
                 std::nullopt,
                 run_f_mu});
    v.push_back({"twist-transitivity",
                 "a pack of conjugated twists is minimal; one twist is not",
                 {P("a", 0.1, -10, 10, "frequency offset"), P("b", 0.5, -10, 10, "frequency slope"),
                  P("shear", 0.1, 0, 0.45, "conjugating shear amplitude"),
                  I("generators", 3, 3, 4, "3 or dim + 2"), I("grid", 64, 2, 4096, "cells per axis"),
                  I("seeds", 4, 1, 1000, "orbit seeds"), I("refine", 4, 1, 64, "expansion sub-cells per cell"),
                  P("coverage", 0.99, 0, 1, "required coverage"), P("control", 0.05, 0, 1, "single twist ceiling")},
                 1000000,
                 run_twist_transitivity});
    v.push_back({"chain-shadow",
                 "a chain of tori links two regions and an IFS orbit shadows it; the h_eps flow moves circles",
                 {P("eps", 0.1, 0, 0.45, "shear amplitude"), P("u_level", 0.1, 0, 1, "start action"),
                  P("v_level", 0.9, 0, 1, "end action"), P("u_width", 0.01, 1e-6, 0.5, "start half width"),
                  P("v_width", 0.05, 1e-6, 0.5, "end half width"), P("level_grid", 0.01, 1e-5, 0.5, "level spacing"),
                  I("max_links", 22, 1, 100000, "link ceiling"), P("shadow_eps", 0.1, 1e-6, 1, "shadowing radius"),
                  P("horizon", 200000, 1, 1e9, "shadowing horizon"), P("h_eps", 0.1, 1e-6, 0.5, "h_eps parameter"),
                  P("tau", 1, -10, 10, "flow time"), I("steps", 256, 64, 100000, "integrator steps"),
                  P("circle", 0.5, 0, 0.99, "circle level to move")},
                 std::nullopt,
                 run_chain_shadow});
    v.push_back({"robustness-sweep",
                 "blender verdicts persist under perturbation below the covering margin",
                 {I("verifier", 1, 0, 2, "0 covering, 1 strips, 2 double"), I("symplectic", 0, 0, 1, "model"),
                  P("eta_factor", 0.08, 0, 10, "largest eta over the covering margin"),
                  I("eta_steps", 3, 1, 100, "eta grid points"), I("trials", 20, 1, 10000, "trials per eta"),
                  I("strips", 100, 1, 100000, "strips per trial"), P("radius", 1.0 / 32, 1e-9, 1, "fiber radius"),
                  I("depth", 8, 0, 64, "depth limit"), P("grid_step", 1.0 / 128, 1e-4, 0.5, "certificate grid")},
                 std::nullopt,
                 run_robustness});
    v.push_back({"recurrence-fraction",
                 "points of an area-preserving twist return; a translation does not",
                 {I("samples", 100, 1, 1000000, "sample points"), P("eps", 0.02, 1e-9, 1, "return radius"),
                  I("horizon", 500, 1, 100000000, "iterations"), P("slope", 1, -100, 100, "twist slope"),
                  P("threshold", 0.95, 0, 1, "required fraction")},
                 std::nullopt,
                 run_recurrence});
    return v;
}

}  // namespace

std::string Table::to_csv() const
{
    std::string out;
    auto line = [&out](const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) {
            const auto& c = cells[i];
            bool quote = c.find_first_of(",\"\n") != std::string::npos;
            std::string esc;
            for (char ch : c)
                esc += ch == '"' ? std::string("\"\"") : std::string(1, ch);
            out += (i ? "," : "") + (quote ? "\"" + esc + "\"" : esc);
        }
        out += "\n";
    };
    line(columns);
    for (const auto& r : rows)
        line(r);
    return out;
}

bool Report::pass() const
{
    return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.second.pass; });
}

int Report::exit_code() const
{
    if (pass())
        return exit_pass;
    return budget_exhausted ? exit_budget : exit_fail;
}

json Report::to_json(bool with_timing) const
{
    json j;
    j["experiment"] = experiment;
    j["seed"] = seed;
    j["config"] = config;
    json cs = json::object();
    for (const auto& [name, c] : checks)
        cs[name] = {{"pass", c.pass}, {"detail", c.detail}};
    j["checks"] = cs;
    j["metrics"] = metrics;
    j["pass"] = pass();
    j["budget_exhausted"] = budget_exhausted;
    json arts = json::array();
    for (const auto& a : artifacts)
        arts.push_back(std::filesystem::path(a).filename().string());
    j["artifacts"] = arts;
    if (with_timing)
        j["wall_clock_s"] = wall_clock;
    return j;
}

const std::vector<Preset>& presets()
{
    static const std::vector<Preset> registry = [] {
        auto v = build_registry();
        if (v.empty())
            throw std::logic_error("experiment registry is empty");
        return v;
    }();
    return registry;
}

const Preset& find_preset(const std::string& name)
{
    for (const auto& p : presets())
        if (p.name == name)
            return p;
    throw PreconditionError("unknown experiment '" + name + "'");
}

std::vector<const Preset*> list_experiments(const std::string& filter)
{
    std::vector<const Preset*> out;
    for (const auto& p : presets())
        if (p.name.find(filter) != std::string::npos)
            out.push_back(&p);
    return out;
}

std::string format_experiment_list(const std::string& filter)
{
    std::ostringstream s;
    for (const auto* p : list_experiments(filter))
        s << std::left << std::setw(28) << p->name << p->exercises << "\n";
    return s.str();
}

Report run_experiment(const ExperimentConfig& cfg_in)
{
    ExperimentConfig cfg = cfg_in;
    validate_config(cfg);
    const auto& preset = find_preset(cfg.experiment);
    if (!cfg.budget)
        cfg.budget = preset.default_budget.value_or(std::int64_t{1} << 40);

    Report r;
    r.experiment = cfg.experiment;
    r.seed = cfg.seed;
    json params = json::object();
    for (const auto& [k, v] : cfg.params)
        params[k] = v;
    for (const auto& s : preset.params)
        if (s.integer)
            params[s.key] = static_cast<std::int64_t>(cfg.params.at(s.key));
    r.config = {{"experiment", cfg.experiment}, {"seed", cfg.seed}, {"budget", *cfg.budget}, {"params", params}};

    auto t0 = std::chrono::steady_clock::now();
    try {
        preset.run(RunContext{cfg}, r);
    } catch (const BudgetExhausted& e) {
        r.budget_exhausted = true;
        check(r, "budget", false, e.what());
    } catch (const ConfigInvalid&) {
        throw;
    } catch (const Error& e) {
        throw Error(cfg.experiment + ": " + e.what());
    }
    r.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!cfg.out_dir.empty())
        write_report(r, cfg.out_dir, cfg.json, cfg.csv);
    return r;
}

void write_report(Report& report, const std::string& dir, bool json_out, bool csv_out)
{
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    if (csv_out)
        for (const auto& [name, table] : report.tables) {
            auto path = (fs::path(dir) / (report.experiment + "-" + name + ".csv")).string();
            std::ofstream(path) << table.to_csv();
            report.artifacts.push_back(path);
        }
    if (json_out) {
        auto path = (fs::path(dir) / (report.experiment + ".json")).string();
        std::ofstream(path) << report.to_json(true).dump(2) << "\n";
        report.artifacts.push_back(path);
    }
}

}  // namespace dyn
