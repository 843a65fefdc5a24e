#include "dyn/integrable.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <random>

namespace dyn {

namespace {

constexpr double kTwoPi = 6.283185307179586;

}  // namespace

double bump_eta(double x)
{
    if (x <= 0 || x >= 1)
        return 0.0;
    return std::exp(4.0 - 1.0 / (x * (1 - x)));
}

double bump_eta_deriv(double x)
{
    if (x <= 0 || x >= 1)
        return 0.0;
    double s = x * (1 - x);
    return bump_eta(x) * (1 - 2 * x) / (s * s);
}

SmoothMap TwistMap::map() const
{
    auto w = omega;
    auto dw = omega_deriv;
    MapMeta meta;
    meta.symplectic = true;
    SmoothMap fwd(
        space, space, [w](const Vec& x) { return Vec((Vec(2) << x[0], x[1] + w(x[0])).finished()); },
        [dw](const Vec& x) { return Mat((Mat(2, 2) << 1, 0, dw(x[0]), 1).finished()); }, meta);
    SmoothMap bwd(
        space, space, [w](const Vec& x) { return Vec((Vec(2) << x[0], x[1] - w(x[0])).finished()); },
        [dw](const Vec& x) { return Mat((Mat(2, 2) << 1, 0, -dw(x[0]), 1).finished()); }, meta);
    return fwd.with_inverse(bwd);
}

TwistMap twist_map(std::function<double(double)> omega, std::function<double(double)> omega_deriv,
                   const StateSpace& space)
{
    if (space.dim() != 2 || space.factor(0).periodic() || !space.factor(1).periodic())
        throw PreconditionError("twist maps act on an annulus I x T");
    return TwistMap{std::move(omega), std::move(omega_deriv), space};
}

TwistMap linear_twist(double a, double b, const StateSpace& space)
{
    return twist_map([a, b](double I) { return a + b * I; }, [b](double) { return b; }, space);
}

SmoothMap conjugating_shear(double eps, const StateSpace& space, double phase)
{
    if (space.dim() != 2 || !space.factor(1).periodic())
        throw PreconditionError("shear acts on an annulus I x T");
    if (!(2 * std::abs(eps) < space.factor(0).width()))
        throw DomainOverflow("shear amplitude does not fit the action interval");
    if (eps == 0.0)
        return SmoothMap::identity(space).with_meta(MapMeta{1.0, 1.0, true, false});
    double P = space.factor(1).width();
    auto make = [space, P, phase](double e) {
        MapMeta meta;
        meta.symplectic = true;
        return SmoothMap(
            space, space,
            [=](const Vec& x) {
                return Vec((Vec(2) << x[0] + e * std::cos(kTwoPi * (x[1] / P + phase)), x[1]).finished());
            },
            [=](const Vec& x) {
                return Mat((Mat(2, 2) << 1, -e * kTwoPi / P * std::sin(kTwoPi * (x[1] / P + phase)), 0, 1).finished());
            },
            meta);
    };
    return make(eps).with_inverse(make(-eps));
}

SmoothMap conjugate(const SmoothMap& phi, const SmoothMap& T)
{
    return compose(phi, compose(T, phi.inverse()));
}

Hamiltonian h_epsilon(double eps)
{
    Hamiltonian h;
    h.value = [eps](const Vec& x) {
        double r = x[0], e = bump_eta(r);
        if (e == 0.0)
            return 0.0;
        double q = 1 + eps * e, s = std::sin(kTwoPi * x[1]), c = std::cos(kTwoPi * x[1]);
        return e * r * r * (s + c * q * q) / q;
    };
    h.gradient = [eps](const Vec& x) {
        Vec g = Vec::Zero(2);
        double r = x[0], e = bump_eta(r);
        if (e == 0.0)
            return g;
        double de = bump_eta_deriv(r);
        double q = 1 + eps * e, s = std::sin(kTwoPi * x[1]), c = std::cos(kTwoPi * x[1]);
        double shape = s / q + c * q;
        g[0] = (de * r * r + 2 * e * r) * shape + e * r * r * (c - s / (q * q)) * eps * de;
        g[1] = e * r * r * kTwoPi * (c / q - s * q);
        return g;
    };
    return h;
}

SmoothMap flow_h_epsilon(double eps, double tau, int steps)
{
    if (!(eps > 0))
        throw PreconditionError("h_eps needs eps > 0");
    if (steps < 64)
        throw PreconditionError("at least 64 integration steps");
    StateSpace space({Factor::interval(0, 2), Factor::circle(1.0)});
    if (tau == 0.0)
        return SmoothMap::identity(space).with_meta(MapMeta{1.0, 1.0, true, false});
    auto h = h_epsilon(eps);
    auto inner = hamiltonian_flow(space, h, tau, steps);
    auto back = inner.inverse();
    MapMeta meta;
    meta.symplectic = true;
    // eta vanishes for r >= 1 (and r <= 0): those points are fixed exactly
    auto guard = [space](SmoothMap g) {
        return SmoothMap(
            space, space, [g](const Vec& x) { return (x[0] >= 1 || x[0] <= 0) ? x : g(x); },
            [g](const Vec& x) { return (x[0] >= 1 || x[0] <= 0) ? Mat(Mat::Identity(2, 2)) : g.jacobian(x); },
            g.meta());
    };
    return guard(inner).with_inverse(guard(back));
}

namespace {

struct ChainSearch {
    const TwistMap& T1;
    double eps, phase;
    std::vector<double> levels;

    double curve_I(double c, double theta) const { return c + eps * std::cos(kTwoPi * (theta + phase)); }

    // the circle passes at least `margin` deep into R in the action direction
    bool meets(const Circle& k, const Region& R, double margin = 0.0) const
    {
        if (k.map == 1)
            return R.lo[0] + margin < k.level && k.level < R.hi[0] - margin;
        for (int s = 0; s <= 256; ++s) {
            double th = R.lo[1] + (R.hi[1] - R.lo[1]) * s / 256.0;
            double I = curve_I(k.level, th);
            if (R.lo[0] + margin < I && I < R.hi[0] - margin)
                return true;
        }
        return false;
    }

    // T1-level a against T2-level c; transversal when the crossing slope stays away from 0
    bool crosses(double a, double c) const
    {
        if (eps == 0.0)
            return false;
        double x = (a - c) / eps;
        return std::abs(x) < 1 && std::sqrt(1 - x * x) >= 0.1;
    }

    Vec transition(double a, double c, double* angle) const
    {
        double x = std::clamp((a - c) / eps, -1.0, 1.0);
        double th = std::acos(x) / kTwoPi - phase;
        th -= std::floor(th);
        double slope = kTwoPi * std::abs(eps) * std::sqrt(1 - x * x);
        *angle = std::atan(slope);
        return (Vec(2) << a, th).finished();
    }
};

}  // namespace

ToriChain chain_of_tori_search(const TwistMap& T1, double eps, const Region& U, const Region& V, double level_grid,
                               double phase)
{
    if (!(level_grid > 0))
        throw PreconditionError("level grid must be positive");
    const auto& I = T1.space.factor(0);
    ChainSearch cs{T1, eps, phase, {}};
    int nl = static_cast<int>(std::floor(I.width() / level_grid + 1e-9));
    for (int k = 0; k <= nl; ++k)
        cs.levels.push_back(I.lo + k * level_grid);
    int L = static_cast<int>(cs.levels.size());
    // node id: map 1 levels first, then map 2
    auto node = [&](int id) { return Circle{id < L ? 1 : 2, cs.levels[id % L]}; };
    std::vector<int> parent(2 * L, -2);
    std::deque<int> queue;
    for (int id = 0; id < 2 * L; ++id) {
        if (node(id).map == 2 && eps == 0.0)
            continue;
        if (cs.meets(node(id), U)) {
            parent[id] = -1;
            queue.push_back(id);
        }
    }
    // the final circle must enter V with room to spare, so that a nearby orbit still lands in it
    double v_margin = 0.25 * (V.hi[0] - V.lo[0]) / 2;
    int found = -1;
    while (!queue.empty() && found < 0) {
        int id = queue.front();
        queue.pop_front();
        if (cs.meets(node(id), V, v_margin)) {
            found = id;
            break;
        }
        int base = id < L ? L : 0;
        for (int j = 0; j < L; ++j) {
            int nb = base + j;
            if (parent[nb] != -2)
                continue;
            double a = id < L ? cs.levels[id] : cs.levels[j];
            double c = id < L ? cs.levels[j] : cs.levels[id - L];
            if (!cs.crosses(a, c))
                continue;
            parent[nb] = id;
            queue.push_back(nb);
        }
    }
    if (found < 0)
        throw NoChain("no chain of invariant circles links U and V on this grid");
    std::vector<int> path;
    for (int id = found; id >= 0; id = parent[id])
        path.push_back(id);
    std::reverse(path.begin(), path.end());

    ToriChain ch;
    ch.eps = eps;
    ch.phase = phase;
    for (int id : path)
        ch.circles.push_back(node(id));
    for (size_t j = 0; j + 1 < ch.circles.size(); ++j) {
        const auto& p = ch.circles[j];
        const auto& q = ch.circles[j + 1];
        double a = p.map == 1 ? p.level : q.level;
        double c = p.map == 1 ? q.level : p.level;
        double angle = 0;
        ch.transitions.push_back(cs.transition(a, c, &angle));
        ch.crossing_angle.push_back(angle);
    }
    return ch;
}

long rotation_hit_bound(double alpha, double arc, long max_q)
{
    if (!(arc > 0))
        throw PreconditionError("arc length must be positive");
    alpha -= std::floor(alpha);
    // denominators of the continued-fraction convergents
    std::vector<long> qs{1};
    long q_prev = 0, q = 1;
    double x = alpha;
    while (q < max_q) {
        if (x < 1e-15)
            break;
        double inv = 1 / x;
        long a = static_cast<long>(std::floor(inv));
        x = inv - a;
        long qn = a * q + q_prev;
        q_prev = q;
        q = qn;
        qs.push_back(q);
    }
    for (long n : qs) {
        if (n > max_q)
            break;
        std::vector<double> pts(n);
        for (long j = 0; j < n; ++j) {
            double v = j * alpha;
            pts[j] = v - std::floor(v);
        }
        std::sort(pts.begin(), pts.end());
        double gap = pts.front() + 1 - pts.back();
        for (long j = 1; j < n; ++j)
            gap = std::max(gap, pts[j] - pts[j - 1]);
        if (gap < arc)
            return n;
    }
    throw HorizonExhausted("rotation does not resolve the arc within the denominator limit");
}

ShadowResult shadow_chain(const IFS& ifs, const ToriChain& chain, const Vec& start, double eps, const Region& V,
                          long horizon)
{
    if (ifs.size() != 2)
        throw PreconditionError("shadowing uses the pair {T1, T2}");
    if (chain.circles.empty())
        throw PreconditionError("empty chain");
    const auto& space = ifs.space();
    auto level_of = [&](const Circle& c, const Vec& p) {
        if (c.map == 1)
            return p[0];
        return p[0] - chain.eps * std::cos(kTwoPi * (p[1] + chain.phase));
    };
    if (std::abs(level_of(chain.circles.front(), start) - chain.circles.front().level) >= eps)
        throw PreconditionError("start is not within eps of the first circle");

    ShadowResult res;
    Vec p = start;
    double fine = eps / (4.0 * (chain.length() + 1));
    auto block = [&](int sym, const std::function<double(const Vec&)>& dist, double accept) {
        Vec q = p, best_q = p;
        long best_k = -1;
        double best_d = dist(p);
        if (best_d < fine)
            return;
        for (long k = 1; k <= horizon; ++k) {
            q = ifs.generators[sym](q);
            double d = dist(q);
            if (d < best_d) {
                best_d = d;
                best_k = k;
                best_q = q;
                if (d < fine)
                    break;
            }
        }
        if (best_k < 0 || best_d >= accept)
            throw HorizonExhausted("no visit of the target within the horizon");
        res.word.insert(res.word.end(), best_k, sym);
        p = best_q;
    };
    // aim at the crossing of the circle actually carrying p with the next planned circle,
    // so the level error of the start does not propagate down the chain
    auto aim = [&](size_t j) -> Vec {
        const Circle& cur = chain.circles[j];
        const Circle& nxt = chain.circles[j + 1];
        const Vec& t = chain.transitions[j];
        double l = level_of(cur, p);
        double a = cur.map == 1 ? l : nxt.level;
        double c = cur.map == 1 ? nxt.level : l;
        double x = (a - c) / chain.eps;
        if (!(std::abs(x) < 1))
            return t;
        double best = INFINITY;
        Vec out = t;
        for (double sgn : {1.0, -1.0}) {
            double th = sgn * std::acos(x) / kTwoPi - chain.phase;
            th -= std::floor(th);
            Vec cand = (Vec(2) << a, th).finished();
            double d = space.distance(cand, t);
            if (d < best) {
                best = d;
                out = cand;
            }
        }
        return out;
    };
    for (size_t j = 0; j < chain.transitions.size(); ++j) {
        const Vec& t = chain.transitions[j];
        Vec target = aim(j);
        block(chain.circles[j].map - 1, [&](const Vec& q) { return space.distance(q, target); }, eps);
        if (space.distance(p, t) >= eps)
            throw HorizonExhausted("orbit strays more than eps from the planned crossing");
        res.visit_index.push_back(static_cast<long>(res.word.size()));
    }
    if (!V.contains(p)) {
        // head for the point of the last circle deepest inside V first
        const Circle& last = chain.circles.back();
        Vec target;
        double depth = -INFINITY;
        for (int s = 0; s <= 256; ++s) {
            double th = V.lo[1] + (V.hi[1] - V.lo[1]) * s / 256.0;
            double I = last.map == 1 ? last.level : last.level + chain.eps * std::cos(kTwoPi * (th + chain.phase));
            Vec c = (Vec(2) << I, th).finished();
            double d = V.inside_distance(c);
            if (d > depth) {
                depth = d;
                target = c;
            }
        }
        if (depth > 0)
            block(last.map - 1, [&](const Vec& q) { return space.distance(q, target); }, eps);
    }
    if (!V.contains(p)) {
        int sym = chain.circles.back().map - 1;
        Vec q = p;
        long k = 1;
        for (; k <= horizon; ++k) {
            q = ifs.generators[sym](q);
            if (V.contains(q))
                break;
        }
        if (k > horizon)
            throw HorizonExhausted("the last circle does not reach V within the horizon");
        res.word.insert(res.word.end(), k, sym);
        p = q;
    }
    res.end = p;
    return res;
}

std::vector<SmoothMap> minimal_generator_pack(const TwistMap& T1, PackMode mode, double eps, std::uint64_t seed)
{
    int m = mode == PackMode::paper_m ? T1.space.dim() + 2 : 3;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    auto T = T1.map();
    std::vector<SmoothMap> pack{T};
    for (int j = 1; j < m; ++j)
        pack.push_back(conjugate(conjugating_shear(eps, T1.space, U(rng)), T));
    return pack;
}

}  // namespace dyn
