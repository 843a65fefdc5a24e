#include "dyn/fmu.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "dyn/hamiltonian.hpp"
#include "dyn/integrable.hpp"

namespace dyn {

int BlockSchedule::pack_row(int i, int j) const
{
    if (std::find(J1.begin(), J1.end(), j) == J1.end())
        return 0;
    if (i == 2 * l + 1)
        return 1;
    if (i == 2 * l + 2)
        return 2;
    return 0;
}

int BlockSchedule::pack_col(int i, int j) const
{
    if (std::find(J2.begin(), J2.end(), i) == J2.end())
        return 0;
    if (j == 2 * l + 3)
        return 1;
    if (j == 2 * l + 4)
        return 2;
    return 0;
}

std::string BlockSchedule::role(int i, int j) const
{
    std::string r;
    auto add = [&r](const char* s) { r += r.empty() ? s : std::string("+") + s; };
    if (translation_row(i))
        add("translation-row");
    if (translation_col(j))
        add("translation-col");
    if (pack_row(i, j))
        add("pack-forward");
    if (pack_col(i, j))
        add("pack-backward");
    return r.empty() ? "untouched" : r;
}

Region BlockSchedule::block(const HorseshoeBase& base, int i, int j) const
{
    double h = 1 / base.mu_uu;
    double lo = base.c[i] + base.c[j] / base.mu_uu;
    return Region::box((Vec(2) << 0.0, lo).finished(), (Vec(2) << 1.0, lo + h / base.mu_uu).finished());
}

Region BlockSchedule::enlarged(const HorseshoeBase& base, int i, int j) const
{
    // gap between neighbouring blocks inside R_i
    double gap = INFINITY;
    for (int k = 0; k + 1 < symbols; ++k)
        gap = std::min(gap, (base.c[k + 1] - base.c[k] - 1 / base.mu_uu) / base.mu_uu);
    Region b = block(base, i, j);
    b.lo[1] -= gap / 3;
    b.hi[1] += gap / 3;
    return b;
}

bool BlockSchedule::consistent(const HorseshoeBase& base) const
{
    if (base.symbols() != symbols)
        return false;
    std::vector<Region> all;
    for (int i = 0; i < symbols; ++i)
        for (int j = 0; j < symbols; ++j) {
            Region b = block(base, i, j), e = enlarged(base, i, j);
            if (!(e.lo[1] < b.lo[1] && b.hi[1] < e.hi[1]))
                return false;
            all.push_back(e);
        }
    std::sort(all.begin(), all.end(), [](const Region& a, const Region& b) { return a.lo[1] < b.lo[1]; });
    for (size_t k = 0; k + 1 < all.size(); ++k)
        if (!(all[k].hi[1] < all[k + 1].lo[1]))
            return false;
    return true;
}

BlockSchedule make_schedule(int symbols, int l, bool all_generators, int fiber_dim)
{
    if (l < 1)
        throw PreconditionError("at least one translation row");
    int need = all_generators ? 2 * l + 2 * fiber_dim + 2 : 2 * l + 4;
    if (symbols - 1 < need)
        throw ScheduleTooSmall("d = " + std::to_string(symbols - 1) + " but the schedule needs d >= " +
                               std::to_string(need));
    BlockSchedule s;
    s.symbols = symbols;
    s.l = l;
    s.J1 = {0, 2 * l + 1, 2 * l + 2};
    s.J2 = {0, 2 * l + 3, 2 * l + 4};
    return s;
}

void check_weak_power(double delta, int k)
{
    if (!(delta > 0 && delta < 1) || k < 1)
        throw PreconditionError("need 0 < delta < 1 and k >= 1");
    if (!(std::pow(1 - delta, k) > 0.5)) {
        int kmax = static_cast<int>(std::ceil(std::log(0.5) / std::log(1 - delta))) - 1;
        throw InfeasibleParameters("(1 - delta)^k > 1/2 fails; with delta = " + std::to_string(delta) +
                                   " the power must satisfy k <= " + std::to_string(kmax));
    }
}

Vec FMu::fiber(int i, int j, const Vec& y) const
{
    if (eps_mu == 0.0)
        return f2(y);
    Vec z = y;
    if (schedule.translation_col(j))
        z = col_phi[j].inverse()(z);
    else if (int p = schedule.pack_col(i, j))
        z = phi[p - 1](z);
    z = f2(z);
    if (schedule.translation_row(i))
        z = row_psi[i](z);
    if (int p = schedule.pack_row(i, j))
        z = phi[p - 1](z);
    return z;
}

Vec FMu::fiber_inverse(int i, int j, const Vec& y) const
{
    if (eps_mu == 0.0)
        return f2.inverse()(y);
    Vec z = y;
    if (int p = schedule.pack_row(i, j))
        z = phi[p - 1].inverse()(z);
    if (schedule.translation_row(i))
        z = row_psi[i].inverse()(z);
    z = f2.inverse()(z);
    if (schedule.translation_col(j))
        z = col_phi[j](z);
    else if (int p = schedule.pack_col(i, j))
        z = phi[p - 1].inverse()(z);
    return z;
}

std::vector<SmoothMap> FMu::forward_pack() const
{
    return {f2, compose(phi[0], f2), compose(phi[1], f2)};
}

std::vector<SmoothMap> FMu::backward_pack() const
{
    return {f2.inverse(), compose(f2, phi[0]).inverse(), compose(f2, phi[1]).inverse()};
}

FMu build_F_mu(const HorseshoeBase& f1, const SmoothMap& f2, const BlockSchedule& schedule, double mu,
               const FMuParams& params, std::optional<std::vector<SmoothMap>> pack)
{
    if (schedule.symbols != f1.symbols())
        throw ScheduleTooSmall("schedule and base disagree on the number of symbols");
    if (!schedule.consistent(f1))
        throw RectanglesOverlap("enlarged blocks overlap");
    if (!(mu >= 0 && mu <= 1))
        throw PreconditionError("mu must lie in [0, 1]");
    if (!f2.invertible())
        throw NotInvertible("f2 needs an inverse");
    const StateSpace& N = f2.domain();
    FMu F;
    F.base = f1;
    F.f2 = f2;
    F.schedule = schedule;
    F.params = params;
    F.mu = mu;
    F.eps_mu = params.zeta * mu;

    SmoothMap id = SmoothMap::identity(N);
    F.row_psi.assign(schedule.symbols, id);
    F.col_phi.assign(schedule.symbols, id);
    if (pack) {
        if (pack->size() != 2)
            throw PreconditionError("the pack holds the two integrable perturbations");
        F.phi = *pack;
    } else {
        // time eps(mu) maps of k sin(2 pi theta) / 2 pi and -k cos(2 pi theta) / 2 pi: shears in the action
        double a = F.eps_mu * params.pack_amplitude;
        F.phi = {conjugating_shear(-a, N, 0.0), conjugating_shear(-a, N, -0.25)};
    }
    if (F.eps_mu > 0) {
        if (static_cast<int>(params.c.size()) != schedule.l || static_cast<int>(params.c_col.size()) != schedule.l)
            throw PreconditionError("one translation vector per translation row and column");
        int n = N.dim() / 2;
        auto split = [n](const Vec& c, Vec& u, Vec& v) {
            u.resize(n);
            v.resize(n);
            for (int k = 0; k < n; ++k) {
                u[k] = c[2 * k];
                v[k] = c[2 * k + 1];
            }
        };
        for (int i = 1; i <= schedule.l; ++i) {
            Vec u, v;
            split(F.eps_mu * params.c[i - 1], u, v);
            F.row_psi[i] = hamiltonian_bump_translation(N, u, v, params.U, params.U_outer);
        }
        for (int j = schedule.l + 1; j <= 2 * schedule.l; ++j) {
            Vec u, v;
            split(F.eps_mu * params.c_col[j - schedule.l - 1], u, v);
            F.col_phi[j] = hamiltonian_bump_translation(N, u, v, params.U, params.U_outer);
        }
    }

    StateSpace space = f1.ambient.product(N);
    auto labels = [f1](const Vec& b, int& i, int& j) {
        i = f1.label(b, 1e-9);
        j = f1.label(f1.f(b), 1e-9);
        if (i < 0 || j < 0)
            throw PointOutsideDomain("base point outside the blocks");
    };
    auto fm = std::make_shared<FMu>(F);
    auto eval = [fm, labels](const Vec& x) {
        int i, j;
        labels(x.head(2), i, j);
        Vec out(x.size());
        out.head(2) = fm->base.f(x.head(2));
        out.tail(x.size() - 2) = fm->fiber(i, j, x.tail(x.size() - 2));
        return out;
    };
    auto inv = [fm](const Vec& x) {
        Vec b = fm->base.f.inverse()(x.head(2));
        int i = fm->base.label(b, 1e-9), j = fm->base.label(x.head(2), 1e-9);
        if (i < 0 || j < 0)
            throw PointOutsideDomain("base point outside the blocks");
        Vec out(x.size());
        out.head(2) = b;
        out.tail(x.size() - 2) = fm->fiber_inverse(i, j, x.tail(x.size() - 2));
        return out;
    };
    MapMeta meta;
    meta.symplectic = f1.f.meta().symplectic && f2.meta().symplectic;
    F.F = SmoothMap(space, space, eval, {}, meta).with_inverse(SmoothMap(space, space, inv, {}, meta));
    return F;
}

GeometricBlenderModel desk_blender_model()
{
    auto I = StateSpace::interval(-2, 2);
    std::vector<SmoothMap> cs;
    for (double c : {0.0, 0.4, -0.4})
        cs.push_back(SmoothMap::affine(I, Mat::Constant(1, 1, 0.6), Vec::Constant(1, c)));
    return build_geometric_model(affine_horseshoe(3, 1.0 / 12, 12), cs, {}, Region::interval(-1, 1),
                                 Region::interval(-1, 1), true);
}

DeskModel desk_model(double mu, double zeta, int symbols, int l)
{
    auto schedule = make_schedule(symbols, l);
    auto base = affine_horseshoe(symbols, 1.0 / 12, 12);
    auto T = linear_twist((std::sqrt(5.0) - 1) / 2, 0.5);
    FMuParams p;
    p.zeta = zeta;
    for (int k = 0; k < l; ++k) {
        Vec c = Vec::Zero(2);
        c[k % 2] = 0.1;
        p.c.push_back(c);
        p.c_col.push_back(-c);
    }
    p.U = Region::box((Vec(2) << 0.4, 0.4).finished(), (Vec(2) << 0.6, 0.6).finished());
    p.U_outer = Region::box((Vec(2) << 0.25, 0.25).finished(), (Vec(2) << 0.75, 0.75).finished());
    p.pack_amplitude = 1.0;
    DeskModel d{build_F_mu(base, T.map(), schedule, mu, p), desk_blender_model(), p.U};
    return d;
}

namespace {

// breadth-first over pack words from y0, cells of size eps, inside the fiber space
bool search_pack(const std::vector<SmoothMap>& pack, const Vec& y0, const Region& box, int depth, double eps,
                 Word* word)
{
    const StateSpace& N = pack.front().domain();
    struct Node {
        Vec y;
        Word w;
    };
    CellGrid grid(N, eps);
    std::unordered_set<CellKey, CellKeyHash> seen{grid.key(y0)};
    std::vector<Node> level{Node{y0, {}}};
    for (int d = 0; d <= depth && !level.empty(); ++d) {
        for (const auto& nd : level)
            if (box.contains(nd.y)) {
                *word = nd.w;
                return true;
            }
        if (d == depth)
            break;
        std::vector<Node> next;
        for (const auto& nd : level)
            for (int s = 0; s < static_cast<int>(pack.size()); ++s) {
                Vec z = pack[s](nd.y);
                if (!N.contains(z, 0.0) || !seen.insert(grid.key(z)).second)
                    continue;
                Word w = nd.w;
                w.push_back(s);
                next.push_back(Node{std::move(z), std::move(w)});
            }
        level = std::move(next);
    }
    return false;
}

int pack_symbol(const BlockSchedule& s, int k, bool forward)
{
    if (k == 0)
        return 0;
    return forward ? 2 * s.l + k : 2 * s.l + 2 + k;
}

}  // namespace

Connection connect_unstable(const FMu& F, const Region& fiber_box, const Vec& q, int depth, double eps)
{
    Connection c;
    Vec p = F.base.point(ShiftPoint::constant(0, F.base.symbols()));
    if (fiber_box.contains(q)) {
        c.found = true;
        c.base = p;
        c.landing = F.base.ambient.product(F.f2.domain()).reduce((Vec(4) << p, q).finished());
        return c;
    }
    // the first step runs through block (0, a_1) and applies f2
    Word w;
    if (!search_pack(F.forward_pack(), F.f2(q), fiber_box, depth - 1, eps, &w))
        return c;
    std::vector<int> right;
    for (int s : w)
        right.push_back(pack_symbol(F.schedule, s, true));
    ShiftPoint x{Periodic::constant(0), Periodic(right, {0}), F.base.symbols()};
    c.base = F.base.point(x);
    c.segment = std::abs(c.base[1] - p[1]);
    Vec state(2 + q.size());
    state << c.base, q;
    for (size_t k = 0; k <= w.size(); ++k)
        state = F.F(state);
    c.landing = state;
    c.word = w;
    c.found = fiber_box.contains(state.tail(q.size())) && F.base.label(state.head(2), 1e-9) == 0;
    return c;
}

Connection connect_stable(const FMu& F, const Region& fiber_box, const Vec& q, int depth, double eps)
{
    Connection c;
    Vec p = F.base.point(ShiftPoint::constant(0, F.base.symbols()));
    if (fiber_box.contains(q)) {
        c.found = true;
        c.base = p;
        c.landing = (Vec(4) << p, q).finished();
        return c;
    }
    // the first backward step runs through block (b_1, 0) and applies f2^-1
    Word w;
    if (!search_pack(F.backward_pack(), F.f2.inverse()(q), fiber_box, depth - 1, eps, &w))
        return c;
    std::vector<int> left{0};
    for (int s : w)
        left.push_back(pack_symbol(F.schedule, s, false));
    ShiftPoint x{Periodic(left, {0}), Periodic::constant(0), F.base.symbols()};
    c.base = F.base.point(x);
    c.segment = std::abs(c.base[0] - p[0]);
    Vec state(2 + q.size());
    state << c.base, q;
    auto Finv = F.F.inverse();
    for (size_t k = 0; k <= w.size(); ++k)
        state = Finv(state);
    c.landing = state;
    c.word = w;
    c.found = fiber_box.contains(state.tail(q.size())) && F.base.label(state.head(2), 1e-9) == 0;
    return c;
}

AlmostMinimalityReport almost_minimality_experiment(const FMu& F, const GeometricCoveringReport& blender_report,
                                                    const Region& fiber_box, const std::vector<Vec>& fiber_samples,
                                                    double L, int depth, double eps)
{
    if (!blender_report.pass)
        throw PreconditionError("the blender certificate must pass first");
    AlmostMinimalityReport rep;
    rep.depth = depth;
    rep.L = L;
    int connected = 0;
    for (const auto& q : fiber_samples) {
        MinimalitySample s;
        s.q = q;
        s.unstable = connect_unstable(F, fiber_box, q, depth, eps);
        s.stable = connect_stable(F, fiber_box, q, depth, eps);
        s.unstable.found = s.unstable.found && s.unstable.segment <= L;
        s.stable.found = s.stable.found && s.stable.segment <= L;
        connected += s.unstable.found && s.stable.found;
        rep.samples.push_back(std::move(s));
    }
    rep.connected_fraction = fiber_samples.empty() ? 0.0 : static_cast<double>(connected) / fiber_samples.size();
    return rep;
}

}  // namespace dyn
