#include "dyn/perturb.hpp"

#include <cmath>
#include <random>

namespace dyn {

namespace {

constexpr double kTwoPi = 6.283185307179586;
constexpr int kModes = 3;

// sum_m a_m sin(2 pi f_m . x / P + phi_m) with sum |a| <= 1 and the derivative row sum <= 1
struct TrigMode {
    std::vector<double> amp, phase;
    std::vector<Vec> freq;  // already divided by the factor widths

    double value(const Vec& x) const
    {
        double s = 0;
        for (size_t m = 0; m < amp.size(); ++m)
            s += amp[m] * std::sin(kTwoPi * freq[m].dot(x) + phase[m]);
        return s;
    }

    Vec grad(const Vec& x) const
    {
        Vec g = Vec::Zero(freq.front().size());
        for (size_t m = 0; m < amp.size(); ++m)
            g += amp[m] * kTwoPi * std::cos(kTwoPi * freq[m].dot(x) + phase[m]) * freq[m];
        return g;
    }
};

TrigMode random_mode(const StateSpace& space, const std::vector<int>& coords, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::uniform_int_distribution<int> F(1, 3);
    TrigMode t;
    int n = space.dim();
    double amp_sum = 0, der_sum = 0;
    for (int m = 0; m < kModes; ++m) {
        Vec f = Vec::Zero(n);
        for (int k : coords) {
            const auto& fac = space.factor(k);
            double w = fac.bounded() ? fac.width() : 1.0;
            f[k] = (U(rng) < 0.5 ? -1 : 1) * F(rng) / w;
        }
        double a = 0.25 + U(rng);
        t.amp.push_back(a);
        t.phase.push_back(kTwoPi * U(rng));
        t.freq.push_back(f);
        amp_sum += a;
        der_sum += a * kTwoPi * f.cwiseAbs().sum();
    }
    double scale = 1.0 / std::max(amp_sum, der_sum);
    for (auto& a : t.amp)
        a *= scale;
    return t;
}

double sampled_lipschitz(const SmoothMap& G)
{
    if (G.meta().lipschitz)
        return *G.meta().lipschitz;
    std::mt19937_64 rng(7);
    double K = 0;
    for (const auto& x : sample_points(G.domain(), 64, rng)) {
        Mat J = G.jacobian(x);
        K = std::max(K, J.cwiseAbs().rowwise().sum().maxCoeff());
    }
    return 1.1 * K;
}

MapMeta perturbed_meta(const MapMeta& m, double eta)
{
    MapMeta out;
    if (m.lipschitz)
        out.lipschitz = *m.lipschitz + eta;
    if (m.lambda && *m.lambda - eta > 0)
        out.lambda = *m.lambda - eta;
    out.symplectic = m.symplectic;
    return out;
}

// bounds for the inverse: Lipschitz 1 / lambda, lower bound 1 / K
MapMeta inverse_meta(const MapMeta& m)
{
    MapMeta out;
    if (m.lambda && *m.lambda > 0)
        out.lipschitz = 1 / *m.lambda;
    if (m.lipschitz && *m.lipschitz > 0)
        out.lambda = 1 / *m.lipschitz;
    out.symplectic = m.symplectic;
    return out;
}

SmoothMap perturb_general(const SmoothMap& G, double eta, std::mt19937_64& rng)
{
    const auto& cod = G.codomain();
    const auto& dom = G.domain();
    std::vector<int> all(dom.dim());
    for (int k = 0; k < dom.dim(); ++k)
        all[k] = k;
    std::vector<TrigMode> modes;
    for (int k = 0; k < cod.dim(); ++k)
        modes.push_back(random_mode(dom, all, rng));
    auto eval = [G, modes, eta, cod](const Vec& x) {
        Vec y = G(x);
        for (size_t k = 0; k < modes.size(); ++k)
            y[k] += eta * modes[k].value(x);
        return cod.reduce(y);
    };
    SmoothMap::Deriv df;
    if (G.has_jacobian()) {
        df = [G, modes, eta](const Vec& x) {
            Mat J = G.jacobian(x);
            for (size_t k = 0; k < modes.size(); ++k)
                J.row(k) += eta * modes[k].grad(x).transpose();
            return J;
        };
    }
    SmoothMap out(dom, cod, eval, df, perturbed_meta(G.meta(), eta));
    if (!G.invertible())
        return out;
    // inverse by Newton from the unperturbed preimage
    auto Ginv = G.inverse();
    auto solve = [out, Ginv](const Vec& y) {
        Vec x = Ginv(y);
        for (int it = 0; it < 50; ++it) {
            Vec r = out.codomain().difference(out(x), y);
            if (r.cwiseAbs().maxCoeff() < 1e-14)
                break;
            x -= out.jacobian(x).partialPivLu().solve(r);
        }
        return out.domain().reduce(x);
    };
    SmoothMap::Deriv dinv;
    if (df)
        dinv = [out, solve](const Vec& y) { return Mat(out.jacobian(solve(y)).inverse()); };
    SmoothMap inv(cod, dom, solve, dinv, inverse_meta(out.meta()));
    return out.with_inverse(inv);
}

SmoothMap perturb_symplectic(const SmoothMap& G, double eta, std::mt19937_64& rng)
{
    const auto& cod = G.codomain();
    int n = cod.dim();
    if (n % 2)
        throw OddDimension("symplectic perturbation needs paired coordinates");
    double K = std::max(1.0, sampled_lipschitz(G));
    // e (1 + e) K = eta
    double e = (-1 + std::sqrt(1 + 4 * eta / K)) / 2;
    std::vector<TrigMode> s1, s2;
    for (int i = 0; i < n; i += 2) {
        s1.push_back(random_mode(cod, {i + 1}, rng));
        s2.push_back(random_mode(cod, {i}, rng));
    }
    auto shear = [s1, s2, e, cod](Vec y, double sign) {
        int n2 = static_cast<int>(s1.size());
        if (sign > 0) {
            for (int p = 0; p < n2; ++p)
                y[2 * p] += e * s1[p].value(y);
            for (int p = 0; p < n2; ++p)
                y[2 * p + 1] += e * s2[p].value(y);
        } else {
            for (int p = 0; p < n2; ++p)
                y[2 * p + 1] -= e * s2[p].value(y);
            for (int p = 0; p < n2; ++p)
                y[2 * p] -= e * s1[p].value(y);
        }
        return cod.reduce(y);
    };
    auto shear_jac = [s1, s2, e, n](const Vec& y) {
        Mat A = Mat::Identity(n, n), B = Mat::Identity(n, n);
        Vec z = y;
        for (size_t p = 0; p < s1.size(); ++p) {
            A.row(2 * p) += e * s1[p].grad(y).transpose();
            z[2 * p] += e * s1[p].value(y);
        }
        for (size_t p = 0; p < s2.size(); ++p)
            B.row(2 * p + 1) += e * s2[p].grad(z).transpose();
        return Mat(B * A);
    };
    SmoothMap::Deriv df;
    if (G.has_jacobian())
        df = [G, shear_jac](const Vec& x) { return Mat(shear_jac(G(x)) * G.jacobian(x)); };
    MapMeta meta = perturbed_meta(G.meta(), eta);
    SmoothMap out(G.domain(), cod, [G, shear](const Vec& x) { return shear(G(x), 1.0); }, df, meta);
    if (!G.invertible())
        return out;
    auto Ginv = G.inverse();
    auto solve = [Ginv, shear](const Vec& y) { return Ginv(shear(y, -1.0)); };
    SmoothMap::Deriv dinv;
    if (df)
        dinv = [out, solve](const Vec& y) { return Mat(out.jacobian(solve(y)).inverse()); };
    SmoothMap inv(cod, G.domain(), solve, dinv, inverse_meta(meta));
    return out.with_inverse(inv);
}

}  // namespace

SmoothMap perturb_map(const SmoothMap& G, double eta, std::uint64_t seed)
{
    if (eta < 0)
        throw PreconditionError("perturbation size must be non-negative");
    if (eta == 0.0)
        return G;
    std::mt19937_64 rng(seed);
    if (G.meta().symplectic)
        return perturb_symplectic(G, eta, rng);
    return perturb_general(G, eta, rng);
}

IFS perturb_ifs(const IFS& ifs, double eta, std::uint64_t seed)
{
    std::vector<SmoothMap> gens;
    for (int i = 0; i < ifs.size(); ++i)
        gens.push_back(perturb_map(ifs.generators[i], eta, seed + static_cast<std::uint64_t>(i)));
    IFS out(std::move(gens), ifs.region);
    if (eta == 0.0)
        out.fixed_points = ifs.fixed_points;
    else
        out.compute_fixed_points();
    return out;
}

}  // namespace dyn
