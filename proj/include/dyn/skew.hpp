#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <optional>
#include <vector>

#include "dyn/core.hpp"
#include "dyn/ifs.hpp"
#include "dyn/shift.hpp"

namespace dyn {

// Phi(x, y) = (tau x, phi_{x_0}(y)); the optional psi part acts on a second
// fiber as z -> psi_{x_1}(z).
struct SkewProduct {
    int d = 0;
    std::vector<SmoothMap> phi;
    std::vector<SmoothMap> psi;

    SkewProduct() = default;
    explicit SkewProduct(std::vector<SmoothMap> phi, std::vector<SmoothMap> psi = {});

    const StateSpace& fiber() const { return phi.front().domain(); }
    bool invertible() const;
    bool has_expanding_part() const { return !psi.empty(); }
    // max over symbols of max(K, 1 / lambda), from metadata
    double bilipschitz() const;
    IFS phi_ifs(const Region& region) const;
    // the contracting IFS of the inverses of the expanding part
    IFS psi_inverse_ifs(const Region& region) const;
};

struct SkewPoint {
    ShiftPoint x;
    Vec y;
};

template <class T>
struct Leaf {
    Word sigma;       // free symbols sigma_1..sigma_n; the position-0 symbol is x_0
    T fiber;          // phi_{sigma_n} o ... o phi_{sigma_1} o phi^-1_{x_-n} o ... o phi^-1_{x_-1}(y)
    ShiftPoint base;  // (..., x_{-n-1}, sigma_1, ..., sigma_n, x_0; x_1, ...)
};

// Fiber iteration with explicit per-symbol operations; fwd(i, y) = phi_i(y), inv(i, y) = phi_i^-1(y).
template <class T, class F, class G>
std::pair<ShiftPoint, T> iterate_fibers(ShiftPoint x, T y, long n, F&& fwd, G&& inv)
{
    for (; n > 0; --n) {
        y = fwd(x.at(0), y);
        x = x.shift();
    }
    for (; n < 0; ++n) {
        y = inv(x.at(-1), y);
        x = x.inverse_shift();
    }
    return {std::move(x), std::move(y)};
}

namespace detail {

template <class T, class F>
void grow_leaves(const ShiftPoint& x, const Periodic& tail, int n, const T& v, Word& sigma, F& fwd,
                 std::vector<Leaf<T>>& out)
{
    if (static_cast<int>(sigma.size()) == n) {
        std::vector<int> prefix{x.at(0)};
        prefix.insert(prefix.end(), sigma.rbegin(), sigma.rend());
        out.push_back(Leaf<T>{sigma, v, ShiftPoint{tail.prepend(prefix), x.right, x.d}});
        return;
    }
    for (int s = 0; s < x.d; ++s) {
        sigma.push_back(s);
        grow_leaves(x, tail, n, fwd(s, v), sigma, fwd, out);
        sigma.pop_back();
    }
}

}  // namespace detail

// Leaves of all levels 0..depth, ordered by level then lexicographically in sigma.
template <class T, class F, class G>
std::vector<Leaf<T>> enumerate_leaves(const ShiftPoint& x, const T& y, int depth, F&& fwd, G&& inv)
{
    std::vector<Leaf<T>> out;
    T pulled = y;
    for (int n = 0; n <= depth; ++n) {
        if (n > 0)
            pulled = inv(x.at(-n), pulled);
        Word sigma;
        detail::grow_leaves(x, x.left.drop(n + 1), n, pulled, sigma, fwd, out);
    }
    return out;
}

SkewPoint iterate_skew(const SkewProduct& f, const SkewPoint& p, long n);

struct LocalUnstable {
    Periodic left;  // constraint z_i = x_i for i <= 0, stored as (x_0, x_-1, ...)
    Vec fiber;

    bool same_as(const LocalUnstable& o) const;
    bool disjoint_from(const LocalUnstable& o) const;
    std::string describe() const;
};

LocalUnstable local_unstable(const SkewProduct& f, const SkewPoint& p);

struct UnstableEnumeration {
    SkewPoint base;
    int depth = 0;
    std::vector<Leaf<Vec>> leaves;
    ReachSet projection;
};

UnstableEnumeration enumerate_unstable(const SkewProduct& f, const SkewPoint& p, int depth, double eps);

struct ProjectionReport {
    bool match = false;
    std::vector<CellKey> only_unstable;  // cells hit by the enumeration but not the orbit
    std::vector<CellKey> only_orbit;
};

// Compares the projected unstable set of a fixed point with the forward orbit
// of its fiber coordinate under `orbit_ifs` (the fiber IFS of f when null).
ProjectionReport project_unstable_equals_ifs(const SkewProduct& f, const SkewPoint& p, int depth, double eps,
                                             const IFS* orbit_ifs = nullptr);

struct StripOutcome {
    ShiftPoint strip_base;
    Vec center;
    double radius = 0.0;
    int depth = -1;  // first level with a hit, -1 if none
    Word sigma;
    std::optional<ShiftPoint> witness_base;
    Vec witness_fiber;
};

struct BlenderReport {
    bool pass = false;
    int worst_depth = 0;
    bool covering = false;
    double covering_margin = 0.0;
    bool well_distributed = false;
    std::vector<StripOutcome> strips;
};

struct BlenderOptions {
    double eps = 1.0 / 32;
    int strip_samples = 100;
    std::uint64_t seed = 1;
    int max_depth = 16;
    int fixed_symbol = 0;  // the fixed point is (constant fixed_symbol, fixed point of phi_{fixed_symbol})
    double grid_step = 0.0;  // certificate grid; 0 selects eps / 4
};

BlenderReport verify_symbolic_cs_blender(const SkewProduct& f, const Region& D, const BlenderOptions& opt);

struct DoubleBlenderReport {
    bool pass = false;
    BlenderReport cs;
    BlenderReport cu;
};

DoubleBlenderReport verify_symbolic_double_blender(const SkewProduct& f, const Region& D1, const Region& D2,
                                                   const BlenderOptions& opt);

using Rational = boost::multiprecision::cpp_rational;

// y -> a y + b on the line, with exact inverse.
struct RationalAffine {
    Rational a, b;
    Rational operator()(const Rational& y) const { return a * y + b; }
    Rational inv(const Rational& y) const { return (y - b) / a; }
};

std::vector<Leaf<Rational>> enumerate_unstable_exact(const std::vector<RationalAffine>& maps, const ShiftPoint& x,
                                                     const Rational& y, int depth);
std::pair<ShiftPoint, Rational> iterate_skew_exact(const std::vector<RationalAffine>& maps, const ShiftPoint& x,
                                                   const Rational& y, long n);

}  // namespace dyn
