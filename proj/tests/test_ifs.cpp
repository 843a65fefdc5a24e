#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "dyn/ifs.hpp"

using namespace dyn;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

IFS affine_1d(const std::vector<std::pair<double, double>>& ab, double lo = 0, double hi = 1, bool open = false)
{
    auto I = StateSpace::interval(-1, 2);
    std::vector<SmoothMap> g;
    for (auto [a, b] : ab)
        g.push_back(SmoothMap::affine(I, Mat::Constant(1, 1, a), v1(b)));
    IFS ifs(g, Region::interval(lo, hi, open));
    ifs.compute_fixed_points();
    return ifs;
}

IFS dyadic() { return affine_1d({{0.5, 0.0}, {0.5, 0.5}}); }

std::set<CellKey> keys_of(const ReachSet& rs)
{
    std::set<CellKey> s;
    for (const auto& [k, _] : rs.cells)
        s.insert(k);
    return s;
}

// Largest r with [x-r, x+r] cut to [0,1] inside one of the intervals, minimized over a fine x grid.
double brute_d(const std::vector<std::pair<double, double>>& images)
{
    double d = 1e9;
    for (int j = 0; j <= 4096; ++j) {
        double x = j / 4096.0, best = -1;
        for (auto [a, b] : images) {
            if (x < a || x > b)
                continue;
            double left = a <= 0 ? 1e9 : x - a;
            double right = b >= 1 ? 1e9 : b - x;
            best = std::max(best, std::min(left, right));
        }
        d = std::min(d, best);
    }
    return d;
}

}  // namespace

TEST_CASE("forward orbit of the dyadic pair at depth 3")
{
    auto ifs = dyadic();
    auto rs = forward_orbit(ifs, v1(0.0), 3, 1.0 / 16, 1 << 20);
    // oracle: every word of length <= 3 applied to 0 in exact eighths
    std::set<CellKey> expect;
    for (int len = 0; len <= 3; ++len)
        for (int w = 0; w < (1 << len); ++w) {
            int num = 0;  // value in units of 1/8
            for (int k = 0; k < len; ++k)
                num = num / 2 + ((w >> k & 1) ? 4 : 0);
            expect.insert(CellKey{num * 2});
        }
    CHECK(keys_of(rs) == expect);
    CHECK(rs.cells.size() == 8);
    for (const auto& [k, e] : rs.cells) {
        CHECK(rs.grid.in_cell(e.point, k));
        CHECK(std::abs(ifs.apply(e.word, rs.seed)[0] - e.point[0]) <= rs.eps / 2);
        CHECK(std::fmod(e.point[0] * 8, 1.0) == 0.0);
    }
}

TEST_CASE("forward orbit trivial cases")
{
    auto id = IFS({SmoothMap::identity(StateSpace::interval(0, 1))}, Region::interval(0, 1));
    CHECK(forward_orbit(id, v1(0.3), 5, 0.01, 1000).cells.size() == 1);

    auto half = affine_1d({{0.5, 0.0}});
    auto rs = forward_orbit(half, v1(1.0), 10, 1e-3, 1000);
    CHECK(rs.cells.size() == 11);
}

TEST_CASE("forward orbit is monotone in depth and replays")
{
    auto ifs = affine_1d({{0.4, 0.0}, {0.45, 0.3}, {0.3, 0.65}});
    for (int d = 1; d < 7; ++d) {
        auto a = keys_of(forward_orbit(ifs, v1(0.2), d, 1.0 / 128, 1 << 20));
        auto b = keys_of(forward_orbit(ifs, v1(0.2), d + 1, 1.0 / 128, 1 << 20));
        CHECK(std::includes(b.begin(), b.end(), a.begin(), a.end()));
    }
    auto rs = forward_orbit(ifs, v1(0.2), 8, 1.0 / 256, 1 << 20, Dedup::cell);
    for (const auto& [k, e] : rs.cells)
        CHECK(std::abs(ifs.apply(e.word, rs.seed)[0] - e.point[0]) <= rs.eps / 2);
}

TEST_CASE("budget truncation is flagged")
{
    auto rs = forward_orbit(dyadic(), v1(0.0), 20, 1e-6, 100);
    CHECK(rs.truncated);
    CHECK(rs.visited == 100);
}

TEST_CASE("covering certificates on the line")
{
    auto cert = verify_covering(dyadic(), Region::interval(0, 1), 1.0 / 8);
    CHECK(cert.covered);
    CHECK(cert.margin == 0.0);
    CHECK_FALSE(cert.valid());
    for (int i = 0; i < cert.num_cells(); ++i)
        CHECK(cert.assignment[i] == (cert.cell_center(i)[0] < 0.5 ? 0 : 1));

    try {
        verify_covering(affine_1d({{0.5, 0.0}}), Region::interval(0, 1), 1.0 / 16);
        FAIL("expected Uncovered");
    } catch (const Uncovered& u) {
        CHECK(u.witness > 0.5);
    }
    try {
        verify_covering(affine_1d({{0.5, 0.0}, {0.5, 0.6}}), Region::interval(0, 1), 1.0 / 64);
        FAIL("expected Uncovered");
    } catch (const Uncovered& u) {
        CHECK(u.witness > 0.5);
        CHECK(u.witness < 0.6);
    }
    try {
        verify_covering(dyadic(), Region::interval(0, 1, true), 1.0 / 8);
        FAIL("expected Uncovered");
    } catch (const Uncovered& u) {
        CHECK(std::abs(u.witness - 0.5) <= 1.0 / 8);
    }
}

TEST_CASE("missing metadata is rejected")
{
    auto I = StateSpace::interval(0, 1);
    IFS ifs({SmoothMap(I, I, [](const Vec& x) { return Vec(x / 2); })}, Region::interval(0, 1));
    CHECK_THROWS_AS(verify_covering(ifs, Region::interval(0, 1), 0.1), NoMetadata);
}

TEST_CASE("covering radius of the triple")
{
    auto ifs = affine_1d({{0.5, 0.0}, {0.5, 0.25}, {0.5, 0.5}});
    double oracle = brute_d({{0, 0.5}, {0.25, 0.75}, {0.5, 1}});
    CHECK(oracle == doctest::Approx(0.125));
    for (double step : {1.0 / 8, 1.0 / 16, 1.0 / 64}) {
        double d = compute_d(ifs, Region::interval(0, 1), step);
        CHECK(d <= oracle + 1e-12);
        CHECK(d >= oracle - step);
    }
    CHECK_THROWS_AS(compute_d(dyadic(), Region::interval(0, 1, true), 1.0 / 8), Uncovered);
}

TEST_CASE("certificate soundness on random points")
{
    auto ifs = affine_1d({{0.5, 0.0}, {0.5, 0.25}, {0.5, 0.5}});
    auto cert = verify_covering(ifs, Region::interval(0, 1), 1.0 / 32);
    REQUIRE(cert.valid());
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<> u(0, 1);
    for (int t = 0; t < 1000; ++t) {
        double x = u(rng);
        int idx = cert.cell_index(v1(x));
        int g = cert.assignment[idx];
        double b = ifs.generators[g](v1(0))[0];
        double lo = idx * cert.grid_step, hi = lo + cert.grid_step;
        CHECK(b <= lo + 1e-15);
        CHECK(hi <= b + 0.5 + 1e-15);
    }
}

TEST_CASE("well-distributed check")
{
    auto r = verify_well_distributed({v1(0), v1(0.5), v1(1)}, Region::interval(0, 1), 1.0 / 8);
    CHECK_FALSE(r.ok);
    CHECK(std::abs(r.witness[0] - 0.25) < 1.0 / 32);

    std::vector<Vec> grid;
    for (int i = 0; i <= 32; ++i)
        grid.push_back(v1(i / 32.0));
    CHECK(verify_well_distributed(grid, Region::interval(0, 1), 1.0 / 8).ok);
    CHECK_FALSE(verify_well_distributed(std::vector<Vec>{}, Region::interval(0, 1), 0.1).ok);
}

TEST_CASE("cube cover count matches the interval covering oracle")
{
    for (double r : {0.5, 0.3, 0.0625, 0.11}) {
        // greedy interval cover of [-1,1] by intervals of length 2r is optimal in 1D
        int count = 0;
        for (double left = -1.0; left < 1.0 - 1e-12; left += 2 * r)
            ++count;
        for (int n = 1; n <= 3; ++n) {
            auto c = cube_cover_centers(n, r);
            CHECK(static_cast<int>(c.size()) == static_cast<int>(std::pow(count, n)));
            std::mt19937_64 rng(n);
            std::uniform_real_distribution<> u(-1, 1);
            for (int t = 0; t < 300; ++t) {
                Vec x(n);
                for (int k = 0; k < n; ++k)
                    x[k] = u(rng);
                bool hit = false;
                for (const auto& z : c)
                    hit = hit || (z - x).cwiseAbs().maxCoeff() <= r;
                CHECK(hit);
            }
        }
    }
}

TEST_CASE("translated contractions")
{
    for (int n = 1; n <= 3; ++n) {
        for (double lam : {0.3, 0.5, 0.7}) {
            CAPTURE(n);
            CAPTURE(lam);
            auto P = StateSpace::box(n, -4, 4);
            auto phi = SmoothMap::affine(P, lam * Mat::Identity(n, n), Vec::Zero(n));
            auto tc = construct_translations(phi, lam);
            CHECK(tc.k == 2 * tc.k1);
            CHECK(tc.ifs.size() == tc.k + 1);
            CHECK(tc.k1 == doctest::Approx(tc.C_n * std::pow(2.0, n) * std::pow(lam, -n)));
            double step = n == 3 ? 0.1 : 0.05;
            auto cert = verify_covering(tc.ifs, tc.ifs.region, step);
            CHECK(cert.valid());
            CHECK(verify_well_distributed(tc.ifs, tc.ifs.region, cert.margin).ok);
        }
    }
    auto I = StateSpace::box(1, -4, 4);
    auto phi = SmoothMap::affine(I, Mat::Constant(1, 1, 0.5), v1(0));
    CHECK_THROWS_AS(construct_translations(phi, 1.0), LambdaOutOfRange);
    CHECK_THROWS_AS(construct_translations(phi, 0.0), LambdaOutOfRange);
    auto tight = SmoothMap::affine(StateSpace::box(1, -1.2, 1.2), Mat::Constant(1, 1, 0.5), v1(0));
    CHECK_THROWS_AS(construct_translations(tight, 0.5), DomainOverflow);
    auto scaled = construct_translations(phi, 0.5, 0.1);
    CHECK(verify_covering(scaled.ifs, scaled.ifs.region, 0.005).valid());
}

TEST_CASE("density words for the dyadic pair")
{
    auto ifs = dyadic();
    auto cert = verify_covering(ifs, Region::interval(0, 1), 1.0 / 64);
    double target = 0.3, rad = std::ldexp(1.0, -8);
    Word w = certify_density(ifs, &cert, v1(0), v1(target), rad, 64);
    CHECK(w.size() <= 9);
    CHECK(std::abs(ifs.apply(w, v1(0))[0] - target) < rad);

    // exhaustive oracle: the shortest hitting word has this length or less
    size_t shortest = 100;
    for (int len = 0; len <= 9 && shortest == 100; ++len)
        for (int m = 0; m < (1 << len); ++m) {
            Word cand;
            for (int k = 0; k < len; ++k)
                cand.push_back(m >> k & 1);
            if (std::abs(ifs.apply(cand, v1(0))[0] - target) < rad) {
                shortest = len;
                break;
            }
        }
    CHECK(w.size() == shortest);
    // binary expansion 0.3 = 0.010011001..., applied last digit first
    Word digits{0, 1, 0, 0, 1, 1, 0, 0, 1};
    CHECK(Word(w.rbegin(), w.rend()) == Word(digits.begin(), digits.begin() + w.size()));

    CHECK(certify_density(ifs, &cert, v1(0.3), v1(0.3), 0.01, 10).empty());
    CHECK_THROWS_AS(certify_density(ifs, nullptr, v1(0), v1(0.3), rad, 10), PreconditionError);
    CHECK_THROWS_AS(certify_density(ifs, &cert, v1(0), v1(0.3), 1e-12, 3), StepLimit);
}

TEST_CASE("backward itineraries")
{
    auto ifs = dyadic();
    auto cert = verify_covering(ifs, Region::interval(0, 1), 1.0 / 64);
    Word w = backward_itinerary(ifs, cert, v1(0.3), 4);
    CHECK(w == Word{0, 1, 0, 0});
    double y = 0.3;
    for (int s : w) {
        y = ifs.generators[s].inverse()(v1(y))[0];
        CHECK(y >= 0.0);
        CHECK(y <= 1.0);
    }
    CHECK(backward_itinerary(ifs, cert, v1(1.0), 6) == Word(6, 1));
    CHECK(backward_itinerary(ifs, cert, v1(0.3), 0).empty());
}

TEST_CASE("minimality of rotations")
{
    auto T = StateSpace::torus(1);
    double golden = (std::sqrt(5.0) - 1) / 2;
    IFS rot({SmoothMap(T, T, [golden](const Vec& x) { return Vec(x.array() + golden); })}, Region::interval(0, 1));
    std::vector<Vec> seeds{v1(0.0), v1(0.37), v1(0.81)};
    auto rep = minimality_experiment(rot, seeds, 1.0 / 64, 100000);
    CHECK(rep.min_coverage == 1.0);

    IFS rat({SmoothMap(T, T, [](const Vec& x) { return Vec(x.array() + 2.0 / 7.0); })}, Region::interval(0, 1));
    auto rep2 = minimality_experiment(rat, {v1(0.01)}, 1.0 / 64, 100000);
    CHECK(rep2.min_coverage == doctest::Approx(7.0 / 64));
}

TEST_CASE("recurrence")
{
    auto T = StateSpace::torus(1);
    double golden = (std::sqrt(5.0) - 1) / 2;
    auto rot = SmoothMap(T, T, [golden](const Vec& x) { return Vec(x.array() + golden); })
                   .with_inverse(SmoothMap(T, T, [golden](const Vec& x) { return Vec(x.array() - golden); }));
    std::mt19937_64 rng(4);
    auto samples = sample_points(T, 50, rng);
    CHECK(recurrence_experiment(rot, samples, 0.01, 200).recurrent_fraction == 1.0);

    auto R = StateSpace(std::vector<Factor>{Factor::interval(-INFINITY, INFINITY)});
    auto tr = SmoothMap(R, R, [](const Vec& x) { return Vec(x.array() + 1.0); })
                  .with_inverse(SmoothMap(R, R, [](const Vec& x) { return Vec(x.array() - 1.0); }));
    CHECK(recurrence_experiment(tr, {v1(0.0), v1(2.5)}, 0.5, 100).recurrent_fraction == 0.0);

    auto A = StateSpace::annulus();
    auto tw = SmoothMap(A, A, [](const Vec& x) {
                  Vec y = x;
                  y[1] += x[0];
                  return y;
              }).with_inverse(SmoothMap(A, A, [](const Vec& x) {
        Vec y = x;
        y[1] -= x[0];
        return y;
    }));
    auto pts = sample_points(A, 100, rng);
    auto rep = recurrence_experiment(tw, pts, 0.02, 500);
    CHECK(rep.recurrent_fraction >= 0.95);
    // oracle: each circle I = const is the rotation by I
    for (size_t i = 0; i < pts.size(); ++i) {
        double I = pts[i][0];
        bool ret = false;
        for (int n = 1; n <= 500 && !ret; ++n) {
            double f = std::fmod(n * I, 1.0);
            ret = std::min(f, 1 - f) < 0.02 * (1 - 1e-9);
        }
        CHECK(rep.recurrent[i] == ret);
    }
}
