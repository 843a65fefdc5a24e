#include <doctest.h>

#include <cmath>
#include <random>

#include "dyn/hamiltonian.hpp"
#include "dyn/integrable.hpp"
#include "dyn/perturb.hpp"

using namespace dyn;

namespace {

Vec v2(double a, double b)
{
    return (Vec(2) << a, b).finished();
}

constexpr double kTwoPi = 6.283185307179586;

std::vector<Vec> annulus_samples(int n, std::uint64_t seed, double lo = 0.05, double hi = 0.95)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> I(lo, hi), T(0, 1);
    std::vector<Vec> out;
    for (int i = 0; i < n; ++i)
        out.push_back(v2(I(rng), T(rng)));
    return out;
}

}  // namespace

TEST_CASE("bump eta")
{
    CHECK(bump_eta(0.5) == doctest::Approx(std::exp(-1 / 0.25) * std::exp(4.0)).epsilon(1e-15));
    CHECK(bump_eta(0.5) == doctest::Approx(1.0));
    CHECK(bump_eta(0.0) == 0.0);
    CHECK(bump_eta(1.0) == 0.0);
    CHECK(bump_eta(-0.1) == 0.0);
    CHECK(bump_eta(0.3) == doctest::Approx(std::exp(4 - 1 / 0.21)));
    // finite differences up to order three vanish at both ends
    for (double x0 : {0.0, 1.0}) {
        double h = 0.01;
        double d1 = (bump_eta(x0 + h) - bump_eta(x0 - h)) / (2 * h);
        double d2 = (bump_eta(x0 + h) - 2 * bump_eta(x0) + bump_eta(x0 - h)) / (h * h);
        double d3 = (bump_eta(x0 + 2 * h) - 2 * bump_eta(x0 + h) + 2 * bump_eta(x0 - h) - bump_eta(x0 - 2 * h)) /
                    (2 * h * h * h);
        CHECK(std::abs(d1) < 1e-30);
        CHECK(std::abs(d2) < 1e-30);
        CHECK(std::abs(d3) < 1e-10);
    }
    for (double x : {0.2, 0.5, 0.8})
        CHECK(bump_eta_deriv(x) == doctest::Approx((bump_eta(x + 1e-6) - bump_eta(x - 1e-6)) / 2e-6).epsilon(1e-6));
}

TEST_CASE("twist maps")
{
    auto T = linear_twist(0.0, 1.0).map();
    Vec y = T(v2(0.3, 0.1));
    CHECK(y[0] == 0.3);
    CHECK(y[1] == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(check_symplectic(T, annulus_samples(50, 1), 1e-10).pass);

    auto R = linear_twist(0.25, 0.0).map();
    Vec p = v2(0.7, 0.1);
    for (int n = 0; n < 4; ++n)
        p = R(p);
    CHECK(p[0] == 0.7);
    CHECK(p[1] == doctest::Approx(0.1).epsilon(1e-12));

    // integrable invariance: the action never changes
    auto G = twist_map([](double I) { return std::sin(3 * I) + 0.1; }, [](double I) { return 3 * std::cos(3 * I); })
                 .map();
    for (const auto& x : annulus_samples(20, 2)) {
        Vec z = x;
        for (int n = 0; n < 200; ++n) {
            z = G(z);
            REQUIRE(z[0] == x[0]);
        }
    }
    CHECK(check_symplectic(G, annulus_samples(50, 3), 1e-10).pass);
    CHECK_THROWS_AS(linear_twist(0, 1, StateSpace::box(2, 0, 1)), PreconditionError);
}

TEST_CASE("conjugating shear")
{
    auto phi = conjugating_shear(0.1);
    Vec y = phi(v2(0.5, 0.0));
    CHECK(y[0] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(y[1] == 0.0);
    auto id = conjugating_shear(0.0);
    CHECK(id(v2(0.4, 0.3)) == v2(0.4, 0.3));
    for (const auto& x : annulus_samples(100, 4)) {
        Vec back = phi.inverse()(phi(x));
        CHECK((back - x).cwiseAbs().maxCoeff() < 1e-14);
    }
    CHECK(check_symplectic(phi, annulus_samples(50, 5), 1e-10).pass);
    CHECK_THROWS_AS(conjugating_shear(0.6), DomainOverflow);

    // T2 = phi T1 phi^-1 keeps the cosine graph phi({I = c}) and it crosses {I = c + 0.05}
    auto T1 = linear_twist(0.0, 1.0).map();
    auto T2 = conjugate(phi, T1);
    double c = 0.4;
    for (int k = 0; k < 20; ++k) {
        double th = k / 20.0;
        Vec p = v2(c + 0.1 * std::cos(kTwoPi * th), th);
        Vec q = T2(p);
        CHECK(q[0] == doctest::Approx(c + 0.1 * std::cos(kTwoPi * q[1])).epsilon(1e-12));
    }
    int sign_changes = 0;
    double prev = c + 0.1 - (c + 0.05);
    for (int k = 1; k <= 100; ++k) {
        double cur = c + 0.1 * std::cos(kTwoPi * k / 100.0) - (c + 0.05);
        sign_changes += (cur > 0) != (prev > 0);
        prev = cur;
    }
    CHECK(sign_changes == 2);
    CHECK(check_symplectic(T2, annulus_samples(50, 6, 0.2, 0.8), 1e-10).pass);
}

TEST_CASE("h_eps flow")
{
    auto id = flow_h_epsilon(0.1, 0.0);
    CHECK(id(v2(0.5, 0.3)) == v2(0.5, 0.3));
    auto psi = flow_h_epsilon(0.1, 1.0);
    for (double th : {0.0, 0.3, 0.77}) {
        Vec p = v2(1.2, th);
        CHECK(psi(p) == p);
        CHECK(psi(v2(1.0, th)) == v2(1.0, th));
    }
    std::vector<Vec> inside = annulus_samples(20, 7, 0.1, 0.9);
    CHECK(check_symplectic(psi, inside, 1e-6).pass);
    for (const auto& x : inside)
        CHECK((psi.jacobian(x) - psi.jacobian_fd(x)).cwiseAbs().maxCoeff() < 1e-3);
    auto back = psi.inverse();
    for (const auto& x : inside) {
        Vec z = back(psi(x));
        CHECK(StateSpace({Factor::interval(0, 2), Factor::circle()}).distance(z, x) < 1e-8);
    }
    // the circle r = 0.5 moves: its image leaves the circle by more than 1e-3
    double moved = 0;
    for (int k = 0; k < 200; ++k)
        moved = std::max(moved, std::abs(psi(v2(0.5, k / 200.0))[0] - 0.5));
    CHECK(moved > 1e-3);
    CHECK_THROWS_AS(flow_h_epsilon(0.1, 1.0, 16), PreconditionError);
}

TEST_CASE("bump translation")
{
    auto N = StateSpace::box(2, -1, 1);
    Region U = Region::box(v2(-0.2, -0.2), v2(0.2, 0.2));
    Region W = Region::box(v2(-0.6, -0.6), v2(0.6, 0.6));
    Vec u = Vec::Constant(1, 0.05), v = Vec::Constant(1, -0.03);
    auto g = hamiltonian_bump_translation(N, u, v, U, W);
    Vec a = g(v2(0.1, 0.1));
    CHECK(a[0] == 0.1 + 0.05);
    CHECK(a[1] == 0.1 - 0.03);
    CHECK(g(v2(0.7, 0.0)) == v2(0.7, 0.0));
    CHECK(g(v2(-0.9, 0.95)) == v2(-0.9, 0.95));
    auto zero = hamiltonian_bump_translation(N, Vec::Zero(1), Vec::Zero(1), U, W);
    CHECK(zero(v2(0.3, 0.1)) == v2(0.3, 0.1));
    // collar points: symplectic and invertible
    std::vector<Vec> collar{v2(0.35, 0.1), v2(-0.4, 0.3), v2(0.25, -0.45), v2(0.5, 0.5)};
    CHECK(check_symplectic(g, collar, 1e-8).pass);
    for (const auto& x : collar)
        CHECK((g.jacobian(x) - g.jacobian_fd(x)).cwiseAbs().maxCoeff() < 1e-6);
    for (const auto& x : collar)
        CHECK((g.inverse()(g(x)) - x).cwiseAbs().maxCoeff() < 1e-10);
    CHECK_THROWS_AS(hamiltonian_bump_translation(N, Vec::Constant(1, 0.5), Vec::Zero(1), U, W), VectorTooLarge);
}

TEST_CASE("implicit midpoint conserves a quadratic energy")
{
    Hamiltonian h;
    h.value = [](const Vec& x) { return 0.5 * (x[0] * x[0] + x[1] * x[1]); };
    h.gradient = [](const Vec& x) { return x; };
    auto flow = hamiltonian_flow(StateSpace::box(2, -5, 5), h, kTwoPi / 4, 256);
    Vec y = flow(v2(1.0, 0.0));
    // a' = -b, b' = a: a quarter turn sends (1, 0) to (0, 1)
    CHECK(y[0] == doctest::Approx(0.0).epsilon(1e-4));
    CHECK(y[1] == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(y.squaredNorm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("chain of tori")
{
    auto T1 = linear_twist(0.0, 1.0);
    Region U = Region::box(v2(0.09, 0.0), v2(0.11, 1.0));
    Region V = Region::box(v2(0.89, 0.0), v2(0.91, 1.0));
    auto ch = chain_of_tori_search(T1, 0.1, U, V, 0.01);
    CHECK(ch.length() <= 22);
    // each T2 circle advances the action by less than 2 eps: at least 4 of them are needed
    CHECK(ch.length() >= 9);
    REQUIRE(ch.transitions.size() + 1 == ch.circles.size());
    for (size_t j = 0; j < ch.transitions.size(); ++j) {
        const auto& t = ch.transitions[j];
        CHECK(ch.circles[j].map != ch.circles[j + 1].map);
        for (const auto& c : {ch.circles[j], ch.circles[j + 1]}) {
            double lvl = c.map == 1 ? t[0] : t[0] - 0.1 * std::cos(kTwoPi * t[1]);
            CHECK(lvl == doctest::Approx(c.level).epsilon(1e-12));
        }
        CHECK(ch.crossing_angle[j] > 0.05);
    }

    auto same = chain_of_tori_search(T1, 0.1, U, Region::box(v2(0.095, 0.5), v2(0.105, 0.6)), 0.01);
    CHECK(same.length() == 1);
    CHECK_THROWS_AS(chain_of_tori_search(T1, 0.0, U, V, 0.01), NoChain);
    CHECK(chain_of_tori_search(T1, 0.0, U, Region::box(v2(0.095, 0.2), v2(0.105, 0.3)), 0.01).length() == 1);
}

TEST_CASE("shadowing a chain")
{
    auto T1 = linear_twist(0.0, 1.0);
    Region U = Region::box(v2(0.09, 0.0), v2(0.11, 1.0));
    Region V = Region::box(v2(0.85, 0.0), v2(0.95, 1.0));
    double eps = 0.1;
    auto ch = chain_of_tori_search(T1, eps, U, V, 0.01);
    auto phi = conjugating_shear(eps);
    IFS ifs({T1.map(), conjugate(phi, T1.map())}, Region::box(v2(0, 0), v2(1, 1)));
    // a start point on the first circle
    double c0 = ch.circles[0].level;
    Vec start = ch.circles[0].map == 1 ? v2(c0, 0.123) : v2(c0 + eps * std::cos(kTwoPi * 0.123), 0.123);
    auto res = shadow_chain(ifs, ch, start, eps, V);
    REQUIRE(res.visit_index.size() == ch.transitions.size());
    // replay
    Vec p = start;
    size_t next = 0;
    for (size_t k = 0; k <= res.word.size(); ++k) {
        while (next < res.visit_index.size() && static_cast<size_t>(res.visit_index[next]) == k) {
            CHECK(ifs.space().distance(p, ch.transitions[next]) < eps);
            ++next;
        }
        if (k < res.word.size())
            p = ifs.generators[res.word[k]](p);
    }
    CHECK(next == ch.transitions.size());
    CHECK(V.contains(p));
    for (size_t j = 1; j < res.visit_index.size(); ++j)
        CHECK(res.visit_index[j] >= res.visit_index[j - 1]);

    // a chain of length one starting in V needs no word
    auto one = chain_of_tori_search(T1, eps, V, V, 0.01);
    auto empty = shadow_chain(ifs, one, v2(one.circles[0].level, 0.5), eps, V);
    CHECK(empty.word.empty());

    // rational rotation number 1/2 on I = 0.5: the two-point orbit misses the arc
    Region arc = Region::box(v2(0.45, 0.2), v2(0.55, 0.3));
    auto half = chain_of_tori_search(T1, eps, Region::box(v2(0.495, 0), v2(0.505, 1)), arc, 0.01);
    REQUIRE(half.length() == 1);
    CHECK_THROWS_AS(shadow_chain(ifs, half, v2(0.5, 0.0), eps, arc, 5000), HorizonExhausted);
}

TEST_CASE("rotation hit bound")
{
    double golden = (std::sqrt(5.0) - 1) / 2;
    long q = rotation_hit_bound(golden, 0.05);
    CHECK(q <= 3 / 0.05);
    // brute force: every arc of length 0.05 is hit within q steps from any start
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> U(0, 1);
    for (int t = 0; t < 500; ++t) {
        double x = U(rng), a = U(rng);
        bool hit = false;
        for (long k = 0; k < q && !hit; ++k) {
            double p = x + k * golden;
            p -= std::floor(p);
            double d = p - a;
            d -= std::floor(d);
            hit = d < 0.05;
        }
        CHECK(hit);
    }
    // q is sharp up to the previous convergent: fewer steps leave a gap somewhere
    CHECK(rotation_hit_bound(golden, 0.01) > q);
}

TEST_CASE("generator packs")
{
    auto T1 = linear_twist(0.1, 0.5);
    auto paper = minimal_generator_pack(T1, PackMode::paper_m);
    CHECK(paper.size() == 4);
    auto three = minimal_generator_pack(T1, PackMode::three);
    CHECK(three.size() == 3);
    for (const auto& g : three)
        CHECK(check_symplectic(g, annulus_samples(30, 10, 0.2, 0.8), 1e-10).pass);

    // coverage on a coarse grid; the single twist stays on its circles
    IFS ifs(three, Region::box(v2(0, 0), v2(1, 1)));
    auto seeds = annulus_samples(2, 11, 0.2, 0.8);
    auto rep = minimality_experiment(ifs, seeds, 1.0 / 16, 200000);
    CHECK(rep.min_coverage >= 0.99);
    IFS lone({T1.map()}, Region::box(v2(0, 0), v2(1, 1)));
    auto neg = minimality_experiment(lone, seeds, 1.0 / 16, 200000);
    CHECK(neg.min_coverage <= 1.0 / 16 + 1e-12);
}

TEST_CASE("perturb_map")
{
    auto N = StateSpace::box(2, -1, 1);
    Mat A(2, 2);
    A << 0.5, 0.1, -0.2, 0.6;
    auto G = SmoothMap::affine(N, A, v2(0.1, 0.0));
    CHECK(perturb_map(G, 0.0, 3)(v2(0.2, 0.3)) == G(v2(0.2, 0.3)));
    double eta = 0.01;
    auto P = perturb_map(G, eta, 3);
    std::mt19937_64 rng(12);
    for (const auto& x : sample_points(N, 100, rng)) {
        CHECK((P(x) - G(x)).cwiseAbs().maxCoeff() <= eta * (1 + 1e-9));
        Mat dJ = P.jacobian_fd(x) - G.jacobian(x);
        CHECK(dJ.cwiseAbs().rowwise().sum().maxCoeff() <= eta * (1 + 1e-6));
        CHECK((P.jacobian(x) - P.jacobian_fd(x)).cwiseAbs().maxCoeff() < 1e-7);
        CHECK((P.inverse()(P(x)) - x).cwiseAbs().maxCoeff() < 1e-12);
    }
    // deterministic per seed, different across seeds
    CHECK(perturb_map(G, eta, 3)(v2(0.2, 0.3)) == P(v2(0.2, 0.3)));
    CHECK(perturb_map(G, eta, 4)(v2(0.2, 0.3)) != P(v2(0.2, 0.3)));
    CHECK(*P.meta().lipschitz == doctest::Approx(*G.meta().lipschitz + eta));

    // symplectic inputs stay symplectic
    auto T = linear_twist(0.1, 0.5).map();
    auto Q = perturb_map(T, 0.02, 5);
    auto pts = annulus_samples(100, 13, 0.1, 0.9);
    CHECK(check_symplectic(Q, pts, 1e-8).pass);
    for (const auto& x : pts) {
        CHECK(StateSpace::annulus().distance(Q(x), T(x)) <= 0.02 * (1 + 1e-9));
        Mat dJ = Q.jacobian_fd(x) - T.jacobian(x);
        CHECK(dJ.cwiseAbs().rowwise().sum().maxCoeff() <= 0.02 * (1 + 1e-6));
        CHECK(StateSpace::annulus().distance(Q.inverse()(Q(x)), x) < 1e-12);
    }
}
