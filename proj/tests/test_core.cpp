#include <doctest.h>

#include <cmath>
#include <random>

#include "dyn/core.hpp"
#include "dyn/fixed_point.hpp"

using namespace dyn;

namespace {

const double kTwoPi = 2.0 * M_PI;

Vec v1(double a) { return Vec::Constant(1, a); }
Vec v2(double a, double b)
{
    Vec v(2);
    v << a, b;
    return v;
}

SmoothMap twist()
{
    auto A = StateSpace::annulus();
    return SmoothMap(A, A, [](const Vec& x) { return v2(x[0], x[0] + x[1]); });
}

SmoothMap cos_shear(double eps)
{
    auto A = StateSpace::annulus(-1.0, 2.0);
    return SmoothMap(
        A, A, [eps](const Vec& x) { return v2(x[0] + eps * std::cos(kTwoPi * x[1]), x[1]); },
        [eps](const Vec& x) {
            Mat J(2, 2);
            J << 1, -eps * kTwoPi * std::sin(kTwoPi * x[1]), 0, 1;
            return J;
        });
}

}  // namespace

TEST_CASE("state space metric wraps on circles")
{
    auto T = StateSpace::torus(1);
    CHECK(T.distance(v1(0.95), v1(0.05)) == doctest::Approx(0.1));
    auto A = StateSpace::annulus();
    CHECK(A.distance(v2(0.2, 0.9), v2(0.5, 0.1)) == doctest::Approx(0.3));
    CHECK(A.dim() == 2);
}

TEST_CASE("metric symmetry and triangle inequality on dyadic triples")
{
    auto S = StateSpace(std::vector<Factor>{Factor::interval(0, 1), Factor::circle(1.0), Factor::circle(2.0)});
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> u(0, 255);
    for (int t = 0; t < 500; ++t) {
        auto pick = [&] {
            Vec x(3);
            x << u(rng) / 256.0, u(rng) / 256.0, u(rng) / 128.0;
            return x;
        };
        Vec x = pick(), y = pick(), z = pick();
        CHECK(S.distance(x, y) == S.distance(y, x));
        CHECK(S.distance(x, z) <= S.distance(x, y) + S.distance(y, z));
    }
}

TEST_CASE("evaluate reduces circle coordinates and checks intervals")
{
    auto f = twist();
    Vec y = f.evaluate(v2(0.5, 0.9));
    CHECK(y[0] == doctest::Approx(0.5));
    CHECK(y[1] == doctest::Approx(0.4));
    CHECK_THROWS_AS(f.evaluate(v2(1.5, 0.1)), PointOutsideDomain);

    auto I = StateSpace::interval(0, 1);
    auto half = SmoothMap::affine(I, Mat::Constant(1, 1, 0.5), v1(0));
    CHECK(half.evaluate(v1(0.8))[0] == doctest::Approx(0.4));
    auto id = SmoothMap::identity(I);
    CHECK(id.evaluate(v1(0.37))[0] == 0.37);
}

TEST_CASE("jacobians")
{
    auto P = StateSpace::box(2, -1, 1);
    Mat D(2, 2);
    D << 2, 0, 0, 0.5;
    auto lin = SmoothMap(P, P, [D](const Vec& x) { return Vec(D * x); });
    Mat J = lin.jacobian(v2(0.1, 0.2), 1e-5);
    CHECK((J - D).cwiseAbs().maxCoeff() < 1e-9);

    Mat Jt = twist().jacobian(v2(0.4, 0.3));
    Mat S(2, 2);
    S << 1, 0, 1, 1;
    CHECK((Jt - S).cwiseAbs().maxCoeff() < 1e-8);

    // analytic differentiation: d/dtheta (eps cos 2 pi theta) = -eps 2 pi sin 2 pi theta
    auto c = cos_shear(0.1);
    Mat Jc = c.jacobian_fd(v2(0.3, 0.25));
    CHECK(Jc(0, 1) == doctest::Approx(-0.1 * std::sin(kTwoPi * 0.25) * kTwoPi).epsilon(1e-6));
    CHECK(Jc(0, 0) == doctest::Approx(1.0));
    CHECK(std::abs(Jc(1, 0)) < 1e-8);

    auto I = StateSpace::interval(0, 1);
    auto sq = SmoothMap(I, I, [](const Vec& x) { return Vec(x.array().square()); });
    CHECK_THROWS_AS(sq.jacobian_fd(v1(1e-7), 1e-3), StepTooLarge);
}

TEST_CASE("analytic jacobian agrees with finite differences")
{
    auto c = cos_shear(0.1);
    std::mt19937_64 rng(3);
    for (int t = 0; t < 50; ++t) {
        Vec x = v2(std::uniform_real_distribution<>(0.2, 0.8)(rng), std::uniform_real_distribution<>(0, 1)(rng));
        CHECK((c.jacobian(x) - c.jacobian_fd(x, 1e-5)).cwiseAbs().maxCoeff() < 1e-7);
    }
}

TEST_CASE("compose multiplies jacobians")
{
    auto f = cos_shear(0.1);
    auto A = f.domain();
    auto g = SmoothMap(A, A, [](const Vec& x) { return v2(x[0], x[1] + 0.3 * x[0]); });
    auto h = compose(f, g);
    std::mt19937_64 rng(11);
    for (int t = 0; t < 20; ++t) {
        Vec x = v2(std::uniform_real_distribution<>(0.2, 0.8)(rng), std::uniform_real_distribution<>(0, 1)(rng));
        Mat expect = f.jacobian(g(x)) * g.jacobian_fd(x);
        CHECK((h.jacobian_fd(x) - expect).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("symplectic check")
{
    std::mt19937_64 rng(5);
    auto A = StateSpace::annulus();
    auto samples = sample_points(StateSpace(std::vector<Factor>{Factor::interval(0.2, 0.8), Factor::circle()}), 100, rng);
    auto r = check_symplectic(twist(), samples, 1e-10);
    CHECK(r.pass);
    CHECK(r.max_residual < 1e-10);

    auto A2 = StateSpace::annulus(0, 4);
    auto dbl = SmoothMap(A2, A2, [](const Vec& x) { return v2(2 * x[0], x[1]); });
    auto r2 = check_symplectic(dbl, samples, 1e-8);
    CHECK_FALSE(r2.pass);
    CHECK(r2.max_residual == doctest::Approx(1.0).epsilon(1e-6));

    CHECK(check_symplectic(cos_shear(0.1), samples, 1e-8).pass);

    auto I = StateSpace::interval(0, 1);
    CHECK_THROWS_AS(check_symplectic(SmoothMap::identity(I), {v1(0.5)}, 1e-8), OddDimension);
}

TEST_CASE("fixed points and classification")
{
    auto I = StateSpace::interval(0, 1);
    auto f = SmoothMap::affine(I, Mat::Constant(1, 1, 0.5), v1(0.3));
    auto rec = find_fixed_point(f, v1(0.1));
    CHECK(rec.point[0] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(rec.eigen_moduli.size() == 1);
    CHECK(rec.eigen_moduli[0] == doctest::Approx(0.5));
    CHECK(rec.classification == FixedPointType::attracting);

    auto P = StateSpace::box(2, -1, 1);
    Mat D(2, 2);
    D << 1 / 0.9, 0, 0, 0.9;
    auto s = SmoothMap::affine(P, D, Vec::Zero(2));
    auto rs = find_fixed_point(s, v2(0.3, -0.2), 1e-12, 500, 0.15);
    CHECK(rs.point.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(rs.classification == FixedPointType::saddle);
    CHECK(rs.delta_weak.has_value());
    auto rs2 = find_fixed_point(s, v2(0.3, -0.2), 1e-12, 500, 0.05);
    CHECK_FALSE(rs2.delta_weak.has_value());

    auto id = find_fixed_point(SmoothMap::identity(I), v1(0.4));
    CHECK(id.classification == FixedPointType::degenerate);
}

TEST_CASE("fixed point of a contraction is independent of the guess")
{
    auto P = StateSpace::box(2, -2, 2);
    auto f = SmoothMap(
        P, P, [](const Vec& x) { return v2(0.4 * std::sin(x[1]) + 0.1, 0.3 * std::cos(x[0])); }, {},
        MapMeta{0.0, 0.5, false, false});
    std::mt19937_64 rng(9);
    Vec ref = find_fixed_point(f, Vec::Zero(2)).point;
    for (int t = 0; t < 10; ++t) {
        Vec g = v2(std::uniform_real_distribution<>(-1, 1)(rng), std::uniform_real_distribution<>(-1, 1)(rng));
        CHECK((find_fixed_point(f, g).point - ref).cwiseAbs().maxCoeff() < 2e-12);
    }
}

TEST_CASE("weak hyperbolicity")
{
    CHECK(check_weak_hyperbolic(std::vector<double>{0.9, 1 / 0.9}, 0.2));
    CHECK_FALSE(check_weak_hyperbolic(std::vector<double>{0.7, 1 / 0.7}, 0.2));
    CHECK_THROWS_AS(check_weak_hyperbolic(std::vector<double>{1.0, 1.0}, 0.2), NotHyperbolic);
}

TEST_CASE("inverse round trip and co-norm")
{
    auto P = StateSpace::box(2, -5, 5);
    Mat A(2, 2);
    A << 2, 1, 1, 1;
    auto f = SmoothMap::affine(P, A, v2(0.1, -0.2));
    REQUIRE(f.invertible());
    Vec x = v2(0.3, 0.7);
    CHECK((f(f.inverse()(x)) - x).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(f.meta().symplectic);
    CHECK(co_norm(A) == doctest::Approx((3 - std::sqrt(5.0)) / 2));
    // Newton preimage without the attached inverse
    auto g = SmoothMap(P, P, [A](const Vec& y) { return Vec(A * y); });
    CHECK((A * g.preimage(x, Vec::Zero(2)) - x).cwiseAbs().maxCoeff() < 1e-10);
}
