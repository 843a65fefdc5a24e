#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "dyn/errors.hpp"

namespace dyn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Factor {
    enum class Kind { Interval, Circle };
    Kind kind = Kind::Interval;
    double lo = 0.0;
    double hi = 1.0;  // for a circle: lo = 0, hi = period

    static Factor interval(double lo, double hi);
    static Factor circle(double period = 1.0);

    bool periodic() const { return kind == Kind::Circle; }
    double width() const { return hi - lo; }
    bool bounded() const;
};

class StateSpace {
public:
    StateSpace() = default;
    explicit StateSpace(std::vector<Factor> factors);

    static StateSpace interval(double lo, double hi);
    static StateSpace box(int n, double lo, double hi);
    static StateSpace torus(int n, double period = 1.0);
    // I x T with I = [lo, hi]
    static StateSpace annulus(double lo = 0.0, double hi = 1.0);

    StateSpace product(const StateSpace& other) const;

    int dim() const { return static_cast<int>(factors_.size()); }
    const Factor& factor(int i) const { return factors_[i]; }
    const std::vector<Factor>& factors() const { return factors_; }

    Vec reduce(Vec x) const;
    bool contains(const Vec& x, double tol = 1e-12) const;
    // a - b with circle components taken in (-P/2, P/2]
    Vec difference(const Vec& a, const Vec& b) const;
    double distance(const Vec& a, const Vec& b) const;
    double diameter() const;
    double volume() const;
    bool bounded() const;
    Vec sample(std::mt19937_64& rng) const;

private:
    std::vector<Factor> factors_;
};

struct MapMeta {
    std::optional<double> lambda;     // lower bound: lambda d(x,y) < d(f x, f y)
    std::optional<double> lipschitz;  // upper bound K
    bool symplectic = false;
    bool affine = false;
};

class SmoothMap {
public:
    using Eval = std::function<Vec(const Vec&)>;
    using Deriv = std::function<Mat(const Vec&)>;

    SmoothMap() = default;
    SmoothMap(StateSpace domain, StateSpace codomain, Eval f, Deriv df = {}, MapMeta meta = {});

    static SmoothMap identity(const StateSpace& space);
    // x -> A x + b, with its inverse attached when A is invertible
    static SmoothMap affine(const StateSpace& space, const Mat& A, const Vec& b);
    static SmoothMap linear(const StateSpace& space, const Mat& A);

    const StateSpace& domain() const { return fwd_->domain; }
    const StateSpace& codomain() const { return fwd_->codomain; }
    const MapMeta& meta() const { return fwd_->meta; }
    bool valid() const { return static_cast<bool>(fwd_); }

    // Raw evaluation: no domain check, circle coordinates reduced.
    Vec operator()(const Vec& x) const;
    // Checked evaluation: PointOutsideDomain if an interval coordinate is out by more than tol.
    Vec evaluate(const Vec& x, double tol = 1e-9) const;

    bool has_jacobian() const { return static_cast<bool>(fwd_->deriv); }
    // Analytic Jacobian when present, otherwise central differences with step h
    // (h <= 0 selects 1e-5 times the domain diameter).
    Mat jacobian(const Vec& x, double h = 0.0) const;
    Mat jacobian_fd(const Vec& x, double h = 0.0) const;
    double default_step() const;

    bool invertible() const { return static_cast<bool>(inv_); }
    SmoothMap inverse() const;
    SmoothMap with_inverse(const SmoothMap& inv) const;
    SmoothMap with_meta(const MapMeta& meta) const;
    // Preimage of y: the attached inverse if any, else Newton from guess.
    Vec preimage(const Vec& y, const Vec& guess, double tol = 1e-13, int max_iter = 50) const;

private:
    struct Data {
        StateSpace domain, codomain;
        Eval eval;
        Deriv deriv;
        MapMeta meta;
    };
    SmoothMap(std::shared_ptr<const Data> f, std::shared_ptr<const Data> g) : fwd_(std::move(f)), inv_(std::move(g)) {}

    std::shared_ptr<const Data> fwd_;
    std::shared_ptr<const Data> inv_;
};

// outer o inner
SmoothMap compose(const SmoothMap& outer, const SmoothMap& inner);
// maps[k-1] o ... o maps[0]
SmoothMap compose_all(const std::vector<SmoothMap>& maps);
// f^n for n >= 0
SmoothMap power(const SmoothMap& f, int n);

struct SymplecticReport {
    double max_residual = 0.0;
    bool pass = false;
};

// Coordinates are taken in interleaved pairs (a_1, b_1, a_2, b_2, ...).
Mat standard_form(int dim);
SymplecticReport check_symplectic(const SmoothMap& f, const std::vector<Vec>& samples, double tol);

// Smallest singular value.
double co_norm(const Mat& A);

std::vector<Vec> sample_points(const StateSpace& space, int count, std::mt19937_64& rng);

}  // namespace dyn
