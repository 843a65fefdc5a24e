#include "dyn/core.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace dyn {

Factor Factor::interval(double lo, double hi)
{
    if (!(lo < hi))
        throw PreconditionError("interval needs lo < hi");
    return Factor{Kind::Interval, lo, hi};
}

Factor Factor::circle(double period)
{
    if (!(period > 0))
        throw PreconditionError("circle period must be positive");
    return Factor{Kind::Circle, 0.0, period};
}

bool Factor::bounded() const
{
    return std::isfinite(lo) && std::isfinite(hi);
}

StateSpace::StateSpace(std::vector<Factor> factors) : factors_(std::move(factors))
{
    for (const auto& f : factors_) {
        if (f.periodic() && !(f.hi > 0))
            throw PreconditionError("circle period must be positive");
        if (!f.periodic() && !(f.lo < f.hi))
            throw PreconditionError("interval needs lo < hi");
    }
}

StateSpace StateSpace::interval(double lo, double hi)
{
    return StateSpace({Factor::interval(lo, hi)});
}

StateSpace StateSpace::box(int n, double lo, double hi)
{
    return StateSpace(std::vector<Factor>(n, Factor::interval(lo, hi)));
}

StateSpace StateSpace::torus(int n, double period)
{
    return StateSpace(std::vector<Factor>(n, Factor::circle(period)));
}

StateSpace StateSpace::annulus(double lo, double hi)
{
    return StateSpace({Factor::interval(lo, hi), Factor::circle(1.0)});
}

StateSpace StateSpace::product(const StateSpace& other) const
{
    auto f = factors_;
    f.insert(f.end(), other.factors_.begin(), other.factors_.end());
    return StateSpace(std::move(f));
}

Vec StateSpace::reduce(Vec x) const
{
    for (int i = 0; i < dim(); ++i) {
        const auto& f = factors_[i];
        if (f.periodic()) {
            double p = f.hi;
            double r = std::fmod(x[i], p);
            if (r < 0)
                r += p;
            if (r >= p)
                r = 0.0;
            x[i] = r;
        }
    }
    return x;
}

bool StateSpace::contains(const Vec& x, double tol) const
{
    if (x.size() != dim())
        return false;
    for (int i = 0; i < dim(); ++i) {
        const auto& f = factors_[i];
        if (!std::isfinite(x[i]))
            return false;
        if (!f.periodic() && (x[i] < f.lo - tol || x[i] > f.hi + tol))
            return false;
    }
    return true;
}

Vec StateSpace::difference(const Vec& a, const Vec& b) const
{
    Vec d = a - b;
    for (int i = 0; i < dim(); ++i) {
        const auto& f = factors_[i];
        if (f.periodic()) {
            double p = f.hi;
            double r = std::fmod(d[i], p);
            if (r > p / 2)
                r -= p;
            else if (r <= -p / 2)
                r += p;
            d[i] = r;
        }
    }
    return d;
}

double StateSpace::distance(const Vec& a, const Vec& b) const
{
    double m = 0.0;
    for (int i = 0; i < dim(); ++i) {
        const auto& f = factors_[i];
        double d = std::abs(a[i] - b[i]);
        if (f.periodic()) {
            d = std::fmod(d, f.hi);
            d = std::min(d, f.hi - d);
        }
        m = std::max(m, d);
    }
    return m;
}

double StateSpace::diameter() const
{
    double m = 0.0;
    for (const auto& f : factors_)
        m = std::max(m, f.periodic() ? f.hi / 2 : f.width());
    return m;
}

double StateSpace::volume() const
{
    double v = 1.0;
    for (const auto& f : factors_)
        v *= f.width();
    return v;
}

bool StateSpace::bounded() const
{
    for (const auto& f : factors_)
        if (!f.bounded())
            return false;
    return true;
}

Vec StateSpace::sample(std::mt19937_64& rng) const
{
    if (!bounded())
        throw PreconditionError("cannot sample an unbounded space");
    Vec x(dim());
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < dim(); ++i)
        x[i] = factors_[i].lo + u(rng) * factors_[i].width();
    return x;
}

std::vector<Vec> sample_points(const StateSpace& space, int count, std::mt19937_64& rng)
{
    std::vector<Vec> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i)
        out.push_back(space.sample(rng));
    return out;
}

SmoothMap::SmoothMap(StateSpace domain, StateSpace codomain, Eval f, Deriv df, MapMeta meta)
    : fwd_(std::make_shared<Data>(Data{std::move(domain), std::move(codomain), std::move(f), std::move(df), meta}))
{
}

SmoothMap SmoothMap::identity(const StateSpace& space)
{
    int n = space.dim();
    MapMeta m;
    m.lambda = 1.0;
    m.lipschitz = 1.0;
    m.symplectic = true;
    m.affine = true;
    SmoothMap id(space, space, [](const Vec& x) { return x; },
                 [n](const Vec&) { return Mat(Mat::Identity(n, n)); }, m);
    return id.with_inverse(SmoothMap(space, space, [](const Vec& x) { return x; },
                                     [n](const Vec&) { return Mat(Mat::Identity(n, n)); }, m));
}

SmoothMap SmoothMap::affine(const StateSpace& space, const Mat& A, const Vec& b)
{
    Eigen::JacobiSVD<Mat> svd(A);
    auto sv = svd.singularValues();
    MapMeta m;
    m.affine = true;
    // operator norms for the max-metric
    double kinf = A.cwiseAbs().rowwise().sum().maxCoeff();
    m.lipschitz = kinf;
    int n = static_cast<int>(A.rows());
    if (n == A.cols() && (n % 2 == 0)) {
        Mat O = standard_form(n);
        m.symplectic = ((A.transpose() * O * A - O).cwiseAbs().maxCoeff() < 1e-12);
    }
    Eval f = [A, b](const Vec& x) { return Vec(A * x + b); };
    Deriv df = [A](const Vec&) { return A; };
    if (sv.minCoeff() <= 1e-14 * std::max(1.0, sv.maxCoeff()))
        return SmoothMap(space, space, f, df, m);
    Mat Ai = A.inverse();
    double kinv = Ai.cwiseAbs().rowwise().sum().maxCoeff();
    m.lambda = 1.0 / kinv;
    MapMeta mi = m;
    mi.lipschitz = kinv;
    mi.lambda = 1.0 / kinf;
    Vec bi = -Ai * b;
    SmoothMap inv(space, space, [Ai, bi](const Vec& x) { return Vec(Ai * x + bi); },
                  [Ai](const Vec&) { return Ai; }, mi);
    return SmoothMap(space, space, f, df, m).with_inverse(inv);
}

SmoothMap SmoothMap::linear(const StateSpace& space, const Mat& A)
{
    return affine(space, A, Vec::Zero(A.rows()));
}

Vec SmoothMap::operator()(const Vec& x) const
{
    return fwd_->codomain.reduce(fwd_->eval(x));
}

Vec SmoothMap::evaluate(const Vec& x, double tol) const
{
    if (x.size() != domain().dim())
        throw PointOutsideDomain("dimension mismatch");
    Vec y = domain().reduce(x);
    if (!domain().contains(y, tol)) {
        std::ostringstream os;
        os << "point (" << x.transpose() << ") outside domain";
        throw PointOutsideDomain(os.str());
    }
    return (*this)(y);
}

double SmoothMap::default_step() const
{
    double diam = 0.0;
    for (const auto& f : domain().factors())
        diam = std::max(diam, f.bounded() ? (f.periodic() ? f.hi / 2 : f.width()) : 1.0);
    if (diam <= 0)
        diam = 1.0;
    return 1e-5 * diam;
}

Mat SmoothMap::jacobian_fd(const Vec& x, double h) const
{
    if (h <= 0)
        h = default_step();
    const auto& dom = domain();
    int n = dom.dim();
    for (int i = 0; i < n; ++i) {
        const auto& f = dom.factor(i);
        if (!f.periodic() && (x[i] - h < f.lo - 1e-15 || x[i] + h > f.hi + 1e-15))
            throw StepTooLarge("finite-difference stencil leaves the domain");
    }
    int m = codomain().dim();
    Mat J(m, n);
    for (int j = 0; j < n; ++j) {
        Vec xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        Vec d = codomain().difference(fwd_->eval(xp), fwd_->eval(xm));
        J.col(j) = d / (2 * h);
    }
    return J;
}

Mat SmoothMap::jacobian(const Vec& x, double h) const
{
    if (fwd_->deriv)
        return fwd_->deriv(x);
    return jacobian_fd(x, h);
}

SmoothMap SmoothMap::inverse() const
{
    if (!inv_)
        throw NotInvertible("map carries no inverse");
    return SmoothMap(inv_, fwd_);
}

SmoothMap SmoothMap::with_inverse(const SmoothMap& inv) const
{
    return SmoothMap(fwd_, inv.fwd_);
}

SmoothMap SmoothMap::with_meta(const MapMeta& meta) const
{
    auto d = std::make_shared<Data>(*fwd_);
    d->meta = meta;
    return SmoothMap(d, inv_);
}

Vec SmoothMap::preimage(const Vec& y, const Vec& guess, double tol, int max_iter) const
{
    if (inv_)
        return inverse()(y);
    Vec x = guess;
    for (int it = 0; it < max_iter; ++it) {
        Vec r = codomain().difference(fwd_->eval(x), y);
        if (r.cwiseAbs().maxCoeff() < tol)
            return domain().reduce(x);
        Mat J = jacobian(x);
        Eigen::FullPivLU<Mat> lu(J);
        if (!lu.isInvertible())
            throw SingularJacobian("preimage Newton step");
        x -= lu.solve(r);
    }
    Vec r = codomain().difference(fwd_->eval(x), y);
    if (r.cwiseAbs().maxCoeff() < 1e3 * tol)
        return domain().reduce(x);
    throw NoConvergence("preimage Newton did not converge");
}

SmoothMap compose(const SmoothMap& outer, const SmoothMap& inner)
{
    MapMeta m;
    const auto& a = outer.meta();
    const auto& b = inner.meta();
    if (a.lambda && b.lambda)
        m.lambda = *a.lambda * *b.lambda;
    if (a.lipschitz && b.lipschitz)
        m.lipschitz = *a.lipschitz * *b.lipschitz;
    m.symplectic = a.symplectic && b.symplectic;
    m.affine = a.affine && b.affine;
    SmoothMap::Deriv df;
    if (outer.has_jacobian() && inner.has_jacobian())
        df = [outer, inner](const Vec& x) { return Mat(outer.jacobian(inner(x)) * inner.jacobian(x)); };
    SmoothMap c(inner.domain(), outer.codomain(), [outer, inner](const Vec& x) { return outer(inner(x)); }, df, m);
    if (outer.invertible() && inner.invertible()) {
        auto oi = outer.inverse();
        auto ii = inner.inverse();
        MapMeta mi;
        if (oi.meta().lambda && ii.meta().lambda)
            mi.lambda = *oi.meta().lambda * *ii.meta().lambda;
        if (oi.meta().lipschitz && ii.meta().lipschitz)
            mi.lipschitz = *oi.meta().lipschitz * *ii.meta().lipschitz;
        mi.symplectic = m.symplectic;
        mi.affine = m.affine;
        SmoothMap::Deriv di;
        if (oi.has_jacobian() && ii.has_jacobian())
            di = [oi, ii](const Vec& x) { return Mat(ii.jacobian(oi(x)) * oi.jacobian(x)); };
        SmoothMap inv(outer.codomain(), inner.domain(), [oi, ii](const Vec& x) { return ii(oi(x)); }, di, mi);
        c = c.with_inverse(inv);
    }
    return c;
}

SmoothMap compose_all(const std::vector<SmoothMap>& maps)
{
    if (maps.empty())
        throw PreconditionError("compose_all of an empty list");
    SmoothMap c = maps.front();
    for (size_t i = 1; i < maps.size(); ++i)
        c = compose(maps[i], c);
    return c;
}

SmoothMap power(const SmoothMap& f, int n)
{
    if (n < 0)
        throw PreconditionError("negative power");
    if (n == 0)
        return SmoothMap::identity(f.domain());
    return compose_all(std::vector<SmoothMap>(n, f));
}

Mat standard_form(int dim)
{
    if (dim % 2 != 0)
        throw OddDimension("symplectic form needs even dimension");
    Mat O = Mat::Zero(dim, dim);
    for (int i = 0; i < dim; i += 2) {
        O(i, i + 1) = 1.0;
        O(i + 1, i) = -1.0;
    }
    return O;
}

SymplecticReport check_symplectic(const SmoothMap& f, const std::vector<Vec>& samples, double tol)
{
    int n = f.domain().dim();
    if (n % 2 != 0)
        throw OddDimension("domain dimension is odd");
    Mat O = standard_form(n);
    SymplecticReport rep;
    for (const auto& x : samples) {
        Mat J = f.jacobian(x);
        Mat R = J.transpose() * O * J - O;
        rep.max_residual = std::max(rep.max_residual, R.cwiseAbs().rowwise().sum().maxCoeff());
    }
    rep.pass = rep.max_residual < tol;
    return rep;
}

double co_norm(const Mat& A)
{
    Eigen::JacobiSVD<Mat> svd(A);
    return svd.singularValues().minCoeff();
}

}  // namespace dyn
