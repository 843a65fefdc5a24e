#include "dyn/fixed_point.hpp"

#include <algorithm>
#include <cmath>

namespace dyn {

std::string to_string(FixedPointType t)
{
    switch (t) {
    case FixedPointType::attracting: return "attracting";
    case FixedPointType::repelling: return "repelling";
    case FixedPointType::saddle: return "saddle";
    case FixedPointType::elliptic_like: return "elliptic-like";
    case FixedPointType::degenerate: return "degenerate";
    }
    return "?";
}

std::vector<double> eigen_moduli(const Mat& J)
{
    Eigen::EigenSolver<Mat> es(J, false);
    std::vector<double> m;
    for (int i = 0; i < es.eigenvalues().size(); ++i)
        m.push_back(std::abs(es.eigenvalues()[i]));
    std::sort(m.begin(), m.end());
    return m;
}

FixedPointType classify(const Mat& J, const std::vector<double>& moduli, double tol)
{
    if (J.rows() == J.cols() && (J - Mat::Identity(J.rows(), J.cols())).cwiseAbs().maxCoeff() < tol)
        return FixedPointType::degenerate;
    bool below = false, above = false, unit = false;
    for (double m : moduli) {
        if (std::abs(m - 1.0) <= tol)
            unit = true;
        else if (m < 1.0)
            below = true;
        else
            above = true;
    }
    if (unit)
        return FixedPointType::elliptic_like;
    if (below && above)
        return FixedPointType::saddle;
    return below ? FixedPointType::attracting : FixedPointType::repelling;
}

bool check_weak_hyperbolic(const std::vector<double>& moduli, double delta, double tol)
{
    for (double m : moduli)
        if (std::abs(m - 1.0) <= tol)
            throw NotHyperbolic("modulus within tolerance of 1");
    for (double m : moduli) {
        bool ok = (1.0 - delta < m && m < 1.0) || (1.0 < m && m < 1.0 / (1.0 - delta));
        if (!ok)
            return false;
    }
    return true;
}

bool check_weak_hyperbolic(const FixedPointRecord& rec, double delta, double tol)
{
    return check_weak_hyperbolic(rec.eigen_moduli, delta, tol);
}

namespace {

FixedPointRecord finish(const SmoothMap& f, const Vec& p, std::optional<double> delta)
{
    FixedPointRecord rec;
    rec.point = f.domain().reduce(p);
    rec.residual = f.domain().distance(f(rec.point), rec.point);
    Mat J = f.jacobian(rec.point);
    rec.eigen_moduli = eigen_moduli(J);
    rec.classification = classify(J, rec.eigen_moduli);
    if (delta && rec.classification == FixedPointType::saddle && check_weak_hyperbolic(rec.eigen_moduli, *delta))
        rec.delta_weak = *delta;
    return rec;
}

}  // namespace

FixedPointRecord find_fixed_point(const SmoothMap& f, const Vec& guess, double tol, int max_iter,
                                  std::optional<double> delta)
{
    const auto& space = f.domain();
    Vec x = space.reduce(guess);
    if (space.distance(f(x), x) < tol)
        return finish(f, x, delta);

    const auto& meta = f.meta();
    if (meta.lipschitz && *meta.lipschitz < 1.0) {
        for (int it = 0; it < max_iter; ++it) {
            Vec y = f(x);
            double step = space.distance(y, x);
            x = y;
            if (step < tol * 0.5)
                break;
        }
        if (space.distance(f(x), x) < tol)
            return finish(f, x, delta);
        throw NoConvergence("contraction iteration did not reach tolerance");
    }

    int n = space.dim();
    Mat I = Mat::Identity(n, n);
    for (int it = 0; it < max_iter; ++it) {
        Vec r = space.difference(f(x), x);
        double rn = r.cwiseAbs().maxCoeff();
        if (rn < tol)
            return finish(f, x, delta);
        Mat G = f.jacobian(x) - I;
        Eigen::FullPivLU<Mat> lu(G);
        if (!lu.isInvertible() || std::abs(lu.determinant()) < 1e-14)
            throw SingularJacobian("Df - I is singular at the current iterate");
        Vec dx = -lu.solve(r);
        double t = 1.0;
        Vec xn = x + dx;
        for (int k = 0; k < 30; ++k) {
            xn = x + t * dx;
            double rn2 = space.difference(f(xn), xn).cwiseAbs().maxCoeff();
            if (rn2 < rn)
                break;
            t *= 0.5;
        }
        x = space.reduce(xn);
    }
    if (space.distance(f(x), x) < tol)
        return finish(f, x, delta);
    throw NoConvergence("Newton did not converge");
}

}  // namespace dyn
