#include "dyn/hamiltonian.hpp"

#include <cmath>

namespace dyn {

Vec Hamiltonian::field(const Vec& x) const
{
    Vec g = gradient(x);
    Vec f(g.size());
    for (int i = 0; i + 1 < g.size(); i += 2) {
        f[i] = -g[i + 1];
        f[i + 1] = g[i];
    }
    return f;
}

namespace {

Mat field_jacobian(const Hamiltonian& h, const Vec& x)
{
    int n = static_cast<int>(x.size());
    Mat S(n, n);
    for (int j = 0; j < n; ++j) {
        double e = 1e-6 * std::max(1.0, std::abs(x[j]));
        Vec p = x, m = x;
        p[j] += e;
        m[j] -= e;
        S.col(j) = (h.gradient(p) - h.gradient(m)) / (2 * e);
    }
    S = 0.5 * (S + S.transpose()).eval();
    Mat D(n, n);
    for (int i = 0; i + 1 < n; i += 2) {
        D.row(i) = -S.row(i + 1);
        D.row(i + 1) = S.row(i);
    }
    return D;
}

}  // namespace

Vec implicit_midpoint_step(const Hamiltonian& h, const Vec& x, double dt, double tol, int max_iter)
{
    Vec y = x + dt * h.field(x);
    int n = static_cast<int>(x.size());
    for (int it = 0; it < max_iter; ++it) {
        Vec mid = 0.5 * (x + y);
        Vec r = y - x - dt * h.field(mid);
        double err = r.cwiseAbs().maxCoeff();
        if (!std::isfinite(err))
            throw IntegratorDiverged("non-finite midpoint residual");
        if (err <= tol * std::max(1.0, y.cwiseAbs().maxCoeff()))
            return y;
        Mat J = Mat::Identity(n, n) - 0.5 * dt * field_jacobian(h, mid);
        y -= J.partialPivLu().solve(r);
    }
    Vec r = y - x - dt * h.field(0.5 * (x + y));
    if (r.cwiseAbs().maxCoeff() > 1e3 * tol)
        throw IntegratorDiverged("midpoint Newton did not converge");
    return y;
}

namespace {

Vec integrate(const StateSpace& space, const Hamiltonian& h, Vec x, double tau, int steps)
{
    double dt = tau / steps;
    for (int s = 0; s < steps; ++s)
        x = implicit_midpoint_step(h, x, dt);
    return space.reduce(x);
}

// derivative of the discrete map: each step contributes (I - dt/2 DX)^-1 (I + dt/2 DX) at the midpoint
Mat integrate_jacobian(const Hamiltonian& h, Vec x, double tau, int steps)
{
    double dt = tau / steps;
    int n = static_cast<int>(x.size());
    Mat J = Mat::Identity(n, n);
    Mat I = Mat::Identity(n, n);
    for (int s = 0; s < steps; ++s) {
        Vec y = implicit_midpoint_step(h, x, dt);
        Mat D = field_jacobian(h, 0.5 * (x + y));
        J = (I - 0.5 * dt * D).partialPivLu().solve((I + 0.5 * dt * D) * J);
        x = y;
    }
    return J;
}

}  // namespace

SmoothMap hamiltonian_flow(const StateSpace& space, const Hamiltonian& h, double tau, int steps)
{
    if (space.dim() % 2)
        throw OddDimension("Hamiltonian flows need an even-dimensional space");
    if (steps < 1)
        throw PreconditionError("at least one integration step");
    MapMeta meta;
    meta.symplectic = true;
    SmoothMap fwd(space, space, [=](const Vec& x) { return integrate(space, h, x, tau, steps); },
                  [=](const Vec& x) { return integrate_jacobian(h, x, tau, steps); }, meta);
    SmoothMap bwd(space, space, [=](const Vec& x) { return integrate(space, h, x, -tau, steps); },
                  [=](const Vec& x) { return integrate_jacobian(h, x, -tau, steps); }, meta);
    return fwd.with_inverse(bwd);
}

double smoothstep7(double t)
{
    if (t <= 0)
        return 0.0;
    if (t >= 1)
        return 1.0;
    return t * t * t * t * (35 + t * (-84 + t * (70 - 20 * t)));
}

double smoothstep7_deriv(double t)
{
    if (t <= 0 || t >= 1)
        return 0.0;
    double s = t * (1 - t);
    return 140 * s * s * s;
}

namespace {

// 1 on [lo, hi], 0 outside (olo, ohi), smoothstep ramps between.
struct Plateau {
    double olo, lo, hi, ohi;

    double value(double x) const
    {
        if (x <= olo || x >= ohi)
            return 0.0;
        if (x < lo)
            return smoothstep7((x - olo) / (lo - olo));
        if (x > hi)
            return smoothstep7((ohi - x) / (ohi - hi));
        return 1.0;
    }

    double deriv(double x) const
    {
        if (x <= olo || x >= ohi || (x >= lo && x <= hi))
            return 0.0;
        if (x < lo)
            return smoothstep7_deriv((x - olo) / (lo - olo)) / (lo - olo);
        return -smoothstep7_deriv((ohi - x) / (ohi - hi)) / (ohi - hi);
    }
};

}  // namespace

SmoothMap hamiltonian_bump_translation(const StateSpace& space, const Vec& u, const Vec& v, const Region& U,
                                       const Region& U_outer, int steps)
{
    int n = static_cast<int>(u.size());
    if (v.size() != n || space.dim() != 2 * n || U.dim() != 2 * n || U_outer.dim() != 2 * n)
        throw PreconditionError("translation and regions must match the space dimension");
    Vec shift(2 * n);
    for (int i = 0; i < n; ++i) {
        shift[2 * i] = u[i];
        shift[2 * i + 1] = v[i];
    }
    if (shift.cwiseAbs().maxCoeff() == 0.0)
        return SmoothMap::identity(space).with_meta(MapMeta{1.0, 1.0, true, true});

    Region inner = U;
    inner.lo = U.lo.cwiseMin(U.lo + shift);
    inner.hi = U.hi.cwiseMax(U.hi + shift);
    for (int k = 0; k < 2 * n; ++k)
        if (!(U_outer.lo[k] < inner.lo[k] && inner.hi[k] < U_outer.hi[k]))
            throw VectorTooLarge("U + (u, v) is not compactly inside the outer region");

    std::vector<Plateau> pl;
    for (int k = 0; k < 2 * n; ++k)
        pl.push_back(Plateau{U_outer.lo[k], inner.lo[k], inner.hi[k], U_outer.hi[k]});

    // H = beta(y) (a.v - b.u), beta a product of plateaus
    Hamiltonian h;
    auto linear = [shift, n](const Vec& y) {
        double s = 0;
        for (int i = 0; i < n; ++i)
            s += y[2 * i] * shift[2 * i + 1] - y[2 * i + 1] * shift[2 * i];
        return s;
    };
    h.value = [pl, linear](const Vec& y) {
        double b = 1;
        for (size_t k = 0; k < pl.size(); ++k)
            b *= pl[k].value(y[k]);
        return b * linear(y);
    };
    h.gradient = [pl, linear, shift, n](const Vec& y) {
        int m = 2 * n;
        Vec vals(m), ders(m);
        for (int k = 0; k < m; ++k) {
            vals[k] = pl[k].value(y[k]);
            ders[k] = pl[k].deriv(y[k]);
        }
        double l = linear(y);
        Vec g(m);
        for (int k = 0; k < m; ++k) {
            double others = 1;
            for (int j = 0; j < m; ++j)
                if (j != k)
                    others *= vals[j];
            double dl = (k % 2 == 0) ? shift[k + 1] : -shift[k - 1];
            g[k] = others * (ders[k] * l + vals[k] * dl);
        }
        return g;
    };

    auto flow = [=](const Vec& y, double t) -> Vec {
        if (!U_outer.contains(y) || U_outer.inside_distance(y) <= 0)
            return y;
        if (U.contains(y))
            return space.reduce(y + t * shift);
        return integrate(space, h, y, t, steps);
    };
    auto flow_jac = [=](const Vec& y, double t, const Region& exact) -> Mat {
        if (!U_outer.contains(y) || U_outer.inside_distance(y) <= 0 || exact.contains(y))
            return Mat::Identity(2 * n, 2 * n);
        return integrate_jacobian(h, y, t, steps);
    };
    MapMeta meta;
    meta.symplectic = true;
    SmoothMap fwd(space, space, [flow](const Vec& y) { return flow(y, 1.0); },
                  [flow_jac, U](const Vec& y) { return flow_jac(y, 1.0, U); }, meta);
    // the inverse is the time -1 map: translation by -(u, v) on U + (u, v)
    Region Ushift = U;
    Ushift.lo += shift;
    Ushift.hi += shift;
    SmoothMap bwd(space, space,
                  [=](const Vec& y) -> Vec {
                      if (!U_outer.contains(y) || U_outer.inside_distance(y) <= 0)
                          return y;
                      if (Ushift.contains(y))
                          return space.reduce(y - shift);
                      return integrate(space, h, y, -1.0, steps);
                  },
                  [flow_jac, Ushift](const Vec& y) { return flow_jac(y, -1.0, Ushift); }, meta);
    return fwd.with_inverse(bwd);
}

}  // namespace dyn
