#include "dyn/horseshoe.hpp"

#include <cmath>

namespace dyn {

int HorseshoeBase::label(const Vec& b, double tol) const
{
    for (int i = 0; i < symbols(); ++i)
        if (rects[i].contains(b, tol))
            return i;
    return -1;
}

int HorseshoeBase::image_label(const Vec& b, double tol) const
{
    for (int i = 0; i < symbols(); ++i)
        if (b[0] >= e[i] - tol && b[0] <= e[i] + mu_ss + tol && b[1] >= -tol && b[1] <= 1 + tol)
            return i;
    return -1;
}

Vec HorseshoeBase::point(const ShiftPoint& x) const
{
    Vec b(2);
    double s = 0, w = 1;
    for (int n = 1; n <= 80 && w > 1e-300; ++n, w *= mu_ss)
        s += e[x.at(-n)] * w;
    double u = 0;
    w = 1;
    for (int n = 0; n <= 80 && w > 1e-300; ++n, w /= mu_uu)
        u += c[x.at(n)] * w;
    b << s, u;
    return b;
}

std::vector<int> HorseshoeBase::itinerary(const Vec& b, int past, int future) const
{
    std::vector<int> out(past + future, -1);
    Vec p = b;
    for (int n = 0; n < future; ++n) {
        int l = label(p, 1e-9);
        if (l < 0)
            break;
        out[past + n] = l;
        p = f(p);
    }
    p = b;
    auto finv = f.inverse();
    for (int n = 1; n <= past; ++n) {
        int l = image_label(p, 1e-9);
        if (l < 0)
            break;
        p = finv(p);
        out[past - n] = l;
    }
    return out;
}

bool HorseshoeBase::markov() const
{
    for (int i = 0; i < symbols(); ++i)
        for (int j = i + 1; j < symbols(); ++j)
            if (!(rects[i].hi[1] < rects[j].lo[1] || rects[j].hi[1] < rects[i].lo[1]))
                return false;
    for (int i = 0; i < symbols(); ++i) {
        Vec lo = Vec::Constant(2, INFINITY), hi = Vec::Constant(2, -INFINITY);
        for (int m = 0; m < 4; ++m) {
            Vec v(2);
            v << ((m & 1) ? rects[i].hi[0] : rects[i].lo[0]), ((m & 2) ? rects[i].hi[1] : rects[i].lo[1]);
            Vec y = f(v);
            lo = lo.cwiseMin(y);
            hi = hi.cwiseMax(y);
        }
        for (int j = 0; j < symbols(); ++j)
            if (!(lo[1] <= rects[j].lo[1] && rects[j].hi[1] <= hi[1]))
                return false;
        if (lo[0] < 0 || hi[0] > 1)
            return false;
    }
    return true;
}

HorseshoeBase affine_horseshoe(int symbols, double mu_ss, double mu_uu)
{
    if (symbols < 2)
        throw PreconditionError("a horseshoe needs at least two rectangles");
    if (!(mu_ss > 0 && mu_ss < 1 && mu_uu > 1))
        throw PreconditionError("need 0 < mu_ss < 1 < mu_uu");
    double h = 1 / mu_uu;
    if (!(symbols * h < 1) || !(symbols * mu_ss < 1))
        throw RectanglesOverlap("rectangles or their images do not fit disjointly in the unit square");
    HorseshoeBase H;
    H.ambient = StateSpace::box(2, 0.0, 1.0);
    H.mu_ss = mu_ss;
    H.mu_uu = mu_uu;
    for (int i = 0; i < symbols; ++i) {
        double mid = (2.0 * i + 1) / (2.0 * symbols);
        H.c.push_back(mid - h / 2);
        H.e.push_back(mid - mu_ss / 2);
        H.rects.push_back(Region::box((Vec(2) << 0.0, H.c.back()).finished(), (Vec(2) << 1.0, H.c.back() + h).finished()));
    }
    auto c = H.c, e = H.e;
    // nearest rectangle in u (resp. nearest image strip in s) off the rectangles
    auto pick = [](const std::vector<double>& lo, double width, double x) {
        int best = 0;
        double bd = INFINITY;
        for (size_t i = 0; i < lo.size(); ++i) {
            double d = x < lo[i] ? lo[i] - x : (x > lo[i] + width ? x - lo[i] - width : 0.0);
            if (d < bd) {
                bd = d;
                best = static_cast<int>(i);
            }
        }
        return best;
    };
    MapMeta meta;
    meta.lambda = mu_ss;
    meta.lipschitz = mu_uu;
    meta.symplectic = std::abs(mu_ss * mu_uu - 1) < 1e-12;
    SmoothMap fwd(
        H.ambient, H.ambient,
        [=](const Vec& b) {
            int i = pick(c, h, b[1]);
            return Vec((Vec(2) << mu_ss * b[0] + e[i], mu_uu * (b[1] - c[i])).finished());
        },
        [=](const Vec&) { return Mat((Mat(2, 2) << mu_ss, 0, 0, mu_uu).finished()); }, meta);
    MapMeta im;
    im.lambda = 1 / mu_uu;
    im.lipschitz = 1 / mu_ss;
    im.symplectic = meta.symplectic;
    SmoothMap bwd(
        H.ambient, H.ambient,
        [=](const Vec& b) {
            int i = pick(e, mu_ss, b[0]);
            return Vec((Vec(2) << (b[0] - e[i]) / mu_ss, b[1] / mu_uu + c[i]).finished());
        },
        [=](const Vec&) { return Mat((Mat(2, 2) << 1 / mu_ss, 0, 0, 1 / mu_uu).finished()); }, im);
    H.f = fwd.with_inverse(bwd);
    if (!H.markov())
        throw RectanglesOverlap("Markov structure check failed");
    return H;
}

}  // namespace dyn
