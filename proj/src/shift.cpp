#include "dyn/shift.hpp"

#include <algorithm>

#include "dyn/errors.hpp"

namespace dyn {

Periodic::Periodic(std::vector<int> pre, std::vector<int> per) : pre_(std::move(pre)), per_(std::move(per))
{
    if (per_.empty())
        throw PreconditionError("periodic part must be nonempty");
    normalize();
}

void Periodic::normalize()
{
    size_t n = per_.size();
    for (size_t p = 1; p < n; ++p) {
        if (n % p)
            continue;
        bool ok = true;
        for (size_t i = p; i < n && ok; ++i)
            ok = per_[i] == per_[i - p];
        if (ok) {
            per_.resize(p);
            break;
        }
    }
    while (!pre_.empty() && pre_.back() == per_.back()) {
        pre_.pop_back();
        std::rotate(per_.rbegin(), per_.rbegin() + 1, per_.rend());
    }
}

int Periodic::at(long k) const
{
    if (k < static_cast<long>(pre_.size()))
        return pre_[k];
    return per_[(k - pre_.size()) % per_.size()];
}

Periodic Periodic::push_front(int s) const
{
    std::vector<int> pre{s};
    pre.insert(pre.end(), pre_.begin(), pre_.end());
    return Periodic(std::move(pre), per_);
}

Periodic Periodic::pop_front() const
{
    if (!pre_.empty())
        return Periodic(std::vector<int>(pre_.begin() + 1, pre_.end()), per_);
    std::vector<int> per = per_;
    std::rotate(per.begin(), per.begin() + 1, per.end());
    return Periodic({}, std::move(per));
}

Periodic Periodic::drop(long k) const
{
    if (k <= static_cast<long>(pre_.size()))
        return Periodic(std::vector<int>(pre_.begin() + k, pre_.end()), per_);
    long r = (k - static_cast<long>(pre_.size())) % static_cast<long>(per_.size());
    std::vector<int> per = per_;
    std::rotate(per.begin(), per.begin() + r, per.end());
    return Periodic({}, std::move(per));
}

Periodic Periodic::prepend(const std::vector<int>& prefix) const
{
    std::vector<int> pre = prefix;
    pre.insert(pre.end(), pre_.begin(), pre_.end());
    return Periodic(std::move(pre), per_);
}

bool Periodic::operator<(const Periodic& o) const
{
    return pre_ != o.pre_ ? pre_ < o.pre_ : per_ < o.per_;
}

ShiftPoint ShiftPoint::constant(int s, int d)
{
    return ShiftPoint{Periodic::constant(s), Periodic::constant(s), d};
}

ShiftPoint ShiftPoint::shift() const
{
    return ShiftPoint{left.push_front(right.at(0)), right.pop_front(), d};
}

ShiftPoint ShiftPoint::inverse_shift() const
{
    return ShiftPoint{left.pop_front(), right.push_front(left.at(0)), d};
}

ShiftPoint ShiftPoint::shifted(long n) const
{
    ShiftPoint p = *this;
    for (; n > 0; --n)
        p = p.shift();
    for (; n < 0; ++n)
        p = p.inverse_shift();
    return p;
}

bool ShiftPoint::is_fixed() const
{
    return left.pre().empty() && right.pre().empty() && left.per().size() == 1 && right.per() == left.per();
}

namespace {

std::string seq(const Periodic& p)
{
    std::string s;
    for (size_t i = 0; i < p.pre().size(); ++i)
        s += (i ? "," : "") + std::to_string(p.pre()[i]);
    s += "[";
    for (size_t i = 0; i < p.per().size(); ++i)
        s += (i ? "," : "") + std::to_string(p.per()[i]);
    return s + "]";
}

}  // namespace

std::string ShiftPoint::to_string() const
{
    return "left " + seq(left) + " right " + seq(right);
}

}  // namespace dyn
