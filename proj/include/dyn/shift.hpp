#pragma once

#include <string>
#include <vector>

namespace dyn {

// s_0, s_1, ... = pre followed by per repeated forever; kept in canonical form
// (primitive period, shortest preperiod) so that == decides equality.
class Periodic {
public:
    Periodic() : per_{0} {}
    Periodic(std::vector<int> pre, std::vector<int> per);
    static Periodic constant(int s) { return Periodic({}, {s}); }

    int at(long k) const;
    Periodic push_front(int s) const;
    Periodic pop_front() const;
    Periodic drop(long k) const;
    // prefix followed by this sequence
    Periodic prepend(const std::vector<int>& prefix) const;

    const std::vector<int>& pre() const { return pre_; }
    const std::vector<int>& per() const { return per_; }
    bool operator==(const Periodic& o) const { return pre_ == o.pre_ && per_ == o.per_; }
    bool operator!=(const Periodic& o) const { return !(*this == o); }
    bool operator<(const Periodic& o) const;

private:
    void normalize();
    std::vector<int> pre_, per_;
};

// x = (..., x_-1, x_0; x_1, x_2, ...) with left = (x_0, x_-1, ...) and right = (x_1, x_2, ...).
struct ShiftPoint {
    Periodic left;
    Periodic right;
    int d = 2;

    static ShiftPoint constant(int s, int d);
    // x_i for any integer i
    int at(long i) const { return i <= 0 ? left.at(-i) : right.at(i - 1); }
    ShiftPoint shift() const;          // (tau x)_i = x_{i+1}
    ShiftPoint inverse_shift() const;  // (tau^-1 x)_i = x_{i-1}
    ShiftPoint shifted(long n) const;
    bool is_fixed() const;
    bool operator==(const ShiftPoint& o) const { return d == o.d && left == o.left && right == o.right; }
    bool operator!=(const ShiftPoint& o) const { return !(*this == o); }
    std::string to_string() const;
};

}  // namespace dyn
