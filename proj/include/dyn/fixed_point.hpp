#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dyn/core.hpp"

namespace dyn {

enum class FixedPointType { attracting, repelling, saddle, elliptic_like, degenerate };

std::string to_string(FixedPointType t);

struct FixedPointRecord {
    Vec point;
    std::vector<double> eigen_moduli;  // sorted ascending
    FixedPointType classification = FixedPointType::degenerate;
    std::optional<double> delta_weak;  // set to delta when the point is delta-weak
    double residual = 0.0;
};

FixedPointType classify(const Mat& J, const std::vector<double>& moduli, double tol = 1e-9);
std::vector<double> eigen_moduli(const Mat& J);

// Contraction iteration when the map declares K < 1, damped Newton otherwise.
FixedPointRecord find_fixed_point(const SmoothMap& f, const Vec& guess, double tol = 1e-12, int max_iter = 500,
                                  std::optional<double> delta = std::nullopt);

bool check_weak_hyperbolic(const std::vector<double>& moduli, double delta, double tol = 1e-9);
bool check_weak_hyperbolic(const FixedPointRecord& rec, double delta, double tol = 1e-9);

}  // namespace dyn
