#pragma once

#include <cmath>
#include <vector>

#include "bidplan/market_model.hpp"

namespace bidplan::testing {

inline std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

/// W(x) = rate * clamp(x, 0, 1), saturating at x = 1.
inline SupplyCurve ramp_curve(double rate = 1.0) {
  return SupplyCurve::time_homogeneous({0.0, 1.0, 2.0}, {0.0, 1.0, 1.0}, rate, 1.0);
}

/// Ramp with the first bid lifted to `floor` so the curve is strictly positive.
inline SupplyCurve positive_ramp(double floor = 0.01, std::size_t points = 200) {
  auto grid = linspace(floor, 1.0, points);
  return SupplyCurve::time_homogeneous(grid, grid, 1.0, 1.0);
}

/// Two logistic steps: a CDF that is not log-concave between the modes.
inline SupplyCurve bimodal_curve(std::size_t points = 241) {
  auto grid = linspace(0.0, 12.0, points);
  std::vector<double> w(points);
  for (std::size_t g = 0; g < points; ++g) {
    const double x = grid[g];
    w[g] = 0.5 / (1.0 + std::exp(-4.0 * (x - 3.0))) + 0.5 / (1.0 + std::exp(-4.0 * (x - 9.0)));
  }
  return SupplyCurve::time_homogeneous(grid, w, 1.0);
}

}  // namespace bidplan::testing
