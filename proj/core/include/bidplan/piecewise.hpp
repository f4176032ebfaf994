#pragma once

#include <span>
#include <vector>

namespace bidplan {

/// One affine piece m * s + b of a max-of-affine representation.
struct Segment {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Monotone non-decreasing convex piecewise-affine function of a supply rate,
/// given by its values at increasing knots and defined on [knots.front(),
/// knots.back()]. A single knot describes the function on a one-point domain.
class PiecewiseAffineConvex {
 public:
  PiecewiseAffineConvex() = default;

  /// Validates shape: sizes match, knots strictly increasing, values monotone
  /// and discretely convex up to `tolerance` (scaled by the value magnitude).
  PiecewiseAffineConvex(std::vector<double> knots, std::vector<double> values,
                        double tolerance = 1e-8);

  /// Value at s. Below the domain the function is flat at values.front();
  /// above it the result is kUnbounded.
  double operator()(double s) const;

  /// Affine pieces h with max_h (m_h s + b_h) equal to the function on its
  /// domain.
  std::vector<Segment> segments() const;

  /// sup over the domain of [s p - f(s)]; kUnbounded for p < 0.
  double conjugate(double p) const;

  double domain_begin() const { return knots_.front(); }
  double domain_end() const { return knots_.back(); }
  double max_slope() const;

  std::size_t size() const noexcept { return knots_.size(); }
  const std::vector<double>& knots() const noexcept { return knots_; }
  const std::vector<double>& values() const noexcept { return values_; }

  friend bool operator==(const PiecewiseAffineConvex&, const PiecewiseAffineConvex&) = default;

 private:
  std::vector<double> knots_;
  std::vector<double> values_;
};

/// wa * a + wb * b on the intersection of both domains, knots merged. The
/// weights must be non-negative, so the result stays convex and monotone.
PiecewiseAffineConvex weighted_sum(const PiecewiseAffineConvex& a, double wa,
                                   const PiecewiseAffineConvex& b, double wb);

/// Largest violation of monotonicity or discrete convexity (divided
/// differences) in raw value units; 0 when both hold.
double shape_violation(std::span<const double> knots, std::span<const double> values);

}  // namespace bidplan
