#include "bidplan/piecewise.hpp"

#include <algorithm>
#include <cmath>

#include "bidplan/market_model.hpp"

namespace bidplan {

double shape_violation(std::span<const double> knots, std::span<const double> values) {
  double worst = 0.0;
  const std::size_t n = knots.size();
  for (std::size_t i = 1; i < n; ++i) worst = std::max(worst, values[i - 1] - values[i]);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = knots[i] - knots[i - 1];
    const double h1 = knots[i + 1] - knots[i];
    // Scaled so a uniform grid gives the plain second difference.
    const double second = 2.0 * (h0 * (values[i + 1] - values[i]) - h1 * (values[i] - values[i - 1])) /
                          (h0 + h1);
    worst = std::max(worst, -second);
  }
  return worst;
}

PiecewiseAffineConvex::PiecewiseAffineConvex(std::vector<double> knots, std::vector<double> values,
                                             double tolerance)
    : knots_(std::move(knots)), values_(std::move(values)) {
  if (knots_.empty() || knots_.size() != values_.size()) {
    throw ModelError("piecewise-affine function needs matching, non-empty knots and values");
  }
  double scale = 1.0;
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    if (!std::isfinite(knots_[i]) || !std::isfinite(values_[i])) {
      throw ModelError("piecewise-affine function has non-finite entries");
    }
    if (i > 0 && !(knots_[i] > knots_[i - 1])) {
      throw ModelError("piecewise-affine knots must be strictly increasing");
    }
    scale = std::max(scale, std::abs(values_[i]));
  }
  const double violation = shape_violation(knots_, values_);
  if (violation > tolerance * scale) {
    throw ModelError("piecewise-affine function is not monotone convex (violation " +
                     std::to_string(violation) + ")");
  }
}

double PiecewiseAffineConvex::operator()(double s) const {
  if (s <= knots_.front()) return values_.front();
  if (s > knots_.back()) {
    if (s - knots_.back() <= 1e-12 * std::max(1.0, std::abs(knots_.back()))) return values_.back();
    return kUnbounded;
  }
  const auto it = std::lower_bound(knots_.begin(), knots_.end(), s);
  const std::size_t i = static_cast<std::size_t>(it - knots_.begin());
  if (knots_[i] == s) return values_[i];
  const double a = (s - knots_[i - 1]) / (knots_[i] - knots_[i - 1]);
  return values_[i - 1] + a * (values_[i] - values_[i - 1]);
}

std::vector<Segment> PiecewiseAffineConvex::segments() const {
  std::vector<Segment> out;
  if (knots_.size() == 1) {
    out.push_back({0.0, values_.front()});
    return out;
  }
  out.reserve(knots_.size() - 1);
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    const double m = (values_[i] - values_[i - 1]) / (knots_[i] - knots_[i - 1]);
    out.push_back({m, values_[i - 1] - m * knots_[i - 1]});
  }
  return out;
}

double PiecewiseAffineConvex::conjugate(double p) const {
  if (p < 0.0) return kUnbounded;
  double best = -kUnbounded;
  for (std::size_t i = 0; i < knots_.size(); ++i) best = std::max(best, knots_[i] * p - values_[i]);
  return best;
}

double PiecewiseAffineConvex::max_slope() const {
  double m = 0.0;
  for (const auto& seg : segments()) m = std::max(m, seg.slope);
  return m;
}

PiecewiseAffineConvex weighted_sum(const PiecewiseAffineConvex& a, double wa,
                                   const PiecewiseAffineConvex& b, double wb) {
  const double lo = std::max(a.domain_begin(), b.domain_begin());
  const double hi = std::min(a.domain_end(), b.domain_end());
  if (hi < lo) throw ModelError("weighted_sum of functions with disjoint domains");
  std::vector<double> knots{lo};
  for (const auto* f : {&a, &b}) {
    for (double s : f->knots()) {
      if (s > lo && s < hi) knots.push_back(s);
    }
  }
  if (hi > lo) knots.push_back(hi);
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end(),
                          [](double x, double y) { return std::abs(x - y) <= 1e-15 * std::max(1.0, std::abs(x)); }),
              knots.end());
  std::vector<double> values(knots.size());
  for (std::size_t i = 0; i < knots.size(); ++i) values[i] = wa * a(knots[i]) + wb * b(knots[i]);
  return PiecewiseAffineConvex(std::move(knots), std::move(values), 1e-7);
}

}  // namespace bidplan
