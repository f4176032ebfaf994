#pragma once

#include <span>
#include <vector>

#include "bidplan/market_model.hpp"
#include "bidplan/piecewise.hpp"

namespace bidplan {

/// l_alpha(w) = integral_1^w u^-alpha du: log for alpha = 1, otherwise
/// (w^(1-alpha) - 1) / (1 - alpha). Requires w > 0.
double ell_alpha(double alpha, double w);

struct ConcavityReport {
  double alpha = 0.0;
  bool holds = false;
  /// Largest positive (relative) second difference of l_alpha(W~(., t)); 0 if none.
  double worst_violation = 0.0;
  /// Bid at the middle point of the worst triple.
  double violation_bid = 0.0;
  double tolerance = 0.0;
  /// Results at beta in {alpha + 0.5, alpha + 1, 2 alpha} (2 alpha only when > alpha).
  std::vector<std::pair<double, bool>> higher_orders;
  /// False when the test held at alpha but failed at some larger beta.
  bool hierarchy_consistent = true;
};

/// Discrete alpha-concavity test of x -> W~(x, t) on the bid grid up to the
/// saturation bid. Violations are measured relative to the magnitude of the
/// transformed values. Throws ModelError for alpha < 0 or when a tabulated win
/// probability is not strictly positive.
ConcavityReport check_alpha_concavity(const SupplyCurve& curve, double alpha, double t,
                                      double tolerance = 1e-9);

/// Same test on explicit samples (grid, values).
ConcavityReport check_alpha_concavity(std::span<const double> grid, std::span<const double> values,
                                      double alpha, double tolerance = 1e-9);

/// Least-squares monotone convex majorant of samples on a strictly increasing
/// grid: minimize the mean squared deviation subject to lambda_i >= v_i,
/// non-decreasing differences and non-negative second differences. Convexity
/// is imposed with divided differences, which on a uniform grid are exactly
/// lambda_{i+1} - 2 lambda_i + lambda_{i-1} >= 0.
///
/// Throws QpError when the solver does not reach optimality.
PiecewiseAffineConvex convex_majorant(std::span<const double> grid, std::span<const double> samples);

/// Objective value (1/(n+1)) sum (lambda_i - v_i)^2 of a candidate.
double majorant_objective(std::span<const double> candidate, std::span<const double> samples);

/// Greedy maximum-gap knot selection: start from both endpoints and keep
/// inserting the knot where the chord exceeds f the most, until `segments`
/// pieces are used or the chords are exact. The result majorizes f.
PiecewiseAffineConvex sparsify(const PiecewiseAffineConvex& f, std::size_t segments);

struct TabulationOptions {
  std::size_t rate_points = 256;
  std::size_t segments = 32;
};

struct AcquisitionTable {
  double time = 0.0;
  PiecewiseAffineConvex cost;
  /// max_i (lambda_i - Lambda~(s_i)) before sparsification.
  double majorant_deviation = 0.0;
};

/// Samples Lambda(., t) on a rate grid spanning [W(x_min, t), s-bar(t)] (plus
/// s = 0 when W(x_min, t) > 0), takes the convex majorant and sparsifies. QP
/// failures are rethrown tagged with the type index and time.
std::vector<AcquisitionTable> tabulate_acquisition(const SupplyCurve& curve, Mechanism mechanism,
                                                   std::span<const double> time_knots,
                                                   const TabulationOptions& options = {},
                                                   int type_index = 0);

AcquisitionTable tabulate_acquisition_at(const SupplyCurve& curve, Mechanism mechanism, double t,
                                         const TabulationOptions& options = {}, int type_index = 0);

}  // namespace bidplan
