#include "bidplan/convexify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bidplan/qp.hpp"

namespace bidplan {

namespace {

// Above this size the dense active-set factorization gets too large; already
// feasible inputs of any size are still accepted.
constexpr std::size_t kMaxQpPoints = 2048;

double relative_second_difference(double h0, double h1, double y0, double y1, double y2) {
  const double second = 2.0 * (h0 * (y2 - y1) - h1 * (y1 - y0)) / (h0 + h1);
  const double magnitude = std::abs(y0) + 2.0 * std::abs(y1) + std::abs(y2);
  return second / std::max(magnitude, 1e-300);
}

struct ScanResult {
  double worst = 0.0;
  double where = 0.0;
};

ScanResult scan_concavity(std::span<const double> grid, std::span<const double> values, double alpha) {
  std::vector<double> y(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) y[i] = ell_alpha(alpha, values[i]);
  ScanResult out;
  for (std::size_t i = 1; i + 1 < y.size(); ++i) {
    const double v = relative_second_difference(grid[i] - grid[i - 1], grid[i + 1] - grid[i], y[i - 1],
                                                y[i], y[i + 1]);
    if (v > out.worst) {
      out.worst = v;
      out.where = grid[i];
    }
  }
  return out;
}

}  // namespace

double ell_alpha(double alpha, double w) {
  if (!(w > 0.0)) throw ModelError("l_alpha requires a strictly positive argument");
  if (alpha == 1.0) return std::log(w);
  return (std::pow(w, 1.0 - alpha) - 1.0) / (1.0 - alpha);
}

ConcavityReport check_alpha_concavity(std::span<const double> grid, std::span<const double> values,
                                      double alpha, double tolerance) {
  if (!(alpha >= 0.0)) throw ModelError("alpha must be >= 0");
  if (grid.size() != values.size()) throw ModelError("grid and values differ in length");
  for (double v : values) {
    if (!(v > 0.0)) {
      throw ModelError("alpha-concavity needs strictly positive values; found " + std::to_string(v));
    }
  }
  ConcavityReport report;
  report.alpha = alpha;
  report.tolerance = tolerance;
  const ScanResult base = scan_concavity(grid, values, alpha);
  report.worst_violation = base.worst;
  report.violation_bid = base.where;
  report.holds = base.worst <= tolerance;

  std::vector<double> betas{alpha + 0.5, alpha + 1.0};
  if (2.0 * alpha > alpha) betas.push_back(2.0 * alpha);
  for (double beta : betas) {
    const bool ok = scan_concavity(grid, values, beta).worst <= tolerance;
    report.higher_orders.emplace_back(beta, ok);
    if (report.holds && !ok) report.hierarchy_consistent = false;
  }
  return report;
}

ConcavityReport check_alpha_concavity(const SupplyCurve& curve, double alpha, double t,
                                      double tolerance) {
  std::vector<double> grid;
  std::vector<double> values;
  for (double x : curve.bid_grid()) {
    if (x > curve.saturation_bid()) break;
    grid.push_back(x);
    values.push_back(curve.win_prob(x, t));
  }
  if (grid.back() < curve.saturation_bid()) {
    grid.push_back(curve.saturation_bid());
    values.push_back(curve.win_prob(curve.saturation_bid(), t));
  }
  return check_alpha_concavity(grid, values, alpha, tolerance);
}

double majorant_objective(std::span<const double> candidate, std::span<const double> samples) {
  double sum = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double e = candidate[i] - samples[i];
    sum += e * e;
  }
  return sum / static_cast<double>(samples.size());
}

PiecewiseAffineConvex convex_majorant(std::span<const double> grid, std::span<const double> samples) {
  const std::size_t size = samples.size();
  if (grid.size() != size) throw ModelError("convex_majorant: grid and samples differ in length");
  if (size < 3) throw ModelError("convex_majorant needs at least three samples");
  for (std::size_t i = 1; i < size; ++i) {
    if (!(grid[i] > grid[i - 1])) throw ModelError("convex_majorant: grid must be strictly increasing");
  }
  double scale = 1.0;
  for (double v : samples) {
    if (!std::isfinite(v)) throw ModelError("convex_majorant: non-finite sample");
    scale = std::max(scale, std::abs(v));
  }

  // Feasible input is its own minimizer (zero objective).
  if (shape_violation(grid, samples) <= 1e-12 * scale) {
    return PiecewiseAffineConvex({grid.begin(), grid.end()}, {samples.begin(), samples.end()});
  }
  if (size > kMaxQpPoints) {
    throw QpError(QpStatus::TooLarge,
                  "convex_majorant: " + std::to_string(size) + " samples exceed the dense QP limit");
  }

  const int n = static_cast<int>(size);
  const int m = 3 * n - 2;
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = samples[static_cast<std::size_t>(i)] / scale;

  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, m);
  Eigen::VectorXd d = Eigen::VectorXd::Zero(m);
  int col = 0;
  for (int i = 0; i < n; ++i, ++col) {
    C(i, col) = 1.0;
    d(col) = v(i);
  }
  for (int i = 1; i < n; ++i, ++col) {
    C(i, col) = 1.0;
    C(i - 1, col) = -1.0;
  }
  for (int i = 1; i + 1 < n; ++i, ++col) {
    const double h0 = grid[static_cast<std::size_t>(i)] - grid[static_cast<std::size_t>(i - 1)];
    const double h1 = grid[static_cast<std::size_t>(i + 1)] - grid[static_cast<std::size_t>(i)];
    C(i + 1, col) = 2.0 * h0 / (h0 + h1);
    C(i, col) = -2.0;
    C(i - 1, col) = 2.0 * h1 / (h0 + h1);
  }

  const QpResult qp = solve_qp(Eigen::MatrixXd::Identity(n, n), -v, C, d);
  if (qp.status != QpStatus::Optimal) throw QpError(qp.status, "convex_majorant QP failed");

  std::vector<double> lambda(size);
  for (int i = 0; i < n; ++i) lambda[static_cast<std::size_t>(i)] = qp.x(i) * scale;

  double worst = shape_violation(grid, lambda);
  for (std::size_t i = 0; i < size; ++i) worst = std::max(worst, samples[i] - lambda[i]);
  if (worst > 1e-8 * scale) {
    throw QpError(QpStatus::NumericalFailure,
                  "convex_majorant: solution violates constraints by " + std::to_string(worst));
  }
  return PiecewiseAffineConvex({grid.begin(), grid.end()}, std::move(lambda));
}

PiecewiseAffineConvex sparsify(const PiecewiseAffineConvex& f, std::size_t segments) {
  if (segments < 2) throw ModelError("sparsify needs a budget of at least two segments");
  const std::size_t n = f.size();
  if (n <= segments + 1) return f;
  const auto& s = f.knots();
  const auto& v = f.values();

  // Largest chord excess inside (a, b) and the knot where it occurs.
  auto worst_in = [&](std::size_t a, std::size_t b) {
    std::pair<double, std::size_t> best{0.0, a};
    const double slope = (v[b] - v[a]) / (s[b] - s[a]);
    for (std::size_t i = a + 1; i < b; ++i) {
      const double gap = v[a] + slope * (s[i] - s[a]) - v[i];
      if (gap > best.first) best = {gap, i};
    }
    return best;
  };

  std::vector<std::size_t> chosen{0, n - 1};
  while (chosen.size() < segments + 1) {
    double best_gap = 0.0;
    std::size_t best_knot = 0;
    for (std::size_t g = 0; g + 1 < chosen.size(); ++g) {
      const auto [gap, knot] = worst_in(chosen[g], chosen[g + 1]);
      if (gap > best_gap) {
        best_gap = gap;
        best_knot = knot;
      }
    }
    if (best_gap <= 0.0) break;
    chosen.insert(std::upper_bound(chosen.begin(), chosen.end(), best_knot), best_knot);
  }

  std::vector<double> knots;
  std::vector<double> values;
  knots.reserve(chosen.size());
  values.reserve(chosen.size());
  for (std::size_t i : chosen) {
    knots.push_back(s[i]);
    values.push_back(v[i]);
  }
  return PiecewiseAffineConvex(std::move(knots), std::move(values));
}

AcquisitionTable tabulate_acquisition_at(const SupplyCurve& curve, Mechanism mechanism, double t,
                                         const TabulationOptions& options, int type_index) {
  AcquisitionTable table;
  table.time = t;
  const double top = curve.sup_rate(t);
  if (!(top > 0.0)) {
    table.cost = PiecewiseAffineConvex({0.0}, {0.0});
    return table;
  }
  const std::size_t points = std::max<std::size_t>(options.rate_points, 3);
  double bottom = curve.floor_rate(t);
  if (bottom <= 1e-9 * top) bottom = 0.0;

  std::vector<double> rates;
  rates.reserve(points);
  if (top - bottom <= 1e-12 * top) {
    rates = {0.0, top};
  } else if (bottom > 0.0) {
    rates.push_back(0.0);
    for (std::size_t i = 0; i + 1 < points; ++i) {
      rates.push_back(bottom + (top - bottom) * static_cast<double>(i) / static_cast<double>(points - 2));
    }
  } else {
    for (std::size_t i = 0; i < points; ++i) {
      rates.push_back(top * static_cast<double>(i) / static_cast<double>(points - 1));
    }
  }
  rates.back() = top;

  std::vector<double> costs(rates.size());
  for (std::size_t i = 0; i < rates.size(); ++i) {
    costs[i] = curve.acquisition_cost(mechanism, rates[i], t);
    if (!std::isfinite(costs[i])) {
      std::ostringstream os;
      os << "acquisition cost unbounded at s=" << rates[i] << " for type " << type_index << " at t=" << t;
      throw ModelError(os.str());
    }
  }

  if (rates.size() < 3) {
    costs[1] = std::max(costs[1], costs[0]);
    table.cost = PiecewiseAffineConvex(std::move(rates), std::move(costs));
    return table;
  }

  PiecewiseAffineConvex envelope;
  try {
    envelope = convex_majorant(rates, costs);
  } catch (const QpError& e) {
    std::ostringstream os;
    os << "type " << type_index << " at t=" << t << ": " << e.what();
    throw QpError(e.status(), os.str());
  }
  for (std::size_t i = 0; i < rates.size(); ++i) {
    table.majorant_deviation = std::max(table.majorant_deviation, envelope.values()[i] - costs[i]);
  }
  table.cost = sparsify(envelope, std::max<std::size_t>(options.segments, 2));
  return table;
}

std::vector<AcquisitionTable> tabulate_acquisition(const SupplyCurve& curve, Mechanism mechanism,
                                                   std::span<const double> time_knots,
                                                   const TabulationOptions& options, int type_index) {
  std::vector<AcquisitionTable> out;
  out.reserve(time_knots.size());
  for (double t : time_knots) out.push_back(tabulate_acquisition_at(curve, mechanism, t, options, type_index));
  return out;
}

}  // namespace bidplan
