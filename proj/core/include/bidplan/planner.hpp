#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bidplan/convexify.hpp"
#include "bidplan/market_model.hpp"
#include "bidplan/piecewise.hpp"

namespace bidplan {

class PlanError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 0 = T~_0 < ... < T~_K = T (hours, relative to the planning origin).
struct TimeGrid {
  std::vector<double> knots;

  int intervals() const noexcept { return static_cast<int>(knots.size()) - 1; }
  double delta(int k) const { return knots[static_cast<std::size_t>(k) + 1] - knots[static_cast<std::size_t>(k)]; }
  double horizon() const { return knots.back(); }
};

/// K - N uniform segments of [0, max deadline] merged with every deadline,
/// duplicates within 1e-9 removed. Throws PlanError when K < N + 1.
TimeGrid build_grid(std::span<const Contract> contracts, int K);

/// Acquisition cost tables Lambda_j(., T~_k) for every type j and knot k.
struct AcquisitionTables {
  std::vector<std::vector<PiecewiseAffineConvex>> at;  // [j][k], k = 0..K

  int num_types() const noexcept { return static_cast<int>(at.size()); }
};

/// Tabulates every curve at origin + T~_k.
AcquisitionTables tabulate_for_grid(std::span<const SupplyCurve> curves, Mechanism mechanism,
                                     const TimeGrid& grid, const TabulationOptions& options = {},
                                     double origin = 0.0);

/// Thread-safe memo of acquisition tables on a time lattice. Requests snap to
/// the nearest lattice point (periodic curves wrap), so repeated re-planning
/// reuses tables. A lattice step of 0 disables snapping.
class TableCache {
 public:
  TableCache(std::vector<SupplyCurve> curves, Mechanism mechanism, TabulationOptions options,
             double lattice_hours = 0.25);

  const PiecewiseAffineConvex& table(int j, double t) const;
  AcquisitionTables for_grid(const TimeGrid& grid, double origin) const;

  const std::vector<SupplyCurve>& curves() const noexcept { return curves_; }
  Mechanism mechanism() const noexcept { return mechanism_; }
  double lattice() const noexcept { return lattice_; }

 private:
  double snap(int j, double t) const;

  std::vector<SupplyCurve> curves_;
  Mechanism mechanism_;
  TabulationOptions options_;
  double lattice_;
  mutable std::mutex mutex_;
  mutable std::map<std::pair<int, long long>, std::unique_ptr<PiecewiseAffineConvex>> cache_;
};

struct AdequacyReport {
  bool feasible = false;
  /// Largest common margin z with sum gamma S - C_i - eta_i >= z for all i.
  double margin = 0.0;
  std::vector<double> slack;  // per contract: sum gamma S - C_i at the LP solution
  std::vector<double> probe_bids;
  /// Per-type sufficient condition: int_0^tau_j W_j(x_j) dt > sum_{i in B_j} C_i.
  std::vector<char> simple_condition;
  bool simple_condition_holds = false;
  std::string summary;
};

/// Linear feasibility check at constant probe bids over the inter-deadline
/// intervals. An empty `probe_bids` uses each curve's saturation bid.
AdequacyReport check_adequate_supply(std::span<const Contract> contracts,
                                     std::span<const SupplyCurve> curves,
                                     std::span<const double> probe_bids = {}, double origin = 0.0);

enum class PlanMode { Strict, BestEffort };
enum class PlanStatus { Optimal, BestEffort, Infeasible };

std::string_view to_string(PlanMode m) noexcept;
std::string_view to_string(PlanStatus s) noexcept;
PlanMode parse_plan_mode(std::string_view text);

struct PlannerOptions {
  PlanMode mode = PlanMode::Strict;
  /// Segments per table seeded into the LP before cut generation.
  int seed_segments = 4;
  /// Averages s and r over runs of intervals with identical tables and the
  /// same active contracts. The objective is unchanged (the cost is convex).
  bool equalize_blocks = true;
};

struct Plan {
  PlanStatus status = PlanStatus::Infeasible;
  TimeGrid grid;
  std::vector<Contract> contracts;
  int num_types = 0;
  std::vector<std::vector<double>> supply;                   // [j][k]
  std::vector<std::vector<std::vector<double>>> allocation;  // [i][j][k]
  std::vector<double> shortfall;                             // [i], BestEffort slack
  double objective = 0.0;                                    // expected spend
  double penalty_weight = 0.0;
  double lp_objective = 0.0;  // spend plus shortfall penalty
  std::vector<double> rho;                 // [i]
  std::vector<std::vector<double>> mu;     // [j][k]
  std::vector<std::vector<char>> in_lp;    // [j][k]: type j had active contracts
  bool has_duals = false;
  std::optional<AdequacyReport> adequacy;
  int lp_iterations = 0;
  int cut_rounds = 0;

  bool active(int i, int k) const;
  bool eligible(int i, int j) const;
};

/// Solves the epigraph LP with trapezoidal costs 1/2 Delta_k (alpha^L + alpha^R)
/// where alpha^L >= Lambda(., T~_{k-1}) and alpha^R >= Lambda(., T~_k)
/// segment-wise. A Strict plan that is infeasible comes back with status
/// Infeasible and the adequacy report built from `curves` when given.
Plan solve_plan(std::span<const Contract> contracts, const AcquisitionTables& tables,
                const TimeGrid& grid, const PlannerOptions& options = {},
                std::span<const SupplyCurve> curves = {}, double origin = 0.0);

struct PseudoBids {
  std::vector<double> rho;              // [i], clipped at 0
  std::vector<std::vector<double>> mu;  // [j][k]
  /// max over active eligible (i, j, k) of rho_i - mu_jk, floored at 0.
  double residual = 0.0;
};

/// Throws PlanError when the plan carries no duals.
PseudoBids extract_pseudo_bids(const Plan& plan);

struct BidPlan {
  double origin = 0.0;
  std::vector<double> knots;                            // absolute hours
  std::vector<std::vector<double>> bids;                // [j][k], kNoBid when idle
  std::vector<std::vector<std::vector<double>>> gamma;  // [i][j][k]
  std::vector<int> contract_ids;
  std::vector<double> pseudo_bids;
  std::vector<std::string> warnings;

  /// Interval index holding absolute time t, or -1 outside [origin, end).
  int interval(double t) const;
  double bid(int j, double t) const;
  double allocation(int i, int j, double t) const;
};

/// Bids x_j = W_j^-1(s_j[k]) at interval midpoints and gamma = r / s (0/0 = 0),
/// renormalized where the fractions sum above 1 + 1e-7.
BidPlan reconstruct_paths(const Plan& plan, std::span<const SupplyCurve> curves, double origin = 0.0);

struct DualityReport {
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;  // primal - dual
};

/// Dual objective sum rho_i C_i - sum Delta_k h_jk^*(mu_jk) with h the average
/// of the two knot tables and mu_jk = max of the active pseudo-bids.
DualityReport duality_gap(const Plan& plan, const AcquisitionTables& tables);

/// Same evaluated at arbitrary multipliers (rho >= 0); a lower bound on the
/// primal optimum by weak duality.
double dual_objective(const Plan& plan, const AcquisitionTables& tables, std::span<const double> rho);

}  // namespace bidplan
