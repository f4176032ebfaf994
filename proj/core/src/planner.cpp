#include "bidplan/planner.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

#include "bidplan/lp.hpp"

namespace bidplan {

namespace {

constexpr double kKnotTolerance = 1e-9;

template <class F>
double simpson(F&& f, double a, double b, double max_step = 0.05) {
  if (!(b > a)) return 0.0;
  int n = static_cast<int>(std::ceil((b - a) / max_step));
  n = std::max(2, n + (n % 2));
  const double h = (b - a) / n;
  double sum = f(a) + f(b);
  for (int i = 1; i < n; ++i) sum += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return sum * h / 3.0;
}

}  // namespace

std::string_view to_string(PlanMode m) noexcept {
  return m == PlanMode::Strict ? "strict" : "best-effort";
}

std::string_view to_string(PlanStatus s) noexcept {
  switch (s) {
    case PlanStatus::Optimal: return "optimal";
    case PlanStatus::BestEffort: return "best-effort";
    case PlanStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

PlanMode parse_plan_mode(std::string_view text) {
  if (text == "strict") return PlanMode::Strict;
  if (text == "best-effort" || text == "best_effort" || text == "besteffort") return PlanMode::BestEffort;
  throw PlanError("unknown plan mode '" + std::string(text) + "' (expected strict or best-effort)");
}

TimeGrid build_grid(std::span<const Contract> contracts, int K) {
  const int n = static_cast<int>(contracts.size());
  if (n == 0) throw PlanError("build_grid needs at least one contract");
  if (K < n + 1) {
    throw PlanError("grid size K=" + std::to_string(K) + " must be at least N+1=" + std::to_string(n + 1));
  }
  double horizon = 0.0;
  for (const auto& c : contracts) {
    if (!(c.deadline > 0.0)) throw PlanError("contract deadlines must be positive");
    horizon = std::max(horizon, c.deadline);
  }
  std::vector<double> knots;
  const int segments = K - n;
  for (int i = 0; i <= segments; ++i) knots.push_back(horizon * i / segments);
  knots.back() = horizon;
  for (const auto& c : contracts) knots.push_back(c.deadline);
  std::sort(knots.begin(), knots.end());
  const double tol = kKnotTolerance * std::max(1.0, horizon);
  knots.erase(std::unique(knots.begin(), knots.end(), [tol](double a, double b) { return b - a <= tol; }),
              knots.end());
  return TimeGrid{std::move(knots)};
}

AcquisitionTables tabulate_for_grid(std::span<const SupplyCurve> curves, Mechanism mechanism,
                                     const TimeGrid& grid, const TabulationOptions& options, double origin) {
  AcquisitionTables out;
  out.at.resize(curves.size());
  for (std::size_t j = 0; j < curves.size(); ++j) {
    for (double t : grid.knots) {
      out.at[j].push_back(
          tabulate_acquisition_at(curves[j], mechanism, origin + t, options, static_cast<int>(j)).cost);
    }
  }
  return out;
}

TableCache::TableCache(std::vector<SupplyCurve> curves, Mechanism mechanism, TabulationOptions options,
                       double lattice_hours)
    : curves_(std::move(curves)), mechanism_(mechanism), options_(options), lattice_(lattice_hours) {
  if (lattice_ < 0.0) throw PlanError("table lattice must be non-negative");
}

double TableCache::snap(int j, double t) const {
  const auto& curve = curves_[static_cast<std::size_t>(j)];
  if (curve.is_time_homogeneous()) return 0.0;
  double tau = t;
  if (curve.period()) {
    const double p = *curve.period();
    const double t0 = curve.time_knots().front();
    tau = std::fmod(t - t0, p);
    if (tau < 0.0) tau += p;
    tau += t0;
  }
  if (lattice_ > 0.0) {
    tau = std::round(tau / lattice_) * lattice_;
    if (curve.period() && tau >= curve.time_knots().front() + *curve.period()) tau -= *curve.period();
  }
  return tau;
}

const PiecewiseAffineConvex& TableCache::table(int j, double t) const {
  if (j < 0 || j >= static_cast<int>(curves_.size())) throw PlanError("table request for unknown type");
  const double tau = snap(j, t);
  const long long key = lattice_ > 0.0 ? std::llround(tau / lattice_) : std::bit_cast<long long>(tau);
  {
    std::lock_guard lock(mutex_);
    const auto it = cache_.find({j, key});
    if (it != cache_.end()) return *it->second;
  }
  auto fresh = std::make_unique<PiecewiseAffineConvex>(
      tabulate_acquisition_at(curves_[static_cast<std::size_t>(j)], mechanism_, tau, options_, j).cost);
  std::lock_guard lock(mutex_);
  auto [it, inserted] = cache_.try_emplace({j, key}, std::move(fresh));
  return *it->second;
}

AcquisitionTables TableCache::for_grid(const TimeGrid& grid, double origin) const {
  AcquisitionTables out;
  out.at.resize(curves_.size());
  for (std::size_t j = 0; j < curves_.size(); ++j) {
    out.at[j].reserve(grid.knots.size());
    for (double t : grid.knots) out.at[j].push_back(table(static_cast<int>(j), origin + t));
  }
  return out;
}

AdequacyReport check_adequate_supply(std::span<const Contract> contracts,
                                     std::span<const SupplyCurve> curves,
                                     std::span<const double> probe_bids, double origin) {
  const std::size_t n = contracts.size();
  const std::size_t m = curves.size();
  AdequacyReport report;
  report.probe_bids.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    report.probe_bids[j] = probe_bids.empty() ? curves[j].saturation_bid() : probe_bids[j];
    if (!std::isfinite(report.probe_bids[j])) throw PlanError("adequacy probe bids must be finite");
  }
  if (!probe_bids.empty() && probe_bids.size() != m) throw PlanError("one probe bid per type is required");

  std::vector<double> taus{0.0};
  for (const auto& c : contracts) taus.push_back(c.deadline);
  std::sort(taus.begin(), taus.end());
  taus.erase(std::unique(taus.begin(), taus.end(),
                         [](double a, double b) { return b - a <= kKnotTolerance * std::max(1.0, b); }),
             taus.end());
  const std::size_t intervals = taus.size() - 1;

  std::vector<std::vector<double>> capacity(m, std::vector<double>(intervals, 0.0));
  double total = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double x = report.probe_bids[j];
    for (std::size_t k = 0; k < intervals; ++k) {
      capacity[j][k] = simpson([&](double t) { return curves[j].eval_supply(x, origin + t); }, taus[k], taus[k + 1]);
      total += capacity[j][k];
    }
  }

  LinearProgram lp;
  double demand = 0.0;
  for (const auto& c : contracts) demand += c.quantity * (1.0 + 1e-6);
  const int z = lp.add_column(-1.0, -demand - 1.0, total + 1.0);
  std::vector<LinearProgram::Entries> demand_rows(n);
  std::vector<std::vector<LinearProgram::Entries>> share_rows(m, std::vector<LinearProgram::Entries>(intervals));
  std::vector<std::vector<std::pair<int, double>>> supplied(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (int j : contracts[i].eligible_types) {
      if (j < 0 || static_cast<std::size_t>(j) >= m) throw PlanError("contract references unknown type");
      for (std::size_t k = 0; k < intervals; ++k) {
        if (taus[k + 1] > contracts[i].deadline + kKnotTolerance * std::max(1.0, taus[k + 1])) break;
        const double cap = capacity[static_cast<std::size_t>(j)][k];
        if (!(cap > 0.0)) continue;
        const int g = lp.add_column(0.0, 0.0, 1.0);
        demand_rows[i].emplace_back(g, cap);
        share_rows[static_cast<std::size_t>(j)][k].emplace_back(g, 1.0);
        supplied[i].emplace_back(g, cap);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto row = demand_rows[i];
    row.emplace_back(z, -1.0);
    lp.add_row(RowSense::GreaterEqual, contracts[i].quantity * (1.0 + 1e-6), std::move(row));
  }
  for (auto& per_type : share_rows) {
    for (auto& row : per_type) {
      if (!row.empty()) lp.add_row(RowSense::LessEqual, 1.0, std::move(row));
    }
  }
  const LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::Optimal) throw PlanError("adequacy LP failed: " + to_string(sol.status));

  report.margin = n == 0 ? 0.0 : sol.x[static_cast<std::size_t>(z)];
  report.feasible = report.margin >= 0.0;
  report.slack.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double got = 0.0;
    for (const auto& [g, cap] : supplied[i]) got += cap * sol.x[static_cast<std::size_t>(g)];
    report.slack[i] = got - contracts[i].quantity;
  }

  report.simple_condition.assign(m, 1);
  report.simple_condition_holds = true;
  for (std::size_t j = 0; j < m; ++j) {
    double need = 0.0;
    double tau = kUnbounded;
    for (const auto& c : contracts) {
      if (std::find(c.eligible_types.begin(), c.eligible_types.end(), static_cast<int>(j)) == c.eligible_types.end()) continue;
      need += c.quantity;
      tau = std::min(tau, c.deadline);
    }
    if (!std::isfinite(tau)) continue;
    const double x = report.probe_bids[j];
    const double have = simpson([&](double t) { return curves[j].eval_supply(x, origin + t); }, 0.0, tau);
    report.simple_condition[j] = have > need;
    report.simple_condition_holds = report.simple_condition_holds && have > need;
  }

  std::ostringstream os;
  os << (report.feasible ? "adequate supply" : "inadequate supply") << " (margin " << report.margin << ")";
  for (std::size_t i = 0; i < n; ++i) {
    if (report.slack[i] < 0.0) os << "; contract " << contracts[i].id << " short by " << -report.slack[i];
  }
  report.summary = os.str();
  return report;
}

bool Plan::active(int i, int k) const {
  const double end = grid.knots[static_cast<std::size_t>(k) + 1];
  return end <= contracts[static_cast<std::size_t>(i)].deadline + kKnotTolerance * std::max(1.0, end);
}

bool Plan::eligible(int i, int j) const {
  const auto& a = contracts[static_cast<std::size_t>(i)].eligible_types;
  return std::find(a.begin(), a.end(), j) != a.end();
}

namespace {

double table_value(const PiecewiseAffineConvex& f, double s) {
  return f(std::min(s, f.domain_end()));
}

double interval_cost(const AcquisitionTables& tables, int j, int k, double delta, double s) {
  const auto& row = tables.at[static_cast<std::size_t>(j)];
  return 0.5 * delta * (table_value(row[static_cast<std::size_t>(k)], s) + table_value(row[static_cast<std::size_t>(k) + 1], s));
}

void equalize_blocks(Plan& plan, const AcquisitionTables& tables) {
  const int n = static_cast<int>(plan.contracts.size());
  const int K = plan.grid.intervals();
  for (int j = 0; j < plan.num_types; ++j) {
    const auto& row = tables.at[static_cast<std::size_t>(j)];
    auto same_block = [&](int k) {  // can interval k + 1 join interval k?
      if (plan.in_lp[j][k] != plan.in_lp[j][k + 1]) return false;
      if (!(row[k] == row[k + 1]) || !(row[k + 1] == row[k + 2])) return false;
      for (int i = 0; i < n; ++i) {
        if (plan.eligible(i, j) && plan.active(i, k) != plan.active(i, k + 1)) return false;
      }
      return true;
    };
    int k0 = 0;
    while (k0 < K) {
      int k1 = k0;
      while (k1 + 1 < K && same_block(k1)) ++k1;
      if (k1 > k0 && plan.in_lp[j][k0]) {
        double span = 0.0;
        double s = 0.0;
        std::vector<double> r(static_cast<std::size_t>(n), 0.0);
        for (int k = k0; k <= k1; ++k) {
          const double d = plan.grid.delta(k);
          span += d;
          s += d * plan.supply[j][k];
          for (int i = 0; i < n; ++i) r[i] += d * plan.allocation[i][j][k];
        }
        for (int k = k0; k <= k1; ++k) {
          plan.supply[j][k] = s / span;
          for (int i = 0; i < n; ++i) plan.allocation[i][j][k] = r[i] / span;
        }
      }
      k0 = k1 + 1;
    }
  }
}

}  // namespace

Plan solve_plan(std::span<const Contract> contracts, const AcquisitionTables& tables, const TimeGrid& grid,
                const PlannerOptions& options, std::span<const SupplyCurve> curves, double origin) {
  const int n = static_cast<int>(contracts.size());
  const int m = tables.num_types();
  const int K = grid.intervals();
  if (K < 1) throw PlanError("time grid needs at least one interval");
  for (int k = 0; k < K; ++k) {
    if (!(grid.delta(k) > 0.0)) throw PlanError("time grid knots must be strictly increasing");
  }
  for (const auto& row : tables.at) {
    if (static_cast<int>(row.size()) != K + 1) throw PlanError("acquisition tables must cover every grid knot");
    for (const auto& f : row) {
      if (f.size() == 0) throw PlanError("empty acquisition table");
    }
  }
  validate_contracts(contracts, m);
  const double horizon = grid.horizon();
  for (const auto& c : contracts) {
    const bool listed = std::any_of(grid.knots.begin(), grid.knots.end(), [&](double t) {
      return std::abs(t - c.deadline) <= kKnotTolerance * std::max(1.0, horizon);
    });
    if (!listed && c.deadline < horizon) throw PlanError("grid is missing a contract deadline");
  }

  Plan plan;
  plan.grid = grid;
  plan.contracts.assign(contracts.begin(), contracts.end());
  plan.num_types = m;
  plan.supply.assign(m, std::vector<double>(K, 0.0));
  plan.allocation.assign(n, std::vector<std::vector<double>>(m, std::vector<double>(K, 0.0)));
  plan.shortfall.assign(n, 0.0);
  plan.rho.assign(n, 0.0);
  plan.mu.assign(m, std::vector<double>(K, 0.0));
  plan.in_lp.assign(m, std::vector<char>(K, 0));
  for (int i = 0; i < n; ++i) {
    for (int j : contracts[i].eligible_types) {
      for (int k = 0; k < K; ++k) {
        if (plan.active(i, k)) plan.in_lp[j][k] = 1;
      }
    }
  }

  LinearProgram lp;
  std::vector<std::vector<int>> s_col(m, std::vector<int>(K, -1));
  std::vector<std::vector<std::vector<int>>> r_col(n, std::vector<std::vector<int>>(m, std::vector<int>(K, -1)));
  std::vector<int> sigma_col(n, -1);
  int group = 0;
  double max_slope = 0.0;
  const int seeds = std::max(1, options.seed_segments);

  auto add_epigraph = [&](int s, const PiecewiseAffineConvex& f, double weight) {
    const int a = lp.add_column(weight, f.values().front());
    const auto segs = f.segments();
    const int count = static_cast<int>(segs.size());
    const int stride = std::max(1, (count + seeds - 1) / seeds);
    for (int h = 0; h < count; ++h) {
      const bool seed = count <= seeds || h % stride == 0 || h == count - 1;
      lp.add_lazy_row(RowSense::LessEqual, -segs[h].intercept, {{s, segs[h].slope}, {a, -1.0}}, group, seed);
      max_slope = std::max(max_slope, segs[h].slope);
    }
    ++group;
    return a;
  };

  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < K; ++k) {
      if (!plan.in_lp[j][k]) continue;
      const auto& left = tables.at[j][k];
      const auto& right = tables.at[j][k + 1];
      const double cap = std::min(left.domain_end(), right.domain_end());
      s_col[j][k] = lp.add_column(0.0, 0.0, std::max(cap, 0.0));
      add_epigraph(s_col[j][k], left, 0.5 * grid.delta(k));
      add_epigraph(s_col[j][k], right, 0.5 * grid.delta(k));
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j : contracts[i].eligible_types) {
      for (int k = 0; k < K; ++k) {
        if (plan.active(i, k)) r_col[i][j][k] = lp.add_column(0.0);
      }
    }
  }
  plan.penalty_weight = options.mode == PlanMode::BestEffort ? 10.0 * (max_slope > 0.0 ? max_slope : 1.0) : 0.0;
  if (options.mode == PlanMode::BestEffort) {
    for (int i = 0; i < n; ++i) sigma_col[i] = lp.add_column(plan.penalty_weight);
  }

  std::vector<int> demand_row(n);
  for (int i = 0; i < n; ++i) {
    LinearProgram::Entries e;
    for (int j = 0; j < m; ++j) {
      for (int k = 0; k < K; ++k) {
        if (r_col[i][j][k] >= 0) e.emplace_back(r_col[i][j][k], grid.delta(k));
      }
    }
    if (sigma_col[i] >= 0) e.emplace_back(sigma_col[i], 1.0);
    demand_row[i] = lp.add_row(RowSense::GreaterEqual, contracts[i].quantity, std::move(e));
  }
  std::vector<std::vector<int>> flow_row(m, std::vector<int>(K, -1));
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < K; ++k) {
      if (s_col[j][k] < 0) continue;
      LinearProgram::Entries e;
      for (int i = 0; i < n; ++i) {
        if (r_col[i][j][k] >= 0) e.emplace_back(r_col[i][j][k], 1.0);
      }
      e.emplace_back(s_col[j][k], -1.0);
      flow_row[j][k] = lp.add_row(RowSense::Equal, 0.0, std::move(e));
    }
  }

  const LpSolution sol = solve_lp(lp);
  plan.lp_iterations = sol.iterations;
  plan.cut_rounds = sol.cut_rounds;
  if (sol.status == LpStatus::Infeasible) {
    plan.status = PlanStatus::Infeasible;
    if (!curves.empty()) plan.adequacy = check_adequate_supply(contracts, curves, {}, origin);
    return plan;
  }
  if (sol.status != LpStatus::Optimal) throw PlanError("planner LP failed: " + to_string(sol.status));

  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < K; ++k) {
      if (s_col[j][k] < 0) continue;
      plan.supply[j][k] = std::max(0.0, sol.x[s_col[j][k]]);
      plan.mu[j][k] = -sol.row_duals[flow_row[j][k]] / grid.delta(k);
      for (int i = 0; i < n; ++i) {
        if (r_col[i][j][k] >= 0) plan.allocation[i][j][k] = std::max(0.0, sol.x[r_col[i][j][k]]);
      }
    }
  }
  bool short_any = false;
  for (int i = 0; i < n; ++i) {
    plan.rho[i] = sol.row_duals[demand_row[i]];
    if (sigma_col[i] >= 0) {
      plan.shortfall[i] = std::max(0.0, sol.x[sigma_col[i]]);
      if (plan.shortfall[i] > 1e-7 * std::max(1.0, contracts[i].quantity)) short_any = true;
    }
  }
  plan.has_duals = true;
  plan.status = short_any ? PlanStatus::BestEffort : PlanStatus::Optimal;
  plan.lp_objective = sol.objective;

  if (options.equalize_blocks) equalize_blocks(plan, tables);
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < K; ++k) {
      if (plan.in_lp[j][k]) plan.objective += interval_cost(tables, j, k, grid.delta(k), plan.supply[j][k]);
    }
  }
  return plan;
}

PseudoBids extract_pseudo_bids(const Plan& plan) {
  if (!plan.has_duals) throw PlanError("plan carries no dual values (status " + std::string(to_string(plan.status)) + ")");
  PseudoBids out;
  out.mu = plan.mu;
  out.rho.resize(plan.rho.size());
  for (std::size_t i = 0; i < plan.rho.size(); ++i) out.rho[i] = std::max(0.0, plan.rho[i]);
  const int n = static_cast<int>(plan.contracts.size());
  for (int i = 0; i < n; ++i) {
    for (int j : plan.contracts[i].eligible_types) {
      for (int k = 0; k < plan.grid.intervals(); ++k) {
        if (plan.active(i, k)) out.residual = std::max(out.residual, out.rho[i] - out.mu[j][k]);
      }
    }
  }
  return out;
}

int BidPlan::interval(double t) const {
  if (knots.size() < 2 || t < knots.front() || t >= knots.back()) return -1;
  const auto it = std::upper_bound(knots.begin(), knots.end(), t);
  return static_cast<int>(it - knots.begin()) - 1;
}

double BidPlan::bid(int j, double t) const {
  const int k = interval(t);
  return k < 0 ? kNoBid : bids[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
}

double BidPlan::allocation(int i, int j, double t) const {
  const int k = interval(t);
  return k < 0 ? 0.0 : gamma[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
}

BidPlan reconstruct_paths(const Plan& plan, std::span<const SupplyCurve> curves, double origin) {
  if (plan.status == PlanStatus::Infeasible) throw PlanError("cannot reconstruct bids from an infeasible plan");
  if (static_cast<int>(curves.size()) != plan.num_types) throw PlanError("one supply curve per type is required");
  const int n = static_cast<int>(plan.contracts.size());
  const int m = plan.num_types;
  const int K = plan.grid.intervals();
  BidPlan out;
  out.origin = origin;
  for (double t : plan.grid.knots) out.knots.push_back(origin + t);
  out.bids.assign(m, std::vector<double>(K, kNoBid));
  out.gamma.assign(n, std::vector<std::vector<double>>(m, std::vector<double>(K, 0.0)));
  for (const auto& c : plan.contracts) out.contract_ids.push_back(c.id);
  out.pseudo_bids = plan.rho;

  for (int j = 0; j < m; ++j) {
    const auto& curve = curves[static_cast<std::size_t>(j)];
    for (int k = 0; k < K; ++k) {
      const double s = plan.supply[j][k];
      const double mid = origin + 0.5 * (plan.grid.knots[k] + plan.grid.knots[k + 1]);
      if (!(s > 1e-12 * std::max(1.0, curve.sup_rate(mid)))) continue;
      double x = curve.invert_supply(s, mid);
      if (is_unbounded(x)) {
        x = curve.saturation_bid();
        std::ostringstream os;
        os << "type " << j << " interval " << k << ": rate " << s << " exceeds the attainable " << curve.sup_rate(mid)
           << " at the midpoint; bid clamped to " << x;
        out.warnings.push_back(os.str());
      }
      out.bids[j][k] = x;
      double total = 0.0;
      for (int i = 0; i < n; ++i) {
        out.gamma[i][j][k] = plan.allocation[i][j][k] / s;
        total += out.gamma[i][j][k];
      }
      if (total > 1.0 + 1e-7) {
        for (int i = 0; i < n; ++i) out.gamma[i][j][k] /= total;
      }
    }
  }
  return out;
}

double dual_objective(const Plan& plan, const AcquisitionTables& tables, std::span<const double> rho) {
  const int n = static_cast<int>(plan.contracts.size());
  if (static_cast<int>(rho.size()) != n) throw PlanError("one multiplier per contract is required");
  double value = 0.0;
  for (int i = 0; i < n; ++i) {
    if (rho[i] < 0.0) return -kUnbounded;
    if (plan.penalty_weight > 0.0 && rho[i] > plan.penalty_weight * (1.0 + 1e-9)) return -kUnbounded;
    value += rho[i] * plan.contracts[i].quantity;
  }
  for (int j = 0; j < plan.num_types; ++j) {
    for (int k = 0; k < plan.grid.intervals(); ++k) {
      if (!plan.in_lp[j][k]) continue;
      double mu = 0.0;
      for (int i = 0; i < n; ++i) {
        if (plan.eligible(i, j) && plan.active(i, k)) mu = std::max(mu, rho[i]);
      }
      const auto h = weighted_sum(tables.at[j][k], 0.5, tables.at[j][k + 1], 0.5);
      value -= plan.grid.delta(k) * h.conjugate(mu);
    }
  }
  return value;
}

DualityReport duality_gap(const Plan& plan, const AcquisitionTables& tables) {
  if (!plan.has_duals) throw PlanError("duality gap needs a solved plan with duals");
  DualityReport r;
  r.primal = plan.lp_objective;
  std::vector<double> rho(plan.rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) rho[i] = std::max(0.0, plan.rho[i]);
  r.dual = dual_objective(plan, tables, rho);
  r.gap = r.primal - r.dual;
  return r;
}

}  // namespace bidplan
