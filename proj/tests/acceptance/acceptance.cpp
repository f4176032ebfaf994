#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "bidplan/convexify.hpp"
#include "bidplan/experiment.hpp"
#include "bidplan/planner.hpp"
#include "bidplan/risk.hpp"
#include "bidplan/simulator.hpp"
#include "fixtures.hpp"

using namespace bidplan;
using bidplan::testing::ramp_curve;

namespace {

#ifndef BIDPLAN_SOURCE_DATA_DIR
#define BIDPLAN_SOURCE_DATA_DIR "data"
#endif

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string format(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::filesystem::path scenario_path() {
  return std::filesystem::path(BIDPLAN_SOURCE_DATA_DIR) / "synthetic_scenario.json";
}

double elapsed(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

// Ramp W(x) = clamp(x, 0, 1), one contract C = 5, T = 10.
Plan ramp_plan(Mechanism m, int K, TabulationOptions tab = {257, 256}) {
  const std::vector<SupplyCurve> curves{ramp_curve()};
  const std::vector<Contract> c{{0, {0}, 5.0, 10.0}};
  const auto grid = build_grid(c, K);
  const auto tables = tabulate_for_grid(curves, m, grid, tab);
  return solve_plan(c, tables, grid, {}, curves);
}

// Constant-rate calculus of variations: s = C/T throughout; the second-price
// cost rate is s^2/2 and the first-price cost rate is s^2 on the unit ramp.
double ramp_oracle(Mechanism m) {
  const double C = 5.0, T = 10.0, s = C / T;
  return T * (m == Mechanism::SecondPrice ? 0.5 * s * s : s * s);
}

Outcome analytic_planner() {
  constexpr double kRelTol = 0.01;
  constexpr double kMaxSeconds = 5.0;
  const auto t0 = std::chrono::steady_clock::now();
  const Plan sp = ramp_plan(Mechanism::SecondPrice, 80);
  const Plan fp = ramp_plan(Mechanism::FirstPrice, 80);
  const double secs = elapsed(t0);
  const double e2 = std::abs(sp.objective / ramp_oracle(Mechanism::SecondPrice) - 1.0);
  const double e1 = std::abs(fp.objective / ramp_oracle(Mechanism::FirstPrice) - 1.0);
  const bool ok = sp.status == PlanStatus::Optimal && fp.status == PlanStatus::Optimal && e2 <= kRelTol &&
                  e1 <= kRelTol && secs < kMaxSeconds;
  return {ok, format("second %.6f (oracle %.4f), first %.6f (oracle %.4f), %.2f s", sp.objective,
                     ramp_oracle(Mechanism::SecondPrice), fp.objective, ramp_oracle(Mechanism::FirstPrice), secs)};
}

Outcome discretization_convergence() {
  constexpr double kRatioLo = 0.35, kRatioHi = 0.65;
  const double oracle = ramp_oracle(Mechanism::SecondPrice);
  std::vector<double> err;
  for (int K : {10, 20, 40, 80}) err.push_back(std::abs(ramp_plan(Mechanism::SecondPrice, K).objective - oracle));
  bool ok = true;
  std::string ratios;
  for (std::size_t i = 1; i < err.size(); ++i) {
    const double r = err[i - 1] > 0.0 ? err[i] / err[i - 1] : std::nan("");
    ok = ok && r >= kRatioLo && r <= kRatioHi;
    ratios += format("%s%.3g", i > 1 ? ", " : "", r);
  }
  return {ok, format("errors %.3g, %.3g, %.3g, %.3g; ratios %s", err[0], err[1], err[2], err[3], ratios.c_str())};
}

std::vector<Contract> random_contracts(std::mt19937_64& rng, int N, int M, double load) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Contract> c;
  for (int i = 0; i < N; ++i) {
    Contract k{i, {}, 0.0, 4.0 + 8.0 * u(rng)};
    for (int j = 0; j < M; ++j)
      if (u(rng) < 0.6 || j == i % M) k.eligible_types.push_back(j);
    k.quantity = load * k.deadline * (0.2 + 0.8 * u(rng));
    c.push_back(k);
  }
  return c;
}

// sum_i rho_i C_i - sum_k Delta_k sum_j h_jk^*(max_{i active, eligible} rho_i)
double independent_dual(const Plan& plan, const AcquisitionTables& tables) {
  double d = 0.0;
  for (std::size_t i = 0; i < plan.contracts.size(); ++i) d += std::max(0.0, plan.rho[i]) * plan.contracts[i].quantity;
  for (int k = 0; k < plan.grid.intervals(); ++k)
    for (int j = 0; j < plan.num_types; ++j) {
      double mu = -1.0;
      for (std::size_t i = 0; i < plan.contracts.size(); ++i)
        if (plan.active(static_cast<int>(i), k) && plan.eligible(static_cast<int>(i), j))
          mu = std::max(mu, std::max(0.0, plan.rho[i]));
      if (mu < 0.0) continue;
      const auto h = weighted_sum(tables.at[j][k], 0.5, tables.at[j][k + 1], 0.5);
      d -= plan.grid.delta(k) * h.conjugate(mu);
    }
  return d;
}

Outcome strong_duality() {
  constexpr int kInstances = 20;
  constexpr double kRelTol = 1e-5;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int solved = 0, attempts = 0;
  double worst = 0.0;
  while (solved < kInstances && attempts < 200) {
    ++attempts;
    const int N = 1 + static_cast<int>(rng() % 4), M = 1 + static_cast<int>(rng() % 3);
    std::vector<SupplyCurve> curves;
    for (int j = 0; j < M; ++j) curves.push_back(ramp_curve(1.0 + 2.0 * u(rng)));
    const auto c = random_contracts(rng, N, M, 0.3);
    if (!check_adequate_supply(c, curves).feasible) continue;
    const auto grid = build_grid(c, N + 6);
    const auto m = attempts % 2 ? Mechanism::FirstPrice : Mechanism::SecondPrice;
    const auto tables = tabulate_for_grid(curves, m, grid, {65, 32});
    const auto plan = solve_plan(c, tables, grid, {}, curves);
    if (plan.status != PlanStatus::Optimal) return {false, format("adequate instance %d not solved", attempts)};
    ++solved;
    const double p = plan.lp_objective;
    const double rel = std::abs(p - independent_dual(plan, tables)) / std::max(std::abs(p), 1e-300);
    worst = std::max(worst, p == 0.0 ? 0.0 : rel);
  }
  return {solved == kInstances && worst <= kRelTol,
          format("%d instances, worst |P-D|/|P| = %.3g", solved, worst)};
}

Outcome pseudo_bid_structure() {
  constexpr double kFlatTol = 1e-6;
  constexpr double kSecondTol = 1e-4;
  constexpr double kFirstTol = 1e-3;
  // Unsparsified fine tables; the bid error is bounded by half a rate step.
  const TabulationOptions fine{10001, 10000};
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int instances = 0;
  double worst_sd = 0.0, worst_rho = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    const int N = 1 + rep % 4, M = 1 + rep % 3;
    std::vector<SupplyCurve> curves;
    for (int j = 0; j < M; ++j) curves.push_back(ramp_curve(1.0 + 2.0 * u(rng)));
    const auto c = random_contracts(rng, N, M, 0.2);
    const auto grid = build_grid(c, N + 6);
    const auto tables = tabulate_for_grid(curves, Mechanism::SecondPrice, grid, fine);
    const auto plan = solve_plan(c, tables, grid, {}, curves);
    if (plan.status != PlanStatus::Optimal) continue;
    ++instances;
    const auto bids = reconstruct_paths(plan, curves);
    std::set<double> deadlines{0.0};
    for (const auto& k : c) deadlines.insert(k.deadline);
    const std::vector<double> cuts(deadlines.begin(), deadlines.end());
    for (int j = 0; j < M; ++j)
      for (std::size_t b = 0; b + 1 < cuts.size(); ++b) {
        std::vector<double> xs;
        for (int k = 0; k < grid.intervals(); ++k) {
          const double mid = 0.5 * (grid.knots[k] + grid.knots[k + 1]);
          if (mid < cuts[b] || mid > cuts[b + 1] || is_no_bid(bids.bids[j][k])) continue;
          xs.push_back(bids.bids[j][k]);
          double mu = 0.0;
          for (int i = 0; i < N; ++i)
            if (plan.active(i, k) && plan.eligible(i, j)) mu = std::max(mu, plan.rho[i]);
          worst_rho = std::max(worst_rho, std::abs(bids.bids[j][k] - mu));
        }
        if (xs.size() < 2) continue;
        double mean = 0.0, var = 0.0;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(xs.size());
        for (double x : xs) var += (x - mean) * (x - mean);
        worst_sd = std::max(worst_sd, std::sqrt(var / static_cast<double>(xs.size())));
      }
  }
  const Plan fp = ramp_plan(Mechanism::FirstPrice, 20, fine);
  const auto fb = reconstruct_paths(fp, std::vector<SupplyCurve>{ramp_curve()});
  double worst_first = fp.status == PlanStatus::Optimal ? 0.0 : kUnbounded;
  for (double x : fb.bids[0]) worst_first = std::max(worst_first, std::abs(x - fp.rho[0] / 2.0));
  const bool ok = instances >= 5 && worst_sd <= kFlatTol && worst_rho <= kSecondTol && worst_first <= kFirstTol;
  return {ok, format("%d second-price instances: sd %.3g, |x - max rho| %.3g; first price |x - rho/2| %.3g",
                     instances, worst_sd, worst_rho, worst_first)};
}

Outcome envelope_qp() {
  constexpr double kShapeTol = 1e-8;
  constexpr double kIdempotenceTol = 1e-7;
  constexpr double kMaxSeconds = 10.0;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_major = 0.0, worst_shape = 0.0, worst_idem = 0.0;
  int nonconvex = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 5 + rng() % 60;
    std::vector<double> grid(n), v(n);
    double x = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      x += 0.1 + u(rng);
      grid[i] = x;
      v[i] = 0.05 * x * x + 0.5 * u(rng);
    }
    if (shape_violation(grid, v) > 0.0) ++nonconvex;
    const auto f = convex_majorant(grid, v);
    const auto& lam = f.values();
    for (std::size_t i = 0; i < n; ++i) worst_major = std::max(worst_major, v[i] - lam[i]);
    worst_shape = std::max(worst_shape, shape_violation(f.knots(), lam));
    const auto again = convex_majorant(f.knots(), lam);
    for (std::size_t i = 0; i < n; ++i) worst_idem = std::max(worst_idem, std::abs(again.values()[i] - lam[i]));
  }
  const std::vector<double> fx{0, 1, 2, 3}, fv{0, 1, 1, 2};
  const auto fixture = convex_majorant(fx, fv);
  const double obj = majorant_objective(fixture.values(), fv);
  const double witness = 0.875 / 4.0;
  const double secs = elapsed(t0);
  const bool ok = nonconvex == 100 && worst_major <= kShapeTol && worst_shape <= kShapeTol &&
                  worst_idem <= kIdempotenceTol && obj <= witness + 1e-12 && secs < kMaxSeconds;
  return {ok, format("%d non-convex inputs: majorization %.3g, shape %.3g, idempotence %.3g; fixture %.6f <= %.6f; "
                     "%.2f s",
                     nonconvex, worst_major, worst_shape, worst_idem, obj, witness, secs)};
}

Outcome cost_ordering() {
  constexpr double kTol = 1e-12;
  const Experiment e(load_scenario(scenario_path()));
  double worst = -kUnbounded;
  for (const auto& curve : e.curves().curves) {
    const double top = curve.bid_grid().back();
    for (int g = 0; g < 256; ++g) {
      const double x = top * g / 255.0;
      for (int h = 0; h < 24; ++h) {
        const double d = curve.cost_rate(Mechanism::SecondPrice, x, h) - curve.cost_rate(Mechanism::FirstPrice, x, h);
        worst = std::max(worst, d);
      }
    }
  }
  return {worst <= kTol, format("%zu estimated curves, max f2 - f1 = %.3g", e.curves().curves.size(), worst)};
}

Outcome lambert_and_delta() {
  constexpr double kResidual = 1e-9;
  constexpr double kSlack = 1e-8;
  double worst_res = 0.0;
  for (int i = 0; i < 100; ++i) {
    // log-spaced towards both ends of [-1/e, 0)
    const double t = (i + 0.5) / 100.0;
    const double v = -std::exp(-1.0) * std::pow(10.0, -12.0 * t * t);
    const double w = lambert_w_minus1(v);
    worst_res = std::max(worst_res, std::abs(w * std::exp(w) - v) / std::abs(v));
  }
  double worst_bound = 0.0;
  for (double eps : {0.01, 0.05, 0.1, 0.2, 0.5})
    for (double a : {0.5, 1.0, 2.0, 5.0, 10.0}) {
      const double T = 10.0, C = a * T;
      const double delta = poisson_delta(eps, C, T);
      worst_bound = std::max(worst_bound, poisson_chernoff((1.0 + delta) * a, C, T) / eps);
    }
  return {worst_res <= kResidual && worst_bound <= 1.0 + kSlack,
          format("max relative residual %.3g; max bound/eps %.12f", worst_res, worst_bound)};
}

std::vector<double> c_avgs(const MonteCarloSummary& s) {
  std::vector<double> out;
  for (const auto& r : s.runs) out.push_back(r.ok ? r.metrics.c_avg : 0.0);
  return out;
}

Outcome simulator_properties() {
  constexpr int kReps = 200;
  constexpr double kAlpha = 0.05;
  constexpr double kMedianFill = 0.98;
  constexpr double kMaxSeconds = 600.0;
  const auto t0 = std::chrono::steady_clock::now();
  const Experiment e(load_scenario(scenario_path()));
  const MonteCarloOptions mc{kReps, e.scenario().monte_carlo.master_seed, 1};

  const auto open_loop = e.run_point("open", 0.0, 0.0, mc);
  std::vector<SweepPoint> sweep;
  for (double d : {0.0, 0.1, 0.2, 0.3}) sweep.push_back(e.run_point("hourly", d, 1.0, mc));

  const auto with = c_avgs(sweep[0].summary), without = c_avgs(open_loop.summary);
  const auto test = paired_t_test(with, without);
  const bool a = test.mean_difference > 0.0 && test.p_value < kAlpha;

  bool b = true;
  std::string means;
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    const auto ci = mean_confidence(c_avgs(sweep[i].summary));
    means += format("%s%.4f", i ? " " : "", ci.mean);
    if (i == 0) continue;
    const auto prev = mean_confidence(c_avgs(sweep[i - 1].summary));
    if (ci.mean < prev.mean && ci.hi < prev.lo) b = false;
  }
  const double median_fill = sweep[2].summary.median_fill;
  const bool c = median_fill >= kMedianFill;
  const double secs = elapsed(t0);
  int failures = open_loop.summary.failures;
  for (const auto& p : sweep) failures += p.summary.failures;
  return {a && b && c && failures == 0 && secs < kMaxSeconds,
          format("(a) hourly %.4f vs open %.4f, p = %.3g; (b) C_avg by delta: %s; (c) median fill %.4f; "
                 "%d failed runs; %.1f s",
                 test.mean_difference + mean_confidence(without).mean, mean_confidence(without).mean, test.p_value,
                 means.c_str(), median_fill, failures, secs)};
}

Outcome first_second_similarity() {
  constexpr int kReps = 50;
  constexpr double kMaxGap = 0.02;
  const Experiment e(load_scenario(scenario_path()));
  const MonteCarloOptions mc{kReps, e.scenario().monte_carlo.master_seed + 1, 1};
  auto run = [&](Mechanism planning) {
    SimSetup s = e.setup(std::nullopt, std::nullopt, planning);
    s.sim.market = Mechanism::FirstPrice;
    return monte_carlo(s, mc);
  };
  const auto f1 = run(Mechanism::FirstPrice);
  const auto f2 = run(Mechanism::SecondPrice);
  const double gap = std::abs(f1.mean_c_avg - f2.mean_c_avg);
  return {gap < kMaxGap && f1.failures == 0 && f2.failures == 0,
          format("mean fulfillment planned first %.4f, second %.4f, gap %.4f", f1.mean_c_avg, f2.mean_c_avg, gap)};
}

Outcome determinism() {
  constexpr int kReps = 12;
  auto run = [](int threads) {
    const Experiment e(load_scenario(scenario_path()));
    return report_to_json(e.run_sweep({kReps, e.scenario().monte_carlo.master_seed, threads}));
  };
  const std::string a = run(1), b = run(2);
  return {a == b, format("%zu vs %zu bytes, %s", a.size(), b.size(), a == b ? "identical" : "different")};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> check;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "analytic planner oracle", analytic_planner},
      {2, "discretization convergence", discretization_convergence},
      {3, "strong duality", strong_duality},
      {4, "pseudo-bid structure", pseudo_bid_structure},
      {5, "envelope QP", envelope_qp},
      {6, "cost-function ordering", cost_ordering},
      {7, "Lambert-W and Poisson delta", lambert_and_delta},
      {8, "simulator statistical properties", simulator_properties},
      {9, "first/second price similarity", first_second_similarity},
      {10, "determinism", determinism},
  };
  std::set<int> selected;
  for (int a = 1; a < argc; ++a) selected.insert(std::atoi(argv[a]));
  int failed = 0;
  for (const auto& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    std::printf("[%s] criterion %d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
