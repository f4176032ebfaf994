#include <cmath>
#include <random>

#include "bidplan/planner.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace bidplan;
using bidplan::testing::ramp_curve;

namespace {

struct Solved {
  Plan plan;
  AcquisitionTables tables;
};

Solved solve_ramp(Mechanism m, std::vector<Contract> contracts, int K, std::size_t rate_points = 257,
                  PlannerOptions opts = {}) {
  const std::vector<SupplyCurve> curves{ramp_curve()};
  const auto grid = build_grid(contracts, K);
  auto tables = tabulate_for_grid(curves, m, grid, {rate_points, rate_points});
  auto plan = solve_plan(contracts, tables, grid, opts, curves);
  return {std::move(plan), std::move(tables)};
}

}  // namespace

TEST_SUITE("planner") {
  TEST_CASE("grid construction") {
    std::vector<Contract> c{{0, {0}, 1, 24}, {1, {0}, 1, 48}};
    CHECK(build_grid(c, 4).knots == std::vector<double>{0, 24, 48});
    std::vector<Contract> one{{0, {0}, 1, 10}};
    CHECK(build_grid(one, 3).knots == std::vector<double>{0, 5, 10});
    std::vector<Contract> mix{{0, {0}, 1, 5}, {1, {0}, 1, 10}};
    const auto g = build_grid(mix, 6);  // uniform 2.5 steps include 5
    for (int k = 0; k < g.intervals(); ++k) CHECK(g.delta(k) > 0.0);
    CHECK(g.knots.size() == 5);
    CHECK_THROWS_AS(build_grid(mix, 2), PlanError);
  }

  TEST_CASE("adequate supply reports") {
    const std::vector<SupplyCurve> curves{ramp_curve()};
    std::vector<Contract> ok{{0, {0}, 1, 10}};
    auto r = check_adequate_supply(ok, curves);
    CHECK(r.feasible);
    CHECK(r.slack[0] == doctest::Approx(9.0));
    std::vector<Contract> big{{0, {0}, 20, 10}};
    r = check_adequate_supply(big, curves);
    CHECK_FALSE(r.feasible);
    CHECK(r.slack[0] == doctest::Approx(-10.0));
    std::vector<Contract> pair{{0, {0}, 6, 10}, {1, {0}, 6, 10}};
    r = check_adequate_supply(pair, curves);
    CHECK_FALSE(r.feasible);
    for (const auto& single : {std::vector<Contract>{pair[0]}, std::vector<Contract>{pair[1]}})
      CHECK(check_adequate_supply(single, curves).feasible);
  }

  TEST_CASE("analytic single contract, second and first price") {
    const std::vector<Contract> c{{0, {0}, 5, 10}};
    auto sp = solve_ramp(Mechanism::SecondPrice, c, 20);
    REQUIRE(sp.plan.status == PlanStatus::Optimal);
    CHECK(sp.plan.objective == doctest::Approx(1.25).epsilon(0.01));
    for (double s : sp.plan.supply[0]) CHECK(s == doctest::Approx(0.5).epsilon(0.01));
    auto fp = solve_ramp(Mechanism::FirstPrice, c, 20);
    REQUIRE(fp.plan.status == PlanStatus::Optimal);
    CHECK(fp.plan.objective == doctest::Approx(2.5).epsilon(0.01));

    const auto pb = extract_pseudo_bids(sp.plan);
    CHECK(pb.rho[0] == doctest::Approx(0.5).epsilon(0.01));
    const auto pf = extract_pseudo_bids(fp.plan);
    CHECK(pf.rho[0] == doctest::Approx(1.0).epsilon(0.01));
    const auto bids = reconstruct_paths(fp.plan, std::vector<SupplyCurve>{ramp_curve()});
    for (double x : bids.bids[0]) CHECK(x == doctest::Approx(pf.rho[0] / 2).epsilon(0.01));
  }

  TEST_CASE("zero demand") {
    const std::vector<Contract> c{{0, {0}, 0, 10}};
    auto sp = solve_ramp(Mechanism::SecondPrice, c, 5);
    REQUIRE(sp.plan.status == PlanStatus::Optimal);
    CHECK(sp.plan.objective == doctest::Approx(0.0));
    for (double s : sp.plan.supply[0]) CHECK(s == doctest::Approx(0.0));
    for (double r : sp.plan.allocation[0][0]) CHECK(r == doctest::Approx(0.0));
  }

  TEST_CASE("strict infeasibility carries the adequacy report; best effort fills what it can") {
    const std::vector<Contract> c{{0, {0}, 20, 10}};
    auto strict = solve_ramp(Mechanism::SecondPrice, c, 10);
    CHECK(strict.plan.status == PlanStatus::Infeasible);
    REQUIRE(strict.plan.adequacy.has_value());
    CHECK_FALSE(strict.plan.adequacy->feasible);
    PlannerOptions be;
    be.mode = PlanMode::BestEffort;
    auto best = solve_ramp(Mechanism::SecondPrice, c, 10, 65, be);
    CHECK(best.plan.status == PlanStatus::BestEffort);
    CHECK(best.plan.shortfall[0] == doctest::Approx(10.0).epsilon(1e-6));
  }

  TEST_CASE("plan invariants, split allocations and duality on random instances") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int checked = 0;
    for (int rep = 0; rep < 12; ++rep) {
      const int M = 1 + rep % 3, N = 1 + rep % 4;
      std::vector<SupplyCurve> curves;
      for (int j = 0; j < M; ++j) curves.push_back(ramp_curve(1.0 + 2.0 * u(rng)));
      std::vector<Contract> c;
      for (int i = 0; i < N; ++i) {
        Contract k{i, {}, 0.0, 4.0 + 8.0 * u(rng)};
        for (int j = 0; j < M; ++j)
          if (u(rng) < 0.6 || j == i % M) k.eligible_types.push_back(j);
        k.quantity = 0.3 * k.deadline * u(rng);
        c.push_back(k);
      }
      const auto grid = build_grid(c, N + 6);
      const auto m = rep % 2 ? Mechanism::FirstPrice : Mechanism::SecondPrice;
      const auto tables = tabulate_for_grid(curves, m, grid, {65, 32});
      const auto plan = solve_plan(c, tables, grid, {}, curves);
      if (plan.status != PlanStatus::Optimal) continue;
      ++checked;
      for (int i = 0; i < N; ++i) {
        double got = 0.0;
        for (int j = 0; j < M; ++j)
          for (int k = 0; k < grid.intervals(); ++k) got += grid.delta(k) * plan.allocation[i][j][k];
        CHECK(got >= c[i].quantity - 1e-6);
        CHECK(plan.rho[i] >= -1e-9);
      }
      for (int j = 0; j < M; ++j)
        for (int k = 0; k < grid.intervals(); ++k) {
          double sum = 0.0;
          for (int i = 0; i < N; ++i) sum += plan.allocation[i][j][k];
          CHECK(std::abs(sum - plan.supply[j][k]) <= 1e-7);
          for (int i = 0; i < N; ++i)
            if (plan.active(i, k) && plan.eligible(i, j) && plan.in_lp[j][k])
              CHECK(plan.mu[j][k] >= plan.rho[i] - 1e-6);
        }
      const auto gap = duality_gap(plan, tables);
      CHECK(gap.gap >= -1e-6);
      CHECK(gap.gap <= 1e-5 * std::abs(gap.primal) + 1e-9);
      // weak duality at perturbed multipliers
      std::vector<double> rho = plan.rho;
      for (auto& r : rho) r = std::max(0.0, r * (0.5 + u(rng)));
      CHECK(dual_objective(plan, tables, rho) <= plan.lp_objective + 1e-7);

      const auto bids = reconstruct_paths(plan, curves);
      for (int j = 0; j < M; ++j)
        for (int k = 0; k < grid.intervals(); ++k) {
          double sum = 0.0;
          for (int i = 0; i < N; ++i) {
            const double g = bids.gamma[i][j][k];
            CHECK(g >= 0.0);
            if (!plan.active(i, k) || !plan.eligible(i, j)) CHECK(g == 0.0);
            sum += g;
          }
          CHECK(sum <= 1.0 + 1e-7);
        }
    }
    CHECK(checked >= 6);
  }

  TEST_CASE("single contract gets the whole supply; even splits give half") {
    const std::vector<Contract> c{{0, {0}, 5, 10}};
    auto sp = solve_ramp(Mechanism::SecondPrice, c, 10, 65);
    const auto bids = reconstruct_paths(sp.plan, std::vector<SupplyCurve>{ramp_curve()});
    for (int k = 0; k < sp.plan.grid.intervals(); ++k)
      if (sp.plan.supply[0][k] > 0) CHECK(bids.gamma[0][0][k] == doctest::Approx(1.0));

    Plan manual = sp.plan;
    manual.contracts = {{0, {0}, 2.5, 10}, {1, {0}, 2.5, 10}};
    manual.allocation.assign(2, manual.allocation[0]);
    for (auto& row : manual.allocation)
      for (auto& k : row[0]) k *= 0.5;
    manual.allocation[0][0].back() = 0.0;
    manual.allocation[1][0].back() = 0.0;
    manual.supply[0].back() = 0.0;
    manual.rho = {0.5, 0.5};
    const auto split = reconstruct_paths(manual, std::vector<SupplyCurve>{ramp_curve()});
    CHECK(split.gamma[0][0][0] == doctest::Approx(0.5));
    CHECK(split.gamma[1][0][0] == doctest::Approx(0.5));
    CHECK(split.gamma[0][0].back() == 0.0);
    CHECK(is_no_bid(split.bids[0].back()));
  }

  TEST_CASE("expired contract leaves mu alone") {
    const std::vector<SupplyCurve> curves{ramp_curve()};
    std::vector<Contract> c{{0, {0}, 1, 2}, {1, {0}, 3, 10}};
    const auto grid = build_grid(c, 8);
    const auto tables = tabulate_for_grid(curves, Mechanism::SecondPrice, grid, {129, 64});
    const auto plan = solve_plan(c, tables, grid, {}, curves);
    REQUIRE(plan.status == PlanStatus::Optimal);
    for (int k = 0; k < grid.intervals(); ++k)
      if (!plan.active(0, k)) CHECK(plan.mu[0][k] == doctest::Approx(plan.rho[1]).epsilon(1e-6));
  }

  TEST_CASE("relabelling contracts with the same aggregates leaves the objective unchanged") {
    const std::vector<SupplyCurve> curves{ramp_curve(), ramp_curve(2.0)};
    std::vector<Contract> a{{0, {0, 1}, 4, 6}, {1, {0, 1}, 4, 6}};
    std::vector<Contract> b{{7, {1, 0}, 4, 6}, {3, {0, 1}, 4, 6}};
    const auto grid = build_grid(a, 8);
    const auto tables = tabulate_for_grid(curves, Mechanism::SecondPrice, grid, {65, 32});
    CHECK(solve_plan(a, tables, grid).objective == doctest::Approx(solve_plan(b, tables, grid).objective).epsilon(1e-9));
  }

  TEST_CASE("plans without duals are rejected by pseudo-bid extraction") {
    Plan p;
    CHECK_THROWS_AS(extract_pseudo_bids(p), PlanError);
  }

  TEST_CASE("table cache snaps and reuses tables") {
    TableCache cache({ramp_curve()}, Mechanism::SecondPrice, {33, 16}, 0.25);
    const auto& a = cache.table(0, 1.0);
    const auto& b = cache.table(0, 7.3);
    CHECK(&a == &b);  // time-homogeneous curves share one table
    std::vector<Contract> c{{0, {0}, 1, 4}};
    const auto grid = build_grid(c, 5);
    CHECK(cache.for_grid(grid, 0.0).at[0].size() == grid.knots.size());
  }
}
