#include <cmath>
#include <random>

#include "bidplan/lp.hpp"
#include "doctest.h"

using namespace bidplan;

TEST_SUITE("lp") {
  TEST_CASE("textbook maximization") {
    // max 3x + 5y  s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  -> (2, 6), 36
    LinearProgram lp;
    const int x = lp.add_column(-3.0);
    const int y = lp.add_column(-5.0);
    lp.add_row(RowSense::LessEqual, 4.0, {{x, 1.0}});
    lp.add_row(RowSense::LessEqual, 12.0, {{y, 2.0}});
    lp.add_row(RowSense::LessEqual, 18.0, {{x, 3.0}, {y, 2.0}});
    const auto s = solve_lp(lp);
    REQUIRE(s.status == LpStatus::Optimal);
    CHECK(s.objective == doctest::Approx(-36.0));
    CHECK(s.x[0] == doctest::Approx(2.0));
    CHECK(s.x[1] == doctest::Approx(6.0));
    // shadow prices: 0, 1.5, 1 for the maximization, negated for min
    CHECK(s.row_duals[0] == doctest::Approx(0.0));
    CHECK(s.row_duals[1] == doctest::Approx(-1.5));
    CHECK(s.row_duals[2] == doctest::Approx(-1.0));
  }

  TEST_CASE("covering problem with GE and EQ rows") {
    // min x + 2y s.t. x + y >= 3, x - y = 1 -> x = 2, y = 1, obj 4
    LinearProgram lp;
    const int x = lp.add_column(1.0);
    const int y = lp.add_column(2.0);
    lp.add_row(RowSense::GreaterEqual, 3.0, {{x, 1.0}, {y, 1.0}});
    lp.add_row(RowSense::Equal, 1.0, {{x, 1.0}, {y, -1.0}});
    const auto s = solve_lp(lp);
    REQUIRE(s.status == LpStatus::Optimal);
    CHECK(s.objective == doctest::Approx(4.0));
    CHECK(s.row_duals[0] == doctest::Approx(1.5));
    CHECK(s.row_duals[1] == doctest::Approx(-0.5));
  }

  TEST_CASE("infeasible and unbounded") {
    LinearProgram a;
    const int x = a.add_column(1.0, 0.0, 1.0);
    a.add_row(RowSense::GreaterEqual, 2.0, {{x, 1.0}});
    CHECK(solve_lp(a).status == LpStatus::Infeasible);

    LinearProgram b;
    const int y = b.add_column(-1.0);
    const int z = b.add_column(0.0);
    b.add_row(RowSense::GreaterEqual, 0.0, {{y, 1.0}, {z, -1.0}});
    CHECK(solve_lp(b).status == LpStatus::Unbounded);
  }

  TEST_CASE("lazy epigraph rows give the same optimum as the full model") {
    // min alpha s.t. alpha >= m_h s + b_h for tangents of s^2, s >= 0.7
    auto build = [](bool lazy) {
      LinearProgram lp;
      const int s = lp.add_column(0.0, 0.0, 2.0);
      const int a = lp.add_column(1.0, -10.0);
      lp.add_row(RowSense::GreaterEqual, 0.7, {{s, 1.0}});
      for (int h = 0; h <= 40; ++h) {
        const double p = 0.05 * h;  // tangent at p: 2p s - p^2
        if (lazy)
          lp.add_lazy_row(RowSense::LessEqual, p * p, {{s, 2 * p}, {a, -1.0}}, 0, h % 10 == 0);
        else
          lp.add_row(RowSense::LessEqual, p * p, {{s, 2 * p}, {a, -1.0}});
      }
      return solve_lp(lp);
    };
    const auto full = build(false);
    const auto lazy = build(true);
    REQUIRE(full.status == LpStatus::Optimal);
    REQUIRE(lazy.status == LpStatus::Optimal);
    CHECK(lazy.objective == doctest::Approx(full.objective).epsilon(1e-12));
    CHECK(full.objective == doctest::Approx(0.49));
    CHECK(lazy.max_violation <= 1e-9);
    CHECK(lazy.row_duals[0] == doctest::Approx(full.row_duals[0]));
  }

  TEST_CASE("random transportation problems satisfy strong duality") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 25; ++rep) {
      const int m = 2 + rep % 3, n = 2 + rep % 4;
      std::vector<double> supply(m), demand(n);
      double total = 0.0;
      for (auto& d : demand) total += d = 1.0 + 5.0 * u(rng);
      for (auto& s : supply) s = total / m + 2.0 * u(rng);
      LinearProgram lp;
      std::vector<std::vector<int>> col(m, std::vector<int>(n));
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) col[i][j] = lp.add_column(1.0 + 9.0 * u(rng));
      for (int i = 0; i < m; ++i) {
        LinearProgram::Entries e;
        for (int j = 0; j < n; ++j) e.push_back({col[i][j], 1.0});
        lp.add_row(RowSense::LessEqual, supply[i], e);
      }
      for (int j = 0; j < n; ++j) {
        LinearProgram::Entries e;
        for (int i = 0; i < m; ++i) e.push_back({col[i][j], 1.0});
        lp.add_row(RowSense::GreaterEqual, demand[j], e);
      }
      const auto s = solve_lp(lp);
      REQUIRE(s.status == LpStatus::Optimal);
      double dual = 0.0;
      for (int i = 0; i < m; ++i) dual += s.row_duals[i] * supply[i];
      for (int j = 0; j < n; ++j) dual += s.row_duals[m + j] * demand[j];
      CHECK(std::abs(dual - s.objective) <= 1e-8 * std::max(1.0, std::abs(s.objective)));
      for (int i = 0; i < m; ++i) CHECK(s.row_duals[i] <= 1e-12);
      for (int j = 0; j < n; ++j) CHECK(s.row_duals[m + j] >= -1e-12);
      // reduced costs are non-negative at the optimum
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
          CHECK(lp.cost(col[i][j]) - s.row_duals[i] - s.row_duals[m + j] >= -1e-8);
    }
  }
}
