#include <cmath>

#include "bidplan/planner.hpp"
#include "bidplan/risk.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace bidplan;

namespace {

// P(Po(m) >= k) by direct summation
double poisson_tail(double m, int k) {
  double term = std::exp(-m), cdf = 0.0;
  for (int n = 0; n < k; ++n) {
    cdf += term;
    term *= m / (n + 1);
  }
  return 1.0 - cdf;
}

}  // namespace

TEST_SUITE("risk") {
  TEST_CASE("inflation") {
    const std::vector<Contract> c{{0, {0}, 100, 10}};
    CHECK(inflate_demand(c, 0.0)[0].quantity == 100.0);
    CHECK(inflate_demand(c, 0.2)[0].quantity == doctest::Approx(120.0));
    CHECK(inflate_demand(c, 0.2)[0].deadline == 10.0);
    CHECK_THROWS(inflate_demand(c, -0.1));
    RiskConfig both;
    both.delta = 0.1;
    both.epsilon = 0.1;
    CHECK_THROWS(both.validate());
  }

  TEST_CASE("inflated planning scales the analytic objective by (1 + delta)^2") {
    const std::vector<SupplyCurve> curves{bidplan::testing::ramp_curve()};
    const std::vector<Contract> c{{0, {0}, 5, 10}};
    const auto grid = build_grid(c, 10);
    const auto tables = tabulate_for_grid(curves, Mechanism::SecondPrice, grid, {257, 256});
    const double base = solve_plan(c, tables, grid).objective;
    const double inflated = solve_plan(inflate_demand(c, 0.2), tables, grid).objective;
    CHECK(base == doctest::Approx(1.25).epsilon(0.01));
    CHECK(inflated / base == doctest::Approx(1.44).epsilon(0.01));
  }

  TEST_CASE("Lambert W lower branch") {
    CHECK(lambert_w_minus1(-1.0 / std::exp(1.0)) == doctest::Approx(-1.0));
    CHECK(lambert_w_minus1(-0.2707) == doctest::Approx(-2.0).epsilon(1e-3));
    for (double x : {-1.5, -3.0, -10.0}) CHECK(std::abs(lambert_w_minus1(x * std::exp(x)) - x) <= 1e-9);
    CHECK_THROWS_AS(lambert_w_minus1(0.0), std::domain_error);
    CHECK_THROWS_AS(lambert_w_minus1(-0.5), std::domain_error);
  }

  TEST_CASE("Poisson delta") {
    CHECK(poisson_delta(1.0 - 1e-12, 10, 1) == doctest::Approx(0.0).epsilon(1e-4));
    // oracle: bisection on x e^x = -exp(-1) 0.05^0.1, then delta = -x - 1
    const double v = -std::exp(-1.0) * std::pow(0.05, 0.1);
    double lo = -50.0, hi = -1.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (mid * std::exp(mid) > v ? lo : hi) = mid;  // x e^x decreases on (-inf, -1]
    }
    const double expected = -0.5 * (lo + hi) - 1.0;
    CHECK(poisson_delta(0.05, 10, 1) == doctest::Approx(expected).epsilon(1e-9));
    CHECK(expected == doctest::Approx(0.99).epsilon(0.03));
    CHECK(poisson_delta(0.01, 5, 2) > poisson_delta(0.1, 5, 2));
    RiskConfig r;
    r.epsilon = 0.05;
    CHECK(r.delta_for(10, 1) == doctest::Approx(expected).epsilon(1e-9));
  }

  TEST_CASE("chance-constrained bid") {
    auto step = [](double x, double) { return x >= 0.3 ? 1.0 : 0.0; };
    for (double eps : {0.01, 0.2, 0.7}) CHECK(chance_bid(eps, 1, 1, step, 0, 1) == doctest::Approx(0.3).epsilon(1e-5));

    auto tail = [](double x, double a) { return poisson_tail(x, static_cast<int>(std::ceil(a))); };
    const double got = chance_bid(0.5, 2, 1, tail, 0, 10);
    double oracle = 0.0;
    for (double x = 0.0; x < 10.0; x += 1e-5)
      if (poisson_tail(x, 2) >= 0.5) {
        oracle = x;
        break;
      }
    CHECK(got == doctest::Approx(oracle).epsilon(1e-4));
    CHECK(chance_bid(0.1, 2, 1, tail, 0, 10) >= chance_bid(0.3, 2, 1, tail, 0, 10));
    CHECK(chance_bid(0.1, 3, 1, tail, 0, 20) >= chance_bid(0.1, 2, 1, tail, 0, 20));
    CHECK_THROWS_AS(chance_bid(0.01, 50, 1, tail, 0, 10), InfeasibleBid);
  }
}
