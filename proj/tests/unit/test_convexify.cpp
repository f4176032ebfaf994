#include <cmath>
#include <random>

#include "bidplan/convexify.hpp"
#include "bidplan/piecewise.hpp"
#include "bidplan/qp.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace bidplan;
using bidplan::testing::linspace;

namespace {

double max_gap(const PiecewiseAffineConvex& a, const PiecewiseAffineConvex& b) {
  double gap = 0.0;
  for (double s = a.domain_begin(); s <= a.domain_end(); s += (a.domain_end() - a.domain_begin()) / 1000.0)
    gap = std::max(gap, std::abs(a(s) - b(s)));
  return gap;
}

}  // namespace

TEST_SUITE("piecewise") {
  TEST_CASE("evaluation, segments and conjugate") {
    const PiecewiseAffineConvex f({0.0, 1.0, 2.0}, {0.0, 1.0, 3.0});
    CHECK(f(0.5) == doctest::Approx(0.5));
    CHECK(f(1.5) == doctest::Approx(2.0));
    CHECK(f(-1.0) == 0.0);
    CHECK(is_unbounded(f(2.5)));
    const auto segs = f.segments();
    REQUIRE(segs.size() == 2);
    CHECK(segs[1].slope == doctest::Approx(2.0));
    CHECK(segs[1].intercept == doctest::Approx(-1.0));
    CHECK(f.conjugate(1.5) == doctest::Approx(0.5));  // at s = 1
    CHECK(is_unbounded(f.conjugate(-0.1)));
    CHECK(f.max_slope() == doctest::Approx(2.0));
  }

  TEST_CASE("conjugate of sampled s^2 matches p^2/4") {
    const auto s = linspace(0.0, 2.0, 401);
    std::vector<double> v;
    for (double x : s) v.push_back(x * x);
    const PiecewiseAffineConvex f(s, v);
    for (double p = 0.0; p <= 4.0; p += 0.25) CHECK(std::abs(f.conjugate(p) - p * p / 4.0) <= 1e-3);
  }

  TEST_CASE("shape validation") {
    CHECK_THROWS(PiecewiseAffineConvex({0.0, 1.0, 2.0}, {0.0, 2.0, 3.0}));
    CHECK_THROWS(PiecewiseAffineConvex({0.0, 1.0, 2.0}, {1.0, 0.0, 3.0}));
    CHECK_THROWS(PiecewiseAffineConvex({0.0, 0.0}, {0.0, 1.0}));
    const std::vector<double> k{0.0, 1.0, 2.0}, v{0.0, 2.0, 3.0};
    CHECK(shape_violation(k, v) == doctest::Approx(1.0));
  }

  TEST_CASE("weighted sum") {
    const PiecewiseAffineConvex a({0.0, 1.0, 2.0}, {0.0, 1.0, 3.0});
    const PiecewiseAffineConvex b({0.0, 1.5}, {0.0, 3.0});
    const auto h = weighted_sum(a, 0.5, b, 0.5);
    CHECK(h.domain_end() == doctest::Approx(1.5));
    for (double s = 0.0; s <= 1.5; s += 0.1) CHECK(h(s) == doctest::Approx(0.5 * a(s) + 0.5 * b(s)));
  }
}

TEST_SUITE("qp") {
  TEST_CASE("projection onto a half-space") {
    // min 1/2 |x|^2 - x1 - x2 s.t. -x1 - x2 >= -1  -> x = (0.5, 0.5)
    Eigen::MatrixXd G = Eigen::MatrixXd::Identity(2, 2);
    Eigen::VectorXd a(2);
    a << -1.0, -1.0;
    Eigen::MatrixXd C(2, 1);
    C << -1.0, -1.0;
    Eigen::VectorXd d(1);
    d << -1.0;
    const auto r = solve_qp(G, a, C, d);
    REQUIRE(r.status == QpStatus::Optimal);
    CHECK(r.x(0) == doctest::Approx(0.5));
    CHECK(r.x(1) == doctest::Approx(0.5));
    CHECK(r.multipliers(0) == doctest::Approx(0.5));
  }

  TEST_CASE("infeasible constraints are reported") {
    Eigen::MatrixXd G = Eigen::MatrixXd::Identity(1, 1);
    Eigen::VectorXd a = Eigen::VectorXd::Zero(1);
    Eigen::MatrixXd C(1, 2);
    C << 1.0, -1.0;
    Eigen::VectorXd d(2);
    d << 1.0, 0.0;  // x >= 1 and x <= 0
    CHECK(solve_qp(G, a, C, d).status == QpStatus::Infeasible);
  }
}

TEST_SUITE("convexify") {
  TEST_CASE("ell_alpha") {
    CHECK(ell_alpha(1.0, std::exp(2.0)) == doctest::Approx(2.0));
    CHECK(ell_alpha(2.0, 4.0) == doctest::Approx(0.75));
    CHECK(ell_alpha(0.0, 3.0) == doctest::Approx(2.0));
  }

  TEST_CASE("exp is log-concave") {
    const auto x = linspace(-3.0, 0.0, 61);
    std::vector<double> w;
    for (double v : x) w.push_back(std::exp(v));
    const auto r = check_alpha_concavity(x, w, 1.0);
    CHECK(r.holds);
    CHECK(r.hierarchy_consistent);
  }

  TEST_CASE("ramp is 2-concave") {
    const auto c = bidplan::testing::positive_ramp(0.01, 200);
    const auto r = check_alpha_concavity(c, 2.0, 0.0);
    // oracle: second differences of 1 - 1/W on the grid
    const auto& g = c.bid_grid();
    bool oracle = true;
    for (std::size_t i = 1; i + 1 < g.size(); ++i) {
      const double d = (1 - 1 / g[i + 1]) - 2 * (1 - 1 / g[i]) + (1 - 1 / g[i - 1]);
      if (d > 1e-12) oracle = false;
    }
    CHECK(oracle);
    CHECK(r.holds == oracle);
    for (auto [beta, ok] : r.higher_orders) CHECK(ok);
  }

  TEST_CASE("bimodal curve is not log-concave and the violation sits between the modes") {
    const auto c = bidplan::testing::bimodal_curve();
    const auto r = check_alpha_concavity(c, 1.0, 0.0);
    CHECK_FALSE(r.holds);
    // oracle: direct scan of second differences of log W
    const auto& g = c.bid_grid();
    const auto& w = c.win_prob_table()[0];
    double worst = 0.0, at = 0.0;
    for (std::size_t i = 1; i + 1 < g.size(); ++i) {
      const double d = std::log(w[i + 1]) - 2 * std::log(w[i]) + std::log(w[i - 1]);
      if (d > worst) {
        worst = d;
        at = g[i];
      }
    }
    CHECK(worst > 0.0);
    CHECK(r.violation_bid > 3.0);
    CHECK(r.violation_bid < 9.0);
  }

  TEST_CASE("negative alpha and non-positive values are rejected") {
    const std::vector<double> x{0.0, 1.0, 2.0}, w{0.0, 0.5, 1.0};
    CHECK_THROWS_AS(check_alpha_concavity(x, w, 1.0), ModelError);
    const std::vector<double> w2{0.1, 0.5, 1.0};
    CHECK_THROWS_AS(check_alpha_concavity(x, w2, -1.0), ModelError);
  }

  TEST_CASE("majorant of convex input is the input") {
    const std::vector<double> x{0.0, 1.0, 2.0}, v{0.0, 0.25, 1.0};
    const auto f = convex_majorant(x, v);
    for (std::size_t i = 0; i < 3; ++i) CHECK(f.values()[i] == doctest::Approx(v[i]));
  }

  TEST_CASE("majorant of [0,1,1,2] beats the witness") {
    const std::vector<double> x{0.0, 1.0, 2.0, 3.0}, v{0.0, 1.0, 1.0, 2.0};
    const auto f = convex_majorant(x, v);
    const std::vector<double> witness{0.25, 1.0, 1.75, 2.5};
    CHECK(majorant_objective(witness, v) == doctest::Approx(0.875 / 4.0));
    CHECK(majorant_objective(f.values(), v) <= 0.875 / 4.0 + 1e-12);
    CHECK(shape_violation(x, f.values()) <= 1e-8);
    for (std::size_t i = 0; i < 4; ++i) CHECK(f.values()[i] >= v[i] - 1e-8);
  }

  TEST_CASE("random inputs: constraints, idempotence, strict monotonicity") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
      const std::size_t n = 5 + static_cast<std::size_t>(u(rng) * 40);
      std::vector<double> x(n), v(n);
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = i == 0 ? 0.0 : x[i - 1] + 0.1 + u(rng);
        acc += 0.01 + u(rng);
        v[i] = acc;  // strictly increasing, generally non-convex
      }
      const auto f = convex_majorant(x, v);
      CHECK(shape_violation(x, f.values()) <= 1e-8);
      for (std::size_t i = 0; i < n; ++i) CHECK(f.values()[i] >= v[i] - 1e-8);
      for (std::size_t i = 1; i < n; ++i) CHECK(f.values()[i] > f.values()[i - 1]);
      const auto g = convex_majorant(x, f.values());
      for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(g.values()[i] - f.values()[i]) <= 1e-7);
    }
  }

  TEST_CASE("sparsify") {
    const auto s = linspace(0.0, 1.0, 65);
    std::vector<double> v;
    for (double x : s) v.push_back(x * x);
    const PiecewiseAffineConvex f(s, v);
    CHECK(sparsify(f, 64) == f);
    const auto two = sparsify(f, 2);
    CHECK(two.size() <= 3);
    CHECK(two(0.5) >= 0.25);
    CHECK_THROWS(sparsify(f, 1));
    double prev = kUnbounded;
    for (std::size_t m : {2, 4, 8, 16, 32}) {
      const auto g = sparsify(f, m);
      CHECK(g.size() <= m + 1);
      CHECK(shape_violation(g.knots(), g.values()) <= 1e-12);
      for (double x : s) CHECK(g(x) >= f(x) - 1e-12);
      const double gap = max_gap(g, f);
      CHECK(gap < prev);
      prev = gap;
    }
  }

  TEST_CASE("tabulation: second-price ramp is exact") {
    const auto c = bidplan::testing::ramp_curve();
    const auto t = tabulate_acquisition_at(c, Mechanism::SecondPrice, 0.0, {129, 128});
    CHECK(t.majorant_deviation < 1e-8);
    for (double s = 0.0; s <= 1.0; s += 0.05) CHECK(t.cost(s) == doctest::Approx(s * s / 2).epsilon(1e-3));
  }

  TEST_CASE("tabulation: first price on a 2-concave curve needs no repair") {
    const auto c = bidplan::testing::positive_ramp(0.01, 200);
    const auto t = tabulate_acquisition_at(c, Mechanism::FirstPrice, 0.0);
    CHECK(t.majorant_deviation < 1e-6);
  }

  TEST_CASE("tabulation: first price on the bimodal curve is repaired") {
    const auto c = bidplan::testing::bimodal_curve();
    const auto t = tabulate_acquisition_at(c, Mechanism::FirstPrice, 0.0, {256, 256});
    CHECK(t.majorant_deviation > 1e-6);
    CHECK(shape_violation(t.cost.knots(), t.cost.values()) <= 1e-8);
    const auto& k = t.cost.knots();
    for (double s : k)
      if (s > 0.0) CHECK(t.cost(s) >= c.acquisition_cost(Mechanism::FirstPrice, s, 0.0) - 1e-8);
  }
}
