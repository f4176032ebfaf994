#include "bidplan/lp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bidplan {

std::string to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration limit";
  }
  return "unknown";
}

int LinearProgram::add_column(double cost, double lower, double upper) {
  if (!std::isfinite(lower)) throw std::invalid_argument("LP column lower bound must be finite");
  if (!(upper >= lower)) throw std::invalid_argument("LP column has upper < lower");
  if (!std::isfinite(cost)) throw std::invalid_argument("LP column cost must be finite");
  cost_.push_back(cost);
  lower_.push_back(lower);
  upper_.push_back(upper);
  return num_columns() - 1;
}

int LinearProgram::add_row(RowSense sense, double rhs, Entries entries) {
  return add_lazy_row(sense, rhs, std::move(entries), -1, true);
}

int LinearProgram::add_lazy_row(RowSense sense, double rhs, Entries entries, int group, bool seed) {
  if (!std::isfinite(rhs)) throw std::invalid_argument("LP row right-hand side must be finite");
  for (const auto& [j, a] : entries) {
    if (j < 0 || j >= num_columns()) throw std::invalid_argument("LP row references unknown column");
    if (!std::isfinite(a)) throw std::invalid_argument("LP row has a non-finite coefficient");
  }
  rows_.push_back({sense, rhs, std::move(entries), group, group < 0 || seed});
  return num_rows() - 1;
}

double LinearProgram::activity(int i, const std::vector<double>& x) const {
  double sum = 0.0;
  for (const auto& [j, a] : row(i).entries) sum += a * x[static_cast<std::size_t>(j)];
  return sum;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotTolerance = 1e-9;

double row_violation(const LinearProgram::Row& row, double act) {
  switch (row.sense) {
    case RowSense::LessEqual: return act - row.rhs;
    case RowSense::GreaterEqual: return row.rhs - act;
    case RowSense::Equal: return std::abs(act - row.rhs);
  }
  return 0.0;
}

// Dense tableau over structural columns followed by one slack per model row.
// Every model row is stored as a'x + slack = b with the slack in [0, inf) for
// inequalities (>= rows are negated) and fixed at 0 for equalities.
class DualSimplex {
 public:
  DualSimplex(const LinearProgram& lp, const LpOptions& opt) : lp_(lp), opt_(opt) {
    const int n = lp.num_columns();
    for (int j = 0; j < n; ++j) {
      double up = lp.upper(j);
      boxed_.push_back(0);
      if (lp.cost(j) < 0.0 && !std::isfinite(up)) {
        up = lp.lower(j) + opt.box;
        boxed_.back() = 1;
      }
      add_column(lp.cost(j), lp.lower(j), up);
      at_upper_.back() = lp.cost(j) < 0.0;
      x_.back() = at_upper_.back() ? up : lp.lower(j);
    }
    structural_ = n;
  }

  void add_model_row(int i) {
    const auto& row = lp_.row(i);
    const double sign = row.sense == RowSense::GreaterEqual ? -1.0 : 1.0;
    const int s = add_column(0.0, 0.0, row.sense == RowSense::Equal ? 0.0 : kInf);
    for (auto& t : tab_) t.push_back(0.0);

    std::vector<double> fresh(static_cast<std::size_t>(cols()), 0.0);
    double act = 0.0;
    for (const auto& [j, a] : row.entries) {
      fresh[static_cast<std::size_t>(j)] += sign * a;
      act += sign * a * x_[static_cast<std::size_t>(j)];
    }
    fresh[static_cast<std::size_t>(s)] = 1.0;
    for (std::size_t k = 0; k < tab_.size(); ++k) {
      const double f = fresh[static_cast<std::size_t>(basis_[k])];
      if (f == 0.0) continue;
      const auto& tk = tab_[k];
      for (std::size_t j = 0; j < fresh.size(); ++j) {
        if (tk[j] != 0.0) fresh[j] -= f * tk[j];
      }
    }
    tab_.push_back(std::move(fresh));
    basis_.push_back(s);
    pos_[static_cast<std::size_t>(s)] = static_cast<int>(tab_.size()) - 1;
    x_[static_cast<std::size_t>(s)] = sign * row.rhs - act;
    row_of_slack_.push_back(i);
    sign_.push_back(sign);
  }

  // Returns Optimal, Infeasible or IterationLimit for the current model rows.
  LpStatus optimize(int& iterations, int limit) {
    int degenerate = 0;
    while (true) {
      if (iterations >= limit) return LpStatus::IterationLimit;
      const bool bland = degenerate > 50;

      int r = -1;
      double worst = 0.0;
      bool to_lower = false;
      for (std::size_t i = 0; i < tab_.size(); ++i) {
        const auto b = static_cast<std::size_t>(basis_[i]);
        const double v = x_[b];
        double infeas = 0.0;
        bool low = false;
        if (v < lo_[b] - tol(lo_[b])) {
          infeas = lo_[b] - v;
          low = true;
        } else if (v > up_[b] + tol(up_[b])) {
          infeas = v - up_[b];
        } else {
          continue;
        }
        if (bland) {
          if (r < 0 || basis_[i] < basis_[static_cast<std::size_t>(r)]) {
            r = static_cast<int>(i);
            to_lower = low;
          }
        } else if (infeas > worst) {
          worst = infeas;
          r = static_cast<int>(i);
          to_lower = low;
        }
      }
      if (r < 0) return LpStatus::Optimal;

      const auto& pr = tab_[static_cast<std::size_t>(r)];
      auto eligible = [&](std::size_t j, double& slack) {
        if (pos_[j] >= 0 || lo_[j] == up_[j]) return false;
        const double a = pr[j];
        if (std::abs(a) < kPivotTolerance) return false;
        const bool upper = at_upper_[j] != 0;
        const bool increases = upper ? a > 0.0 : a < 0.0;  // moving x_j raises the basic value
        if (increases != to_lower) return false;
        slack = upper ? -d_[j] : d_[j];
        return true;
      };

      // Harris ratio test: bound with tolerance, then pick the largest pivot.
      double bound = kInf;
      for (std::size_t j = 0; j < pr.size(); ++j) {
        double slack = 0.0;
        if (!eligible(j, slack)) continue;
        bound = std::min(bound, (std::max(slack, 0.0) + opt_.optimality_tolerance) / std::abs(pr[j]));
      }
      if (!std::isfinite(bound)) return LpStatus::Infeasible;
      int q = -1;
      double best = 0.0;
      double ratio_q = 0.0;
      for (std::size_t j = 0; j < pr.size(); ++j) {
        double slack = 0.0;
        if (!eligible(j, slack)) continue;
        const double ratio = std::max(slack, 0.0) / std::abs(pr[j]);
        if (ratio > bound) continue;
        if (bland) {
          if (q < 0 || ratio < ratio_q) {
            q = static_cast<int>(j);
            ratio_q = ratio;
          }
        } else if (std::abs(pr[j]) > best) {
          best = std::abs(pr[j]);
          q = static_cast<int>(j);
          ratio_q = ratio;
        }
      }
      degenerate = ratio_q <= 1e-12 ? degenerate + 1 : 0;
      pivot(r, q, to_lower);
      ++iterations;
    }
  }

  LpSolution extract(LpStatus status, int iterations, int rounds) const {
    LpSolution sol;
    sol.status = status;
    sol.iterations = iterations;
    sol.cut_rounds = rounds;
    sol.x.assign(x_.begin(), x_.begin() + structural_);
    sol.row_duals.assign(static_cast<std::size_t>(lp_.num_rows()), 0.0);
    sol.row_in_model.assign(static_cast<std::size_t>(lp_.num_rows()), 0);
    for (std::size_t k = 0; k < row_of_slack_.size(); ++k) {
      const auto s = static_cast<std::size_t>(structural_) + k;
      const auto i = static_cast<std::size_t>(row_of_slack_[k]);
      sol.row_duals[i] = -sign_[k] * d_[s];
      sol.row_in_model[i] = 1;
    }
    for (int j = 0; j < structural_; ++j) {
      const auto u = static_cast<std::size_t>(j);
      sol.objective += lp_.cost(j) * sol.x[u];
      sol.max_violation = std::max(sol.max_violation, lp_.lower(j) - sol.x[u]);
      sol.max_violation = std::max(sol.max_violation, sol.x[u] - lp_.upper(j));
      if (status == LpStatus::Optimal && boxed_[u] && sol.x[u] >= up_[u] - tol(up_[u])) {
        sol.status = LpStatus::Unbounded;
      }
    }
    for (int i = 0; i < lp_.num_rows(); ++i) {
      sol.max_violation = std::max(sol.max_violation, row_violation(lp_.row(i), lp_.activity(i, sol.x)));
    }
    return sol;
  }

  const std::vector<double>& values() const { return x_; }

 private:
  int cols() const { return static_cast<int>(x_.size()); }
  double tol(double bound) const { return opt_.feasibility_tolerance * std::max(1.0, std::abs(bound)); }

  int add_column(double cost, double lower, double upper) {
    c_.push_back(cost);
    d_.push_back(cost);
    lo_.push_back(lower);
    up_.push_back(upper);
    x_.push_back(lower);
    at_upper_.push_back(0);
    pos_.push_back(-1);
    return cols() - 1;
  }

  void pivot(int r, int q, bool to_lower) {
    const auto ur = static_cast<std::size_t>(r);
    const auto uq = static_cast<std::size_t>(q);
    auto& pr = tab_[ur];
    const auto b = static_cast<std::size_t>(basis_[ur]);
    const double a = pr[uq];
    const double target = to_lower ? lo_[b] : up_[b];

    const double step = (x_[b] - target) / a;
    for (std::size_t i = 0; i < tab_.size(); ++i) {
      x_[static_cast<std::size_t>(basis_[i])] -= tab_[i][uq] * step;
    }
    x_[uq] += step;
    x_[b] = target;

    for (double& v : pr) v /= a;
    pr[uq] = 1.0;
    std::vector<std::size_t> nz;
    nz.reserve(pr.size());
    for (std::size_t j = 0; j < pr.size(); ++j) {
      if (pr[j] != 0.0) nz.push_back(j);
    }
    for (std::size_t i = 0; i < tab_.size(); ++i) {
      if (i == ur) continue;
      auto& ti = tab_[i];
      const double f = ti[uq];
      if (f == 0.0) continue;
      for (std::size_t j : nz) ti[j] -= f * pr[j];
      ti[uq] = 0.0;
    }
    const double f = d_[uq];
    if (f != 0.0) {
      for (std::size_t j : nz) d_[j] -= f * pr[j];
    }
    d_[uq] = 0.0;

    basis_[ur] = q;
    pos_[uq] = r;
    pos_[b] = -1;
    at_upper_[b] = to_lower ? 0 : 1;
  }

  const LinearProgram& lp_;
  const LpOptions& opt_;
  int structural_ = 0;
  std::vector<std::vector<double>> tab_;
  std::vector<double> c_, d_, lo_, up_, x_;
  std::vector<char> at_upper_, boxed_;
  std::vector<int> pos_, basis_, row_of_slack_;
  std::vector<double> sign_;
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const LpOptions& options) {
  DualSimplex simplex(lp, options);
  std::vector<char> in_model(static_cast<std::size_t>(lp.num_rows()), 0);
  for (int i = 0; i < lp.num_rows(); ++i) {
    if (lp.row(i).seed) {
      simplex.add_model_row(i);
      in_model[static_cast<std::size_t>(i)] = 1;
    }
  }
  const int limit = options.max_iterations > 0
                        ? options.max_iterations
                        : 50 * (lp.num_rows() + lp.num_columns()) + 1000;
  int iterations = 0;
  int rounds = 0;
  while (true) {
    const LpStatus status = simplex.optimize(iterations, limit);
    if (status != LpStatus::Optimal) return simplex.extract(status, iterations, rounds);

    // Most violated lazy rows per group.
    const auto& x = simplex.values();
    std::vector<std::vector<std::pair<double, int>>> worst;
    for (int i = 0; i < lp.num_rows(); ++i) {
      if (in_model[static_cast<std::size_t>(i)]) continue;
      const auto& row = lp.row(i);
      const double v = row_violation(row, lp.activity(i, x));
      if (v <= options.feasibility_tolerance * std::max(1.0, std::abs(row.rhs))) continue;
      const auto g = static_cast<std::size_t>(row.group);
      if (worst.size() <= g) worst.resize(g + 1);
      worst[g].emplace_back(v, i);
    }
    std::vector<int> cuts;
    for (auto& list : worst) {
      const auto keep = std::min<std::size_t>(list.size(), static_cast<std::size_t>(std::max(1, options.cuts_per_group)));
      std::partial_sort(list.begin(), list.begin() + static_cast<std::ptrdiff_t>(keep), list.end(),
                        [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
      for (std::size_t k = 0; k < keep; ++k) cuts.push_back(list[k].second);
    }
    if (cuts.empty()) return simplex.extract(LpStatus::Optimal, iterations, rounds);
    if (++rounds > options.max_cut_rounds) return simplex.extract(LpStatus::IterationLimit, iterations, rounds);
    std::sort(cuts.begin(), cuts.end());
    for (int i : cuts) {
      simplex.add_model_row(i);
      in_model[static_cast<std::size_t>(i)] = 1;
    }
  }
}

}  // namespace bidplan
