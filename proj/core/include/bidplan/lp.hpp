#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace bidplan {

enum class RowSense { LessEqual, GreaterEqual, Equal };
enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

std::string to_string(LpStatus s);

/// Sparse LP in the form
///   minimize c'x  s.t.  rows (<=, >=, =),  lower <= x <= upper.
/// Lower bounds must be finite. Rows may be declared lazy: they are left out
/// of the model until the incumbent violates them, which keeps large families
/// of cutting planes (for example the affine pieces of an epigraph) cheap.
class LinearProgram {
 public:
  using Entries = std::vector<std::pair<int, double>>;

  int add_column(double cost, double lower = 0.0,
                 double upper = std::numeric_limits<double>::infinity());
  int add_row(RowSense sense, double rhs, Entries entries);
  /// A lazy row joins the model when violated; `group` limits additions to the
  /// most violated rows of each group per round. Seeded rows start in the model.
  int add_lazy_row(RowSense sense, double rhs, Entries entries, int group, bool seed = false);

  int num_columns() const noexcept { return static_cast<int>(cost_.size()); }
  int num_rows() const noexcept { return static_cast<int>(rows_.size()); }

  struct Row {
    RowSense sense;
    double rhs;
    Entries entries;
    int group;  // -1 for ordinary rows
    bool seed;
  };
  const Row& row(int i) const { return rows_[static_cast<std::size_t>(i)]; }
  double cost(int j) const { return cost_[static_cast<std::size_t>(j)]; }
  double lower(int j) const { return lower_[static_cast<std::size_t>(j)]; }
  double upper(int j) const { return upper_[static_cast<std::size_t>(j)]; }

  /// Row activity a'x for a given point.
  double activity(int i, const std::vector<double>& x) const;

 private:
  std::vector<double> cost_, lower_, upper_;
  std::vector<Row> rows_;
};

struct LpOptions {
  int max_iterations = 0;  // 0: automatic
  double feasibility_tolerance = 1e-9;
  double optimality_tolerance = 1e-9;
  int max_cut_rounds = 500;
  int cuts_per_group = 1;
  /// Stand-in upper bound for unbounded columns with negative cost; a solution
  /// resting on it is reported as Unbounded.
  double box = 1e9;
};

struct LpSolution {
  LpStatus status = LpStatus::Optimal;
  std::vector<double> x;
  /// d objective / d rhs per row; 0 for lazy rows never added.
  std::vector<double> row_duals;
  std::vector<char> row_in_model;
  double objective = 0.0;
  double max_violation = 0.0;  // over all rows and bounds, including lazy rows
  int iterations = 0;
  int cut_rounds = 0;
};

/// Bounded dual simplex on a dense tableau. Columns whose cost is negative
/// start at their upper bound so the slack basis is dual feasible; cuts are
/// appended to the optimal tableau and re-optimized from there.
LpSolution solve_lp(const LinearProgram& lp, const LpOptions& options = {});

}  // namespace bidplan
