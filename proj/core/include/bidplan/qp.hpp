#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bidplan {

enum class QpStatus { Optimal, Infeasible, IterationLimit, NumericalFailure, TooLarge };

std::string to_string(QpStatus s);

class QpError : public std::runtime_error {
 public:
  QpError(QpStatus status, const std::string& what)
      : std::runtime_error(what + " (" + to_string(status) + ")"), status_(status) {}
  QpStatus status() const noexcept { return status_; }

 private:
  QpStatus status_;
};

struct QpResult {
  QpStatus status = QpStatus::Optimal;
  Eigen::VectorXd x;
  double objective = 0.0;  // 1/2 x'Gx + a'x
  std::vector<int> active;
  Eigen::VectorXd multipliers;  // one per constraint, zero when inactive
  int iterations = 0;
};

/// Strictly convex QP  min 1/2 x'Gx + a'x  s.t.  C'x >= d  by the
/// Goldfarb-Idnani dual active-set method. Columns of C are the constraint
/// normals. G must be symmetric positive definite.
QpResult solve_qp(const Eigen::MatrixXd& G, const Eigen::VectorXd& a, const Eigen::MatrixXd& C,
                  const Eigen::VectorXd& d, int max_iterations = 0, double tolerance = 1e-12);

}  // namespace bidplan
