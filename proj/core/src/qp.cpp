#include "bidplan/qp.hpp"

#include <cmath>
#include <limits>

namespace bidplan {

std::string to_string(QpStatus s) {
  switch (s) {
    case QpStatus::Optimal: return "optimal";
    case QpStatus::Infeasible: return "infeasible";
    case QpStatus::IterationLimit: return "iteration limit";
    case QpStatus::NumericalFailure: return "numerical failure";
    case QpStatus::TooLarge: return "problem too large";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Active-set factorization state: J = L^-T Q and R upper triangular with
// Q'[L^-1 N_active] = [R; 0].
struct Factorization {
  Eigen::MatrixXd J;
  Eigen::MatrixXd R;
  int iq = 0;

  // Appends the constraint whose transformed normal is d = J'n. Returns false
  // when the normal is numerically dependent on the active set.
  bool add(Eigen::VectorXd& d, double eps) {
    const int n = static_cast<int>(d.size());
    for (int j = n - 1; j >= iq + 1; --j) {
      double cc = d(j - 1);
      double ss = d(j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      d(j) = 0.0;
      ss /= h;
      cc /= h;
      if (cc < 0.0) {
        cc = -cc;
        ss = -ss;
        d(j - 1) = -h;
      } else {
        d(j - 1) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (int k = 0; k < n; ++k) {
        const double t1 = J(k, j - 1);
        const double t2 = J(k, j);
        J(k, j - 1) = t1 * cc + t2 * ss;
        J(k, j) = xny * (t1 + J(k, j - 1)) - t2;
      }
    }
    ++iq;
    R.col(iq - 1).head(iq) = d.head(iq);
    return std::abs(d(iq - 1)) > eps * std::max(1.0, R.topLeftCorner(iq, iq).cwiseAbs().maxCoeff());
  }

  // Removes active position `pos`, keeping `active` and `u` in step.
  void remove(int pos, std::vector<int>& active, Eigen::VectorXd& u) {
    const int n = static_cast<int>(J.rows());
    for (int j = pos; j < iq - 1; ++j) {
      active[j] = active[j + 1];
      u(j) = u(j + 1);
      R.col(j) = R.col(j + 1);
    }
    active[iq - 1] = active[iq];
    u(iq - 1) = u(iq);
    active[iq] = -1;
    u(iq) = 0.0;
    R.col(iq - 1).head(iq).setZero();
    --iq;
    if (iq == 0) return;
    for (int j = pos; j < iq; ++j) {
      double cc = R(j, j);
      double ss = R(j + 1, j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      cc /= h;
      ss /= h;
      R(j + 1, j) = 0.0;
      if (cc < 0.0) {
        R(j, j) = -h;
        cc = -cc;
        ss = -ss;
      } else {
        R(j, j) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (int k = j + 1; k < iq; ++k) {
        const double t1 = R(j, k);
        const double t2 = R(j + 1, k);
        R(j, k) = t1 * cc + t2 * ss;
        R(j + 1, k) = xny * (t1 + R(j, k)) - t2;
      }
      for (int k = 0; k < n; ++k) {
        const double t1 = J(k, j);
        const double t2 = J(k, j + 1);
        J(k, j) = t1 * cc + t2 * ss;
        J(k, j + 1) = xny * (J(k, j) + t1) - t2;
      }
    }
  }
};

}  // namespace

QpResult solve_qp(const Eigen::MatrixXd& G, const Eigen::VectorXd& a, const Eigen::MatrixXd& C,
                  const Eigen::VectorXd& d, int max_iterations, double tolerance) {
  const int n = static_cast<int>(G.rows());
  const int m = static_cast<int>(C.cols());
  if (G.cols() != n || a.size() != n || C.rows() != n || d.size() != m) {
    throw std::invalid_argument("solve_qp: inconsistent dimensions");
  }
  if (max_iterations <= 0) max_iterations = 10 * (n + m) + 100;

  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success) {
    throw QpError(QpStatus::NumericalFailure, "QP Hessian is not positive definite");
  }

  QpResult res;
  Factorization fac;
  // J = L^-T
  fac.J = llt.matrixU().solve(Eigen::MatrixXd::Identity(n, n));
  fac.R = Eigen::MatrixXd::Zero(n, n);

  Eigen::VectorXd x = -llt.solve(a);
  double f = 0.5 * a.dot(x);

  std::vector<int> active(static_cast<std::size_t>(n) + 1, -1);
  std::vector<char> is_active(static_cast<std::size_t>(m), 0);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n + 1);
  Eigen::VectorXd z(n), r(n + 1), dvec(n);

  const double scale = std::max(1.0, d.cwiseAbs().maxCoeff());
  const double eps = std::numeric_limits<double>::epsilon();

  auto finish = [&](QpStatus status) {
    res.status = status;
    res.x = x;
    res.objective = f;
    res.multipliers = Eigen::VectorXd::Zero(m);
    res.active.clear();
    for (int k = 0; k < fac.iq; ++k) {
      res.active.push_back(active[k]);
      res.multipliers(active[k]) = u(k);
    }
    return res;
  };

  while (true) {
    if (++res.iterations > max_iterations) return finish(QpStatus::IterationLimit);

    // Step 1: most violated inactive constraint.
    int p = -1;
    double sp = -tolerance * scale;
    for (int i = 0; i < m; ++i) {
      if (is_active[i]) continue;
      const double s = C.col(i).dot(x) - d(i);
      if (s < sp) {
        sp = s;
        p = i;
      }
    }
    if (p < 0) return finish(QpStatus::Optimal);

    u(fac.iq) = 0.0;
    active[fac.iq] = p;

    while (true) {
      if (++res.iterations > max_iterations) return finish(QpStatus::IterationLimit);
      const auto np = C.col(p);
      dvec = fac.J.transpose() * np;
      const int iq = fac.iq;
      z = fac.J.rightCols(n - iq) * dvec.tail(n - iq);
      if (iq > 0) {
        r.head(iq) = fac.R.topLeftCorner(iq, iq).triangularView<Eigen::Upper>().solve(dvec.head(iq));
      }

      // Partial step: largest dual step keeping active multipliers >= 0.
      double t1 = kInf;
      int drop = -1;
      for (int k = 0; k < iq; ++k) {
        if (r(k) > 0.0) {
          const double ratio = u(k) / r(k);
          if (ratio < t1) {
            t1 = ratio;
            drop = k;
          }
        }
      }
      // Full step: primal step that satisfies constraint p.
      double t2 = kInf;
      if (z.squaredNorm() > eps) t2 = -sp / z.dot(np);

      const double t = std::min(t1, t2);
      if (!std::isfinite(t)) return finish(QpStatus::Infeasible);

      if (!std::isfinite(t2)) {
        // Dual-only step.
        for (int k = 0; k < iq; ++k) u(k) -= t * r(k);
        u(iq) += t;
        is_active[active[drop]] = 0;
        fac.remove(drop, active, u);
        continue;
      }

      x += t * z;
      f += t * z.dot(np) * (0.5 * t + u(iq));
      for (int k = 0; k < iq; ++k) u(k) -= t * r(k);
      u(iq) += t;

      if (t2 <= t1) {
        if (!fac.add(dvec, 1e3 * eps)) return finish(QpStatus::NumericalFailure);
        is_active[p] = 1;
        break;
      }
      is_active[active[drop]] = 0;
      fac.remove(drop, active, u);
      sp = C.col(p).dot(x) - d(p);
    }
  }
}

}  // namespace bidplan
