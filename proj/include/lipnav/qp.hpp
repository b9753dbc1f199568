#pragma once

#include <Eigen/Dense>

namespace lipnav::mpc {

enum class QpStatus { Optimal, Infeasible, MaxIter };

struct QpResult {
  Eigen::VectorXd x;
  Eigen::VectorXd lambda;  // one multiplier per constraint, >= 0
  QpStatus status = QpStatus::MaxIter;
  int iterations = 0;
};

/// Dual active-set solver for  min 1/2 x'Hx + c'x  s.t.  A x >= b  with H
/// positive definite. Starts from the unconstrained minimizer and adds the
/// most violated constraint at a time, taking partial dual steps when a
/// blocking multiplier would turn negative; monotone in the dual objective,
/// so it cannot cycle. Infeasible problems are detected as an unbounded dual
/// ray.
QpResult solve_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& c,
                  const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

}  // namespace lipnav::mpc
