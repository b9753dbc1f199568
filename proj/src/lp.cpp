#include <cmath>
#include <limits>
#include <vector>

#include "lipnav/geometry.hpp"

namespace lipnav::geom {

namespace {

constexpr double kPivotEps = 1e-9;
constexpr int kMaxPivots = 5000;

// Dense tableau for the standard-form problem
//   maximize  c.z   s.t.  M z (+ slack) = rhs,  z >= 0
// after splitting each free variable x_i = z_i - z_{n+i}. Rows whose right
// hand side starts negative are flipped and given an artificial variable;
// phase 1 drives the artificials to zero, phase 2 optimizes the objective.
class SimplexTableau {
 public:
  SimplexTableau(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                 const Eigen::VectorXd& c)
      : m_(static_cast<int>(b.size())), n_(static_cast<int>(c.size())) {
    split_ = 2 * n_;
    // Count artificials.
    n_art_ = 0;
    for (int i = 0; i < m_; ++i) {
      if (b(i) < 0.0) ++n_art_;
    }
    cols_ = split_ + m_ + n_art_;  // split vars, slacks, artificials
    t_.setZero(m_ + 1, cols_ + 1);
    basis_.resize(m_);

    int art = 0;
    for (int i = 0; i < m_; ++i) {
      const double sign = b(i) < 0.0 ? -1.0 : 1.0;
      for (int j = 0; j < n_; ++j) {
        t_(i, j) = sign * a(i, j);
        t_(i, n_ + j) = -sign * a(i, j);
      }
      t_(i, split_ + i) = sign;  // slack
      t_(i, cols_) = sign * b(i);
      if (sign < 0.0) {
        t_(i, split_ + m_ + art) = 1.0;
        basis_[i] = split_ + m_ + art;
        ++art;
      } else {
        basis_[i] = split_ + i;
      }
    }
    cost_ = c;
  }

  LpStatus run(Eigen::VectorXd& x_out, double& value_out) {
    // Phase 1: minimize the sum of artificials (maximize the negated sum).
    if (n_art_ > 0) {
      for (int j = 0; j <= cols_; ++j) {
        double s = 0.0;
        for (int i = 0; i < m_; ++i) {
          if (basis_[i] >= split_ + m_) s += t_(i, j);
        }
        t_(m_, j) = -s;  // objective row holds -(reduced costs) convention below
      }
      const LpStatus st = iterate();
      if (st == LpStatus::NumericalFailure) return st;
      if (st == LpStatus::Unbounded) return LpStatus::NumericalFailure;
      if (t_(m_, cols_) < -1e-7) return LpStatus::Infeasible;
      // Pivot any artificial still basic onto a real column if possible.
      for (int i = 0; i < m_; ++i) {
        if (basis_[i] < split_ + m_) continue;
        int enter = -1;
        for (int j = 0; j < split_ + m_; ++j) {
          if (std::abs(t_(i, j)) > kPivotEps) {
            enter = j;
            break;
          }
        }
        if (enter >= 0) pivot(i, enter);
        // Otherwise the row is redundant; harmless to leave in place.
      }
    }

    // Phase 2: restore the real objective row, priced out over the basis.
    for (int j = 0; j <= cols_; ++j) t_(m_, j) = 0.0;
    for (int j = 0; j < n_; ++j) {
      t_(m_, j) = -cost_(j);
      t_(m_, n_ + j) = cost_(j);
    }
    for (int i = 0; i < m_; ++i) {
      const int bj = basis_[i];
      const double cb = reduced_objective_coeff(bj);
      if (cb != 0.0) {
        for (int j = 0; j <= cols_; ++j) t_(m_, j) -= cb * t_(i, j);
      }
    }
    const LpStatus st = iterate();
    if (st != LpStatus::Optimal) return st;

    Eigen::VectorXd z = Eigen::VectorXd::Zero(cols_);
    for (int i = 0; i < m_; ++i) z(basis_[i]) = t_(i, cols_);
    x_out.resize(n_);
    for (int j = 0; j < n_; ++j) x_out(j) = z(j) - z(n_ + j);
    value_out = cost_.dot(x_out);
    return LpStatus::Optimal;
  }

 private:
  double reduced_objective_coeff(int col) const {
    if (col < n_) return -cost_(col);
    if (col < 2 * n_) return cost_(col - n_);
    return 0.0;
  }

  void pivot(int row, int col) {
    const double piv = t_(row, col);
    t_.row(row) /= piv;
    for (int i = 0; i <= m_; ++i) {
      if (i == row) continue;
      const double f = t_(i, col);
      if (f != 0.0) t_.row(i) -= f * t_.row(row);
    }
    basis_[row] = col;
  }

  // Bland's rule: entering column is the lowest-index improving one, leaving
  // row is the minimum ratio with lowest basic index on ties.
  LpStatus iterate() {
    const int limit = split_ + m_;  // artificial columns never re-enter
    for (int it = 0; it < kMaxPivots; ++it) {
      int enter = -1;
      for (int j = 0; j < limit; ++j) {
        if (t_(m_, j) < -kPivotEps) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return LpStatus::Optimal;

      int leave = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m_; ++i) {
        if (t_(i, enter) > kPivotEps) {
          const double ratio = t_(i, cols_) / t_(i, enter);
          if (ratio < best_ratio - 1e-12 ||
              (ratio < best_ratio + 1e-12 && (leave < 0 || basis_[i] < basis_[leave]))) {
            best_ratio = ratio;
            leave = i;
          }
        }
      }
      if (leave < 0) return LpStatus::Unbounded;
      pivot(leave, enter);
    }
    return LpStatus::NumericalFailure;
  }

  int m_, n_, split_, n_art_, cols_;
  Eigen::MatrixXd t_;
  Eigen::VectorXd cost_;
  std::vector<int> basis_;
};

}  // namespace

LpSolution solve_lp(const LpProblem& problem) {
  LpSolution sol;
  const int n = static_cast<int>(problem.cost.size());
  const int m = static_cast<int>(problem.ineq_rhs.size());
  if (problem.ineq_matrix.rows() != m || problem.ineq_matrix.cols() != n)
    throw std::invalid_argument("solve_lp: inconsistent problem dimensions");
  if (!problem.cost.allFinite() || !problem.ineq_matrix.allFinite() ||
      !problem.ineq_rhs.allFinite())
    throw std::invalid_argument("solve_lp: non-finite coefficients");

  SimplexTableau tab(problem.ineq_matrix, problem.ineq_rhs, problem.cost);
  sol.status = tab.run(sol.x, sol.value);
  return sol;
}

}  // namespace lipnav::geom
