#include "lipnav/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace lipnav::mpc {

namespace {
constexpr double kFeasTol = 1e-9;
constexpr double kDepTol = 1e-11;
constexpr int kMaxSteps = 400;
}  // namespace

QpResult solve_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& c,
                  const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  const int n = static_cast<int>(c.size());
  const int m = static_cast<int>(b.size());

  QpResult res;
  res.lambda = Eigen::VectorXd::Zero(m);

  Eigen::LLT<Eigen::MatrixXd> hfac(H);
  if (hfac.info() != Eigen::Success) {
    Eigen::MatrixXd hreg = H + 1e-10 * H.trace() * Eigen::MatrixXd::Identity(n, n);
    hfac.compute(hreg);
  }

  Eigen::VectorXd x = hfac.solve(-c);
  std::vector<int> active;      // working set, constraint indices
  Eigen::VectorXd lam_active;   // multipliers of the working set

  auto slack = [&](int i) { return A.row(i).dot(x) - b(i); };

  int steps = 0;
  while (steps < kMaxSteps) {
    // Most violated constraint outside the working set.
    int p = -1;
    double worst = -kFeasTol;
    for (int i = 0; i < m; ++i) {
      if (std::find(active.begin(), active.end(), i) != active.end()) continue;
      const double s = slack(i) / std::max(1.0, b.cwiseAbs()(i));
      if (s < worst) {
        worst = s;
        p = i;
      }
    }
    if (p < 0) {
      res.x = x;
      for (std::size_t k = 0; k < active.size(); ++k) res.lambda(active[k]) = lam_active(static_cast<int>(k));
      res.status = QpStatus::Optimal;
      res.iterations = steps;
      return res;
    }

    const Eigen::VectorXd np = A.row(p).transpose();
    double u_p = 0.0;  // multiplier accumulated for the entering constraint
    double s_p = slack(p);

    // Inner loop: take primal/dual steps until constraint p is satisfied or
    // the problem is recognized as infeasible.
    bool done_inner = false;
    while (!done_inner && steps < kMaxSteps) {
      ++steps;
      const int q = static_cast<int>(active.size());
      Eigen::VectorXd z;       // primal step direction
      Eigen::VectorXd r;       // dual update direction for the working set
      if (q == 0) {
        z = hfac.solve(np);
        r.resize(0);
      } else {
        Eigen::MatrixXd N(n, q);
        for (int k = 0; k < q; ++k) N.col(k) = A.row(active[static_cast<std::size_t>(k)]).transpose();
        const Eigen::MatrixXd Y = hfac.solve(N);            // H^{-1} N
        const Eigen::MatrixXd M = N.transpose() * Y;        // N' H^{-1} N
        const Eigen::VectorXd hn = hfac.solve(np);
        r = M.ldlt().solve(N.transpose() * hn);
        z = hn - Y * r;
      }

      const double zeta = np.dot(z);
      // Dual step length bound from multipliers that would cross zero.
      double t_dual = std::numeric_limits<double>::infinity();
      int blocker = -1;
      for (int k = 0; k < static_cast<int>(r.size()); ++k) {
        if (r(k) > kDepTol) {
          const double t = lam_active(k) / r(k);
          if (t < t_dual) {
            t_dual = t;
            blocker = k;
          }
        }
      }

      if (zeta <= kDepTol * std::max(1.0, np.squaredNorm())) {
        // The new normal is dependent on the working set: pure dual step.
        if (blocker < 0) {
          res.x = x;
          res.status = QpStatus::Infeasible;
          res.iterations = steps;
          return res;
        }
        lam_active -= t_dual * r;
        u_p += t_dual;
        active.erase(active.begin() + blocker);
        Eigen::VectorXd nl(lam_active.size() - 1);
        for (int k = 0, o = 0; k < lam_active.size(); ++k) {
          if (k != blocker) nl(o++) = lam_active(k);
        }
        lam_active = nl;
        continue;
      }

      const double t_full = -s_p / zeta;
      const double t = std::min(t_full, t_dual);
      x += t * z;
      if (r.size() > 0) lam_active -= t * r;
      u_p += t;
      s_p = slack(p);

      if (t_full <= t_dual) {
        active.push_back(p);
        Eigen::VectorXd nl(lam_active.size() + 1);
        nl.head(lam_active.size()) = lam_active;
        nl(lam_active.size()) = u_p;
        lam_active = nl;
        done_inner = true;
      } else {
        active.erase(active.begin() + blocker);
        Eigen::VectorXd nl(lam_active.size() - 1);
        for (int k = 0, o = 0; k < lam_active.size(); ++k) {
          if (k != blocker) nl(o++) = lam_active(k);
        }
        lam_active = nl;
      }
    }
  }

  res.x = x;
  for (std::size_t k = 0; k < active.size(); ++k) res.lambda(active[k]) = lam_active(static_cast<int>(k));
  res.status = QpStatus::MaxIter;
  res.iterations = steps;
  return res;
}

}  // namespace lipnav::mpc
