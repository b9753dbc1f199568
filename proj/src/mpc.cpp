#include "lipnav/mpc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "lipnav/qp.hpp"

namespace lipnav::mpc {

using lip::LipInput;
using lip::LipState;
using lip::Mat5;
using lip::Vec5;

// ---------------------------------------------------------------------------
// Piecewise-linear paths

Path2::Path2(std::vector<Knot> knots) : knots_(std::move(knots)) {
  if (knots_.empty()) throw std::invalid_argument("Path2 needs at least one knot");
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (knots_[i].t <= knots_[i - 1].t)
      throw std::invalid_argument("Path2 knots must have increasing times");
  }
}

Point2 Path2::at(double t) const {
  if (knots_.empty()) return Point2::Zero();
  if (t <= knots_.front().t) return knots_.front().pos;
  if (t >= knots_.back().t) return knots_.back().pos;
  std::size_t i = 0;
  while (knots_[i + 1].t < t) ++i;
  const Knot& a = knots_[i];
  const Knot& b = knots_[i + 1];
  const double s = (t - a.t) / (b.t - a.t);
  return a.pos + s * (b.pos - a.pos);
}

Point2 Path2::velocity(double t) const {
  if (knots_.empty() || t < knots_.front().t || t >= knots_.back().t) return Point2::Zero();
  std::size_t i = 0;
  while (i + 2 < knots_.size() && knots_[i + 1].t <= t) ++i;
  const Knot& a = knots_[i];
  const Knot& b = knots_[i + 1];
  return (b.pos - a.pos) / (b.t - a.t);
}

Path1::Path1(std::vector<Knot> knots) : knots_(std::move(knots)) {
  if (knots_.empty()) throw std::invalid_argument("Path1 needs at least one knot");
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (knots_[i].t <= knots_[i - 1].t)
      throw std::invalid_argument("Path1 knots must have increasing times");
  }
}

double Path1::at(double t) const {
  if (knots_.empty()) return 0.0;
  if (t <= knots_.front().t) return knots_.front().value;
  if (t >= knots_.back().t) return knots_.back().value;
  std::size_t i = 0;
  while (knots_[i + 1].t < t) ++i;
  const Knot& a = knots_[i];
  const Knot& b = knots_[i + 1];
  const double s = (t - a.t) / (b.t - a.t);
  return a.value + s * (b.value - a.value);
}

// ---------------------------------------------------------------------------
// Barriers and costs

Eigen::Matrix2d ellipse_shape_matrix(double a, double b, double phi) {
  if (!(a > 0.0) || !(b > 0.0))
    throw std::invalid_argument("ellipse semi-axes must be positive");
  Eigen::Matrix2d r;
  r << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
  Eigen::Matrix2d d = Eigen::Matrix2d::Zero();
  d(0, 0) = 1.0 / (a * a);
  d(1, 1) = 1.0 / (b * b);
  return r.transpose() * d * r;
}

double moving_barrier(const LipState& x, const MovingObstacle& obs, double t) {
  const Eigen::Matrix2d p =
      ellipse_shape_matrix(obs.semi_axis_a, obs.semi_axis_b, obs.orientation_at(t));
  const Point2 q = lip::output(x) - obs.center_at(t);
  return q.dot(p * q) - 1.0;
}

Eigen::VectorXd static_barriers(const geom::Polytope& cell, const LipState& x) {
  const Point2 p = lip::output(x);
  Eigen::VectorXd h(cell.face_count());
  for (std::size_t j = 0; j < cell.face_count(); ++j) {
    const geom::Halfspace& r = cell.rows()[j];
    h(static_cast<int>(j)) = r.offset - r.normal.dot(p);
  }
  return h;
}

double cbf_residual(double h_next, double h_now, double gamma) {
  return h_next - (1.0 - gamma) * h_now;
}

TargetState build_target(const LipState& x, const Point2& next_waypoint) {
  TargetState t;
  t.position = next_waypoint;
  const Point2 delta = next_waypoint - lip::output(x);
  const double dist = delta.norm();
  if (dist < 1e-6) {
    t.heading = x.theta;
    return t;
  }
  const double raw = std::atan2(delta.y(), delta.x());
  double err = lip::angle_diff(raw, x.theta);
  // Close to the waypoint the bearing rotates violently as the sway carries
  // the COM sideways; chasing it at full gain spins the walker in place.
  // Tapering the commanded correction keeps that feedback loop contractive
  // while still pointing an aligned approach at the waypoint.
  if (dist < kHeadingFreezeRadius) {
    const double taper = (dist / kHeadingFreezeRadius);
    err *= taper * taper;
  }
  t.heading = x.theta + err;
  return t;
}

namespace {

// Weights arrive in the reordered [x, y, theta, xdot, ydot] convention;
// remap to the state order [x, xdot, y, ydot, theta].
Vec5 weights_in_state_order(const Vec5& s_order) {
  Vec5 w;
  w << s_order(0), s_order(3), s_order(1), s_order(4), s_order(2);
  return w;
}

Vec5 state_error(const LipState& x, const TargetState& target) {
  Vec5 e;
  e << x.x - target.position.x(), x.xdot, x.y - target.position.y(), x.ydot,
      lip::angle_diff(x.theta, target.heading);
  return e;
}

}  // namespace

double stage_cost(const LipState& x, const LipInput& u, const TargetState& target,
                  const Vec5& w_state, const Vec5& w_input) {
  const Vec5 w = weights_in_state_order(w_state);
  const Vec5 e = state_error(x, target);
  double f = e.dot(w.asDiagonal() * e);
  const Eigen::Vector3d uv = u.vec();
  for (int i = 0; i < 3; ++i) f += w_input(i) * uv(i) * uv(i);
  return f;
}

double terminal_cost(const LipState& x, const TargetState& target,
                     const Vec5& w_terminal) {
  const Vec5 w = weights_in_state_order(w_terminal);
  const Vec5 e = state_error(x, target);
  return e.dot(w.asDiagonal() * e);
}

// ---------------------------------------------------------------------------
// MpcProblem

MpcProblem::MpcProblem(const geom::Polytope& cell, const TargetState& target,
                       const LipState& x_init, std::vector<ObstacleHorizon> obstacles,
                       lip::Stance first_stance, const lip::StanceBounds& bounds,
                       const lip::LipParams& params, const MpcConfig& cfg)
    : horizon_(cfg.horizon),
      x0_(x_init.vec()),
      target_(target),
      bounds_(bounds),
      obstacles_(std::move(obstacles)),
      cfg_(cfg) {
  if (horizon_ < 1) throw std::invalid_argument("MPC horizon must be >= 1");

  const lip::StepMatrices m = lip::step_matrices(params);
  a_ = m.A;
  b_ = m.B;

  // d x_stage / d U for every stage; states are affine in the inputs.
  std::vector<Mat5> apow(static_cast<std::size_t>(horizon_) + 1);
  apow[0].setIdentity();
  for (int i = 1; i <= horizon_; ++i) apow[static_cast<std::size_t>(i)] = a_ * apow[static_cast<std::size_t>(i - 1)];
  jx_.resize(static_cast<std::size_t>(horizon_) + 1);
  for (int stage = 0; stage <= horizon_; ++stage) {
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(5, num_vars());
    for (int col = 0; col < stage; ++col) {
      j.block<5, 3>(0, 3 * col) = apow[static_cast<std::size_t>(stage - 1 - col)] * b_;
    }
    jx_[static_cast<std::size_t>(stage)] = std::move(j);
  }

  stances_.resize(static_cast<std::size_t>(horizon_));
  for (int s = 0; s < horizon_; ++s)
    stances_[static_cast<std::size_t>(s)] = (s % 2 == 0) ? first_stance : lip::opposite(first_stance);

  // Per-face buffer, clamped twice: never below the initial state's own
  // clearance (the shifted barrier then starts nonnegative and the true
  // barrier can only recover upward), and never so deep that the active
  // waypoint leaves the buffered cell (hand-over regions can be slivers).
  cell_rows_ = cell.rows();
  const Point2 p0 = lip::output(x_init);
  for (geom::Halfspace& r : cell_rows_) {
    const double h0 = r.offset - r.normal.dot(p0);
    const double hw = r.offset - r.normal.dot(target.position);
    const double margin =
        std::min(std::clamp(h0, 0.0, cfg_.cbf_margin), std::max(0.0, hw - 0.005));
    r.offset -= margin;
  }

  const int travel_rows = bounds_.travel_min > 0.0 ? 2 : 1;
  n_cons_ = horizon_ * (6 + travel_rows + static_cast<int>(cell_rows_.size()) +
                        static_cast<int>(obstacles_.size()));

  // Velocity penalties act on stride-averaged velocities, which are free of
  // the mandatory lateral sway; penalizing a single step-end velocity makes
  // the marching-in-place gait look expensive in a stance-parity-dependent
  // way and slowly drifts the walker sideways. Position and heading terms
  // use the plain states, which do not sway at the step boundaries.
  const Vec5 w2 = weights_in_state_order(cfg_.w_running);
  const Vec5 w1 = weights_in_state_order(cfg_.w_terminal);
  const auto pos_part = [](const Vec5& w) {
    Vec5 p = w;
    p(1) = p(3) = 0.0;
    return p;
  };
  const auto vel_part = [](const Vec5& w) {
    Vec5 v = Vec5::Zero();
    v(1) = w(1);
    v(3) = w(3);
    return v;
  };
  w2_pos_ = pos_part(w2);
  w2_vel_ = vel_part(w2);
  w1_pos_ = pos_part(w1);
  w1_vel_ = vel_part(w1);

  // Constant Hessian of the exactly quadratic cost.
  hess_ = Eigen::MatrixXd::Zero(num_vars(), num_vars());
  for (int stage = 1; stage < horizon_; ++stage) {
    const Eigen::MatrixXd& j = jx_[static_cast<std::size_t>(stage)];
    hess_ += 2.0 * j.transpose() * w2_pos_.asDiagonal() * j;
  }
  hess_ += 2.0 * jx_[static_cast<std::size_t>(horizon_)].transpose() *
           w1_pos_.asDiagonal() * jx_[static_cast<std::size_t>(horizon_)];
  for (int stage = 0; stage < horizon_; ++stage) {
    const Eigen::MatrixXd javg = 0.5 * (jx_[static_cast<std::size_t>(stage)] +
                                        jx_[static_cast<std::size_t>(stage + 1)]);
    hess_ += 2.0 * javg.transpose() * w2_vel_.asDiagonal() * javg;
  }
  const Eigen::MatrixXd jterm = 0.5 * (jx_[static_cast<std::size_t>(horizon_ - 1)] +
                                       jx_[static_cast<std::size_t>(horizon_)]);
  hess_ += 2.0 * jterm.transpose() * w1_vel_.asDiagonal() * jterm;
  for (int s = 0; s < horizon_; ++s) {
    for (int i = 0; i < 3; ++i) hess_(3 * s + i, 3 * s + i) += 2.0 * cfg_.w_input(i);
  }
}

std::vector<LipState> MpcProblem::states_from(const Eigen::VectorXd& u_stack) const {
  std::vector<LipState> out;
  out.reserve(static_cast<std::size_t>(horizon_));
  Vec5 x = x0_;
  for (int s = 0; s < horizon_; ++s) {
    x = a_ * x + b_ * u_stack.segment<3>(3 * s);
    out.push_back(LipState::from_vec(x));
  }
  return out;
}

double MpcProblem::cost(const Eigen::VectorXd& u_stack) const {
  Vec5 tgt;
  tgt << target_.position.x(), 0.0, target_.position.y(), 0.0, target_.heading;

  double f = 0.0;
  Vec5 x = x0_;
  Vec5 x_prev = x0_;
  for (int s = 0; s < horizon_; ++s) {
    const Vec5 e = x - tgt;
    f += e.dot(w2_pos_.asDiagonal() * e);
    const Eigen::Vector3d u = u_stack.segment<3>(3 * s);
    for (int i = 0; i < 3; ++i) f += cfg_.w_input(i) * u(i) * u(i);
    x_prev = x;
    x = a_ * x + b_ * u;
    const Vec5 avg = 0.5 * (x_prev + x);
    f += avg.dot(w2_vel_.asDiagonal() * avg);
  }
  const Vec5 e = x - tgt;
  f += e.dot(w1_pos_.asDiagonal() * e);
  const Vec5 vterm = 0.5 * (x_prev + x);
  f += vterm.dot(w1_vel_.asDiagonal() * vterm);
  return f;
}

void MpcProblem::cost_grad(const Eigen::VectorXd& u_stack, double& f,
                           Eigen::VectorXd& grad) const {
  const Vec5 w2 = weights_in_state_order(cfg_.w_running);
  const Vec5 w1 = weights_in_state_order(cfg_.w_terminal);
  Vec5 tgt;
  tgt << target_.position.x(), 0.0, target_.position.y(), 0.0, target_.heading;

  f = 0.0;
  grad = Eigen::VectorXd::Zero(num_vars());
  Vec5 x = x0_;
  Vec5 x_prev = x0_;
  for (int s = 0; s < horizon_; ++s) {
    const Vec5 e = x - tgt;
    f += e.dot(w2_pos_.asDiagonal() * e);
    if (s > 0) grad += 2.0 * jx_[static_cast<std::size_t>(s)].transpose() * (w2_pos_.asDiagonal() * e);
    const Eigen::Vector3d u = u_stack.segment<3>(3 * s);
    for (int i = 0; i < 3; ++i) {
      f += cfg_.w_input(i) * u(i) * u(i);
      grad(3 * s + i) += 2.0 * cfg_.w_input(i) * u(i);
    }
    x_prev = x;
    x = a_ * x + b_ * u;
    const Vec5 avg = 0.5 * (x_prev + x);
    f += avg.dot(w2_vel_.asDiagonal() * avg);
    const Eigen::MatrixXd javg = 0.5 * (jx_[static_cast<std::size_t>(s)] +
                                        jx_[static_cast<std::size_t>(s + 1)]);
    grad += 2.0 * javg.transpose() * (w2_vel_.asDiagonal() * avg);
  }
  const Vec5 e = x - tgt;
  f += e.dot(w1_pos_.asDiagonal() * e);
  grad += 2.0 * jx_[static_cast<std::size_t>(horizon_)].transpose() * (w1_pos_.asDiagonal() * e);
  const Vec5 vterm = 0.5 * (x_prev + x);
  f += vterm.dot(w1_vel_.asDiagonal() * vterm);
  const Eigen::MatrixXd jterm = 0.5 * (jx_[static_cast<std::size_t>(horizon_ - 1)] +
                                       jx_[static_cast<std::size_t>(horizon_)]);
  grad += 2.0 * jterm.transpose() * (w1_vel_.asDiagonal() * vterm);
}

void MpcProblem::constraints(const Eigen::VectorXd& u_stack, Eigen::VectorXd& g) const {
  eval_constraints(u_stack, g, nullptr);
}

void MpcProblem::constraints_jac(const Eigen::VectorXd& u_stack, Eigen::VectorXd& g,
                                 Eigen::MatrixXd& jac) const {
  eval_constraints(u_stack, g, &jac);
}

void MpcProblem::eval_constraints(const Eigen::VectorXd& u_stack, Eigen::VectorXd& g,
                                  Eigen::MatrixXd* jac_out) const {
  g.resize(n_cons_);
  if (jac_out) *jac_out = Eigen::MatrixXd::Zero(n_cons_, num_vars());

  std::vector<Vec5> x(static_cast<std::size_t>(horizon_) + 1);
  x[0] = x0_;
  for (int s = 0; s < horizon_; ++s)
    x[static_cast<std::size_t>(s + 1)] = a_ * x[static_cast<std::size_t>(s)] + b_ * u_stack.segment<3>(3 * s);

  const double gs = cfg_.cbf.gamma_static;
  const double gm = cfg_.cbf.gamma_moving;
  int row = 0;

  double phi = x0_(4);  // theta_0 + sum of heading inputs up to the stage
  for (int s = 0; s < horizon_; ++s) {
    const double ux = u_stack(3 * s);
    const double uy = u_stack(3 * s + 1);
    const double ut = u_stack(3 * s + 2);
    phi += ut;
    const double cph = std::cos(phi), sph = std::sin(phi);
    const double v1 = cph * ux + sph * uy;
    const double v2 = -sph * ux + cph * uy;
    const lip::ReachBox& box = bounds_.reach(stances_[static_cast<std::size_t>(s)]);

    // d v / d(utheta_j) for j <= s is (v2, -v1); d v / d(ux_s, uy_s) below.
    auto fill_reach = [&](int r_, double sign_v1, double sign_v2, double rhs) {
      g(r_) = sign_v1 * v1 + sign_v2 * v2 + rhs;
      if (!jac_out) return;
      (*jac_out)(r_, 3 * s) = sign_v1 * cph + sign_v2 * -sph;
      (*jac_out)(r_, 3 * s + 1) = sign_v1 * sph + sign_v2 * cph;
      const double dphi = sign_v1 * v2 + sign_v2 * -v1;
      for (int j = 0; j <= s; ++j) (*jac_out)(r_, 3 * j + 2) += dphi;
    };
    fill_reach(row++, 1.0, 0.0, -box.xc_min);
    fill_reach(row++, -1.0, 0.0, box.xc_max);
    fill_reach(row++, 0.0, 1.0, -box.yc_min);
    fill_reach(row++, 0.0, -1.0, box.yc_max);

    g(row) = ut - bounds_.heading_min;
    if (jac_out) (*jac_out)(row, 3 * s + 2) = 1.0;
    ++row;
    g(row) = bounds_.heading_max - ut;
    if (jac_out) (*jac_out)(row, 3 * s + 2) = -1.0;
    ++row;

    // Travel distance in squared form.
    const double dx = x[static_cast<std::size_t>(s + 1)](0) - x[static_cast<std::size_t>(s)](0);
    const double dy = x[static_cast<std::size_t>(s + 1)](2) - x[static_cast<std::size_t>(s)](2);
    const double q = dx * dx + dy * dy;
    if (bounds_.travel_min > 0.0) {
      g(row) = q - bounds_.travel_min * bounds_.travel_min;
      if (jac_out) {
        jac_out->row(row) =
            2.0 * dx * (jx_[static_cast<std::size_t>(s + 1)].row(0) - jx_[static_cast<std::size_t>(s)].row(0)) +
            2.0 * dy * (jx_[static_cast<std::size_t>(s + 1)].row(2) - jx_[static_cast<std::size_t>(s)].row(2));
      }
      ++row;
    }
    g(row) = bounds_.travel_max * bounds_.travel_max - q;
    if (jac_out) {
      jac_out->row(row) =
          -(2.0 * dx * (jx_[static_cast<std::size_t>(s + 1)].row(0) - jx_[static_cast<std::size_t>(s)].row(0)) +
            2.0 * dy * (jx_[static_cast<std::size_t>(s + 1)].row(2) - jx_[static_cast<std::size_t>(s)].row(2)));
    }
    ++row;

    // Static cell barriers, discrete exponential CBF form.
    for (const geom::Halfspace& face : cell_rows_) {
      const double h_now =
          face.offset - (face.normal.x() * x[static_cast<std::size_t>(s)](0) +
                         face.normal.y() * x[static_cast<std::size_t>(s)](2));
      const double h_next =
          face.offset - (face.normal.x() * x[static_cast<std::size_t>(s + 1)](0) +
                         face.normal.y() * x[static_cast<std::size_t>(s + 1)](2));
      g(row) = h_next - (1.0 - gs) * h_now;
      if (jac_out) {
        jac_out->row(row) =
            -(face.normal.x() * jx_[static_cast<std::size_t>(s + 1)].row(0) +
              face.normal.y() * jx_[static_cast<std::size_t>(s + 1)].row(2)) +
            (1.0 - gs) * (face.normal.x() * jx_[static_cast<std::size_t>(s)].row(0) +
                          face.normal.y() * jx_[static_cast<std::size_t>(s)].row(2));
      }
      ++row;
    }

    // Moving obstacle barriers on extrapolated centers.
    for (const ObstacleHorizon& obs : obstacles_) {
      const Point2 pos_now(x[static_cast<std::size_t>(s)](0), x[static_cast<std::size_t>(s)](2));
      const Point2 pos_next(x[static_cast<std::size_t>(s + 1)](0),
                            x[static_cast<std::size_t>(s + 1)](2));
      const Point2 qn = pos_now - obs.centers[static_cast<std::size_t>(s)];
      const Point2 qx = pos_next - obs.centers[static_cast<std::size_t>(s + 1)];
      const double h_now = qn.dot(obs.shape * qn) - 1.0;
      const double h_next = qx.dot(obs.shape * qx) - 1.0;
      g(row) = h_next - (1.0 - gm) * h_now;
      if (jac_out) {
        const Eigen::Vector2d grad_next = 2.0 * (obs.shape * qx);
        const Eigen::Vector2d grad_now = 2.0 * (obs.shape * qn);
        jac_out->row(row) =
            grad_next.x() * jx_[static_cast<std::size_t>(s + 1)].row(0) +
            grad_next.y() * jx_[static_cast<std::size_t>(s + 1)].row(2) -
            (1.0 - gm) * (grad_now.x() * jx_[static_cast<std::size_t>(s)].row(0) +
                          grad_now.y() * jx_[static_cast<std::size_t>(s)].row(2));
      }
      ++row;
    }
  }
}


void MpcProblem::add_constraint_curvature(const Eigen::VectorXd& u_stack,
                                          const Eigen::VectorXd& lambda,
                                          Eigen::MatrixXd& hess) const {
  const int nv = num_vars();
  std::vector<Vec5> x(static_cast<std::size_t>(horizon_) + 1);
  x[0] = x0_;
  for (int s = 0; s < horizon_; ++s)
    x[static_cast<std::size_t>(s + 1)] = a_ * x[static_cast<std::size_t>(s)] + b_ * u_stack.segment<3>(3 * s);

  const double gm = cfg_.cbf.gamma_moving;
  int row = 0;
  double phi = x0_(4);
  for (int s = 0; s < horizon_; ++s) {
    const double ux = u_stack(3 * s);
    const double uy = u_stack(3 * s + 1);
    phi += u_stack(3 * s + 2);
    const double cph = std::cos(phi), sph = std::sin(phi);
    const double v1 = cph * ux + sph * uy;
    const double v2 = -sph * ux + cph * uy;

    // Heading-frame reach rows: hess(v) couples (ux, uy) with every heading
    // input up to this stage.
    auto add_reach = [&](double weight, double d_ux, double d_uy, double d_phiphi) {
      if (weight == 0.0) return;
      for (int j = 2; j < 3 * (s + 1); j += 3) {
        hess(3 * s, j) += weight * d_ux;
        hess(j, 3 * s) += weight * d_ux;
        hess(3 * s + 1, j) += weight * d_uy;
        hess(j, 3 * s + 1) += weight * d_uy;
        for (int j2 = 2; j2 < 3 * (s + 1); j2 += 3) hess(j, j2) += weight * d_phiphi;
      }
    };
    // Rows: +v1, -v1, +v2, -v2; contribution is -lambda * sign * hess(v).
    add_reach(-lambda(row++), -sph, cph, -v1);
    add_reach(lambda(row++), -sph, cph, -v1);
    add_reach(-lambda(row++), -cph, -sph, -v2);
    add_reach(lambda(row++), -cph, -sph, -v2);
    row += 2;  // heading bounds are linear

    // Travel rows: hess(q) = 2 (Jdx'Jdx + Jdy'Jdy), exact.
    const Eigen::RowVectorXd jdx =
        jx_[static_cast<std::size_t>(s + 1)].row(0) - jx_[static_cast<std::size_t>(s)].row(0);
    const Eigen::RowVectorXd jdy =
        jx_[static_cast<std::size_t>(s + 1)].row(2) - jx_[static_cast<std::size_t>(s)].row(2);
    double travel_weight = 0.0;  // multiplier on hess(q)
    if (bounds_.travel_min > 0.0) {
      travel_weight -= lambda(row++);  // g = q - min^2, -lambda hess(q)
    }
    travel_weight += lambda(row++);  // g = max^2 - q, +lambda hess(q)
    if (travel_weight != 0.0) {
      hess += 2.0 * travel_weight * (jdx.transpose() * jdx + jdy.transpose() * jdy);
    }

    row += static_cast<int>(cell_rows_.size());  // static CBF rows are affine

    for (const ObstacleHorizon& obs : obstacles_) {
      const double lam = lambda(row++);
      if (lam == 0.0) continue;
      Eigen::MatrixXd jp_next(2, nv), jp_now(2, nv);
      jp_next.row(0) = jx_[static_cast<std::size_t>(s + 1)].row(0);
      jp_next.row(1) = jx_[static_cast<std::size_t>(s + 1)].row(2);
      jp_now.row(0) = jx_[static_cast<std::size_t>(s)].row(0);
      jp_now.row(1) = jx_[static_cast<std::size_t>(s)].row(2);
      // g = h_next - (1-gm) h_now with hess(h) = 2 Jp' P Jp.
      hess += -lam * 2.0 * (jp_next.transpose() * obs.shape * jp_next) +
              lam * (1.0 - gm) * 2.0 * (jp_now.transpose() * obs.shape * jp_now);
    }
  }
}

// ---------------------------------------------------------------------------
// SQP

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Solved:
      return "solved";
    case SolveStatus::Infeasible:
      return "infeasible";
    default:
      return "max_iter";
  }
}

namespace {

double violation_sum(const Eigen::VectorXd& g) {
  double v = 0.0;
  for (int i = 0; i < g.size(); ++i) v += std::max(0.0, -g(i));
  return v;
}

double violation_max(const Eigen::VectorXd& g) {
  double v = 0.0;
  for (int i = 0; i < g.size(); ++i) v = std::max(v, -g(i));
  return v;
}

}  // namespace

SqpReport solve_sqp(const MpcProblem& prob, Eigen::VectorXd& u_stack,
                    const MpcConfig& cfg) {
  const int n = prob.num_vars();
  const int m = prob.num_constraints();

  const Eigen::MatrixXd ident = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd hess_cost = prob.cost_hessian();

  SqpReport rep;
  double merit_weight = 1.0;
  int stalls = 0;
  Eigen::VectorXd lambda_prev = Eigen::VectorXd::Zero(m);

  Eigen::VectorXd g(m), grad(n);
  Eigen::MatrixXd jac;
  double f = 0.0;

  for (int iter = 1; iter <= cfg.max_sqp_iterations; ++iter) {
    rep.iterations = iter;
    prob.constraints_jac(u_stack, g, jac);
    prob.cost_grad(u_stack, f, grad);
    const double viol = violation_max(g);

    // Gauss-Newton cost Hessian plus exact curvature of the nonlinear
    // constraints weighted by the latest multipliers, floored to positive
    // definite for the dual active-set subproblem.
    Eigen::MatrixXd hess = hess_cost;
    prob.add_constraint_curvature(u_stack, lambda_prev, hess);
    double ridge = 1e-9 * std::max(1.0, hess_cost.trace());
    hess += ridge * ident;
    while (Eigen::LLT<Eigen::MatrixXd>(hess).info() != Eigen::Success) {
      ridge *= 10.0;
      hess += ridge * ident;
    }

    QpResult qp = solve_qp(hess, grad, jac, -g);
    Eigen::VectorXd d;
    Eigen::VectorXd lambda;
    if (qp.status == QpStatus::Infeasible) {
      // Elastic relaxation: l1 slacks on every row keep the subproblem
      // solvable when the linearization is inconsistent.
      const double rho = 1e4 * std::max(1.0, grad.lpNorm<Eigen::Infinity>());
      Eigen::MatrixXd he = Eigen::MatrixXd::Zero(n + m, n + m);
      he.topLeftCorner(n, n) = hess;
      he.bottomRightCorner(m, m) = 1e-6 * rho * Eigen::MatrixXd::Identity(m, m);
      Eigen::VectorXd ce(n + m);
      ce.head(n) = grad;
      ce.tail(m).setConstant(rho);
      Eigen::MatrixXd ae = Eigen::MatrixXd::Zero(2 * m, n + m);
      ae.topLeftCorner(m, n) = jac;
      ae.topRightCorner(m, m) = Eigen::MatrixXd::Identity(m, m);
      ae.bottomRightCorner(m, m) = Eigen::MatrixXd::Identity(m, m);
      Eigen::VectorXd be(2 * m);
      be.head(m) = -g;
      be.tail(m).setZero();
      const QpResult eq = solve_qp(he, ce, ae, be);
      d = eq.x.head(n);
      lambda = eq.lambda.head(m);
    } else {
      d = qp.x;
      lambda = qp.lambda;
    }
    lambda_prev = lambda;

    // First-order optimality at the current iterate with the QP multipliers.
    // Stationarity and complementarity are scaled by the problem's gradient
    // and objective magnitudes; feasibility stays absolute to honor the
    // barrier tolerances.
    const double grad_scale = std::max(1.0, grad.lpNorm<Eigen::Infinity>());
    const double stationarity =
        (grad - jac.transpose() * lambda).lpNorm<Eigen::Infinity>() / grad_scale;
    double comp = 0.0;
    for (int i = 0; i < m; ++i) comp = std::max(comp, std::abs(lambda(i) * g(i)));
    comp /= std::max(1.0, std::abs(f));
    rep.kkt_residual = std::max({stationarity, viol, comp});
    if (rep.kkt_residual <= cfg.kkt_tolerance) {
      rep.status = SolveStatus::Solved;
      return rep;
    }

    if (d.lpNorm<Eigen::Infinity>() <= 1e-12) {
      rep.status = viol > 1e-6 ? SolveStatus::Infeasible : SolveStatus::MaxIter;
      return rep;
    }

    const double lam_inf = lambda.lpNorm<Eigen::Infinity>();
    merit_weight = std::max(2.0 * lam_inf + 1.0, 0.5 * merit_weight);
    const double phi0 = f + merit_weight * violation_sum(g);
    const double dphi = grad.dot(d) - merit_weight * violation_sum(g);

    double alpha = 1.0;
    bool accepted = false;
    Eigen::VectorXd g_try(m);
    for (int ls = 0; ls < 30; ++ls, alpha *= 0.5) {
      const Eigen::VectorXd cand = u_stack + alpha * d;
      prob.constraints(cand, g_try);
      const double phi = prob.cost(cand) + merit_weight * violation_sum(g_try);
      if (phi <= phi0 + 1e-4 * alpha * dphi) {
        u_stack = cand;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (++stalls >= 2) {
        rep.status = viol > 1e-6 ? SolveStatus::Infeasible : SolveStatus::MaxIter;
        return rep;
      }
    } else {
      stalls = 0;
    }
  }

  prob.constraints(u_stack, g);
  rep.status = SolveStatus::MaxIter;
  rep.kkt_residual = std::max(rep.kkt_residual, violation_max(g));
  return rep;
}

// ---------------------------------------------------------------------------
// solve_mpc and the sequencer

MpcSolution solve_mpc(std::size_t cell_index, const LipState& x_init,
                      const freespace::FreeSpaceChain& chain,
                      const std::vector<MovingObstacle>& obstacles, double t_now,
                      lip::Stance current_stance, const lip::LipParams& params,
                      const lip::StanceBounds& bounds, const MpcConfig& cfg,
                      const MpcSolution* warm_start) {
  if (cell_index >= chain.size())
    throw std::invalid_argument("solve_mpc: cell index out of range");
  const auto t_start = std::chrono::steady_clock::now();

  const TargetState target = build_target(x_init, chain.waypoints[cell_index]);

  // Positioning mode close to the active waypoint: the cruise weights stall
  // short of it, which strands the walker when the hand-over region around
  // an intermediate waypoint is thin, and leaves the final goal unreached.
  // The gain ramps in continuously so consecutive warm-started solves see
  // nearby problems.
  MpcConfig cfg_local = cfg;
  {
    const double d = (chain.waypoints[cell_index] - lip::output(x_init)).norm();
    const double ramp =
        std::clamp(3.0 * (cfg.park_radius - d) / cfg.park_radius, 0.0, 1.0);
    const double gain = 1.0 + (cfg.park_gain - 1.0) * ramp;
    cfg_local.w_terminal(0) *= gain;
    cfg_local.w_terminal(1) *= gain;
    cfg_local.w_running(0) *= gain;
    cfg_local.w_running(1) *= gain;
  }

  // Activation and constant-velocity extrapolation over the horizon.
  std::vector<ObstacleHorizon> horizon_obs;
  const Point2 com = lip::output(x_init);
  for (const MovingObstacle& o : obstacles) {
    if ((o.center_at(t_now) - com).norm() > o.activation_radius) continue;
    ObstacleHorizon oh;
    oh.shape = ellipse_shape_matrix(o.semi_axis_a, o.semi_axis_b, o.orientation_at(t_now));
    const Point2 p0 = o.center_at(t_now);
    const Point2 v = o.center.velocity(t_now);
    for (int s = 0; s <= cfg.horizon; ++s)
      oh.centers.push_back(p0 + v * (s * params.step_duration));
    horizon_obs.push_back(std::move(oh));
  }
  const int n_active = static_cast<int>(horizon_obs.size());

  MpcProblem prob(chain.cells[cell_index], target, x_init, std::move(horizon_obs),
                  current_stance, bounds, params, cfg_local);

  Eigen::VectorXd u_stack = Eigen::VectorXd::Zero(prob.num_vars());
  if (warm_start && static_cast<int>(warm_start->inputs.size()) == cfg.horizon) {
    for (int s = 0; s < cfg.horizon; ++s)
      u_stack.segment<3>(3 * s) = warm_start->inputs[static_cast<std::size_t>(s)].vec();
  }

  const SqpReport rep = solve_sqp(prob, u_stack, cfg);

  MpcSolution sol;
  sol.states = prob.states_from(u_stack);
  sol.inputs.reserve(static_cast<std::size_t>(cfg.horizon));
  for (int s = 0; s < cfg.horizon; ++s)
    sol.inputs.push_back(LipInput::from_vec(u_stack.segment<3>(3 * s)));
  sol.status = rep.status;
  sol.kkt_residual = rep.kkt_residual;
  sol.iterations = rep.iterations;
  sol.active_moving = n_active;
  sol.solve_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return sol;
}

MpcSolution shift_solution(const MpcSolution& sol) {
  MpcSolution out = sol;
  if (!out.inputs.empty()) {
    out.inputs.erase(out.inputs.begin());
    out.inputs.push_back(out.inputs.empty() ? LipInput{} : out.inputs.back());
  }
  return out;
}

std::optional<std::size_t> sequencer_advance(std::size_t active, const LipState& x,
                                             const freespace::FreeSpaceChain& chain) {
  const Point2 p = lip::output(x);
  const Eigen::Vector2d v(x.xdot, x.ydot);
  // A later cell takes over only when the next braked step cannot leave it:
  // the clearance to every face must cover the one-step drift toward it
  // minus what a worst-case foot placement can absorb. Fast grazing touches
  // stay blocked while the mandatory lateral sway (~0.3 m/s) passes freely,
  // so the rule reduces to plain membership for ordinary crossings. 0.36 m
  // per m/s is sinh(wT)/w for the bundled gait; 0.10 m is the braking
  // available in the worst direction of the reachability box.
  constexpr double kExcursionPerSpeed = 0.36;
  constexpr double kBrakeAuthority = 0.10;
  const auto entry_score = [&](const geom::Polytope& cell) {
    double s = std::numeric_limits<double>::infinity();
    for (const geom::Halfspace& face : cell.rows()) {
      const double slack = face.offset - face.normal.dot(p);
      const double drift = kExcursionPerSpeed * std::max(0.0, face.normal.dot(v));
      s = std::min(s, slack - std::max(0.0, drift - kBrakeAuthority));
    }
    return s;
  };
  const double h_active = chain.cells[active].min_slack(p);
  for (std::size_t j = chain.size(); j-- > active + 1;) {
    if (!chain.cells[j].contains(p)) continue;
    if (entry_score(chain.cells[j]) >= -geom::kMembershipTol) return j;
  }
  if (h_active >= -geom::kMembershipTol) return active;
  for (std::size_t j = chain.size(); j-- > active;) {
    if (chain.cells[j].contains(p)) return j;
  }
  return std::nullopt;
}

}  // namespace lipnav::mpc
