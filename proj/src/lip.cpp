#include "lipnav/lip.hpp"

#include <cmath>
#include <stdexcept>

namespace lipnav::lip {

LipParams LipParams::make(double step_duration_s, double com_height_m,
                          double gravity_mps2) {
  if (!(step_duration_s > 0.0) || !(com_height_m > 0.0) || !(gravity_mps2 > 0.0))
    throw std::invalid_argument("LipParams: T, H, g must be positive");
  LipParams p;
  p.step_duration = step_duration_s;
  p.com_height = com_height_m;
  p.gravity = gravity_mps2;
  p.omega = std::sqrt(gravity_mps2 / com_height_m);
  return p;
}

const char* to_string(Stance s) { return s == Stance::Left ? "left" : "right"; }

double wrap_angle(double a) {
  double r = std::fmod(a + M_PI, 2.0 * M_PI);
  if (r <= 0.0) r += 2.0 * M_PI;
  return r - M_PI;
}

double angle_diff(double a, double b) { return wrap_angle(a - b); }

StepMatrices step_matrices(const LipParams& params) {
  const double w = params.omega;
  const double wt = w * params.step_duration;
  const double ch = std::cosh(wt);
  const double sh = std::sinh(wt);

  Eigen::Matrix2d ahat;
  ahat << 1.0, sh / w, 0.0, ch;
  Eigen::Vector2d bhat(1.0 - ch, -w * sh);

  StepMatrices m;
  m.A.setZero();
  m.A.block<2, 2>(0, 0) = ahat;
  m.A.block<2, 2>(2, 2) = ahat;
  m.A(4, 4) = 1.0;
  m.B.setZero();
  m.B.block<2, 1>(0, 0) = bhat;
  m.B.block<2, 1>(2, 1) = bhat;
  m.B(4, 2) = 1.0;
  return m;
}

LipState propagate_continuous(const LipState& x, const LipInput& u, double t,
                              const LipParams& params) {
  const double w = params.omega;
  const double ch = std::cosh(w * t);
  const double sh = std::sinh(w * t);

  LipState out;
  out.x = x.x + sh / w * x.xdot + (1.0 - ch) * u.ux;
  out.xdot = ch * x.xdot - w * sh * u.ux;
  out.y = x.y + sh / w * x.ydot + (1.0 - ch) * u.uy;
  out.ydot = ch * x.ydot - w * sh * u.uy;
  out.theta = (t >= params.step_duration - 1e-12) ? wrap_angle(x.theta + u.utheta)
                                                  : x.theta;
  return out;
}

LipState step(const LipState& x, const LipInput& u, const LipParams& params) {
  return propagate_continuous(x, u, params.step_duration, params);
}

Point2 output(const LipState& x) { return {x.x, x.y}; }

Eigen::VectorXd constraint_residuals(const LipState& x, const LipInput& u,
                                     const LipState& x_next, Stance stance,
                                     const StanceBounds& bounds) {
  const ReachBox& box = bounds.reach(stance);
  const double phi = x.theta + u.utheta;
  const double c = std::cos(phi), s = std::sin(phi);
  // R(phi)^T [ux, uy]: foot offset expressed in the post-step heading frame.
  const double vx = c * u.ux + s * u.uy;
  const double vy = -s * u.ux + c * u.uy;

  const double dx = x_next.x - x.x;
  const double dy = x_next.y - x.y;
  const double d2 = dx * dx + dy * dy;

  const bool with_lower = bounds.travel_min > 0.0;
  Eigen::VectorXd r(with_lower ? 8 : 7);
  r(0) = vx - box.xc_min;
  r(1) = box.xc_max - vx;
  r(2) = vy - box.yc_min;
  r(3) = box.yc_max - vy;
  r(4) = u.utheta - bounds.heading_min;
  r(5) = bounds.heading_max - u.utheta;
  int k = 6;
  if (with_lower) r(k++) = d2 - bounds.travel_min * bounds.travel_min;
  r(k) = bounds.travel_max * bounds.travel_max - d2;
  return r;
}

LipState predict_step_end(const LipState& feedback, const Point2& stance_foot,
                          double elapsed, const LipParams& params) {
  if (elapsed < 0.0 || elapsed >= params.step_duration + 1e-12)
    throw std::invalid_argument("predict_step_end: elapsed must be in [0, T)");
  LipInput implied;
  implied.ux = stance_foot.x() - feedback.x;
  implied.uy = stance_foot.y() - feedback.y;
  implied.utheta = 0.0;
  const double remaining = params.step_duration - elapsed;
  if (remaining <= 1e-12) return feedback;
  LipState out = propagate_continuous(feedback, implied, remaining, params);
  out.theta = feedback.theta;  // heading is held while the step is in flight
  return out;
}

}  // namespace lipnav::lip
