#pragma once

#include <Eigen/Dense>

#include "lipnav/geometry.hpp"

namespace lipnav::lip {

using Vec5 = Eigen::Matrix<double, 5, 1>;
using Mat5 = Eigen::Matrix<double, 5, 5>;
using Mat53 = Eigen::Matrix<double, 5, 3>;

struct LipParams {
  double step_duration = 0.3;  // seconds
  double com_height = 0.91;    // meters
  double gravity = 9.81;       // m/s^2
  double omega = 0.0;          // sqrt(gravity / com_height)

  static LipParams make(double step_duration_s, double com_height_m,
                        double gravity_mps2 = 9.81);
};

/// Pendulum state in the order [x, xdot, y, ydot, theta].
struct LipState {
  double x = 0.0, xdot = 0.0, y = 0.0, ydot = 0.0, theta = 0.0;

  Vec5 vec() const {
    Vec5 v;
    v << x, xdot, y, ydot, theta;
    return v;
  }
  static LipState from_vec(const Vec5& v) { return {v(0), v(1), v(2), v(3), v(4)}; }
};

/// Step input: stance-foot offset from the COM at the start of the step
/// (the foot sits at COM + (ux, uy)) and the heading change applied at the
/// exchange of support. The offset sign makes the COM accelerate away from
/// the foot, xddot = -(g/H) ux at step start.
struct LipInput {
  double ux = 0.0, uy = 0.0, utheta = 0.0;

  Eigen::Vector3d vec() const { return {ux, uy, utheta}; }
  static LipInput from_vec(const Eigen::Vector3d& v) { return {v(0), v(1), v(2)}; }
};

enum class Stance { Left, Right };

inline Stance opposite(Stance s) { return s == Stance::Left ? Stance::Right : Stance::Left; }
const char* to_string(Stance s);

struct ReachBox {
  double xc_min, xc_max, yc_min, yc_max;  // bounds in the heading frame, meters
};

struct StanceBounds {
  ReachBox left{-0.2, 0.5, -0.5, -0.2};
  ReachBox right{-0.2, 0.5, 0.2, 0.5};
  double heading_min = -15.0 * M_PI / 180.0;
  double heading_max = 15.0 * M_PI / 180.0;
  double travel_min = 0.0;  // COM travel distance per step, meters
  double travel_max = 0.2;

  const ReachBox& reach(Stance s) const { return s == Stance::Left ? left : right; }
};

/// The stance leg alternates every step.
struct StanceSchedule {
  Stance initial = Stance::Left;
  Stance at(long k) const { return (k % 2 == 0) ? initial : opposite(initial); }
};

struct StepMatrices {
  Mat5 A;
  Mat53 B;
};

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);
/// Shortest signed difference a - b.
double angle_diff(double a, double b);

/// Step-to-step matrices: A = blkdiag(Ahat, Ahat, 1) with
/// Ahat = [[1, sinh(wT)/w], [0, cosh(wT)]], B stacking
/// Bhat = [1 - cosh(wT), -w sinh(wT)]^T per axis plus 1 for the heading.
StepMatrices step_matrices(const LipParams& params);

/// Closed-form propagation for 0 <= t <= step_duration. The heading changes
/// only at the exchange of support, so theta picks up utheta at t = T.
LipState propagate_continuous(const LipState& x, const LipInput& u, double t,
                              const LipParams& params);

/// x_{k+1} = A x_k + B u_k with the heading wrapped to (-pi, pi].
LipState step(const LipState& x, const LipInput& u, const LipParams& params);

/// COM position (x, y).
Point2 output(const LipState& x);

/// Residuals of the per-step state/input constraint set; all entries are
/// nonnegative exactly when (x, u, x_next) is admissible. Order:
/// [reach x lo, reach x hi, reach y lo, reach y hi, heading lo, heading hi,
///  (travel lo when travel_min > 0), travel hi]. The travel bound is kept in
/// squared form; a zero lower bound is vacuous and dropped.
Eigen::VectorXd constraint_residuals(const LipState& x, const LipInput& u,
                                     const LipState& x_next, Stance stance,
                                     const StanceBounds& bounds);

/// Predicts the state at the end of the current step from mid-step feedback,
/// `elapsed` seconds in, with the stance foot fixed at `stance_foot`. The
/// implied constant offset is foot - COM(feedback); theta is held.
LipState predict_step_end(const LipState& feedback, const Point2& stance_foot,
                          double elapsed, const LipParams& params);

}  // namespace lipnav::lip
