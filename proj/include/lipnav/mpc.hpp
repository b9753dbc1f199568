#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "lipnav/freespace.hpp"
#include "lipnav/geometry.hpp"
#include "lipnav/lip.hpp"

namespace lipnav::mpc {

struct CbfParams {
  double gamma_static = 0.1;
  double gamma_moving = 0.2;
};

/// Piecewise-linear trajectory with constant extrapolation beyond the knots.
class Path2 {
 public:
  struct Knot {
    double t;
    Point2 pos;
  };

  Path2() = default;
  explicit Path2(std::vector<Knot> knots);
  static Path2 constant(const Point2& p) { return Path2({{0.0, p}}); }

  Point2 at(double t) const;
  /// Slope of the segment containing t (right-continuous at knots); zero
  /// beyond the last knot and before the first.
  Point2 velocity(double t) const;
  const std::vector<Knot>& knots() const { return knots_; }

 private:
  std::vector<Knot> knots_;
};

class Path1 {
 public:
  struct Knot {
    double t;
    double value;
  };

  Path1() = default;
  explicit Path1(std::vector<Knot> knots);
  static Path1 constant(double v) { return Path1({{0.0, v}}); }

  double at(double t) const;
  const std::vector<Knot>& knots() const { return knots_; }

 private:
  std::vector<Knot> knots_;
};

/// Elliptical moving obstacle. The semi-axes are already inflated to account
/// for the walker's footprint; the barrier is positive outside the inflated
/// ellipse, zero on it, negative inside.
struct MovingObstacle {
  double semi_axis_a = 1.0;  // meters, inflated
  double semi_axis_b = 1.0;
  Path2 center = Path2::constant({0.0, 0.0});
  Path1 orientation = Path1::constant(0.0);
  double activation_radius = 5.0;  // constraint added when closer than this

  Point2 center_at(double t) const { return center.at(t); }
  double orientation_at(double t) const { return orientation.at(t); }
};

/// P = R(phi)^T diag(1/a^2, 1/b^2) R(phi); symmetric positive definite.
Eigen::Matrix2d ellipse_shape_matrix(double a, double b, double phi);

/// h = (Cx - p)^T P (Cx - p) - 1 for the obstacle's pose at time t.
double moving_barrier(const lip::LipState& x, const MovingObstacle& obs, double t);

/// One barrier value per face: h_j = offset_j - normal_j . Cx.
Eigen::VectorXd static_barriers(const geom::Polytope& cell, const lip::LipState& x);

/// Discrete exponential CBF residual h_next - (1 - gamma) h_now; nonnegative
/// residuals keep the 0-superlevel set forward invariant.
double cbf_residual(double h_next, double h_now, double gamma);

/// MPC target: waypoint position, heading toward it, zero velocities.
struct TargetState {
  Point2 position = Point2::Zero();
  double heading = 0.0;
};

/// Radius below which the commanded heading correction tapers off
/// quadratically with distance; see build_target.
inline constexpr double kHeadingFreezeRadius = 0.4;

/// Heading is the angle of the vector from the COM to the waypoint,
/// expressed in the winding branch nearest the current heading; inside
/// kHeadingFreezeRadius the current heading is kept.
TargetState build_target(const lip::LipState& x, const Point2& next_waypoint);

/// Weighted errors in the reordered state [x, y, theta, xdot, ydot]; heading
/// error uses the shortest angle. Only the first three entries of w_input
/// act on the three-dimensional input.
double stage_cost(const lip::LipState& x, const lip::LipInput& u, const TargetState& target,
                  const lip::Vec5& w_state, const lip::Vec5& w_input);
double terminal_cost(const lip::LipState& x, const TargetState& target,
                     const lip::Vec5& w_terminal);

struct MpcConfig {
  int horizon = 3;
  lip::Vec5 w_terminal{(lip::Vec5() << 5, 5, 2, 10, 10).finished()};
  lip::Vec5 w_running{(lip::Vec5() << 0.5, 0.5, 2, 10, 10).finished()};
  lip::Vec5 w_input{(lip::Vec5() << 30, 30, 30, 30, 30).finished()};
  CbfParams cbf;
  double kkt_tolerance = 1e-6;
  int max_sqp_iterations = 50;
  double goal_tolerance = 0.05;  // meters
  /// Extra clearance enforced inside the static CBF constraints only; the
  /// mid-step sway of the pendulum is not certified by the step-to-step
  /// barriers, so the controller keeps this buffer from the cell faces.
  double cbf_margin = 0.04;
  /// Positioning mode: inside park_radius of the active waypoint the
  /// position weights are scaled by park_gain. The locomotion weights are
  /// tuned for cruising and cannot beat the minimum-step-width input cost at
  /// centimeter scales; without the boost the walker stalls a foot short of
  /// thin hand-over regions and of the final goal.
  double park_radius = 0.8;
  double park_gain = 40.0;
};

enum class SolveStatus { Solved, Infeasible, MaxIter };
const char* to_string(SolveStatus s);

struct MpcSolution {
  std::vector<lip::LipState> states;  // x_{k+1} .. x_{k+N}
  std::vector<lip::LipInput> inputs;  // u_k .. u_{k+N-1}
  SolveStatus status = SolveStatus::Infeasible;
  double kkt_residual = 0.0;
  double solve_time = 0.0;  // seconds
  int iterations = 0;
  int active_moving = 0;  // moving obstacles inside the activation radius
};

/// Moving obstacle as seen by one MPC solve: shape frozen at the current
/// orientation, centers extrapolated at constant velocity over the horizon.
struct ObstacleHorizon {
  Eigen::Matrix2d shape;
  std::vector<Point2> centers;  // entries for stages 0..N
};

/// Single-shooting transcription of one program of the MPC sequence over the
/// decision vector U = [u_k; ...; u_{k+N-1}]. States are eliminated through
/// the affine dynamics, so the cost is exactly quadratic and its
/// Gauss-Newton Hessian is constant; the reachability, travel and
/// moving-obstacle rows are the only nonlinear constraints.
class MpcProblem {
 public:
  MpcProblem(const geom::Polytope& cell, const TargetState& target,
             const lip::LipState& x_init, std::vector<ObstacleHorizon> obstacles,
             lip::Stance first_stance, const lip::StanceBounds& bounds,
             const lip::LipParams& params, const MpcConfig& cfg);

  int num_vars() const { return 3 * horizon_; }
  int num_constraints() const { return n_cons_; }

  double cost(const Eigen::VectorXd& u_stack) const;
  void cost_grad(const Eigen::VectorXd& u_stack, double& f, Eigen::VectorXd& grad) const;
  const Eigen::MatrixXd& cost_hessian() const { return hess_; }

  /// Residual vector g(U); the solution requires g >= 0 elementwise.
  void constraints(const Eigen::VectorXd& u_stack, Eigen::VectorXd& g) const;
  void constraints_jac(const Eigen::VectorXd& u_stack, Eigen::VectorXd& g,
                       Eigen::MatrixXd& jac) const;

  /// Adds -sum_i lambda_i * hess(g_i) for the nonlinear rows (reachability,
  /// travel, moving obstacles) to `hess`. Without these Lagrangian terms the
  /// SQP converges only linearly whenever such a constraint is active, which
  /// is the normal walking regime (the travel cap binds at every step).
  void add_constraint_curvature(const Eigen::VectorXd& u_stack,
                                const Eigen::VectorXd& lambda,
                                Eigen::MatrixXd& hess) const;

  std::vector<lip::LipState> states_from(const Eigen::VectorXd& u_stack) const;

 private:
  void eval_constraints(const Eigen::VectorXd& u_stack, Eigen::VectorXd& g,
                        Eigen::MatrixXd* jac_out) const;

  int horizon_;
  int n_cons_ = 0;
  lip::Vec5 x0_;
  TargetState target_;
  lip::Mat5 a_;
  lip::Mat53 b_;
  std::vector<Eigen::MatrixXd> jx_;  // d x_m / d U, 5 x 3N, stage 0..N
  lip::Vec5 w2_pos_, w2_vel_, w1_pos_, w1_vel_;  // state-order weight splits
  std::vector<lip::Stance> stances_;
  lip::StanceBounds bounds_;
  std::vector<geom::Halfspace> cell_rows_;
  std::vector<ObstacleHorizon> obstacles_;
  MpcConfig cfg_;
  Eigen::MatrixXd hess_;
};

struct SqpReport {
  SolveStatus status = SolveStatus::Infeasible;
  double kkt_residual = 0.0;
  int iterations = 0;
};

/// SQP with exact first derivatives, the constant Gauss-Newton cost Hessian,
/// an l1 merit line search and a dual active-set QP subproblem.
SqpReport solve_sqp(const MpcProblem& prob, Eigen::VectorXd& u_stack,
                    const MpcConfig& cfg);

/// One-stage shift of a solution: drops the consumed input and repeats the
/// last one. The closed loop passes this as the next warm start so stage
/// stances stay aligned.
MpcSolution shift_solution(const MpcSolution& sol);

/// Solves the cell_index-th program of the sequence from state x_init at
/// time t_now. Moving obstacles beyond their activation radius contribute no
/// constraints; active ones are extrapolated at constant velocity with the
/// orientation held. The warm start is used as given; shift it first when
/// time has advanced a step (see shift_solution).
MpcSolution solve_mpc(std::size_t cell_index, const lip::LipState& x_init,
                      const freespace::FreeSpaceChain& chain,
                      const std::vector<MovingObstacle>& obstacles, double t_now,
                      lip::Stance current_stance, const lip::LipParams& params,
                      const lip::StanceBounds& bounds, const MpcConfig& cfg,
                      const MpcSolution* warm_start = nullptr);

/// Largest cell index >= active whose cell contains the COM, with one
/// qualifier: the hand-over also requires that the next braked step cannot
/// leave the candidate cell, so a fast grazing touch does not steal the
/// switch (for a state at rest this is plain membership). Never decreases;
/// empty when the COM is outside every remaining cell, which the caller
/// logs as a safety failure.
std::optional<std::size_t> sequencer_advance(std::size_t active, const lip::LipState& x,
                                             const freespace::FreeSpaceChain& chain);

}  // namespace lipnav::mpc
