#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "lipnav/freespace.hpp"
#include "lipnav/mpc.hpp"
#include "lipnav/scenario.hpp"

namespace lipnav::sim {

/// Additive velocity kicks standing in for external pushes: each axis of
/// (xdot, ydot) is perturbed uniformly in [-velocity_kick, velocity_kick] at
/// random steps, with a minimum spacing between kicks.
struct DisturbanceModel {
  double velocity_kick = 0.1;       // m/s per axis
  double kick_probability = 0.15;   // per step, once the spacing allows
  long min_separation_steps = 7;    // about 2 s at T = 0.3 s
  std::uint64_t rng_seed = 0;
};

enum class RunVerdict { GoalReached, CollisionDetected, SolverFailure, Timeout };
const char* to_string(RunVerdict v);

struct StepRecord {
  long k = 0;
  double t = 0.0;
  lip::LipState state;  // x_k, before applying the input
  lip::LipInput input;  // u_k
  std::size_t cell = 0;
  double h_static_min = 0.0;
  std::optional<double> h_moving_min;
  int moving_active = 0;
  mpc::SolveStatus solver_status = mpc::SolveStatus::Solved;
  double solve_time = 0.0;
  int iterations = 0;
  double kkt_residual = 0.0;
  bool kicked = false;
  lip::Stance stance = lip::Stance::Left;
};

struct TrajectoryLog {
  std::vector<StepRecord> steps;
  RunVerdict verdict = RunVerdict::Timeout;
  lip::LipState final_state;
  std::size_t final_cell = 0;
  double path_length = 0.0;
  double min_h_static = std::numeric_limits<double>::infinity();
  std::optional<double> min_h_moving;
  long solver_failures = 0;
};

/// Steps the plant with the first MPC input, moves the obstacles, applies
/// optional velocity kicks, and advances the active cell; terminates at the
/// goal, on a failure verdict, or after max_steps. All failures are verdicts
/// in the log, never exceptions.
TrajectoryLog run_closed_loop(const Scenario& scenario,
                              const freespace::FreeSpaceChain& chain,
                              const mpc::MpcConfig& cfg,
                              const std::optional<DisturbanceModel>& disturbance = {});

struct CollisionViolation {
  long k = 0;
  double t = 0.0;
  Point2 position;
  std::string what;
  double depth = 0.0;  // clearance shortfall, meters
};

/// Independent safety check: the continuous COM path is sub-sampled at 20
/// points per step and tested against the raw (un-inflated) obstacles and
/// moving ellipses with the robot disc radius honored.
std::vector<CollisionViolation> collision_oracle(const TrajectoryLog& log,
                                                 const Scenario& scenario);

struct ObstaclePose {
  Point2 center;
  double orientation = 0.0;
};

/// Poses of all moving obstacles at time t + dt.
std::vector<ObstaclePose> advance_obstacles(const std::vector<mpc::MovingObstacle>& obstacles,
                                            double t, double dt);

/// Euclidean distance from a point to an ellipse boundary; zero inside.
double point_ellipse_distance(const Point2& p, const Point2& center, double a, double b,
                              double phi);

// Line-delimited log records (one JSON object per step plus a summary line).
std::string log_to_ndjson(const TrajectoryLog& log);
TrajectoryLog log_from_ndjson(const std::string& text);
void save_log(const TrajectoryLog& log, const std::filesystem::path& file);
TrajectoryLog load_log(const std::filesystem::path& file);

}  // namespace lipnav::sim
