#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lipnav/geometry.hpp"

namespace lipnav::rrt {

struct RrtParams {
  int max_iterations = 20000;
  double step_size = 1.0;        // meters
  double goal_bias = 0.1;        // probability of sampling the goal
  double rewire_radius = 3.0;    // fixed-radius rewiring, >= step_size
  double goal_tolerance = 0.5;   // nodes this close may try to connect the goal
  double clearance_margin = 0.15;  // extra obstacle clearance on every edge
  std::uint64_t rng_seed = 1;
};

struct PathPlan {
  std::vector<Point2> points;  // first = start, last = goal
  double total_length = 0.0;
};

/// Optional per-run diagnostics.
struct PlanTrace {
  /// Best cost-to-come of the goal after each iteration (infinity until the
  /// goal is first connected); non-increasing once finite.
  std::vector<double> goal_cost_history;
  int first_solution_iteration = -1;
};

/// RRT* with fixed-radius rewiring and a greedy shortcutting pass.
/// Deterministic for a fixed seed. Returns nullopt when the goal was not
/// connected within max_iterations. Throws PreconditionViolated when start
/// or goal is not in free space.
std::optional<PathPlan> rrt_star_plan(const geom::StaticMap& map, const Point2& start,
                                      const Point2& goal, const RrtParams& params,
                                      PlanTrace* trace = nullptr);

}  // namespace lipnav::rrt
