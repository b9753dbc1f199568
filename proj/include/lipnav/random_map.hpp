#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "lipnav/geometry.hpp"
#include "lipnav/rrt.hpp"
#include "lipnav/scenario.hpp"

namespace lipnav::bench {

enum class ObstacleFamily { Rectangles, RotatedRectangles, Polytopes };
const char* to_string(ObstacleFamily f);
ObstacleFamily family_from_string(const std::string& s);

class GenerationFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MapGenParams {
  ObstacleFamily family = ObstacleFamily::Rectangles;
  int count = 30;
  geom::Box workspace{0.0, 0.0, 50.0, 50.0};
  double target_coverage = 0.24;  // raw-obstacle area fraction
  double coverage_band = 0.05;    // accepted deviation from the target
  double inflation_radius = 0.5;
  std::uint64_t seed = 1;
  int max_attempts = 20;
  rrt::RrtParams rrt;  // used for the connectability check
};

struct GeneratedMap {
  std::vector<geom::ConvexPolygon> raw_obstacles;  // pairwise disjoint
  geom::StaticMap map;                             // inflated
  Point2 start, goal;                              // fixed corner regions
  rrt::PathPlan plan;                              // from the connectability check
  std::uint64_t rrt_seed = 0;                      // seed that produced `plan`
  double coverage = 0.0;
  int attempts = 1;
};

/// Draws `count` disjoint convex obstacles whose total area hits the target
/// coverage, with start and goal kept free and RRT*-connectable; the map is
/// regenerated up to max_attempts times before GenerationFailed is thrown.
GeneratedMap generate_random_map(const MapGenParams& params);

/// Wraps a generated map into a full scenario with default walker
/// parameters.
Scenario random_scenario(const MapGenParams& params, const std::string& name);

}  // namespace lipnav::bench
