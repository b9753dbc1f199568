#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "lipnav/geometry.hpp"
#include "lipnav/lip.hpp"
#include "lipnav/mpc.hpp"
#include "lipnav/rrt.hpp"

namespace lipnav {

/// Thrown on malformed scenario files; the message carries the file name and
/// the parse location or the offending field.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Moving obstacle as authored: physical semi-axes before inflation.
struct MovingObstacleSpec {
  double semi_axis_a = 0.5;  // meters, raw
  double semi_axis_b = 0.5;
  mpc::Path2 center;
  mpc::Path1 orientation = mpc::Path1::constant(0.0);
  double activation_radius = 5.0;

  /// Inflated copy for the controller. Both axes are scaled by
  /// 1 + radius / min(a, b), which contains the true swept footprint and
  /// reduces to axis + radius for circles.
  mpc::MovingObstacle inflated(double robot_radius) const;
};

struct SimOptions {
  long max_steps = 2000;
  bool midstep_resolve = false;  // re-solve at mid-step from a predicted state
  double midstep_phase = 0.5;    // fraction of the step at which to re-solve
};

struct Scenario {
  int format_version = 1;
  std::string name = "scenario";
  geom::Box workspace{0.0, 0.0, 10.0, 10.0};
  double inflation_radius = 0.5;
  std::vector<geom::ConvexPolygon> raw_obstacles;
  std::vector<MovingObstacleSpec> moving_obstacles;
  Point2 start{1.0, 1.0};
  Point2 goal{9.0, 9.0};
  bool has_initial_heading = false;
  double initial_heading = 0.0;  // defaults to the bearing start -> goal
  lip::Stance initial_stance = lip::Stance::Left;
  lip::LipParams lip_params = lip::LipParams::make(0.3, 0.91, 9.81);
  lip::StanceBounds stance_bounds;
  mpc::MpcConfig mpc_config;
  rrt::RrtParams rrt_params;
  SimOptions sim_options;

  geom::StaticMap static_map() const;
  lip::LipState initial_state() const;
  std::vector<mpc::MovingObstacle> inflated_obstacles() const;
};

Scenario scenario_from_json_text(const std::string& text, const std::string& origin);
std::string scenario_to_json_text(const Scenario& s);
Scenario load_scenario(const std::filesystem::path& file);
void save_scenario(const Scenario& s, const std::filesystem::path& file);

}  // namespace lipnav
