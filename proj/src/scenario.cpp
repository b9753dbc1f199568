#include "lipnav/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lipnav/sim.hpp"

namespace lipnav {

using nlohmann::json;

mpc::MovingObstacle MovingObstacleSpec::inflated(double robot_radius) const {
  mpc::MovingObstacle o;
  const double scale = 1.0 + robot_radius / std::min(semi_axis_a, semi_axis_b);
  o.semi_axis_a = semi_axis_a * scale;
  o.semi_axis_b = semi_axis_b * scale;
  o.center = center;
  o.orientation = orientation;
  o.activation_radius = activation_radius;
  return o;
}

geom::StaticMap Scenario::static_map() const {
  return geom::StaticMap::from_raw(workspace, raw_obstacles, inflation_radius);
}

lip::LipState Scenario::initial_state() const {
  lip::LipState x;
  x.x = start.x();
  x.y = start.y();
  const Point2 d = goal - start;
  x.theta = has_initial_heading ? lip::wrap_angle(initial_heading)
                                : std::atan2(d.y(), d.x());
  return x;
}

std::vector<mpc::MovingObstacle> Scenario::inflated_obstacles() const {
  std::vector<mpc::MovingObstacle> out;
  out.reserve(moving_obstacles.size());
  for (const MovingObstacleSpec& m : moving_obstacles) out.push_back(m.inflated(inflation_radius));
  return out;
}

// ---------------------------------------------------------------------------
// JSON encoding

namespace {

json point_json(const Point2& p) { return json::array({p.x(), p.y()}); }

Point2 point_from(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2)
    throw ScenarioError(what + ": expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

json vec5_json(const lip::Vec5& v) {
  return json::array({v(0), v(1), v(2), v(3), v(4)});
}

lip::Vec5 vec5_from(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 5)
    throw ScenarioError(what + ": expected five entries");
  lip::Vec5 v;
  for (int i = 0; i < 5; ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

json path2_json(const mpc::Path2& p) {
  json arr = json::array();
  for (const auto& k : p.knots()) arr.push_back({{"t_s", k.t}, {"pos_m", point_json(k.pos)}});
  return arr;
}

mpc::Path2 path2_from(const json& j, const std::string& what) {
  std::vector<mpc::Path2::Knot> knots;
  for (const auto& item : j)
    knots.push_back({item.at("t_s").get<double>(), point_from(item.at("pos_m"), what)});
  return mpc::Path2(std::move(knots));
}

json path1_json(const mpc::Path1& p) {
  json arr = json::array();
  for (const auto& k : p.knots()) arr.push_back({{"t_s", k.t}, {"angle_rad", k.value}});
  return arr;
}

mpc::Path1 path1_from(const json& j) {
  std::vector<mpc::Path1::Knot> knots;
  for (const auto& item : j)
    knots.push_back({item.at("t_s").get<double>(), item.at("angle_rad").get<double>()});
  return mpc::Path1(std::move(knots));
}

}  // namespace

std::string scenario_to_json_text(const Scenario& s) {
  json j;
  j["format_version"] = s.format_version;
  j["name"] = s.name;
  j["workspace"] = {{"xmin_m", s.workspace.xmin},
                    {"ymin_m", s.workspace.ymin},
                    {"xmax_m", s.workspace.xmax},
                    {"ymax_m", s.workspace.ymax}};
  j["inflation_radius_m"] = s.inflation_radius;
  j["start_m"] = point_json(s.start);
  j["goal_m"] = point_json(s.goal);
  if (s.has_initial_heading) j["initial_heading_rad"] = s.initial_heading;
  j["initial_stance"] = lip::to_string(s.initial_stance);

  json obstacles = json::array();
  for (const geom::ConvexPolygon& o : s.raw_obstacles) {
    json verts = json::array();
    for (const Point2& v : o.vertices()) verts.push_back(point_json(v));
    obstacles.push_back({{"vertices_m", verts}});
  }
  j["static_obstacles"] = obstacles;

  json movers = json::array();
  for (const MovingObstacleSpec& m : s.moving_obstacles) {
    movers.push_back({{"semi_axis_a_m", m.semi_axis_a},
                      {"semi_axis_b_m", m.semi_axis_b},
                      {"path", path2_json(m.center)},
                      {"orientation", path1_json(m.orientation)},
                      {"activation_radius_m", m.activation_radius}});
  }
  j["moving_obstacles"] = movers;

  j["lip"] = {{"step_duration_s", s.lip_params.step_duration},
              {"height_m", s.lip_params.com_height},
              {"gravity_mps2", s.lip_params.gravity}};

  const lip::StanceBounds& b = s.stance_bounds;
  j["stance_bounds"] = {{"xc_min_m", b.left.xc_min},
                        {"xc_max_m", b.left.xc_max},
                        {"left_yc_min_m", b.left.yc_min},
                        {"left_yc_max_m", b.left.yc_max},
                        {"right_yc_min_m", b.right.yc_min},
                        {"right_yc_max_m", b.right.yc_max},
                        {"heading_min_rad", b.heading_min},
                        {"heading_max_rad", b.heading_max},
                        {"travel_min_m", b.travel_min},
                        {"travel_max_m", b.travel_max}};

  const mpc::MpcConfig& c = s.mpc_config;
  j["mpc"] = {{"horizon", c.horizon},
              {"w_terminal", vec5_json(c.w_terminal)},
              {"w_running", vec5_json(c.w_running)},
              {"w_input", vec5_json(c.w_input)},
              {"gamma_static", c.cbf.gamma_static},
              {"gamma_moving", c.cbf.gamma_moving},
              {"kkt_tolerance", c.kkt_tolerance},
              {"max_sqp_iterations", c.max_sqp_iterations},
              {"goal_tolerance_m", c.goal_tolerance},
              {"cbf_margin_m", c.cbf_margin}};

  const rrt::RrtParams& r = s.rrt_params;
  j["rrt"] = {{"max_iterations", r.max_iterations},
              {"step_size_m", r.step_size},
              {"goal_bias", r.goal_bias},
              {"rewire_radius_m", r.rewire_radius},
              {"goal_tolerance_m", r.goal_tolerance},
              {"clearance_margin_m", r.clearance_margin},
              {"seed", r.rng_seed}};

  j["sim"] = {{"max_steps", s.sim_options.max_steps},
              {"midstep_resolve", s.sim_options.midstep_resolve},
              {"midstep_phase", s.sim_options.midstep_phase}};

  return j.dump(2) + "\n";
}

Scenario scenario_from_json_text(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(origin + ": " + e.what());
  }

  try {
    Scenario s;
    s.format_version = j.value("format_version", 1);
    if (s.format_version != 1)
      throw ScenarioError(origin + ": unsupported format_version");
    s.name = j.value("name", std::string("scenario"));

    const json& w = j.at("workspace");
    s.workspace = {w.at("xmin_m").get<double>(), w.at("ymin_m").get<double>(),
                   w.at("xmax_m").get<double>(), w.at("ymax_m").get<double>()};
    if (!(s.workspace.width() > 0.0) || !(s.workspace.height() > 0.0))
      throw ScenarioError(origin + ": workspace: empty box");

    s.inflation_radius = j.value("inflation_radius_m", 0.5);
    if (s.inflation_radius < 0.0)
      throw ScenarioError(origin + ": inflation_radius_m must be >= 0");
    s.start = point_from(j.at("start_m"), "start_m");
    s.goal = point_from(j.at("goal_m"), "goal_m");
    if (j.contains("initial_heading_rad")) {
      s.has_initial_heading = true;
      s.initial_heading = j["initial_heading_rad"].get<double>();
    }
    if (j.contains("initial_stance"))
      s.initial_stance = j["initial_stance"].get<std::string>() == "right"
                             ? lip::Stance::Right
                             : lip::Stance::Left;

    for (const auto& o : j.value("static_obstacles", json::array())) {
      std::vector<Point2> verts;
      for (const auto& v : o.at("vertices_m")) verts.push_back(point_from(v, "vertices_m"));
      s.raw_obstacles.push_back(geom::ConvexPolygon::from_points(std::move(verts)));
    }

    for (const auto& m : j.value("moving_obstacles", json::array())) {
      MovingObstacleSpec spec;
      spec.semi_axis_a = m.at("semi_axis_a_m").get<double>();
      spec.semi_axis_b = m.at("semi_axis_b_m").get<double>();
      if (!(spec.semi_axis_a > 0.0) || !(spec.semi_axis_b > 0.0))
        throw ScenarioError(origin + ": moving obstacle semi-axes must be positive");
      spec.center = path2_from(m.at("path"), "moving obstacle path");
      if (m.contains("orientation")) spec.orientation = path1_from(m["orientation"]);
      spec.activation_radius = m.value("activation_radius_m", 5.0);
      s.moving_obstacles.push_back(std::move(spec));
    }

    if (j.contains("lip")) {
      const json& l = j["lip"];
      s.lip_params = lip::LipParams::make(l.value("step_duration_s", 0.3),
                                          l.value("height_m", 0.91),
                                          l.value("gravity_mps2", 9.81));
    }

    if (j.contains("stance_bounds")) {
      const json& b = j["stance_bounds"];
      lip::StanceBounds sb;
      sb.left.xc_min = sb.right.xc_min = b.value("xc_min_m", sb.left.xc_min);
      sb.left.xc_max = sb.right.xc_max = b.value("xc_max_m", sb.left.xc_max);
      sb.left.yc_min = b.value("left_yc_min_m", sb.left.yc_min);
      sb.left.yc_max = b.value("left_yc_max_m", sb.left.yc_max);
      sb.right.yc_min = b.value("right_yc_min_m", sb.right.yc_min);
      sb.right.yc_max = b.value("right_yc_max_m", sb.right.yc_max);
      sb.heading_min = b.value("heading_min_rad", sb.heading_min);
      sb.heading_max = b.value("heading_max_rad", sb.heading_max);
      sb.travel_min = b.value("travel_min_m", sb.travel_min);
      sb.travel_max = b.value("travel_max_m", sb.travel_max);
      s.stance_bounds = sb;
    }

    if (j.contains("mpc")) {
      const json& c = j["mpc"];
      mpc::MpcConfig mc;
      mc.horizon = c.value("horizon", mc.horizon);
      if (mc.horizon < 1) throw ScenarioError(origin + ": mpc.horizon must be >= 1");
      if (c.contains("w_terminal")) mc.w_terminal = vec5_from(c["w_terminal"], "w_terminal");
      if (c.contains("w_running")) mc.w_running = vec5_from(c["w_running"], "w_running");
      if (c.contains("w_input")) mc.w_input = vec5_from(c["w_input"], "w_input");
      mc.cbf.gamma_static = c.value("gamma_static", mc.cbf.gamma_static);
      mc.cbf.gamma_moving = c.value("gamma_moving", mc.cbf.gamma_moving);
      if (mc.cbf.gamma_static <= 0.0 || mc.cbf.gamma_static > 1.0 ||
          mc.cbf.gamma_moving <= 0.0 || mc.cbf.gamma_moving > 1.0)
        throw ScenarioError(origin + ": gamma must lie in (0, 1]");
      mc.kkt_tolerance = c.value("kkt_tolerance", mc.kkt_tolerance);
      mc.max_sqp_iterations = c.value("max_sqp_iterations", mc.max_sqp_iterations);
      mc.goal_tolerance = c.value("goal_tolerance_m", mc.goal_tolerance);
      mc.cbf_margin = c.value("cbf_margin_m", mc.cbf_margin);
      s.mpc_config = mc;
    }

    if (j.contains("rrt")) {
      const json& r = j["rrt"];
      rrt::RrtParams rp;
      rp.max_iterations = r.value("max_iterations", rp.max_iterations);
      rp.step_size = r.value("step_size_m", rp.step_size);
      rp.goal_bias = r.value("goal_bias", rp.goal_bias);
      rp.rewire_radius = r.value("rewire_radius_m", rp.rewire_radius);
      rp.goal_tolerance = r.value("goal_tolerance_m", rp.goal_tolerance);
      rp.clearance_margin = r.value("clearance_margin_m", rp.clearance_margin);
      rp.rng_seed = r.value("seed", rp.rng_seed);
      if (rp.goal_bias < 0.0 || rp.goal_bias > 1.0 || rp.step_size <= 0.0 ||
          rp.rewire_radius < rp.step_size)
        throw ScenarioError(origin + ": invalid rrt parameters");
      s.rrt_params = rp;
    }

    if (j.contains("sim")) {
      const json& m = j["sim"];
      s.sim_options.max_steps = m.value("max_steps", s.sim_options.max_steps);
      s.sim_options.midstep_resolve = m.value("midstep_resolve", false);
      s.sim_options.midstep_phase = m.value("midstep_phase", 0.5);
    }

    return s;
  } catch (const json::exception& e) {
    throw ScenarioError(origin + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(origin + ": " + e.what());
  }
}

Scenario load_scenario(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ScenarioError(file.string() + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return scenario_from_json_text(ss.str(), file.string());
}

void save_scenario(const Scenario& s, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw ScenarioError(file.string() + ": cannot open for writing");
  out << scenario_to_json_text(s);
}

}  // namespace lipnav

// ---------------------------------------------------------------------------
// Trajectory log records

namespace lipnav::sim {

using nlohmann::json;

namespace {

json state_json(const lip::LipState& x) {
  return json::array({x.x, x.xdot, x.y, x.ydot, x.theta});
}

lip::LipState state_from(const json& j) {
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
          j[3].get<double>(), j[4].get<double>()};
}

mpc::SolveStatus status_from(const std::string& s) {
  if (s == "solved") return mpc::SolveStatus::Solved;
  if (s == "infeasible") return mpc::SolveStatus::Infeasible;
  return mpc::SolveStatus::MaxIter;
}

RunVerdict verdict_from(const std::string& s) {
  if (s == "goal_reached") return RunVerdict::GoalReached;
  if (s == "collision_detected") return RunVerdict::CollisionDetected;
  if (s == "solver_failure") return RunVerdict::SolverFailure;
  return RunVerdict::Timeout;
}

}  // namespace

std::string log_to_ndjson(const TrajectoryLog& log) {
  std::string out;
  for (const StepRecord& r : log.steps) {
    json j{{"type", "step"},
           {"k", r.k},
           {"t_s", r.t},
           {"state", state_json(r.state)},
           {"input", json::array({r.input.ux, r.input.uy, r.input.utheta})},
           {"cell", r.cell},
           {"h_static_min", r.h_static_min},
           {"moving_active", r.moving_active},
           {"status", mpc::to_string(r.solver_status)},
           {"solve_time_ms", r.solve_time * 1e3},
           {"iterations", r.iterations},
           {"kkt", r.kkt_residual},
           {"kicked", r.kicked},
           {"stance", lip::to_string(r.stance)}};
    if (r.h_moving_min) j["h_moving_min"] = *r.h_moving_min;
    out += j.dump() + "\n";
  }
  json summary{{"type", "summary"},
               {"verdict", to_string(log.verdict)},
               {"steps", log.steps.size()},
               {"final_state", state_json(log.final_state)},
               {"final_cell", log.final_cell},
               {"path_length_m", log.path_length},
               {"min_h_static", log.min_h_static},
               {"solver_failures", log.solver_failures}};
  if (log.min_h_moving) summary["min_h_moving"] = *log.min_h_moving;
  out += summary.dump() + "\n";
  return out;
}

TrajectoryLog log_from_ndjson(const std::string& text) {
  TrajectoryLog log;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    const std::string type = j.value("type", "");
    if (type == "step") {
      StepRecord r;
      r.k = j.at("k").get<long>();
      r.t = j.at("t_s").get<double>();
      r.state = state_from(j.at("state"));
      r.input = {j["input"][0].get<double>(), j["input"][1].get<double>(),
                 j["input"][2].get<double>()};
      r.cell = j.at("cell").get<std::size_t>();
      r.h_static_min = j.at("h_static_min").get<double>();
      if (j.contains("h_moving_min")) r.h_moving_min = j["h_moving_min"].get<double>();
      r.moving_active = j.value("moving_active", 0);
      r.solver_status = status_from(j.value("status", "solved"));
      r.solve_time = j.value("solve_time_ms", 0.0) * 1e-3;
      r.iterations = j.value("iterations", 0);
      r.kkt_residual = j.value("kkt", 0.0);
      r.kicked = j.value("kicked", false);
      r.stance = j.value("stance", "left") == std::string("right") ? lip::Stance::Right
                                                                   : lip::Stance::Left;
      log.steps.push_back(r);
    } else if (type == "summary") {
      log.verdict = verdict_from(j.value("verdict", "timeout"));
      log.final_state = state_from(j.at("final_state"));
      log.final_cell = j.value("final_cell", std::size_t{0});
      log.path_length = j.value("path_length_m", 0.0);
      log.min_h_static = j.value("min_h_static", 0.0);
      if (j.contains("min_h_moving")) log.min_h_moving = j["min_h_moving"].get<double>();
      log.solver_failures = j.value("solver_failures", 0L);
    }
  }
  return log;
}

void save_log(const TrajectoryLog& log, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw ScenarioError(file.string() + ": cannot open for writing");
  out << log_to_ndjson(log);
}

TrajectoryLog load_log(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ScenarioError(file.string() + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return log_from_ndjson(ss.str());
}

}  // namespace lipnav::sim
