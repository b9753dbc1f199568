#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lipnav/rrt.hpp"
#include "lipnav/scenario.hpp"
#include "lipnav/sim.hpp"

using namespace lipnav;
using sim::RunVerdict;
using sim::TrajectoryLog;

namespace {

#ifndef LIPNAV_SCENARIO_DIR
#define LIPNAV_SCENARIO_DIR "scenarios"
#endif

Scenario load_bundled(const std::string& name) {
  return load_scenario(std::string(LIPNAV_SCENARIO_DIR) + "/" + name);
}

freespace::FreeSpaceChain plan_and_decompose(const Scenario& s) {
  const geom::StaticMap map = s.static_map();
  const auto plan = rrt::rrt_star_plan(map, s.start, s.goal, s.rrt_params);
  REQUIRE(plan.has_value());
  return freespace::poly_fs_gen(s.start, *plan, s.goal, map);
}

}  // namespace

TEST_CASE("advance_obstacles evaluates poses along paths") {
  std::vector<mpc::MovingObstacle> obs(2);
  obs[0].center = mpc::Path2::constant({3.0, 4.0});
  obs[1].center = mpc::Path2({{0.0, {0.0, 0.0}}, {10.0, {3.0, 0.0}}});  // 0.3 m/s

  const auto at0 = sim::advance_obstacles(obs, 0.0, 0.0);
  CHECK(at0[0].center == Point2(3.0, 4.0));
  CHECK(at0[1].center == Point2(0.0, 0.0));

  // One step of T = 0.3 s advances the mover by 0.09 m.
  const auto at1 = sim::advance_obstacles(obs, 0.0, 0.3);
  CHECK(at1[0].center == Point2(3.0, 4.0));
  CHECK(at1[1].center.x() == doctest::Approx(0.09).epsilon(1e-12));

  // Piecewise-linear path is continuous across a knot.
  mpc::Path2 bent({{0.0, {0.0, 0.0}}, {5.0, {1.0, 0.0}}, {10.0, {1.0, 2.0}}});
  CHECK((bent.at(5.0 - 1e-9) - bent.at(5.0 + 1e-9)).norm() <= 1e-8);
  CHECK(bent.velocity(4.9).x() == doctest::Approx(0.2));
  CHECK(bent.velocity(5.1).y() == doctest::Approx(0.4));
}

TEST_CASE("point-ellipse distance") {
  // Circle of radius 2 at origin.
  CHECK(sim::point_ellipse_distance({5, 0}, {0, 0}, 2, 2, 0) == doctest::Approx(3.0));
  CHECK(sim::point_ellipse_distance({1, 0}, {0, 0}, 2, 2, 0) == 0.0);
  // Axis-aligned ellipse 3 x 1.
  CHECK(sim::point_ellipse_distance({5, 0}, {0, 0}, 3, 1, 0) == doctest::Approx(2.0));
  CHECK(sim::point_ellipse_distance({0, 4}, {0, 0}, 3, 1, 0) == doctest::Approx(3.0));
  // Rotations preserve distances measured along the rotated axis.
  const double d1 = sim::point_ellipse_distance({0, 5}, {0, 0}, 3, 1, M_PI / 2);
  CHECK(d1 == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("empty map run reaches the goal with a clean oracle") {
  Scenario s = load_bundled("empty_map.json");
  s.goal = Point2(-15.0, -20.0);  // 5 m ahead of the start
  const auto chain = plan_and_decompose(s);
  REQUIRE(chain.size() == 1);

  const TrajectoryLog log = sim::run_closed_loop(s, chain, s.mpc_config);
  CHECK(log.verdict == RunVerdict::GoalReached);
  CHECK(log.min_h_static >= -1e-6);
  CHECK(sim::collision_oracle(log, s).empty());
  // Active cell index never decreases.
  std::size_t prev = 0;
  for (const auto& rec : log.steps) {
    CHECK(rec.cell >= prev);
    prev = rec.cell;
  }
}

TEST_CASE("deterministic reruns produce identical logs") {
  Scenario s = load_bundled("empty_map.json");
  s.goal = Point2(-14.0, -16.0);
  const auto chain = plan_and_decompose(s);

  sim::DisturbanceModel kicks;
  kicks.rng_seed = 99;
  const TrajectoryLog a = sim::run_closed_loop(s, chain, s.mpc_config, kicks);
  const TrajectoryLog b = sim::run_closed_loop(s, chain, s.mpc_config, kicks);
  REQUIRE(a.steps.size() == b.steps.size());
  CHECK(a.verdict == b.verdict);
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    CHECK(a.steps[i].state.vec() == b.steps[i].state.vec());
    CHECK(a.steps[i].input.vec() == b.steps[i].input.vec());
    CHECK(a.steps[i].kicked == b.steps[i].kicked);
  }
}

TEST_CASE("hand-crafted log through an obstacle trips the oracle") {
  Scenario s;
  s.workspace = {0, 0, 10, 10};
  s.inflation_radius = 0.5;
  s.raw_obstacles.push_back(
      geom::ConvexPolygon::from_points({{4, 4}, {6, 4}, {6, 6}, {4, 6}}));
  s.start = Point2(1, 5);
  s.goal = Point2(9, 5);

  TrajectoryLog log;
  lip::LipState x;
  x.x = 1.0;
  x.y = 5.0;
  x.xdot = 2.0 / 3.0 / 0.3 * 0.2;  // irrelevant; positions drive the oracle
  for (int k = 0; k < 40; ++k) {
    sim::StepRecord rec;
    rec.k = k;
    rec.t = 0.3 * k;
    rec.state = x;
    rec.input = {0.0, 0.0, 0.0};
    log.steps.push_back(rec);
    x.x += 0.2;  // straight through the obstacle
  }
  const auto violations = sim::collision_oracle(log, s);
  CHECK_FALSE(violations.empty());
}

TEST_CASE("mid-step resolve mode matches the default loop on a nominal run") {
  Scenario s = load_bundled("empty_map.json");
  s.goal = Point2(-15.0, -18.0);
  const auto chain = plan_and_decompose(s);

  const TrajectoryLog plain = sim::run_closed_loop(s, chain, s.mpc_config);
  s.sim_options.midstep_resolve = true;
  const TrajectoryLog mid = sim::run_closed_loop(s, chain, s.mpc_config);
  REQUIRE(plain.steps.size() == mid.steps.size());
  CHECK(plain.verdict == mid.verdict);
  for (std::size_t i = 0; i < plain.steps.size(); ++i) {
    CHECK((plain.steps[i].state.vec() - mid.steps[i].state.vec()).lpNorm<Eigen::Infinity>() <=
          1e-9);
  }
}

TEST_CASE("log round-trips through the line-delimited format") {
  Scenario s = load_bundled("empty_map.json");
  s.goal = Point2(-16.0, -20.0);
  const auto chain = plan_and_decompose(s);
  const TrajectoryLog log = sim::run_closed_loop(s, chain, s.mpc_config);

  const std::string text = sim::log_to_ndjson(log);
  const TrajectoryLog back = sim::log_from_ndjson(text);
  REQUIRE(back.steps.size() == log.steps.size());
  CHECK(back.verdict == log.verdict);
  CHECK(back.path_length == doctest::Approx(log.path_length));
  for (std::size_t i = 0; i < log.steps.size(); ++i) {
    CHECK(back.steps[i].state.vec() == log.steps[i].state.vec());
    CHECK(back.steps[i].cell == log.steps[i].cell);
    CHECK(back.steps[i].h_static_min == log.steps[i].h_static_min);
  }
}

TEST_CASE("moving obstacle course: goal reached, barrier nonnegative, activation by distance") {
  const Scenario s = load_bundled("moving_obstacle_course.json");
  const auto chain = plan_and_decompose(s);
  const TrajectoryLog log = sim::run_closed_loop(s, chain, s.mpc_config);

  REQUIRE(log.verdict == RunVerdict::GoalReached);
  REQUIRE(log.min_h_moving.has_value());
  CHECK(*log.min_h_moving >= 0.0);
  CHECK(log.min_h_static >= -1e-6);
  CHECK(sim::collision_oracle(log, s).empty());

  // The moving-obstacle constraint is present exactly when the obstacle is
  // within its activation radius (up to the sampling instant).
  const auto obstacles = s.inflated_obstacles();
  bool saw_active = false, saw_inactive = false;
  for (const auto& rec : log.steps) {
    const double d = (obstacles[0].center_at(rec.t) - lip::output(rec.state)).norm();
    if (std::abs(d - obstacles[0].activation_radius) < 0.05) continue;  // boundary race
    const bool active = rec.moving_active > 0;
    CHECK(active == (d < obstacles[0].activation_radius));
    (active ? saw_active : saw_inactive) = true;
  }
  CHECK(saw_active);
  CHECK(saw_inactive);
}

TEST_CASE("velocity kicks: disturbed runs still reach the goal (smoke)") {
  const Scenario s = load_bundled("moving_obstacle_course.json");
  const auto chain = plan_and_decompose(s);
  int ok = 0;
  for (std::uint64_t trial = 1; trial <= 3; ++trial) {
    sim::DisturbanceModel kicks;
    kicks.rng_seed = 1000 + trial;
    const TrajectoryLog log = sim::run_closed_loop(s, chain, s.mpc_config, kicks);
    if (log.verdict == RunVerdict::GoalReached) ++ok;
    bool any_kick = false;
    for (const auto& rec : log.steps) any_kick = any_kick || rec.kicked;
    CHECK(any_kick);
  }
  CHECK(ok >= 2);
}
