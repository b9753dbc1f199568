#include "lipnav/sim.hpp"

#include <algorithm>
#include <cmath>

#include "lipnav/rng.hpp"

namespace lipnav::sim {

using lip::LipInput;
using lip::LipState;

const char* to_string(RunVerdict v) {
  switch (v) {
    case RunVerdict::GoalReached:
      return "goal_reached";
    case RunVerdict::CollisionDetected:
      return "collision_detected";
    case RunVerdict::SolverFailure:
      return "solver_failure";
    default:
      return "timeout";
  }
}

namespace {

std::optional<double> min_moving_barrier(const LipState& x,
                                         const std::vector<mpc::MovingObstacle>& obs,
                                         double t) {
  if (obs.empty()) return std::nullopt;
  double h = std::numeric_limits<double>::infinity();
  for (const mpc::MovingObstacle& o : obs) h = std::min(h, mpc::moving_barrier(x, o, t));
  return h;
}

}  // namespace

TrajectoryLog run_closed_loop(const Scenario& scenario,
                              const freespace::FreeSpaceChain& chain,
                              const mpc::MpcConfig& cfg,
                              const std::optional<DisturbanceModel>& disturbance) {
  TrajectoryLog log;
  const lip::LipParams& params = scenario.lip_params;
  const double step_t = params.step_duration;
  const std::vector<mpc::MovingObstacle> obstacles = scenario.inflated_obstacles();
  const lip::StanceSchedule schedule{scenario.initial_stance};
  const Point2 goal = chain.waypoints.back();

  LipState x = scenario.initial_state();
  if (!chain.cells.front().contains(lip::output(x)))
    throw geom::PreconditionViolated("run_closed_loop: initial output not in the first cell");

  std::size_t cell = 0;
  std::optional<mpc::MpcSolution> warm;
  std::optional<mpc::MpcSolution> pending;  // mid-step solution for the next step
  std::vector<LipInput> input_queue;        // shifted fallback sequence
  int infeasible_streak = 0;
  Rng kick_rng(disturbance ? disturbance->rng_seed : 0);
  long last_kick = std::numeric_limits<long>::min() / 2;

  auto track_barriers = [&](const LipState& s, std::size_t c, double t) {
    log.min_h_static = std::min(log.min_h_static, mpc::static_barriers(chain.cells[c], s).minCoeff());
    const auto hm = min_moving_barrier(s, obstacles, t);
    if (hm) log.min_h_moving = std::min(log.min_h_moving.value_or(*hm), *hm);
  };

  log.verdict = RunVerdict::Timeout;
  for (long k = 0; k < scenario.sim_options.max_steps; ++k) {
    const double t = static_cast<double>(k) * step_t;
    const lip::Stance stance = schedule.at(k);

    mpc::MpcSolution sol;
    if (pending) {
      sol = std::move(*pending);
      pending.reset();
    } else {
      sol = mpc::solve_mpc(cell, x, chain, obstacles, t, stance, params,
                           scenario.stance_bounds, cfg, warm ? &*warm : nullptr);
    }

    LipInput u;
    if (sol.status == mpc::SolveStatus::Solved) {
      input_queue = sol.inputs;
      u = input_queue.front();
      warm = mpc::shift_solution(sol);
      infeasible_streak = 0;
    } else if (sol.status == mpc::SolveStatus::MaxIter) {
      // Flagged best iterate: better than replaying a stale sequence, but it
      // still counts toward the failure streak.
      input_queue = sol.inputs;
      u = input_queue.front();
      warm = mpc::shift_solution(sol);
      ++infeasible_streak;
      ++log.solver_failures;
      if (infeasible_streak >= 3) {
        StepRecord rec{k, t, x, u, cell,
                       mpc::static_barriers(chain.cells[cell], x).minCoeff(),
                       min_moving_barrier(x, obstacles, t), sol.active_moving,
                       sol.status, sol.solve_time, sol.iterations, sol.kkt_residual,
                       false, stance};
        log.steps.push_back(rec);
        log.verdict = RunVerdict::SolverFailure;
        log.final_state = x;
        log.final_cell = cell;
        return log;
      }
    } else {
      ++infeasible_streak;
      ++log.solver_failures;
      if (!input_queue.empty()) {
        // Shifted previous sequence with the last input repeated.
        const LipInput last = input_queue.back();
        input_queue.erase(input_queue.begin());
        if (input_queue.empty()) input_queue.push_back(last);
        u = input_queue.front();
      } else {
        u = LipInput{};
      }
      if (infeasible_streak >= 3) {
        StepRecord rec{k, t, x, u, cell,
                       mpc::static_barriers(chain.cells[cell], x).minCoeff(),
                       min_moving_barrier(x, obstacles, t), sol.active_moving,
                       sol.status, sol.solve_time, sol.iterations, sol.kkt_residual,
                       false, stance};
        log.steps.push_back(rec);
        log.verdict = RunVerdict::SolverFailure;
        log.final_state = x;
        log.final_cell = cell;
        return log;
      }
    }

    StepRecord rec{k, t, x, u, cell,
                   mpc::static_barriers(chain.cells[cell], x).minCoeff(),
                   min_moving_barrier(x, obstacles, t), sol.active_moving,
                   sol.status, sol.solve_time, sol.iterations, sol.kkt_residual,
                   false, stance};
    track_barriers(x, cell, t);

    // Optional mid-step re-solve from the predicted end-of-step state.
    if (scenario.sim_options.midstep_resolve && sol.status == mpc::SolveStatus::Solved) {
      const double xi = scenario.sim_options.midstep_phase * step_t;
      const LipState mid = lip::propagate_continuous(x, u, xi, params);
      const Point2 foot(x.x + u.ux, x.y + u.uy);
      LipState predicted = lip::predict_step_end(mid, foot, xi, params);
      predicted.theta = lip::wrap_angle(predicted.theta + u.utheta);
      pending = mpc::solve_mpc(cell, predicted, chain, obstacles, t + step_t,
                               schedule.at(k + 1), params, scenario.stance_bounds, cfg,
                               warm ? &*warm : nullptr);
    }

    LipState x_next = lip::step(x, u, params);

    if (disturbance && k - last_kick >= disturbance->min_separation_steps &&
        kick_rng.bernoulli(disturbance->kick_probability)) {
      x_next.xdot += kick_rng.uniform(-disturbance->velocity_kick, disturbance->velocity_kick);
      x_next.ydot += kick_rng.uniform(-disturbance->velocity_kick, disturbance->velocity_kick);
      rec.kicked = true;
      last_kick = k;
      pending.reset();  // a mid-step solution predicted an undisturbed state
    }
    log.steps.push_back(rec);

    log.path_length += (lip::output(x_next) - lip::output(x)).norm();
    x = x_next;
    const double t_next = t + step_t;

    const auto advanced = mpc::sequencer_advance(cell, x, chain);
    if (!advanced) {
      log.verdict = RunVerdict::CollisionDetected;
      break;
    }
    cell = *advanced;
    track_barriers(x, cell, t_next);

    const auto hm = min_moving_barrier(x, obstacles, t_next);
    if (hm && *hm < -1e-6) {
      log.verdict = RunVerdict::CollisionDetected;
      break;
    }

    if ((lip::output(x) - goal).norm() <= cfg.goal_tolerance) {
      log.verdict = RunVerdict::GoalReached;
      break;
    }
  }

  log.final_state = x;
  log.final_cell = cell;
  return log;
}

// ---------------------------------------------------------------------------
// Independent collision oracle

double point_ellipse_distance(const Point2& p, const Point2& center, double a, double b,
                              double phi) {
  const double c = std::cos(phi), s = std::sin(phi);
  // Into the ellipse frame: the shape-matrix convention P = R' D R means the
  // frame transform is q = R d.
  const Point2 d = p - center;
  const Point2 q(c * d.x() - s * d.y(), s * d.x() + c * d.y());
  const double inside = q.x() * q.x() / (a * a) + q.y() * q.y() / (b * b);
  if (inside <= 1.0) return 0.0;

  // Solve (a qx / (t + a^2))^2 + (b qy / (t + b^2))^2 = 1 for t >= 0 by
  // bisection; the closest boundary point follows from the multiplier t.
  auto f = [&](double t) {
    const double fx = a * q.x() / (t + a * a);
    const double fy = b * q.y() / (t + b * b);
    return fx * fx + fy * fy - 1.0;
  };
  double lo = 0.0, hi = std::max(a, b) * (q.norm() + std::max(a, b));
  while (f(hi) > 0.0) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * (1.0 + hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  const double t = 0.5 * (lo + hi);
  const Point2 closest(a * a * q.x() / (t + a * a), b * b * q.y() / (t + b * b));
  return (q - closest).norm();
}

std::vector<CollisionViolation> collision_oracle(const TrajectoryLog& log,
                                                 const Scenario& scenario) {
  constexpr int kSubSamples = 20;
  std::vector<CollisionViolation> out;
  const double radius = scenario.inflation_radius;
  const lip::LipParams& params = scenario.lip_params;

  for (const StepRecord& rec : log.steps) {
    for (int s = 1; s <= kSubSamples; ++s) {
      const double tau = params.step_duration * s / kSubSamples;
      const LipState xs = lip::propagate_continuous(rec.state, rec.input, tau, params);
      const Point2 p = lip::output(xs);
      const double t_abs = rec.t + tau;

      for (std::size_t i = 0; i < scenario.raw_obstacles.size(); ++i) {
        const double d = scenario.raw_obstacles[i].distance(p);
        if (d < radius - 1e-9) {
          out.push_back({rec.k, t_abs, p, "static obstacle " + std::to_string(i),
                         radius - d});
        }
      }
      for (std::size_t i = 0; i < scenario.moving_obstacles.size(); ++i) {
        const MovingObstacleSpec& mo = scenario.moving_obstacles[i];
        const double d = point_ellipse_distance(p, mo.center.at(t_abs), mo.semi_axis_a,
                                                mo.semi_axis_b, mo.orientation.at(t_abs));
        if (d < radius - 1e-9) {
          out.push_back({rec.k, t_abs, p, "moving obstacle " + std::to_string(i),
                         radius - d});
        }
      }
    }
  }
  return out;
}

std::vector<ObstaclePose> advance_obstacles(const std::vector<mpc::MovingObstacle>& obstacles,
                                            double t, double dt) {
  std::vector<ObstaclePose> out;
  out.reserve(obstacles.size());
  for (const mpc::MovingObstacle& o : obstacles) {
    out.push_back({o.center_at(t + dt), o.orientation_at(t + dt)});
  }
  return out;
}

}  // namespace lipnav::sim
