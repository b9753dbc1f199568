// Command-line front end: plan, simulate, bench, gen, render.
#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "lipnav/benchmark.hpp"
#include "lipnav/random_map.hpp"
#include "lipnav/rng.hpp"
#include "lipnav/rrt.hpp"
#include "lipnav/scenario.hpp"
#include "lipnav/sim.hpp"
#include "lipnav/svg_render.hpp"

#include <json.hpp>

namespace {

using namespace lipnav;

constexpr int kExitOk = 0;
constexpr int kExitRunFailure = 1;
constexpr int kExitInputError = 2;

struct PlannedScenario {
  Scenario scenario;
  geom::StaticMap map;
  rrt::PathPlan plan;
  freespace::FreeSpaceChain chain;
};

PlannedScenario plan_scenario(const std::string& file,
                              std::optional<std::uint64_t> seed_override) {
  PlannedScenario out{load_scenario(file), {}, {}, {}};
  if (seed_override) out.scenario.rrt_params.rng_seed = *seed_override;
  out.map = out.scenario.static_map();
  const auto plan = rrt::rrt_star_plan(out.map, out.scenario.start, out.scenario.goal,
                                       out.scenario.rrt_params);
  if (!plan) throw std::runtime_error("no collision-free path found by RRT*");
  out.plan = *plan;
  out.chain = freespace::poly_fs_gen(out.scenario.start, out.plan, out.scenario.goal,
                                     out.map);
  return out;
}

nlohmann::json chain_to_json(const freespace::FreeSpaceChain& chain) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& cell : chain.cells) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : cell.rows()) {
      rows.push_back({{"normal", {r.normal.x(), r.normal.y()}}, {"offset", r.offset}});
    }
    cells.push_back({{"rows", rows}});
  }
  nlohmann::json waypoints = nlohmann::json::array();
  for (const auto& w : chain.waypoints) waypoints.push_back({w.x(), w.y()});
  return {{"cells", cells}, {"waypoints", waypoints}};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error(path + ": cannot open for writing");
  f << text;
}

std::vector<bench::ObstacleFamily> parse_families(const std::string& csv) {
  std::vector<bench::ObstacleFamily> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(bench::family_from_string(item));
  }
  if (out.empty()) throw std::invalid_argument("no obstacle families given");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Polytopic free-space decomposition and sequential CBF-MPC planner "
               "for a 3D linear inverted pendulum walker"};
  app.require_subcommand(1);

  std::string scenario_file, out_file, render_file, log_file, details_file;
  std::string format = "csv";
  std::optional<std::uint64_t> seed;
  std::optional<int> horizon;

  // plan
  auto* plan_cmd = app.add_subcommand("plan", "RRT* seed path and polytope chain");
  plan_cmd->add_option("--scenario", scenario_file, "scenario file")->required();
  plan_cmd->add_option("--out", out_file, "write the chain as JSON");
  plan_cmd->add_option("--render", render_file, "write an SVG figure");
  plan_cmd->add_option("--seed", seed, "override the RRT seed");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "closed-loop run on a scenario");
  sim_cmd->add_option("--scenario", scenario_file, "scenario file")->required();
  sim_cmd->add_option("--out", log_file, "write the trajectory log (NDJSON)");
  sim_cmd->add_option("--render", render_file, "write an SVG figure");
  sim_cmd->add_option("--horizon", horizon, "override the MPC horizon");
  sim_cmd->add_option("--seed", seed, "override the RRT seed");
  bool with_kicks = false;
  std::uint64_t kick_seed = 1;
  sim_cmd->add_flag("--kicks", with_kicks, "apply random velocity kicks");
  sim_cmd->add_option("--kick-seed", kick_seed, "disturbance seed");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "randomized benchmark sweep");
  std::string families_csv = "rectangles,rotated_rectangles,polytopes";
  std::vector<int> counts{30, 40, 50, 60};
  std::vector<int> horizons{2, 3, 4};
  int maps_per_cell = 10;
  int threads = 1;
  std::uint64_t master_seed = 3;
  bench_cmd->add_option("--families", families_csv, "comma-separated obstacle families");
  bench_cmd->add_option("--counts", counts, "obstacle counts")->delimiter(',');
  bench_cmd->add_option("--horizons", horizons, "MPC horizons")->delimiter(',');
  bench_cmd->add_option("--maps", maps_per_cell, "maps per (family, count) cell");
  bench_cmd->add_option("--threads", threads, "worker threads (1 = serial reference)");
  bench_cmd->add_option("--seed", master_seed, "master seed");
  bench_cmd->add_option("--out", out_file, "report file (default stdout)");
  bench_cmd->add_option("--details", details_file, "per-run details CSV");
  bench_cmd->add_option("--format", format, "report format: csv|json")
      ->check(CLI::IsMember({"csv", "json"}));

  // gen
  auto* gen_cmd = app.add_subcommand("gen", "generate a random scenario file");
  std::string family_str = "rectangles";
  int count = 30;
  double coverage = 0.24;
  std::uint64_t gen_seed = 1;
  gen_cmd->add_option("--family", family_str, "obstacle family");
  gen_cmd->add_option("--count", count, "obstacle count");
  gen_cmd->add_option("--coverage", coverage, "target coverage fraction");
  gen_cmd->add_option("--seed", gen_seed, "generator seed");
  gen_cmd->add_option("--out", out_file, "output scenario file")->required();

  // render
  auto* render_cmd = app.add_subcommand("render", "render a recorded log to SVG");
  render_cmd->add_option("--scenario", scenario_file, "scenario file")->required();
  render_cmd->add_option("--log", log_file, "trajectory log (NDJSON)")->required();
  render_cmd->add_option("--out", out_file, "output SVG")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*plan_cmd) {
      const PlannedScenario p = plan_scenario(scenario_file, seed);
      std::printf("plan: %zu seed points, %.2f m; chain of %zu cells\n",
                  p.plan.points.size(), p.plan.total_length, p.chain.size());
      if (!out_file.empty()) write_text(out_file, chain_to_json(p.chain).dump(2) + "\n");
      if (!render_file.empty()) {
        svg::RenderInputs in;
        in.scenario = &p.scenario;
        in.plan = &p.plan;
        in.chain = &p.chain;
        svg::render_svg_file(in, render_file);
      }
      return kExitOk;
    }

    if (*sim_cmd) {
      PlannedScenario p = plan_scenario(scenario_file, seed);
      if (horizon) p.scenario.mpc_config.horizon = *horizon;
      std::optional<sim::DisturbanceModel> kicks;
      if (with_kicks) {
        kicks = sim::DisturbanceModel{};
        kicks->rng_seed = kick_seed;
      }
      const sim::TrajectoryLog log =
          sim::run_closed_loop(p.scenario, p.chain, p.scenario.mpc_config, kicks);
      const auto violations = sim::collision_oracle(log, p.scenario);
      std::printf("verdict: %s after %zu steps, path %.2f m, min h_static %.4f",
                  sim::to_string(log.verdict), log.steps.size(), log.path_length,
                  log.min_h_static);
      if (log.min_h_moving) std::printf(", min h_moving %.4f", *log.min_h_moving);
      std::printf(", oracle violations %zu\n", violations.size());
      if (!log_file.empty()) sim::save_log(log, log_file);
      if (!render_file.empty()) {
        svg::RenderInputs in;
        in.scenario = &p.scenario;
        in.plan = &p.plan;
        in.chain = &p.chain;
        in.log = &log;
        svg::render_svg_file(in, render_file);
      }
      return log.verdict == sim::RunVerdict::GoalReached && violations.empty()
                 ? kExitOk
                 : kExitRunFailure;
    }

    if (*bench_cmd) {
      bench::BenchmarkConfig cfg;
      cfg.families = parse_families(families_csv);
      cfg.counts = counts;
      cfg.horizons = horizons;
      cfg.maps_per_cell = maps_per_cell;
      cfg.threads = threads;
      cfg.master_seed = master_seed;
      cfg.quiet = false;
      const bench::BenchmarkReport report = bench::run_benchmark(cfg);

      std::string text;
      if (format == "json") {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& m : report.maps) {
          nlohmann::json runs = nlohmann::json::array();
          for (const auto& r : m.runs) {
            runs.push_back({{"horizon", r.horizon},
                            {"verdict", sim::to_string(r.verdict)},
                            {"steps", r.steps},
                            {"path_m", r.path_length},
                            {"mean_solve_ms", r.mean_solve_ms()},
                            {"oracle_violations", r.oracle_violations}});
          }
          rows.push_back({{"family", bench::to_string(m.family)},
                          {"count", m.count},
                          {"map", m.map_index},
                          {"decomp_ms", m.decomp_ms},
                          {"cells", m.cells},
                          {"chain_valid", m.chain_valid},
                          {"runs", runs}});
        }
        text = rows.dump(2) + "\n";
      } else {
        text = report.to_csv();
      }
      if (out_file.empty()) {
        std::fputs(text.c_str(), stdout);
      } else {
        write_text(out_file, text);
      }
      if (!details_file.empty()) write_text(details_file, report.details_csv());
      std::fputs(report.to_table().c_str(), stderr);

      bool all_ok = report.all_chains_valid();
      for (const auto& m : report.maps) {
        for (const auto& r : m.runs) all_ok = all_ok && r.goal_reached;
      }
      return all_ok ? kExitOk : kExitRunFailure;
    }

    if (*gen_cmd) {
      bench::MapGenParams params;
      params.family = bench::family_from_string(family_str);
      params.count = count;
      params.target_coverage = coverage;
      params.seed = gen_seed;
      const Scenario s = bench::random_scenario(params, "random_" + family_str);
      save_scenario(s, out_file);
      std::printf("wrote %s: %d obstacles, coverage %.3f\n", out_file.c_str(), count,
                  coverage);
      return kExitOk;
    }

    if (*render_cmd) {
      const PlannedScenario p = plan_scenario(scenario_file, std::nullopt);
      const sim::TrajectoryLog log = sim::load_log(log_file);
      svg::RenderInputs in;
      in.scenario = &p.scenario;
      in.plan = &p.plan;
      in.chain = &p.chain;
      in.log = &log;
      svg::render_svg_file(in, out_file);
      std::printf("wrote %s\n", out_file.c_str());
      return kExitOk;
    }
  } catch (const ScenarioError& e) {
    std::fprintf(stderr, "scenario error: %s\n", e.what());
    return kExitInputError;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kExitInputError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRunFailure;
  }
  return kExitOk;
}
