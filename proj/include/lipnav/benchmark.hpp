#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lipnav/random_map.hpp"
#include "lipnav/sim.hpp"

namespace lipnav::bench {

struct BenchmarkConfig {
  std::vector<ObstacleFamily> families{ObstacleFamily::Rectangles,
                                       ObstacleFamily::RotatedRectangles,
                                       ObstacleFamily::Polytopes};
  std::vector<int> counts{30, 40, 50, 60};
  int maps_per_cell = 10;
  std::vector<int> horizons{2, 3, 4};
  std::uint64_t master_seed = 3;
  geom::Box workspace{0.0, 0.0, 50.0, 50.0};
  double target_coverage = 0.24;
  double inflation_radius = 0.5;
  rrt::RrtParams rrt;   // seed-path settings for every map
  int threads = 1;      // > 1 runs map jobs under OpenMP
  bool quiet = true;
  bool with_collision_oracle = true;
  int chain_oracle_samples = 10000;  // obstacle rejection samples per map
};

struct RunResult {
  int horizon = 0;
  sim::RunVerdict verdict = sim::RunVerdict::Timeout;
  bool goal_reached = false;
  double path_length = 0.0;
  long steps = 0;
  long n_solves = 0;
  double total_solve_time = 0.0;  // seconds
  double min_h_static = 0.0;
  std::optional<double> min_h_moving;
  long oracle_violations = 0;
  long solver_failures = 0;

  double mean_solve_ms() const {
    return n_solves > 0 ? 1e3 * total_solve_time / static_cast<double>(n_solves) : 0.0;
  }
};

struct MapResult {
  ObstacleFamily family = ObstacleFamily::Rectangles;
  int count = 0;
  int map_index = 0;
  std::uint64_t seed = 0;
  bool generated = false;
  std::string error;
  double coverage = 0.0;
  double rrt_ms = 0.0;
  double decomp_ms = 0.0;  // the polytope-chain construction only
  bool chain_valid = false;
  int cells = 0;
  std::vector<RunResult> runs;  // one per horizon
};

struct BenchmarkReport {
  BenchmarkConfig config;
  std::vector<MapResult> maps;

  double feasibility(int horizon) const;                   // fraction GoalReached
  double feasibility(int horizon, int count) const;
  double mean_solve_ms(int horizon, int count) const;      // pooled across families
  double mean_decomp_ms(int count) const;
  long total_oracle_violations() const;
  bool all_chains_valid() const;

  std::string to_csv() const;    // one aggregate row per (family, count)
  std::string details_csv() const;  // one row per (map, horizon)
  std::string to_table() const;  // human-readable summary
};

/// Runs the full sweep: generate each map, decompose it (timed), validate the
/// chain against the obstacle-sampling oracle, then run the closed loop once
/// per horizon. Individual map failures are recorded, never propagated. With
/// threads > 1 the independent map jobs run in an OpenMP pool; results are
/// keyed by job index, so the report content is identical to a serial run
/// except for wall-clock timings.
BenchmarkReport run_benchmark(const BenchmarkConfig& cfg);

/// Obstacle-rejection oracle for one chain: samples points inside every
/// inflated obstacle and checks that no cell contains any of them, on top of
/// the structural chain invariants. Returns false instead of throwing.
bool chain_oracle_ok(const freespace::FreeSpaceChain& chain, const Point2& start,
                     const geom::StaticMap& map, int samples, std::uint64_t seed);

}  // namespace lipnav::bench
