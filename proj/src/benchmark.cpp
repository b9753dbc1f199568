#include "lipnav/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "lipnav/rng.hpp"

namespace lipnav::bench {

namespace {

double ms_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
      .count();
}

struct Job {
  ObstacleFamily family;
  int count;
  int map_index;
};

// Uniform sample inside a convex polygon by rejection from its bounding box.
Point2 sample_in_polygon(const geom::ConvexPolygon& poly, Rng& rng) {
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const Point2& v : poly.vertices()) {
    xmin = std::min(xmin, v.x());
    xmax = std::max(xmax, v.x());
    ymin = std::min(ymin, v.y());
    ymax = std::max(ymax, v.y());
  }
  for (int t = 0; t < 1000; ++t) {
    const Point2 p(rng.uniform(xmin, xmax), rng.uniform(ymin, ymax));
    if (poly.contains(p, 0.0)) return p;
  }
  return poly.centroid();
}

MapResult run_one_map(const BenchmarkConfig& cfg, const Job& job) {
  MapResult res;
  res.family = job.family;
  res.count = job.count;
  res.map_index = job.map_index;
  res.seed = Rng::mix(cfg.master_seed,
                      (static_cast<std::uint64_t>(job.family) << 40) ^
                          (static_cast<std::uint64_t>(job.count) << 20) ^
                          static_cast<std::uint64_t>(job.map_index));

  MapGenParams gen_params;
  gen_params.family = job.family;
  gen_params.count = job.count;
  gen_params.workspace = cfg.workspace;
  gen_params.target_coverage = cfg.target_coverage;
  gen_params.inflation_radius = cfg.inflation_radius;
  gen_params.rrt = cfg.rrt;
  gen_params.seed = res.seed;

  try {
    const auto t_rrt = std::chrono::steady_clock::now();
    const GeneratedMap gen = generate_random_map(gen_params);
    res.rrt_ms = ms_since(t_rrt);  // includes generation retries with their plans
    res.generated = true;
    res.coverage = gen.coverage;

    const auto t_decomp = std::chrono::steady_clock::now();
    const freespace::FreeSpaceChain chain =
        freespace::poly_fs_gen(gen.start, gen.plan, gen.goal, gen.map);
    res.decomp_ms = ms_since(t_decomp);
    res.cells = static_cast<int>(chain.size());
    res.chain_valid = chain_oracle_ok(chain, gen.start, gen.map,
                                      cfg.chain_oracle_samples, res.seed ^ 0xabcdu);

    Scenario scenario;
    scenario.name = "bench";
    scenario.workspace = cfg.workspace;
    scenario.inflation_radius = cfg.inflation_radius;
    scenario.raw_obstacles = gen.raw_obstacles;
    scenario.start = gen.start;
    scenario.goal = gen.goal;

    for (int horizon : cfg.horizons) {
      mpc::MpcConfig mc = scenario.mpc_config;
      mc.horizon = horizon;
      const sim::TrajectoryLog log = sim::run_closed_loop(scenario, chain, mc);

      RunResult run;
      run.horizon = horizon;
      run.verdict = log.verdict;
      run.goal_reached = log.verdict == sim::RunVerdict::GoalReached;
      run.path_length = log.path_length;
      run.steps = static_cast<long>(log.steps.size());
      run.min_h_static = log.min_h_static;
      run.min_h_moving = log.min_h_moving;
      run.solver_failures = log.solver_failures;
      for (const sim::StepRecord& rec : log.steps) {
        run.total_solve_time += rec.solve_time;
      }
      run.n_solves = static_cast<long>(log.steps.size());
      if (cfg.with_collision_oracle) {
        run.oracle_violations =
            static_cast<long>(sim::collision_oracle(log, scenario).size());
      }
      res.runs.push_back(run);
    }
  } catch (const std::exception& e) {
    res.error = e.what();
  }
  return res;
}

}  // namespace

bool chain_oracle_ok(const freespace::FreeSpaceChain& chain, const Point2& start,
                     const geom::StaticMap& map, int samples, std::uint64_t seed) {
  try {
    freespace::validate_chain(chain, start);
  } catch (const freespace::DecompositionFailed&) {
    return false;
  }
  // Consecutive cells must overlap by an inscribed ball, not just touch.
  for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
    if (!geom::chebyshev_center(chain.cells[i], chain.cells[i + 1])) return false;
  }
  if (map.obstacles.empty()) return true;
  Rng rng(seed);
  for (int s = 0; s < samples; ++s) {
    const std::size_t o = static_cast<std::size_t>(rng.uniform_int(
        0, static_cast<int>(map.obstacles.size()) - 1));
    const Point2 p = sample_in_polygon(map.obstacles[o], rng);
    for (const geom::Polytope& cell : chain.cells) {
      // Strictly interior obstacle samples must be rejected by every cell.
      if (cell.contains(p, -1e-7)) return false;
    }
  }
  return true;
}

BenchmarkReport run_benchmark(const BenchmarkConfig& cfg) {
  BenchmarkReport report;
  report.config = cfg;

  std::vector<Job> jobs;
  for (ObstacleFamily f : cfg.families) {
    for (int c : cfg.counts) {
      for (int m = 0; m < cfg.maps_per_cell; ++m) jobs.push_back({f, c, m});
    }
  }
  report.maps.resize(jobs.size());

  if (cfg.threads > 1) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) num_threads(cfg.threads)
#endif
    for (long i = 0; i < static_cast<long>(jobs.size()); ++i) {
      report.maps[static_cast<std::size_t>(i)] =
          run_one_map(cfg, jobs[static_cast<std::size_t>(i)]);
      if (!cfg.quiet) {
#ifdef _OPENMP
#pragma omp critical
#endif
        std::fprintf(stderr, "[bench] job %ld/%zu done\n", i + 1, jobs.size());
      }
    }
  } else {
    // Serial reference path; produces the same report content as the pool.
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      report.maps[i] = run_one_map(cfg, jobs[i]);
      if (!cfg.quiet)
        std::fprintf(stderr, "[bench] job %zu/%zu done\n", i + 1, jobs.size());
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Aggregation

double BenchmarkReport::feasibility(int horizon) const {
  long ok = 0, total = 0;
  for (const MapResult& m : maps) {
    for (const RunResult& r : m.runs) {
      if (r.horizon != horizon) continue;
      ++total;
      if (r.goal_reached) ++ok;
    }
  }
  return total > 0 ? static_cast<double>(ok) / static_cast<double>(total) : 0.0;
}

double BenchmarkReport::feasibility(int horizon, int count) const {
  long ok = 0, total = 0;
  for (const MapResult& m : maps) {
    if (m.count != count) continue;
    for (const RunResult& r : m.runs) {
      if (r.horizon != horizon) continue;
      ++total;
      if (r.goal_reached) ++ok;
    }
  }
  return total > 0 ? static_cast<double>(ok) / static_cast<double>(total) : 0.0;
}

double BenchmarkReport::mean_solve_ms(int horizon, int count) const {
  double time = 0.0;
  long solves = 0;
  for (const MapResult& m : maps) {
    if (m.count != count) continue;
    for (const RunResult& r : m.runs) {
      if (r.horizon != horizon) continue;
      time += r.total_solve_time;
      solves += r.n_solves;
    }
  }
  return solves > 0 ? 1e3 * time / static_cast<double>(solves) : 0.0;
}

double BenchmarkReport::mean_decomp_ms(int count) const {
  double total = 0.0;
  long n = 0;
  for (const MapResult& m : maps) {
    if (m.count != count || !m.generated) continue;
    total += m.decomp_ms;
    ++n;
  }
  return n > 0 ? total / static_cast<double>(n) : 0.0;
}

long BenchmarkReport::total_oracle_violations() const {
  long v = 0;
  for (const MapResult& m : maps) {
    for (const RunResult& r : m.runs) v += r.oracle_violations;
  }
  return v;
}

bool BenchmarkReport::all_chains_valid() const {
  for (const MapResult& m : maps) {
    if (!m.generated || !m.chain_valid) return false;
  }
  return true;
}

std::string BenchmarkReport::to_csv() const {
  std::ostringstream out;
  out << "family,obstacle_count,maps,mean_decomp_ms,mean_cells";
  for (int h : config.horizons)
    out << ",feasibility_n" << h << ",mean_solve_ms_n" << h << ",mean_path_m_n" << h;
  out << "\n";
  for (ObstacleFamily f : config.families) {
    for (int c : config.counts) {
      long n_maps = 0;
      double decomp = 0.0, cells = 0.0;
      std::map<int, double> path_sum;
      std::map<int, long> path_n;
      std::map<int, long> ok_n, tot_n;
      std::map<int, double> time_sum;
      std::map<int, long> solve_n;
      for (const MapResult& m : maps) {
        if (m.family != f || m.count != c) continue;
        ++n_maps;
        decomp += m.decomp_ms;
        cells += m.cells;
        for (const RunResult& r : m.runs) {
          ++tot_n[r.horizon];
          if (r.goal_reached) ++ok_n[r.horizon];
          time_sum[r.horizon] += r.total_solve_time;
          solve_n[r.horizon] += r.n_solves;
          path_sum[r.horizon] += r.path_length;
          ++path_n[r.horizon];
        }
      }
      if (n_maps == 0) continue;
      out << to_string(f) << "," << c << "," << n_maps << ","
          << decomp / static_cast<double>(n_maps) << ","
          << cells / static_cast<double>(n_maps);
      for (int h : config.horizons) {
        const double feas =
            tot_n[h] > 0 ? static_cast<double>(ok_n[h]) / static_cast<double>(tot_n[h]) : 0.0;
        const double ms =
            solve_n[h] > 0 ? 1e3 * time_sum[h] / static_cast<double>(solve_n[h]) : 0.0;
        const double path =
            path_n[h] > 0 ? path_sum[h] / static_cast<double>(path_n[h]) : 0.0;
        out << "," << feas << "," << ms << "," << path;
      }
      out << "\n";
    }
  }
  return out.str();
}

std::string BenchmarkReport::details_csv() const {
  std::ostringstream out;
  out << "family,obstacle_count,map_index,seed,generated,coverage,cells,chain_valid,"
         "rrt_ms,decomp_ms,horizon,verdict,steps,path_m,mean_solve_ms,min_h_static,"
         "min_h_moving,oracle_violations,solver_failures,error\n";
  for (const MapResult& m : maps) {
    for (const RunResult& r : m.runs) {
      out << to_string(m.family) << "," << m.count << "," << m.map_index << "," << m.seed
          << "," << (m.generated ? 1 : 0) << "," << m.coverage << "," << m.cells << ","
          << (m.chain_valid ? 1 : 0) << "," << m.rrt_ms << "," << m.decomp_ms << ","
          << r.horizon << "," << sim::to_string(r.verdict) << "," << r.steps << ","
          << r.path_length << "," << r.mean_solve_ms() << "," << r.min_h_static << ","
          << (r.min_h_moving ? std::to_string(*r.min_h_moving) : std::string("")) << ","
          << r.oracle_violations << "," << r.solver_failures << "," << m.error << "\n";
    }
    if (m.runs.empty()) {
      out << to_string(m.family) << "," << m.count << "," << m.map_index << "," << m.seed
          << "," << (m.generated ? 1 : 0) << "," << m.coverage << "," << m.cells << ","
          << (m.chain_valid ? 1 : 0) << "," << m.rrt_ms << "," << m.decomp_ms
          << ",,,,,,,,," << m.error << "\n";
    }
  }
  return out.str();
}

std::string BenchmarkReport::to_table() const {
  std::ostringstream out;
  out << "obstacles      decomp(ms)";
  for (int h : config.horizons) out << "   N=" << h << "(ms)  feas(N=" << h << ")";
  out << "\n";
  for (int c : config.counts) {
    char line[256];
    std::snprintf(line, sizeof line, "%-14d %-10.1f", c, mean_decomp_ms(c));
    out << line;
    for (int h : config.horizons) {
      std::snprintf(line, sizeof line, "   %-8.3f %-10.3f", mean_solve_ms(h, c),
                    feasibility(h, c));
      out << line;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace lipnav::bench
