// Compares the serial reference sweep against the OpenMP worker pool on the
// same job list: verifies identical outcomes and reports the speedup.
#include <chrono>
#include <cstdio>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "lipnav/benchmark.hpp"

using namespace lipnav;

int main(int argc, char** argv) {
  bench::BenchmarkConfig cfg;
  cfg.families = {bench::ObstacleFamily::Rectangles, bench::ObstacleFamily::Polytopes};
  cfg.counts = {30};
  cfg.maps_per_cell = argc > 1 ? std::atoi(argv[1]) : 3;
  cfg.horizons = {3};
  cfg.master_seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 20240u;

  int threads = 2;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif

  const auto t0 = std::chrono::steady_clock::now();
  cfg.threads = 1;
  const bench::BenchmarkReport serial = bench::run_benchmark(cfg);
  const double serial_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const auto t1 = std::chrono::steady_clock::now();
  cfg.threads = threads;
  const bench::BenchmarkReport parallel = bench::run_benchmark(cfg);
  const double parallel_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();

  bool identical = serial.maps.size() == parallel.maps.size();
  for (std::size_t i = 0; identical && i < serial.maps.size(); ++i) {
    const auto& a = serial.maps[i];
    const auto& b = parallel.maps[i];
    identical = a.seed == b.seed && a.cells == b.cells && a.chain_valid == b.chain_valid &&
                a.runs.size() == b.runs.size();
    for (std::size_t r = 0; identical && r < a.runs.size(); ++r) {
      identical = a.runs[r].verdict == b.runs[r].verdict &&
                  a.runs[r].steps == b.runs[r].steps &&
                  a.runs[r].path_length == b.runs[r].path_length;
    }
  }

  std::printf("jobs: %zu maps\n", serial.maps.size());
  std::printf("serial reference: %.2f s\n", serial_s);
  std::printf("OpenMP pool (%d threads): %.2f s\n", threads, parallel_s);
  std::printf("speedup: %.2fx\n", serial_s / parallel_s);
  std::printf("outcomes identical: %s\n", identical ? "yes" : "NO");
  return identical ? 0 : 1;
}
