#include "lipnav/random_map.hpp"

#include <algorithm>
#include <cmath>

#include "lipnav/rng.hpp"

namespace lipnav::bench {

const char* to_string(ObstacleFamily f) {
  switch (f) {
    case ObstacleFamily::Rectangles:
      return "rectangles";
    case ObstacleFamily::RotatedRectangles:
      return "rotated_rectangles";
    default:
      return "polytopes";
  }
}

ObstacleFamily family_from_string(const std::string& s) {
  if (s == "rectangles" || s == "rect") return ObstacleFamily::Rectangles;
  if (s == "rotated_rectangles" || s == "rotated" || s == "rot")
    return ObstacleFamily::RotatedRectangles;
  if (s == "polytopes" || s == "poly") return ObstacleFamily::Polytopes;
  throw std::invalid_argument("unknown obstacle family: " + s);
}

namespace {

using geom::ConvexPolygon;

ConvexPolygon make_rectangle(const Point2& c, double w, double h, double angle) {
  const double cs = std::cos(angle), sn = std::sin(angle);
  auto corner = [&](double sx, double sy) {
    const double x = sx * w / 2.0, y = sy * h / 2.0;
    return Point2(c.x() + cs * x - sn * y, c.y() + sn * x + cs * y);
  };
  return ConvexPolygon::from_points({corner(-1, -1), corner(1, -1), corner(1, 1), corner(-1, 1)});
}

// Random convex polygon with 5..8 hull vertices, scaled to the target area.
ConvexPolygon make_polytope_obstacle(Rng& rng, const Point2& c, double area) {
  for (int tries = 0; tries < 50; ++tries) {
    const int m = rng.uniform_int(6, 10);
    std::vector<double> angles(static_cast<std::size_t>(m));
    for (double& a : angles) a = rng.uniform(0.0, 2.0 * M_PI);
    std::sort(angles.begin(), angles.end());
    const double r0 = std::sqrt(area / M_PI);
    std::vector<Point2> pts;
    for (double a : angles) {
      const double r = r0 * rng.uniform(0.55, 1.25);
      pts.emplace_back(c.x() + r * std::cos(a), c.y() + r * std::sin(a));
    }
    ConvexPolygon hull = ConvexPolygon::convex_hull(pts);
    if (hull.size() < 5 || hull.size() > 8) continue;
    // Scale about the centroid to match the requested area exactly.
    const double scale = std::sqrt(area / hull.area());
    const Point2 g = hull.centroid();
    std::vector<Point2> scaled;
    for (const Point2& v : hull.vertices()) scaled.push_back(g + scale * (v - g));
    return ConvexPolygon::from_points(std::move(scaled));
  }
  throw GenerationFailed("could not draw a 5-8 vertex convex obstacle");
}

bool inside_workspace(const ConvexPolygon& poly, const geom::Box& ws) {
  for (const Point2& v : poly.vertices()) {
    if (!ws.contains(v, -1e-6)) return false;
  }
  return true;
}

}  // namespace

GeneratedMap generate_random_map(const MapGenParams& params) {
  if (params.count < 0) throw std::invalid_argument("obstacle count must be >= 0");
  if (params.target_coverage >= 0.6)
    throw std::invalid_argument("target coverage must be below 0.6");

  const geom::Box& ws = params.workspace;
  const Point2 start(ws.xmin + 0.04 * ws.width(), ws.ymin + 0.04 * ws.height());
  const Point2 goal(ws.xmax - 0.04 * ws.width(), ws.ymax - 0.04 * ws.height());
  const double keepout = params.inflation_radius + 0.6;  // keep the corners usable

  for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
    Rng rng(Rng::mix(params.seed, static_cast<std::uint64_t>(attempt)));

    // Per-obstacle target areas, normalized to the requested coverage and
    // placed largest first to keep rejection sampling tractable.
    const double target_area = params.target_coverage * ws.area();
    std::vector<double> areas(static_cast<std::size_t>(params.count));
    double sum = 0.0;
    for (double& a : areas) {
      a = rng.uniform(0.5, 1.5);
      sum += a;
    }
    for (double& a : areas) a *= params.count > 0 ? target_area / sum : 0.0;
    std::sort(areas.rbegin(), areas.rend());

    // Stratified placement: a shuffled jittered grid spreads the large
    // obstacles before rejection sampling fills the rest; plain sequential
    // sampling jams well below 40% coverage for rotated shapes.
    const int grid = static_cast<int>(std::ceil(std::sqrt(std::max(1, params.count))));
    std::vector<std::pair<double, double>> anchors;
    for (int gy = 0; gy < grid; ++gy) {
      for (int gx = 0; gx < grid; ++gx) {
        anchors.emplace_back(ws.xmin + (gx + 0.5) * ws.width() / grid,
                             ws.ymin + (gy + 0.5) * ws.height() / grid);
      }
    }
    for (std::size_t i = anchors.size(); i > 1; --i) {
      std::swap(anchors[i - 1],
                anchors[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
    }

    std::vector<ConvexPolygon> placed;
    bool attempt_failed = false;
    for (std::size_t oi = 0; oi < areas.size(); ++oi) {
      const double area = areas[oi];
      const auto& anchor = anchors[oi % anchors.size()];
      const double cell_half = 0.5 * ws.width() / grid;
      bool ok = false;
      for (int t = 0; t < 2500 && !ok; ++t) {
        // First half of the tries stays near the obstacle's grid anchor.
        const bool local = t < 1250;
        auto draw_center = [&](double hx, double hy) {
          const double lo_x = std::max(ws.xmin + hx, local ? anchor.first - cell_half : ws.xmin + hx);
          const double hi_x = std::min(ws.xmax - hx, local ? anchor.first + cell_half : ws.xmax - hx);
          const double lo_y = std::max(ws.ymin + hy, local ? anchor.second - cell_half : ws.ymin + hy);
          const double hi_y = std::min(ws.ymax - hy, local ? anchor.second + cell_half : ws.ymax - hy);
          return Point2(rng.uniform(lo_x, std::max(lo_x, hi_x)),
                        rng.uniform(lo_y, std::max(lo_y, hi_y)));
        };
        ConvexPolygon cand = [&] {
          switch (params.family) {
            case ObstacleFamily::Rectangles: {
              const double aspect = rng.uniform(0.35, 2.8);
              const double w = std::sqrt(area * aspect);
              const double h = area / w;
              return make_rectangle(draw_center(w / 2, h / 2), w, h, 0.0);
            }
            case ObstacleFamily::RotatedRectangles: {
              const double aspect = rng.uniform(0.35, 2.8);
              const double w = std::sqrt(area * aspect);
              const double h = area / w;
              const double ang = rng.uniform(0.0, M_PI / 2.0);
              const double hx = (w * std::cos(ang) + h * std::sin(ang)) / 2.0;
              const double hy = (w * std::sin(ang) + h * std::cos(ang)) / 2.0;
              return make_rectangle(draw_center(hx, hy), w, h, ang);
            }
            default: {
              const double pad = 1.3 * std::sqrt(area / M_PI);
              return make_polytope_obstacle(rng, draw_center(pad, pad), area);
            }
          }
        }();

        if (!inside_workspace(cand, ws)) continue;
        if (cand.distance(start) < keepout || cand.distance(goal) < keepout) continue;
        bool overlap = false;
        for (const ConvexPolygon& other : placed) {
          if (geom::polygons_overlap(cand, other)) {
            overlap = true;
            break;
          }
        }
        if (overlap) continue;
        placed.push_back(std::move(cand));
        ok = true;
      }
      if (!ok) {
        attempt_failed = true;
        break;
      }
    }
    if (attempt_failed) continue;

    double coverage = 0.0;
    for (const ConvexPolygon& p : placed) coverage += p.area();
    coverage /= ws.area();
    if (params.count > 0 &&
        std::abs(coverage - params.target_coverage) > params.coverage_band)
      continue;

    geom::StaticMap map = geom::StaticMap::from_raw(ws, placed, params.inflation_radius);
    if (!map.in_free_space(start) || !map.in_free_space(goal)) continue;

    rrt::RrtParams rp = params.rrt;
    rp.rng_seed = Rng::mix(params.seed, 0x9000u + static_cast<std::uint64_t>(attempt));
    const auto plan = rrt::rrt_star_plan(map, start, goal, rp);
    if (!plan) continue;

    GeneratedMap out;
    out.raw_obstacles = std::move(placed);
    out.map = std::move(map);
    out.start = start;
    out.goal = goal;
    out.plan = *plan;
    out.rrt_seed = rp.rng_seed;
    out.coverage = coverage;
    out.attempts = attempt + 1;
    return out;
  }
  throw GenerationFailed("map generation failed after " +
                         std::to_string(params.max_attempts) + " attempts");
}

Scenario random_scenario(const MapGenParams& params, const std::string& name) {
  const GeneratedMap gen = generate_random_map(params);
  Scenario s;
  s.name = name;
  s.workspace = params.workspace;
  s.inflation_radius = params.inflation_radius;
  s.raw_obstacles = gen.raw_obstacles;
  s.start = gen.start;
  s.goal = gen.goal;
  s.rrt_params = params.rrt;
  s.rrt_params.rng_seed = gen.rrt_seed;
  return s;
}

}  // namespace lipnav::bench
