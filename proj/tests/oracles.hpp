// Independent test oracles: brute-force and numerical references that share
// no code path with the implementations they check.
#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "lipnav/geometry.hpp"
#include "lipnav/lip.hpp"
#include "lipnav/rng.hpp"

namespace oracles {

using lipnav::Point2;
using lipnav::Rng;

// ---------------------------------------------------------------------------
// RK4 integration of the pendulum ODE xdd = (g/H)(x - foot_x) with the foot
// fixed at COM(0) + (ux, uy); the reference for the closed-form propagation.
inline lipnav::lip::LipState rk4_propagate(const lipnav::lip::LipState& x0,
                                           const lipnav::lip::LipInput& u, double t_end,
                                           const lipnav::lip::LipParams& p,
                                           double dt = 1e-4) {
  const double foot_x = x0.x + u.ux;
  const double foot_y = x0.y + u.uy;
  const double k = p.gravity / p.com_height;

  double s[4] = {x0.x, x0.xdot, x0.y, x0.ydot};
  auto deriv = [&](const double* in, double* out) {
    out[0] = in[1];
    out[1] = k * (in[0] - foot_x);
    out[2] = in[3];
    out[3] = k * (in[2] - foot_y);
  };

  double t = 0.0;
  while (t < t_end - 1e-15) {
    const double h = std::min(dt, t_end - t);
    double k1[4], k2[4], k3[4], k4[4], tmp[4];
    deriv(s, k1);
    for (int i = 0; i < 4; ++i) tmp[i] = s[i] + 0.5 * h * k1[i];
    deriv(tmp, k2);
    for (int i = 0; i < 4; ++i) tmp[i] = s[i] + 0.5 * h * k2[i];
    deriv(tmp, k3);
    for (int i = 0; i < 4; ++i) tmp[i] = s[i] + h * k3[i];
    deriv(tmp, k4);
    for (int i = 0; i < 4; ++i) s[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    t += h;
  }

  lipnav::lip::LipState out;
  out.x = s[0];
  out.xdot = s[1];
  out.y = s[2];
  out.ydot = s[3];
  out.theta = t_end >= p.step_duration - 1e-12
                  ? lipnav::lip::wrap_angle(x0.theta + u.utheta)
                  : x0.theta;
  return out;
}

// ---------------------------------------------------------------------------
// Exhaustive vertex-enumeration LP oracle for  max c.x  s.t.  A x <= b  in
// two variables: intersect every constraint pair, keep feasible vertices,
// return the best objective.
inline std::optional<double> lp_vertex_oracle(const Eigen::MatrixXd& a,
                                              const Eigen::VectorXd& b,
                                              const Eigen::Vector2d& c) {
  const int m = static_cast<int>(b.size());
  double best = -std::numeric_limits<double>::infinity();
  bool feasible = false;
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      Eigen::Matrix2d mm;
      mm.row(0) = a.row(i);
      mm.row(1) = a.row(j);
      if (std::abs(mm.determinant()) < 1e-12) continue;
      const Eigen::Vector2d x = mm.inverse() * Eigen::Vector2d(b(i), b(j));
      if (((a * x - b).array() <= 1e-8).all()) {
        feasible = true;
        best = std::max(best, c.dot(x));
      }
    }
  }
  if (!feasible) return std::nullopt;
  return best;
}

// ---------------------------------------------------------------------------
// Grid-search Chebyshev oracle: densely samples the intersection of two
// polytopes and maximizes the distance to the nearest face.
inline std::optional<std::pair<Point2, double>> chebyshev_grid_oracle(
    const lipnav::geom::Polytope& h1, const lipnav::geom::Polytope& h2,
    const lipnav::geom::Box& box, double resolution) {
  auto scan = [&](const lipnav::geom::Box& window, double res, Point2& arg) {
    double best = -std::numeric_limits<double>::infinity();
    for (double x = window.xmin; x <= window.xmax; x += res) {
      for (double y = window.ymin; y <= window.ymax; y += res) {
        const Point2 p(x, y);
        const double r = std::min(h1.min_slack(p), h2.min_slack(p));
        if (r > best) {
          best = r;
          arg = p;
        }
      }
    }
    return best;
  };
  Point2 coarse_pt;
  const double coarse = scan(box, resolution, coarse_pt);
  if (coarse <= -resolution) return std::nullopt;
  // Refine around the coarse argmax; min-slack is 1-Lipschitz, so the fine
  // pass pins the radius to ~resolution/25.
  Point2 fine_pt;
  const lipnav::geom::Box window{coarse_pt.x() - 2 * resolution, coarse_pt.y() - 2 * resolution,
                                 coarse_pt.x() + 2 * resolution, coarse_pt.y() + 2 * resolution};
  const double fine = scan(window, resolution / 25.0, fine_pt);
  if (fine <= 0.0) return std::nullopt;
  return std::make_pair(fine_pt, fine);
}

// ---------------------------------------------------------------------------
// Random geometry helpers (seeded, deterministic).

inline lipnav::geom::ConvexPolygon random_convex_polygon(Rng& rng, const Point2& center,
                                                         double radius, int min_pts = 5,
                                                         int max_pts = 9) {
  while (true) {
    const int n = rng.uniform_int(min_pts, max_pts);
    std::vector<double> ang(static_cast<std::size_t>(n));
    for (double& a : ang) a = rng.uniform(0.0, 2.0 * M_PI);
    std::sort(ang.begin(), ang.end());
    std::vector<Point2> pts;
    for (double a : ang) {
      const double r = radius * rng.uniform(0.4, 1.0);
      pts.emplace_back(center.x() + r * std::cos(a), center.y() + r * std::sin(a));
    }
    try {
      return lipnav::geom::ConvexPolygon::convex_hull(pts);
    } catch (const std::invalid_argument&) {
      continue;
    }
  }
}

// Bounded random polytope: a box plus a few random cuts that keep `anchor`
// inside.
inline lipnav::geom::Polytope random_polytope(Rng& rng, const Point2& anchor,
                                              const lipnav::geom::Box& box, int cuts) {
  lipnav::geom::Polytope h = lipnav::geom::Polytope::from_box(box);
  for (int i = 0; i < cuts; ++i) {
    const double a = rng.uniform(0.0, 2.0 * M_PI);
    const Eigen::Vector2d n(std::cos(a), std::sin(a));
    const double margin = rng.uniform(0.3, 3.0);
    h.add_halfspace(n, n.dot(anchor) + margin);
  }
  return h;
}

// Dense point-sampling segment collision oracle.
inline bool segment_free_sampling(const Point2& a, const Point2& b,
                                  const lipnav::geom::StaticMap& map, int samples = 1000) {
  for (int i = 0; i <= samples; ++i) {
    const Point2 p = a + (b - a) * (static_cast<double>(i) / samples);
    for (const auto& obs : map.obstacles) {
      if (obs.contains(p, 0.0)) return false;
    }
  }
  return true;
}

}  // namespace oracles
