#include "lipnav/freespace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lipnav::freespace {

namespace {

using geom::ConvexPolygon;
using geom::Halfspace;
using geom::Polytope;
using geom::StaticMap;

// ---------------------------------------------------------------------------
// Maximum-area inscribed ellipse of a polytope: maximize log det(shape) over
// the five free parameters (c11, c12, c22, d1, d2) subject to
// |shape a_i| + a_i . d <= b_i per face, solved with a damped-Newton
// log-barrier method on a decreasing barrier weight.

struct BarrierEval {
  double value = 0.0;
  Eigen::Matrix<double, 5, 1> grad = Eigen::Matrix<double, 5, 1>::Zero();
  bool feasible = false;
};

Eigen::Matrix2d shape_of(const Eigen::Matrix<double, 5, 1>& th) {
  Eigen::Matrix2d c;
  c << th(0), th(1), th(1), th(2);
  return c;
}

bool strictly_feasible(const Eigen::Matrix<double, 5, 1>& th,
                       const std::vector<Halfspace>& faces, double floor) {
  const Eigen::Matrix2d c = shape_of(th);
  if (c(0, 0) <= floor || c.determinant() <= floor * floor) return false;
  const Point2 d(th(3), th(4));
  for (const Halfspace& f : faces) {
    const double slack = f.offset - f.normal.dot(d) - (c * f.normal).norm();
    if (slack <= floor) return false;
  }
  return true;
}

BarrierEval eval_barrier(const Eigen::Matrix<double, 5, 1>& th,
                         const std::vector<Halfspace>& faces, double mu) {
  BarrierEval e;
  const Eigen::Matrix2d c = shape_of(th);
  const double det = c.determinant();
  if (c(0, 0) <= 0.0 || det <= 0.0) return e;
  const Point2 d(th(3), th(4));

  const Eigen::Matrix2d cinv = c.inverse();
  e.value = -std::log(det);
  e.grad(0) = -cinv(0, 0);
  e.grad(1) = -2.0 * cinv(0, 1);
  e.grad(2) = -cinv(1, 1);

  for (const Halfspace& f : faces) {
    const Eigen::Vector2d ca = c * f.normal;
    const double g = ca.norm();
    const double slack = f.offset - f.normal.dot(d) - g;
    if (slack <= 0.0) return e;
    e.value -= mu * std::log(slack);
    // d slack / d theta
    Eigen::Matrix<double, 5, 1> ds;
    const Eigen::Vector2d w = ca / std::max(g, 1e-300);
    ds(0) = -w(0) * f.normal(0);
    ds(1) = -(w(0) * f.normal(1) + w(1) * f.normal(0));
    ds(2) = -w(1) * f.normal(1);
    ds(3) = -f.normal(0);
    ds(4) = -f.normal(1);
    e.grad -= mu / slack * ds;
  }
  e.feasible = true;
  return e;
}

Ellipse max_inscribed_ellipse(const std::vector<Halfspace>& faces, const Ellipse& warm,
                              const IrisOptions& opts) {
  Eigen::Matrix<double, 5, 1> th;
  th << warm.shape(0, 0), warm.shape(0, 1), warm.shape(1, 1), warm.center.x(),
      warm.center.y();

  // Shrink the warm shape about its center until strictly feasible; fall
  // back to a small ball on the polytope's own Chebyshev center.
  {
    int shrink = 0;
    while (!strictly_feasible(th, faces, 1e-12) && shrink < 60) {
      th(0) *= 0.7;
      th(1) *= 0.7;
      th(2) *= 0.7;
      ++shrink;
    }
    if (!strictly_feasible(th, faces, 1e-12)) {
      Polytope h;
      for (const Halfspace& f : faces) h.add_halfspace(f.normal, f.offset);
      const auto ball = geom::chebyshev_center(h, h, 0.0);
      if (!ball) throw DecompositionFailed("inscribed ellipse: empty polytope");
      const double r = std::max(ball->radius * 0.5, 1e-9);
      th << r, 0.0, r, ball->center.x(), ball->center.y();
    }
  }

  int budget = opts.newton_budget;
  for (double mu = 1e-1; mu >= 0.5e-6 && budget > 0; mu *= 0.1) {
    for (int inner = 0; inner < 8 && budget > 0; ++inner, --budget) {
      const BarrierEval e0 = eval_barrier(th, faces, mu);
      if (!e0.feasible) break;
      if (e0.grad.norm() <= opts.newton_grad_tol * std::max(1.0, std::abs(e0.value)))
        break;

      // Numerical Hessian of the analytic gradient.
      Eigen::Matrix<double, 5, 5> hess;
      for (int j = 0; j < 5; ++j) {
        const double h = 1e-6 * (1.0 + std::abs(th(j)));
        Eigen::Matrix<double, 5, 1> tp = th, tm = th;
        tp(j) += h;
        tm(j) -= h;
        const BarrierEval ep = eval_barrier(tp, faces, mu);
        const BarrierEval em = eval_barrier(tm, faces, mu);
        if (!ep.feasible || !em.feasible) {
          hess.col(j) = Eigen::Matrix<double, 5, 1>::Unit(j) * 1e6;
          continue;
        }
        hess.col(j) = (ep.grad - em.grad) / (2.0 * h);
      }
      hess = 0.5 * (hess + hess.transpose()).eval();

      // Damped Newton with backtracking that keeps the iterate feasible.
      Eigen::Matrix<double, 5, 1> step = Eigen::Matrix<double, 5, 1>::Zero();
      double damping = 1e-10;
      for (int d = 0; d < 12; ++d, damping *= 10.0) {
        const Eigen::Matrix<double, 5, 5> hd =
            hess + damping * Eigen::Matrix<double, 5, 5>::Identity();
        const Eigen::LDLT<Eigen::Matrix<double, 5, 5>> ldlt(hd);
        if (ldlt.info() != Eigen::Success) continue;
        step = ldlt.solve(-e0.grad);
        if (step.dot(e0.grad) < 0.0) break;
      }
      if (step.dot(e0.grad) >= 0.0) step = -e0.grad;

      double alpha = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 40; ++ls, alpha *= 0.5) {
        const Eigen::Matrix<double, 5, 1> cand = th + alpha * step;
        if (!strictly_feasible(cand, faces, 0.0)) continue;
        const BarrierEval ec = eval_barrier(cand, faces, mu);
        if (ec.feasible && ec.value <= e0.value + 1e-4 * alpha * e0.grad.dot(step)) {
          th = cand;
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }
  }

  Ellipse out;
  out.shape = shape_of(th);
  out.center = Point2(th(3), th(4));
  return out;
}

// ---------------------------------------------------------------------------
// Separating hyperplanes

Point2 closest_point_on_polygon(const std::vector<Point2>& verts, const Point2& p,
                                bool* inside) {
  *inside = true;
  const std::size_t n = verts.size();
  double best = std::numeric_limits<double>::infinity();
  Point2 best_pt = verts[0];
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& a = verts[i];
    const Point2& b = verts[(i + 1) % n];
    const Point2 ab = b - a;
    const double cr = ab.x() * (p - a).y() - ab.y() * (p - a).x();
    if (cr < 0.0) *inside = false;
    const double len2 = ab.squaredNorm();
    double t = len2 > 1e-30 ? (p - a).dot(ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const Point2 q = a + t * ab;
    const double d = (q - p).squaredNorm();
    if (d < best) {
      best = d;
      best_pt = q;
    }
  }
  return best_pt;
}

std::vector<Halfspace> separating_planes(const StaticMap& map, const Ellipse& e) {
  std::vector<Halfspace> planes;
  const Polytope box = Polytope::from_box(map.workspace);
  planes.insert(planes.end(), box.rows().begin(), box.rows().end());

  const Eigen::Matrix2d cinv = e.shape.inverse();

  struct Item {
    double dist;
    std::size_t idx;
    std::vector<Point2> ball_verts;
    Point2 closest;  // in ball space
  };
  std::vector<Item> items;
  items.reserve(map.obstacles.size());
  for (std::size_t i = 0; i < map.obstacles.size(); ++i) {
    Item it;
    it.idx = i;
    for (const Point2& v : map.obstacles[i].vertices())
      it.ball_verts.push_back(cinv * (v - e.center));
    bool inside = false;
    it.closest = closest_point_on_polygon(it.ball_verts, Point2::Zero(), &inside);
    it.dist = inside ? 0.0 : it.closest.norm();
    items.push_back(std::move(it));
  }
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    return a.dist < b.dist || (a.dist == b.dist && a.idx < b.idx);
  });

  for (const Item& it : items) {
    const ConvexPolygon& obs = map.obstacles[it.idx];
    // Skip obstacles already separated by an accumulated plane.
    bool separated = false;
    for (std::size_t p = 4; p < planes.size() && !separated; ++p) {
      bool all_out = true;
      for (const Point2& v : obs.vertices()) {
        if (planes[p].normal.dot(v) < planes[p].offset - 1e-12) {
          all_out = false;
          break;
        }
      }
      separated = all_out;
    }
    if (separated) continue;

    Eigen::Vector2d normal;
    double offset;
    if (it.dist > 1e-12) {
      // Tangent plane of the metric ball at the closest obstacle point.
      const Point2 x_star = e.shape * it.closest + e.center;
      normal = cinv.transpose() * it.closest;
      const double nn = normal.norm();
      if (nn < 1e-14) continue;
      normal /= nn;
      offset = normal.dot(x_star);
    } else {
      // Degenerate metric (center touching the obstacle): fall back to the
      // supporting plane at the Euclidean closest point.
      bool inside = false;
      const Point2 q = closest_point_on_polygon(obs.vertices(), e.center, &inside);
      if (inside)
        throw SeedInObstacle("region growth: ellipse center inside an obstacle");
      normal = (q - e.center);
      const double nn = normal.norm();
      if (nn < 1e-14)
        throw SeedInObstacle("region growth: ellipse center on an obstacle boundary");
      normal /= nn;
      offset = normal.dot(q);
    }
    planes.push_back({normal, offset});
  }
  return planes;
}

Polytope polytope_from(const std::vector<Halfspace>& planes) {
  Polytope h;
  for (const Halfspace& p : planes) h.add_halfspace(p.normal, p.offset);
  return h;
}

// Drops obstacle-derived faces that do not touch the feasible set; the four
// box faces are always kept so boundedness stays explicit.
Polytope prune_redundant(const Polytope& h) {
  std::vector<Halfspace> rows(h.rows());
  std::vector<bool> keep(rows.size(), true);
  for (std::size_t j = 4; j < rows.size(); ++j) {
    geom::LpProblem lp;
    std::vector<std::size_t> act;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i != j && keep[i]) act.push_back(i);
    }
    lp.cost = rows[j].normal;
    lp.ineq_matrix.resize(static_cast<int>(act.size()), 2);
    lp.ineq_rhs.resize(static_cast<int>(act.size()));
    for (std::size_t r = 0; r < act.size(); ++r) {
      lp.ineq_matrix.row(static_cast<int>(r)) = rows[act[r]].normal.transpose();
      lp.ineq_rhs(static_cast<int>(r)) = rows[act[r]].offset;
    }
    const geom::LpSolution sol = geom::solve_lp(lp);
    if (sol.status == geom::LpStatus::Optimal && sol.value < rows[j].offset - 1e-9)
      keep[j] = false;
  }
  Polytope out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (keep[i]) out.add_halfspace(rows[i].normal, rows[i].offset);
  }
  return out;
}

}  // namespace

geom::Polytope generate_polytope(const StaticMap& map, const Point2& seed,
                                 const IrisOptions& opts, SeedGrowthTrace* trace) {
  if (!map.workspace.contains(seed))
    throw SeedInObstacle("generate_polytope: seed outside the workspace");
  for (const ConvexPolygon& obs : map.obstacles) {
    if (obs.contains(seed, 0.0))
      throw SeedInObstacle("generate_polytope: seed inside an inflated obstacle");
  }

  Ellipse ellipse;
  ellipse.shape = 1e-3 * Eigen::Matrix2d::Identity();
  ellipse.center = seed;

  std::optional<Polytope> best;
  double prev_area = 0.0;

  for (int iter = 0; iter < opts.max_outer_iterations; ++iter) {
    const std::vector<Halfspace> planes = separating_planes(map, ellipse);
    Polytope p = polytope_from(planes);
    if (p.min_slack(seed) < opts.seed_margin) {
      // The fresh cut would leave the seed out; keep the previous iterate.
      if (best) return *best;
      throw SeedInObstacle("generate_polytope: seed has no interior clearance");
    }
    ellipse = max_inscribed_ellipse(p.rows(), ellipse, opts);
    if (trace) trace->iterations.push_back({ellipse, p});

    const double area = ellipse.area();
    if (iter > 0 && area < prev_area * (1.0 + opts.area_growth_tol)) {
      return prune_redundant(p);
    }
    best = std::move(p);
    prev_area = area;
  }
  return prune_redundant(*best);
}

std::vector<std::pair<geom::Polytope, Point2>> intersecting_polytopes(
    const Polytope& h1, const Point2& p1, const Polytope& h2, const Point2& p2,
    const StaticMap& map, const IrisOptions& opts) {
  constexpr int kMaxBridges = 50;

  std::vector<std::pair<Polytope, Point2>> out;
  const auto direct = geom::chebyshev_center(h1, h2, opts.min_overlap_radius);
  if (direct) {
    out.emplace_back(h2, direct->center);
    return out;
  }

  Polytope h_cur = h1;
  Point2 p_cur = p1;
  for (int l = 0; l < kMaxBridges; ++l) {
    Point2 p_next;
    try {
      p_next = geom::poly_line_intersect(h_cur, p_cur, p2);
    } catch (const geom::PreconditionViolated& e) {
      throw BridgingFailed(std::string("bridging stalled: ") + e.what());
    }
    if ((p_next - p_cur).norm() < 1e-9 && l > 0)
      throw BridgingFailed("bridging made no progress along the segment");

    Polytope h_next = generate_polytope(map, p_next, opts);
    // The link with the predecessor always exists (the seed lies on its
    // boundary) but may be thin when the exit face is tangent to an
    // obstacle; the hand-over only needs the waypoint to be reachable.
    const auto w_link = geom::chebyshev_center(h_cur, h_next, geom::kMinInscribedRadius);
    if (!w_link)
      throw BridgingFailed("bridging polytope does not overlap its predecessor");
    out.emplace_back(h_next, w_link->center);

    const auto w_new = geom::chebyshev_center(h_next, h2, opts.min_overlap_radius);
    if (w_new) {
      out.emplace_back(h2, w_new->center);
      return out;
    }
    h_cur = std::move(h_next);
    p_cur = p_next;
  }
  throw BridgingFailed("bridging exceeded the iteration cap");
}

FreeSpaceChain poly_fs_gen(const Point2& start, const rrt::PathPlan& plan,
                           const Point2& goal, const StaticMap& map,
                           const IrisOptions& opts) {
  FreeSpaceChain chain;
  chain.cells.push_back(generate_polytope(map, start, opts));
  std::vector<Point2> interior_waypoints;  // entry c-1 links cells c-1 and c

  std::vector<Point2> pts;
  pts.push_back(start);
  for (const Point2& p : plan.points) pts.push_back(p);
  pts.push_back(goal);
  const std::size_t last = pts.size() - 1;

  std::size_t j = 0;
  while (!chain.cells.back().contains(goal) || j < last) {
    ++j;
    if (j > last)
      throw DecompositionFailed("plan exhausted before the goal cell was reached");
    if (chain.cells.back().contains(pts[j])) continue;

    Polytope h_new = generate_polytope(map, pts[j], opts);
    auto bridge =
        intersecting_polytopes(chain.cells.back(), pts[j - 1], h_new, pts[j], map, opts);
    for (auto& [cell, waypoint] : bridge) {
      chain.cells.push_back(std::move(cell));
      interior_waypoints.push_back(waypoint);
    }
  }

  chain.waypoints = std::move(interior_waypoints);
  chain.waypoints.push_back(goal);
  validate_chain(chain, start);
  return chain;
}

std::optional<FreeSpaceChain> rewire_chain(const FreeSpaceChain& chain,
                                           const Point2& new_start,
                                           const Point2& new_goal) {
  int m = -1, n = -1;
  for (std::size_t i = 0; i < chain.cells.size(); ++i) {
    if (m < 0 && chain.cells[i].contains(new_start)) m = static_cast<int>(i);
    if (n < 0 && chain.cells[i].contains(new_goal)) n = static_cast<int>(i);
  }
  if (m < 0 || n < 0) return std::nullopt;

  FreeSpaceChain out;
  const int step = (n >= m) ? 1 : -1;
  for (int i = m;; i += step) {
    out.cells.push_back(chain.cells[static_cast<std::size_t>(i)]);
    if (i == n) break;
  }
  for (std::size_t i = 0; i + 1 < out.cells.size(); ++i) {
    const auto link = geom::chebyshev_center(out.cells[i], out.cells[i + 1]);
    if (!link) return std::nullopt;
    out.waypoints.push_back(link->center);
  }
  out.waypoints.push_back(new_goal);
  return out;
}

void validate_chain(const FreeSpaceChain& chain, const Point2& start) {
  if (chain.cells.empty() || chain.waypoints.size() != chain.cells.size())
    throw DecompositionFailed("chain: cells/waypoints size mismatch");
  if (!chain.cells.front().contains(start))
    throw DecompositionFailed("chain: start not in the first cell");
  const std::size_t m = chain.size();
  for (std::size_t i = 0; i + 1 < m; ++i) {
    if (!chain.cells[i].contains(chain.waypoints[i]) ||
        !chain.cells[i + 1].contains(chain.waypoints[i]))
      throw DecompositionFailed("chain: waypoint not in both adjacent cells");
  }
  if (!chain.cells.back().contains(chain.waypoints.back()))
    throw DecompositionFailed("chain: goal not in the last cell");
}

}  // namespace lipnav::freespace
