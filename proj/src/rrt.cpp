#include "lipnav/rrt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lipnav/rng.hpp"

namespace lipnav::rrt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Tree {
  std::vector<Point2> pts;
  std::vector<int> parent;
  std::vector<double> edge_len;
  std::vector<double> cost;
  std::vector<std::vector<int>> children;

  int add(const Point2& p, int par, double elen) {
    pts.push_back(p);
    parent.push_back(par);
    edge_len.push_back(elen);
    cost.push_back(par >= 0 ? cost[par] + elen : 0.0);
    children.emplace_back();
    if (par >= 0) children[par].push_back(static_cast<int>(pts.size()) - 1);
    return static_cast<int>(pts.size()) - 1;
  }

  void reparent(int node, int new_parent, double elen) {
    auto& sib = children[parent[node]];
    sib.erase(std::find(sib.begin(), sib.end(), node));
    parent[node] = new_parent;
    edge_len[node] = elen;
    children[new_parent].push_back(node);
    // Propagate the cost change through the subtree.
    std::vector<int> stack{node};
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      cost[i] = cost[parent[i]] + edge_len[i];
      for (int c : children[i]) stack.push_back(c);
    }
  }
};

}  // namespace

std::optional<PathPlan> rrt_star_plan(const geom::StaticMap& map, const Point2& start,
                                      const Point2& goal, const RrtParams& params,
                                      PlanTrace* trace) {
  if (!map.in_free_space(start))
    throw geom::PreconditionViolated("rrt_star_plan: start not in free space");
  if (!map.in_free_space(goal))
    throw geom::PreconditionViolated("rrt_star_plan: goal not in free space");

  auto edge_free = [&](const Point2& a, const Point2& b) {
    return segment_collision_free(a, b, map, params.clearance_margin);
  };

  Rng rng(params.rng_seed);
  Tree tree;
  tree.add(start, -1, 0.0);

  std::vector<int> goal_links;  // nodes with a free edge to the exact goal
  double goal_cost = kInf;
  if (trace) {
    trace->goal_cost_history.clear();
    trace->goal_cost_history.reserve(params.max_iterations);
  }

  const geom::Box& ws = map.workspace;
  for (int it = 0; it < params.max_iterations; ++it) {
    Point2 sample;
    if (rng.bernoulli(params.goal_bias)) {
      sample = goal;
    } else {
      sample = Point2(rng.uniform(ws.xmin, ws.xmax), rng.uniform(ws.ymin, ws.ymax));
    }

    int nearest = 0;
    double best_d2 = kInf;
    for (std::size_t i = 0; i < tree.pts.size(); ++i) {
      const double d2 = (tree.pts[i] - sample).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        nearest = static_cast<int>(i);
      }
    }

    const double dist = std::sqrt(best_d2);
    if (dist < 1e-9) {
      if (trace) trace->goal_cost_history.push_back(goal_cost);
      continue;
    }
    const Point2 new_pt =
        (dist <= params.step_size)
            ? sample
            : Point2(tree.pts[nearest] + params.step_size / dist * (sample - tree.pts[nearest]));

    if (!edge_free(tree.pts[nearest], new_pt)) {
      if (trace) trace->goal_cost_history.push_back(goal_cost);
      continue;
    }

    // Neighbors within the rewiring radius.
    std::vector<int> nbrs;
    const double r2 = params.rewire_radius * params.rewire_radius;
    for (std::size_t i = 0; i < tree.pts.size(); ++i) {
      if ((tree.pts[i] - new_pt).squaredNorm() <= r2) nbrs.push_back(static_cast<int>(i));
    }

    // Choose the cheapest collision-free parent.
    int best_parent = nearest;
    double best_elen = (tree.pts[nearest] - new_pt).norm();
    double best_cost = tree.cost[nearest] + best_elen;
    for (int i : nbrs) {
      if (i == nearest) continue;
      const double elen = (tree.pts[i] - new_pt).norm();
      const double c = tree.cost[i] + elen;
      if (c < best_cost - 1e-12 && edge_free(tree.pts[i], new_pt)) {
        best_cost = c;
        best_parent = i;
        best_elen = elen;
      }
    }
    const int node = tree.add(new_pt, best_parent, best_elen);

    // Rewire the neighborhood through the new node.
    for (int i : nbrs) {
      if (i == best_parent || i == 0) continue;
      const double elen = (tree.pts[i] - new_pt).norm();
      if (tree.cost[node] + elen < tree.cost[i] - 1e-12 &&
          edge_free(new_pt, tree.pts[i])) {
        tree.reparent(i, node, elen);
      }
    }

    // Try connecting the new node to the exact goal.
    const double d_goal = (new_pt - goal).norm();
    if (d_goal <= params.goal_tolerance && edge_free(new_pt, goal)) {
      goal_links.push_back(node);
      if (trace && trace->first_solution_iteration < 0)
        trace->first_solution_iteration = it;
    }

    double gc = kInf;
    for (int i : goal_links) gc = std::min(gc, tree.cost[i] + (tree.pts[i] - goal).norm());
    goal_cost = gc;
    if (trace) trace->goal_cost_history.push_back(goal_cost);
  }

  if (goal_links.empty()) return std::nullopt;

  int best_link = goal_links.front();
  double best = kInf;
  for (int i : goal_links) {
    const double c = tree.cost[i] + (tree.pts[i] - goal).norm();
    if (c < best) {
      best = c;
      best_link = i;
    }
  }

  std::vector<Point2> pts;
  for (int i = best_link; i >= 0; i = tree.parent[i]) pts.push_back(tree.pts[i]);
  std::reverse(pts.begin(), pts.end());
  pts.push_back(goal);

  // Greedy shortcutting: drop interior points whose removal keeps the
  // polyline clear; fewer seed points means fewer polytopes downstream.
  bool changed = true;
  while (changed) {
    changed = false;
    std::size_t i = 0;
    while (i + 2 < pts.size()) {
      if (edge_free(pts[i], pts[i + 2])) {
        pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(i) + 1);
        changed = true;
      } else {
        ++i;
      }
    }
  }

  PathPlan plan;
  plan.points = std::move(pts);
  plan.total_length = 0.0;
  for (std::size_t i = 0; i + 1 < plan.points.size(); ++i)
    plan.total_length += (plan.points[i + 1] - plan.points[i]).norm();
  return plan;
}

}  // namespace lipnav::rrt
