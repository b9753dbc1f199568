#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "lipnav/geometry.hpp"
#include "lipnav/rrt.hpp"

namespace lipnav::freespace {

class SeedInObstacle : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BridgingFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DecompositionFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ordered chain of mutually intersecting obstacle-free cells.
/// waypoints[i] is the target inside cells[i]: for i < size()-1 it is the
/// Chebyshev center of cells[i] with cells[i+1], and the last entry is the
/// goal, which lies in the last cell.
struct FreeSpaceChain {
  std::vector<geom::Polytope> cells;
  std::vector<Point2> waypoints;

  std::size_t size() const { return cells.size(); }
};

struct Ellipse {
  Eigen::Matrix2d shape = Eigen::Matrix2d::Identity();  // {shape u + center : |u| <= 1}
  Point2 center = Point2::Zero();

  double area() const { return M_PI * shape.determinant(); }
};

struct GrowthSnapshot {
  Ellipse ellipse;
  geom::Polytope polytope;
};

/// Per-iteration snapshots of the region growth, for debugging and rendering.
struct SeedGrowthTrace {
  std::vector<GrowthSnapshot> iterations;
};

struct IrisOptions {
  int max_outer_iterations = 10;
  double area_growth_tol = 0.02;   // stop when ellipse area grows less than this
  double seed_margin = 1e-6;       // required interior clearance of the seed
  int newton_budget = 50;          // damped Newton iterations per ellipse fit
  double newton_grad_tol = 1e-8;
  /// Consecutive chain cells must overlap by an inscribed ball of this
  /// radius; thinner intersections are treated as disjoint and bridged, so
  /// every hand-over region is wide enough for the buffered controller.
  double min_overlap_radius = 0.06;
};

/// Grows an obstacle-free polytope around a free seed point by alternating
/// separating-hyperplane and inscribed-ellipse steps. The result always
/// includes the four workspace-box faces, keeps the seed at least
/// seed_margin inside, and intersects no inflated obstacle. When a fresh set
/// of hyperplanes would cut the seed off, the previous iterate is returned.
geom::Polytope generate_polytope(const geom::StaticMap& map, const Point2& seed,
                                 const IrisOptions& opts = {},
                                 SeedGrowthTrace* trace = nullptr);

/// Connects two cells by bridging polytopes along the segment p1 -> p2.
/// Returns pairs (cell, waypoint) with the last cell equal to h2; each
/// waypoint is the Chebyshev center of the cell's intersection with its
/// predecessor. When h1 and h2 already intersect the result is the single
/// pair (h2, center of the overlap).
std::vector<std::pair<geom::Polytope, Point2>> intersecting_polytopes(
    const geom::Polytope& h1, const Point2& p1, const geom::Polytope& h2,
    const Point2& p2, const geom::StaticMap& map, const IrisOptions& opts = {});

/// Decomposes the corridor along the plan into a chain of mutually
/// intersecting cells with Chebyshev-center waypoints; the loop runs until
/// the goal is inside the last cell and every plan point was consumed.
FreeSpaceChain poly_fs_gen(const Point2& start, const rrt::PathPlan& plan,
                           const Point2& goal, const geom::StaticMap& map,
                           const IrisOptions& opts = {});

/// Reuses an existing chain for new endpoints when both lie in some cell:
/// returns the sub-chain between their cells (reversed when needed) with
/// waypoints recomputed; empty when either endpoint is outside all cells.
std::optional<FreeSpaceChain> rewire_chain(const FreeSpaceChain& chain,
                                           const Point2& new_start,
                                           const Point2& new_goal);

/// Structural invariants: waypoint membership, consecutive-cell overlap and
/// start containment. Throws DecompositionFailed on violation.
void validate_chain(const FreeSpaceChain& chain, const Point2& start);

}  // namespace lipnav::freespace
