#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <vector>

namespace lipnav {

using Point2 = Eigen::Vector2d;

namespace geom {

/// Boundary membership tolerance, relative to row-normalized constraints.
inline constexpr double kMembershipTol = 1e-9;

/// Inscribed radii below this are treated as an empty intersection, so that
/// waypoints never land in slivers the walker cannot pass through.
inline constexpr double kMinInscribedRadius = 1e-3;

class PreconditionViolated : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Box {
  double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double area() const { return width() * height(); }
  Point2 lo() const { return {xmin, ymin}; }
  Point2 hi() const { return {xmax, ymax}; }
  bool contains(const Point2& p, double tol = kMembershipTol) const {
    return p.x() >= xmin - tol && p.x() <= xmax + tol && p.y() >= ymin - tol &&
           p.y() <= ymax + tol;
  }
};

/// Convex polygon stored as CCW-ordered, strictly convex, deduplicated
/// vertices. Construction normalizes the input and throws
/// std::invalid_argument when fewer than three non-collinear vertices remain.
class ConvexPolygon {
 public:
  static ConvexPolygon from_points(std::vector<Point2> pts);
  static ConvexPolygon convex_hull(std::vector<Point2> pts);

  const std::vector<Point2>& vertices() const { return verts_; }
  std::size_t size() const { return verts_.size(); }

  double area() const;
  Point2 centroid() const;
  /// True when p is inside or on the boundary (within tol).
  bool contains(const Point2& p, double tol = kMembershipTol) const;
  /// Euclidean distance to the polygon; zero for points inside or on it.
  double distance(const Point2& p) const;

 private:
  ConvexPolygon() = default;
  std::vector<Point2> verts_;
};

struct Halfspace {
  Eigen::Vector2d normal;  // unit norm
  double offset = 0.0;     // normal . y <= offset
};

/// Intersection of closed half-spaces with row-normalized constraints.
/// Boundedness is the caller's responsibility; every polytope produced by
/// the free-space generator includes the four workspace-box faces.
class Polytope {
 public:
  Polytope() = default;

  static Polytope from_box(const Box& box);
  static Polytope from_polygon(const ConvexPolygon& poly);

  void add_halfspace(const Eigen::Vector2d& normal, double offset);

  std::size_t face_count() const { return rows_.size(); }
  const std::vector<Halfspace>& rows() const { return rows_; }

  bool contains(const Point2& p, double tol = kMembershipTol) const;
  /// min_j (offset_j - normal_j . p); nonnegative inside, and for interior
  /// points equals the distance to the nearest face.
  double min_slack(const Point2& p) const;

  /// Vertices of the (assumed bounded) polytope in CCW order.
  std::vector<Point2> vertices() const;
  double area() const;

 private:
  std::vector<Halfspace> rows_;
};

struct StaticMap {
  Box workspace;
  std::vector<ConvexPolygon> obstacles;  // inflated, clipped to the workspace
  double inflation_radius = 0.0;

  /// Inflates each raw obstacle by `radius` and clips the result to the
  /// workspace box (cells flush with the walls may be unreachable).
  static StaticMap from_raw(const Box& workspace,
                            const std::vector<ConvexPolygon>& raw_obstacles,
                            double radius);

  bool in_free_space(const Point2& p) const;
};

// ---------------------------------------------------------------------------
// Linear programming (dense two-phase simplex, Bland's rule)

enum class LpStatus { Optimal, Infeasible, Unbounded, NumericalFailure };

/// maximize cost . x  subject to  ineq_matrix x <= ineq_rhs,  x free.
struct LpProblem {
  Eigen::VectorXd cost;
  Eigen::MatrixXd ineq_matrix;
  Eigen::VectorXd ineq_rhs;
};

struct LpSolution {
  Eigen::VectorXd x;
  double value = 0.0;
  LpStatus status = LpStatus::NumericalFailure;
};

LpSolution solve_lp(const LpProblem& problem);

// ---------------------------------------------------------------------------
// Geometric operations

struct InscribedBall {
  Point2 center;
  double radius = 0.0;
};

/// Chebyshev center of the intersection of two polytopes. Empty when the
/// intersection is empty or its inscribed radius is below min_radius.
/// Throws NumericalFailure when the underlying LP degrades.
std::optional<InscribedBall> chebyshev_center(const Polytope& a, const Polytope& b,
                                              double min_radius = kMinInscribedRadius);

bool point_in_polytope(const Polytope& h, const Point2& p, double tol = kMembershipTol);

/// Exit point of the segment p_inside -> p_outside through the boundary of h.
/// Throws PreconditionViolated unless p_inside is in h and p_outside is not.
Point2 poly_line_intersect(const Polytope& h, const Point2& p_inside,
                           const Point2& p_outside);

/// True when the closed segment avoids every (inflated) obstacle polygon by
/// more than `margin`. The margin defaults to exact contact.
bool segment_collision_free(const Point2& a, const Point2& b, const StaticMap& map,
                            double margin = 0.0);

/// Closed-set separating-axis test. Touching polygons count as overlapping;
/// a positive margin requires at least that much separation.
bool polygons_overlap(const ConvexPolygon& a, const ConvexPolygon& b,
                      double margin = 0.0);

bool segment_intersects_polygon(const Point2& a, const Point2& b,
                                const ConvexPolygon& poly, double margin = 0.0);

/// Convex outer approximation of the Minkowski sum of `poly` with a disc.
/// Edges are offset by `radius`; vertex arcs use the tangent-intersection
/// point, split into three chords when the miter would exceed twice the
/// radius, so the result always contains the exact sum.
ConvexPolygon inflate_obstacle(const ConvexPolygon& poly, double radius);

/// Sutherland-Hodgman clip against an axis-aligned box. Throws when the
/// intersection is empty or degenerate.
ConvexPolygon clip_to_box(const ConvexPolygon& poly, const Box& box);

}  // namespace geom
}  // namespace lipnav
