#include "lipnav/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lipnav::geom {

namespace {

constexpr double kDedupTol = 1e-9;

double cross2(const Point2& a, const Point2& b) { return a.x() * b.y() - a.y() * b.x(); }

double signed_area(const std::vector<Point2>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Point2& a = v[i];
    const Point2& b = v[(i + 1) % v.size()];
    s += cross2(a, b);
  }
  return 0.5 * s;
}

double point_segment_distance(const Point2& p, const Point2& a, const Point2& b) {
  const Point2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 < 1e-30) return (p - a).norm();
  double t = (p - a).dot(ab) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

}  // namespace

// ---------------------------------------------------------------------------
// ConvexPolygon

ConvexPolygon ConvexPolygon::from_points(std::vector<Point2> pts) {
  for (const Point2& p : pts) {
    if (!p.allFinite()) throw std::invalid_argument("polygon vertex not finite");
  }
  // Deduplicate consecutive vertices (cyclically).
  std::vector<Point2> v;
  for (const Point2& p : pts) {
    if (v.empty() || (p - v.back()).norm() > kDedupTol) v.push_back(p);
  }
  while (v.size() > 1 && (v.front() - v.back()).norm() <= kDedupTol) v.pop_back();
  if (v.size() < 3) throw std::invalid_argument("polygon needs >= 3 distinct vertices");

  if (signed_area(v) < 0.0) std::reverse(v.begin(), v.end());

  // Drop collinear vertices, keeping the region unchanged. Reflex vertices
  // are kept so the convexity check below can reject them.
  std::vector<Point2> out;
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& prev = v[(i + n - 1) % n];
    const Point2& cur = v[i];
    const Point2& next = v[(i + 1) % n];
    const double scale = (cur - prev).norm() * (next - cur).norm();
    if (std::abs(cross2(cur - prev, next - cur)) > 1e-12 * std::max(1.0, scale))
      out.push_back(cur);
  }
  if (out.size() < 3) throw std::invalid_argument("degenerate (collinear) polygon");

  // Strict convexity check on the cleaned CCW ring.
  const std::size_t m = out.size();
  for (std::size_t i = 0; i < m; ++i) {
    const Point2& prev = out[(i + m - 1) % m];
    const Point2& cur = out[i];
    const Point2& next = out[(i + 1) % m];
    if (cross2(cur - prev, next - cur) <= 0.0)
      throw std::invalid_argument("vertices do not form a convex CCW polygon");
  }

  ConvexPolygon poly;
  poly.verts_ = std::move(out);
  return poly;
}

ConvexPolygon ConvexPolygon::convex_hull(std::vector<Point2> pts) {
  if (pts.size() < 3) throw std::invalid_argument("hull needs >= 3 points");
  std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Point2& a, const Point2& b) {
                          return (a - b).norm() <= kDedupTol;
                        }),
            pts.end());
  if (pts.size() < 3) throw std::invalid_argument("hull needs >= 3 distinct points");

  // Andrew's monotone chain.
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross2(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 1e-12) --k;
    hull[k++] = pts[i];
  }
  const std::size_t lower = k + 1;
  for (std::size_t i = pts.size() - 1; i-- > 0;) {
    while (k >= lower && cross2(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 1e-12) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return from_points(std::move(hull));
}

double ConvexPolygon::area() const { return signed_area(verts_); }

Point2 ConvexPolygon::centroid() const {
  double a = 0.0;
  Point2 c = Point2::Zero();
  for (std::size_t i = 0; i < verts_.size(); ++i) {
    const Point2& p = verts_[i];
    const Point2& q = verts_[(i + 1) % verts_.size()];
    const double w = cross2(p, q);
    a += w;
    c += w * (p + q);
  }
  return c / (3.0 * a);
}

bool ConvexPolygon::contains(const Point2& p, double tol) const {
  for (std::size_t i = 0; i < verts_.size(); ++i) {
    const Point2& a = verts_[i];
    const Point2& b = verts_[(i + 1) % verts_.size()];
    if (cross2(b - a, p - a) < -tol * (b - a).norm()) return false;
  }
  return true;
}

double ConvexPolygon::distance(const Point2& p) const {
  if (contains(p, 0.0)) return 0.0;
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < verts_.size(); ++i) {
    d = std::min(d, point_segment_distance(p, verts_[i], verts_[(i + 1) % verts_.size()]));
  }
  return d;
}

// ---------------------------------------------------------------------------
// Polytope

Polytope Polytope::from_box(const Box& box) {
  Polytope h;
  h.add_halfspace({1.0, 0.0}, box.xmax);
  h.add_halfspace({-1.0, 0.0}, -box.xmin);
  h.add_halfspace({0.0, 1.0}, box.ymax);
  h.add_halfspace({0.0, -1.0}, -box.ymin);
  return h;
}

Polytope Polytope::from_polygon(const ConvexPolygon& poly) {
  Polytope h;
  const auto& v = poly.vertices();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Point2& a = v[i];
    const Point2& b = v[(i + 1) % v.size()];
    const Point2 e = b - a;
    const Eigen::Vector2d outward(e.y(), -e.x());  // CCW ring: interior on the left
    h.add_halfspace(outward, outward.dot(a));
  }
  return h;
}

void Polytope::add_halfspace(const Eigen::Vector2d& normal, double offset) {
  const double n = normal.norm();
  if (!(n > 1e-12) || !std::isfinite(offset))
    throw std::invalid_argument("half-space needs a nonzero finite normal");
  rows_.push_back({normal / n, offset / n});
}

bool Polytope::contains(const Point2& p, double tol) const {
  for (const Halfspace& r : rows_) {
    if (r.normal.dot(p) > r.offset + tol) return false;
  }
  return true;
}

double Polytope::min_slack(const Point2& p) const {
  double s = std::numeric_limits<double>::infinity();
  for (const Halfspace& r : rows_) s = std::min(s, r.offset - r.normal.dot(p));
  return s;
}

std::vector<Point2> Polytope::vertices() const {
  std::vector<Point2> pts;
  const std::size_t l = rows_.size();
  for (std::size_t i = 0; i < l; ++i) {
    for (std::size_t j = i + 1; j < l; ++j) {
      Eigen::Matrix2d m;
      m.row(0) = rows_[i].normal.transpose();
      m.row(1) = rows_[j].normal.transpose();
      const double det = m.determinant();
      if (std::abs(det) < 1e-10) continue;
      const Point2 x = m.inverse() * Eigen::Vector2d(rows_[i].offset, rows_[j].offset);
      if (min_slack(x) >= -1e-7) pts.push_back(x);
    }
  }
  // Deduplicate and order by angle around the centroid.
  std::vector<Point2> uniq;
  for (const Point2& p : pts) {
    bool dup = false;
    for (const Point2& q : uniq) {
      if ((p - q).norm() < 1e-7) {
        dup = true;
        break;
      }
    }
    if (!dup) uniq.push_back(p);
  }
  if (uniq.size() < 3) return uniq;
  Point2 c = Point2::Zero();
  for (const Point2& p : uniq) c += p;
  c /= static_cast<double>(uniq.size());
  std::sort(uniq.begin(), uniq.end(), [&c](const Point2& a, const Point2& b) {
    return std::atan2(a.y() - c.y(), a.x() - c.x()) <
           std::atan2(b.y() - c.y(), b.x() - c.x());
  });
  return uniq;
}

double Polytope::area() const {
  const auto v = vertices();
  if (v.size() < 3) return 0.0;
  return signed_area(v);
}

// ---------------------------------------------------------------------------
// StaticMap

StaticMap StaticMap::from_raw(const Box& workspace,
                              const std::vector<ConvexPolygon>& raw_obstacles,
                              double radius) {
  if (radius < 0.0) throw std::invalid_argument("inflation radius must be >= 0");
  StaticMap map;
  map.workspace = workspace;
  map.inflation_radius = radius;
  map.obstacles.reserve(raw_obstacles.size());
  for (const ConvexPolygon& raw : raw_obstacles) {
    map.obstacles.push_back(clip_to_box(inflate_obstacle(raw, radius), workspace));
  }
  return map;
}

bool StaticMap::in_free_space(const Point2& p) const {
  if (!workspace.contains(p)) return false;
  for (const ConvexPolygon& obs : obstacles) {
    if (obs.contains(p, 0.0)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Segment and polygon predicates

namespace {

struct Interval {
  double lo, hi;
};

Interval project_polygon(const ConvexPolygon& poly, const Eigen::Vector2d& axis) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const Point2& v : poly.vertices()) {
    const double t = axis.dot(v);
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  return {lo, hi};
}

Interval project_segment(const Point2& a, const Point2& b, const Eigen::Vector2d& axis) {
  const double ta = axis.dot(a), tb = axis.dot(b);
  return {std::min(ta, tb), std::max(ta, tb)};
}

bool separated(const Interval& a, const Interval& b, double margin) {
  return a.hi < b.lo - margin || b.hi < a.lo - margin;
}

}  // namespace

bool polygons_overlap(const ConvexPolygon& a, const ConvexPolygon& b, double margin) {
  auto axes_of = [](const ConvexPolygon& p, std::vector<Eigen::Vector2d>& axes) {
    const auto& v = p.vertices();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const Point2 e = v[(i + 1) % v.size()] - v[i];
      axes.push_back(Eigen::Vector2d(e.y(), -e.x()).normalized());
    }
  };
  std::vector<Eigen::Vector2d> axes;
  axes_of(a, axes);
  axes_of(b, axes);
  for (const auto& axis : axes) {
    if (separated(project_polygon(a, axis), project_polygon(b, axis), margin)) return false;
  }
  return true;
}

bool segment_intersects_polygon(const Point2& a, const Point2& b,
                                const ConvexPolygon& poly, double margin) {
  const Point2 e = b - a;
  std::vector<Eigen::Vector2d> axes;
  const auto& v = poly.vertices();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Point2 edge = v[(i + 1) % v.size()] - v[i];
    axes.push_back(Eigen::Vector2d(edge.y(), -edge.x()).normalized());
  }
  if (e.norm() > 1e-12) {
    axes.push_back(Eigen::Vector2d(e.y(), -e.x()).normalized());
  }
  for (const auto& axis : axes) {
    if (separated(project_polygon(poly, axis), project_segment(a, b, axis), margin))
      return false;
  }
  return true;
}

bool segment_collision_free(const Point2& a, const Point2& b, const StaticMap& map,
                            double margin) {
  for (const ConvexPolygon& obs : map.obstacles) {
    if (segment_intersects_polygon(a, b, obs, margin)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Inflation and clipping

ConvexPolygon inflate_obstacle(const ConvexPolygon& poly, double radius) {
  if (radius < 0.0) throw std::invalid_argument("inflation radius must be >= 0");
  if (radius == 0.0) return poly;

  const auto& v = poly.vertices();
  const std::size_t n = v.size();
  std::vector<Eigen::Vector2d> edge_normal(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 e = v[(i + 1) % n] - v[i];
    edge_normal[i] = Eigen::Vector2d(e.y(), -e.x()).normalized();
  }

  auto rotate = [](const Eigen::Vector2d& u, double ang) {
    const double c = std::cos(ang), s = std::sin(ang);
    return Eigen::Vector2d(c * u.x() - s * u.y(), s * u.x() + c * u.y());
  };

  std::vector<Point2> out;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector2d& n_prev = edge_normal[(i + n - 1) % n];
    const Eigen::Vector2d& n_cur = edge_normal[i];
    out.push_back(v[i] + radius * n_prev);
    // Exterior turn angle at this vertex, in (0, pi) for a strictly convex ring.
    double delta = std::atan2(cross2(n_prev, n_cur), n_prev.dot(n_cur));
    if (delta > 1e-12) {
      const double miter = radius / std::cos(delta / 2.0);
      if (miter <= 2.0 * radius) {
        out.push_back(v[i] + miter * rotate(n_prev, delta / 2.0));
      } else {
        const double reach = radius / std::cos(delta / 6.0);
        for (int j = 1; j <= 3; ++j) {
          out.push_back(v[i] + reach * rotate(n_prev, delta * (2 * j - 1) / 6.0));
        }
      }
    }
    out.push_back(v[i] + radius * n_cur);
  }
  return ConvexPolygon::from_points(std::move(out));
}

ConvexPolygon clip_to_box(const ConvexPolygon& poly, const Box& box) {
  // Four clip half-planes: normal . p <= offset.
  const std::vector<Halfspace> planes = {{{1.0, 0.0}, box.xmax},
                                         {{-1.0, 0.0}, -box.xmin},
                                         {{0.0, 1.0}, box.ymax},
                                         {{0.0, -1.0}, -box.ymin}};
  std::vector<Point2> ring = poly.vertices();
  for (const Halfspace& pl : planes) {
    std::vector<Point2> next;
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point2& cur = ring[i];
      const Point2& nxt = ring[(i + 1) % n];
      const double sc = pl.offset - pl.normal.dot(cur);
      const double sn = pl.offset - pl.normal.dot(nxt);
      if (sc >= 0.0) {
        next.push_back(cur);
        if (sn < 0.0) next.push_back(cur + sc / (sc - sn) * (nxt - cur));
      } else if (sn >= 0.0) {
        next.push_back(cur + sc / (sc - sn) * (nxt - cur));
      }
    }
    ring = std::move(next);
    if (ring.empty()) break;
  }
  if (ring.size() < 3) throw std::invalid_argument("polygon does not intersect the box");
  return ConvexPolygon::from_points(std::move(ring));
}

// ---------------------------------------------------------------------------
// Polytope queries

bool point_in_polytope(const Polytope& h, const Point2& p, double tol) {
  return h.contains(p, tol);
}

Point2 poly_line_intersect(const Polytope& h, const Point2& p_inside,
                           const Point2& p_outside) {
  if (!h.contains(p_inside))
    throw PreconditionViolated("poly_line_intersect: first point not in polytope");
  if (h.contains(p_outside))
    throw PreconditionViolated("poly_line_intersect: second point not outside polytope");

  const Point2 d = p_outside - p_inside;
  double t_exit = std::numeric_limits<double>::infinity();
  for (const Halfspace& r : h.rows()) {
    const double dn = r.normal.dot(d);
    if (dn > 1e-15) {
      const double t = (r.offset - r.normal.dot(p_inside)) / dn;
      t_exit = std::min(t_exit, t);
    }
  }
  t_exit = std::clamp(t_exit, 0.0, 1.0);
  return p_inside + t_exit * d;
}

std::optional<InscribedBall> chebyshev_center(const Polytope& a, const Polytope& b,
                                              double min_radius) {
  // Variables (cx, cy, r); maximize r subject to n.c + r <= offset per face
  // of both polytopes, r >= 0.
  const std::size_t m = a.face_count() + b.face_count();
  LpProblem lp;
  lp.cost = Eigen::Vector3d(0.0, 0.0, 1.0);
  lp.ineq_matrix.resize(m + 1, 3);
  lp.ineq_rhs.resize(m + 1);
  std::size_t k = 0;
  for (const Polytope* h : {&a, &b}) {
    for (const Halfspace& r : h->rows()) {
      lp.ineq_matrix.row(k) << r.normal.x(), r.normal.y(), 1.0;
      lp.ineq_rhs(k) = r.offset;
      ++k;
    }
  }
  lp.ineq_matrix.row(k) << 0.0, 0.0, -1.0;
  lp.ineq_rhs(k) = 0.0;

  const LpSolution sol = solve_lp(lp);
  if (sol.status == LpStatus::NumericalFailure)
    throw NumericalFailure("chebyshev_center: LP did not converge");
  if (sol.status != LpStatus::Optimal) return std::nullopt;
  if (sol.x(2) < min_radius) return std::nullopt;
  return InscribedBall{Point2(sol.x(0), sol.x(1)), sol.x(2)};
}

}  // namespace lipnav::geom
