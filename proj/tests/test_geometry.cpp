#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lipnav/geometry.hpp"
#include "lipnav/rng.hpp"
#include "oracles.hpp"

using namespace lipnav;
using geom::Box;
using geom::ConvexPolygon;
using geom::Polytope;
using geom::StaticMap;

namespace {

ConvexPolygon unit_square() {
  return ConvexPolygon::from_points({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
}

Polytope unit_square_polytope() { return Polytope::from_box({0, 0, 1, 1}); }

}  // namespace

TEST_CASE("polygon factory normalizes and validates") {
  // CW input is reoriented, duplicates and collinear points dropped.
  const ConvexPolygon p = ConvexPolygon::from_points(
      {{0, 0}, {0, 1}, {1, 1}, {1, 0}, {1, 0}, {0.5, 0.0}});
  CHECK(p.size() == 4);
  CHECK(p.area() == doctest::Approx(1.0));
  CHECK_THROWS_AS(ConvexPolygon::from_points({{0, 0}, {1, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(ConvexPolygon::from_points({{0, 0}, {1, 0}, {2, 0}}),
                  std::invalid_argument);
  // Non-convex ring.
  CHECK_THROWS_AS(
      ConvexPolygon::from_points({{0, 0}, {2, 0}, {2, 2}, {1, 0.5}, {0, 2}}),
      std::invalid_argument);
}

TEST_CASE("polygon distance and containment") {
  const ConvexPolygon sq = unit_square();
  CHECK(sq.contains({0.5, 0.5}));
  CHECK(sq.contains({1.0, 0.5}));
  CHECK_FALSE(sq.contains({1.1, 0.5}));
  CHECK(sq.distance({0.5, 0.5}) == 0.0);
  CHECK(sq.distance({2.0, 0.5}) == doctest::Approx(1.0));
  CHECK(sq.distance({2.0, 2.0}) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("point_in_polytope boundary semantics") {
  const Polytope h = unit_square_polytope();
  CHECK(geom::point_in_polytope(h, {0.5, 0.5}));
  CHECK(geom::point_in_polytope(h, {1.0, 0.5}));  // boundary counts as inside
  CHECK_FALSE(geom::point_in_polytope(h, {1.1, 0.5}));
}

TEST_CASE("row normalization does not change membership") {
  Polytope scaled;
  scaled.add_halfspace({100.0, 0.0}, 100.0);
  scaled.add_halfspace({-3.0, 0.0}, 0.0);
  scaled.add_halfspace({0.0, 0.25}, 0.25);
  scaled.add_halfspace({0.0, -7.0}, 0.0);
  const Polytope plain = unit_square_polytope();
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    const Point2 p(rng.uniform(-0.5, 1.5), rng.uniform(-0.5, 1.5));
    CHECK(scaled.contains(p) == plain.contains(p));
  }
}

TEST_CASE("poly_line_intersect on axis-aligned exits") {
  const Polytope h = unit_square_polytope();
  const Point2 a = geom::poly_line_intersect(h, {0.5, 0.5}, {2.0, 0.5});
  CHECK(a.x() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a.y() == doctest::Approx(0.5));
  const Point2 b = geom::poly_line_intersect(h, {0.5, 0.5}, {0.5, -3.0});
  CHECK(b.x() == doctest::Approx(0.5));
  CHECK(b.y() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(geom::poly_line_intersect(h, {2.0, 0.5}, {3.0, 0.5}),
                  geom::PreconditionViolated);
  CHECK_THROWS_AS(geom::poly_line_intersect(h, {0.5, 0.5}, {0.6, 0.5}),
                  geom::PreconditionViolated);
}

TEST_CASE("poly_line_intersect matches a bisection oracle") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Box box{-5, -5, 5, 5};
    const Point2 inside(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    const Polytope h = oracles::random_polytope(rng, inside, box, 4);
    Point2 outside(rng.uniform(-20.0, 20.0), rng.uniform(-20.0, 20.0));
    if (h.contains(outside)) continue;

    const Point2 exit = geom::poly_line_intersect(h, inside, outside);

    // Bisection on membership along the segment.
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (h.contains(inside + mid * (outside - inside)) ? lo : hi) = mid;
    }
    const Point2 ref = inside + lo * (outside - inside);
    CHECK((exit - ref).norm() <= 1e-6);

    // On-segment and in-polytope properties.
    const double t = (exit - inside).norm() / (outside - inside).norm();
    CHECK(t >= -1e-12);
    CHECK(t <= 1.0 + 1e-12);
    CHECK(h.contains(exit, 1e-7));
    CHECK(std::abs(h.min_slack(exit)) <= 1e-7);  // on the boundary
  }
}

TEST_CASE("chebyshev center of overlapping and disjoint squares") {
  const Polytope a = Polytope::from_box({0, 0, 2, 2});
  const Polytope b = Polytope::from_box({1, 1, 3, 3});
  const auto ball = geom::chebyshev_center(a, b);
  REQUIRE(ball.has_value());
  CHECK(ball->center.x() == doctest::Approx(1.5).epsilon(1e-7));
  CHECK(ball->center.y() == doctest::Approx(1.5).epsilon(1e-7));
  CHECK(ball->radius == doctest::Approx(0.5).epsilon(1e-7));

  const Polytope c = Polytope::from_box({5, 5, 6, 6});
  CHECK_FALSE(geom::chebyshev_center(a, c).has_value());
}

TEST_CASE("chebyshev center of a polytope with itself") {
  Rng rng(19);
  for (int trial = 0; trial < 10; ++trial) {
    const Box box{-4, -4, 4, 4};
    const Point2 anchor(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    const Polytope h = oracles::random_polytope(rng, anchor, box, 3);
    const auto ball = geom::chebyshev_center(h, h);
    REQUIRE(ball.has_value());
    // The inscribed ball stays inside: sample 360 boundary directions.
    for (int d = 0; d < 360; ++d) {
      const double ang = 2.0 * M_PI * d / 360.0;
      const Point2 p = ball->center + ball->radius * Point2(std::cos(ang), std::sin(ang));
      CHECK(h.contains(p, 1e-7));
    }
  }
}

TEST_CASE("chebyshev center against the grid oracle on random hexagon pairs") {
  Rng rng(23);
  int compared = 0;
  for (int trial = 0; trial < 60 && compared < 20; ++trial) {
    const Box box{-3, -3, 3, 3};
    const Point2 a1(rng.uniform(-1.0, 0.2), rng.uniform(-1.0, 0.2));
    const Point2 a2(rng.uniform(-0.2, 1.0), rng.uniform(-0.2, 1.0));
    const Polytope h1 = oracles::random_polytope(rng, a1, box, 6);
    const Polytope h2 = oracles::random_polytope(rng, a2, box, 6);
    const auto ball = geom::chebyshev_center(h1, h2);
    if (!ball) continue;

    const auto ref = oracles::chebyshev_grid_oracle(h1, h2, box, 0.02);
    REQUIRE(ref.has_value());
    CHECK(std::abs(ball->radius - ref->second) <= 1e-3);

    // The returned center lies in both polytopes.
    CHECK(geom::point_in_polytope(h1, ball->center));
    CHECK(geom::point_in_polytope(h2, ball->center));
    ++compared;
  }
  CHECK(compared >= 20);
}

TEST_CASE("thin intersections are reported as empty") {
  const Polytope a = Polytope::from_box({0, 0, 1, 1});
  const Polytope b = Polytope::from_box({1.0 - 1e-4, 0, 2, 1});  // 0.1 mm overlap
  CHECK_FALSE(geom::chebyshev_center(a, b).has_value());
  CHECK(geom::chebyshev_center(a, b, 0.0).has_value());
}

TEST_CASE("segment collision tests") {
  const Box ws{0, 0, 10, 10};
  StaticMap empty = StaticMap::from_raw(ws, {}, 0.0);
  CHECK(geom::segment_collision_free({0, 0}, {10, 10}, empty));

  const ConvexPolygon obstacle =
      ConvexPolygon::from_points({{4, 4}, {6, 4}, {6, 6}, {4, 6}});
  StaticMap map = StaticMap::from_raw(ws, {obstacle}, 0.0);
  CHECK_FALSE(geom::segment_collision_free({0, 5}, {10, 5}, map));
  CHECK(geom::segment_collision_free({0, 1}, {10, 1}, map));
  // Touching the boundary counts as a collision (closed sets).
  CHECK_FALSE(geom::segment_collision_free({0, 4}, {10, 4}, map));
  // Margin variant requires clearance.
  CHECK_FALSE(geom::segment_collision_free({0, 3.9}, {10, 3.9}, map, 0.2));
}

TEST_CASE("segment collision agrees with a dense sampling oracle") {
  Rng rng(31);
  const Box ws{0, 0, 20, 20};
  std::vector<ConvexPolygon> raw;
  for (int i = 0; i < 6; ++i) {
    raw.push_back(oracles::random_convex_polygon(
        rng, {rng.uniform(3.0, 17.0), rng.uniform(3.0, 17.0)}, rng.uniform(0.8, 2.0)));
  }
  const StaticMap map = StaticMap::from_raw(ws, raw, 0.0);

  int disagreements = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Point2 a(rng.uniform(0.0, 20.0), rng.uniform(0.0, 20.0));
    const Point2 b(rng.uniform(0.0, 20.0), rng.uniform(0.0, 20.0));
    const bool exact = geom::segment_collision_free(a, b, map);
    const bool sampled = oracles::segment_free_sampling(a, b, map, 1000);
    // The sampling oracle can miss grazing contact; it must never claim a
    // collision where the exact test sees none.
    if (exact) {
      CHECK(sampled);
    } else if (sampled) {
      ++disagreements;  // grazing cases only
    }
  }
  CHECK(disagreements <= 5);
}

TEST_CASE("inflation basics") {
  const ConvexPolygon sq = unit_square();
  const ConvexPolygon same = geom::inflate_obstacle(sq, 0.0);
  CHECK(same.size() == 4);
  CHECK(same.area() == doctest::Approx(1.0));

  const ConvexPolygon inflated = geom::inflate_obstacle(sq, 0.5);
  CHECK(inflated.contains({-0.5, 0.5}, 1e-9));       // face pushed out by the radius
  CHECK_FALSE(inflated.contains({-0.53, 0.5}, 0.0));  // beyond the miter slack
  // Outer approximation of the disc sum: exact sum points are inside.
  for (int d = 0; d < 64; ++d) {
    const double ang = 2.0 * M_PI * d / 64.0;
    const Point2 p = Point2(1.0, 1.0) + 0.5 * Point2(std::cos(ang), std::sin(ang));
    CHECK(inflated.contains(p, 1e-9));
  }
}

TEST_CASE("inflated polygon keeps original vertices well inside") {
  Rng rng(37);
  for (int trial = 0; trial < 20; ++trial) {
    const ConvexPolygon tri = oracles::random_convex_polygon(
        rng, {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)}, rng.uniform(0.5, 2.0), 3, 3);
    const double r = 0.3;
    const ConvexPolygon big = geom::inflate_obstacle(tri, r);
    const Polytope hull = Polytope::from_polygon(big);
    for (const Point2& v : tri.vertices()) {
      CHECK(hull.min_slack(v) >= r - 1e-9);
    }
  }
}

TEST_CASE("inflation contains the exact minkowski sum on random polygons") {
  Rng rng(41);
  for (int trial = 0; trial < 15; ++trial) {
    const ConvexPolygon poly = oracles::random_convex_polygon(
        rng, {0.0, 0.0}, rng.uniform(0.5, 2.5));
    const double r = rng.uniform(0.1, 0.8);
    const ConvexPolygon big = geom::inflate_obstacle(poly, r);
    // Sample boundary points of the exact sum: polygon boundary + r * disc.
    const auto& verts = poly.vertices();
    for (std::size_t i = 0; i < verts.size(); ++i) {
      for (int s = 0; s <= 10; ++s) {
        const Point2 base =
            verts[i] + (verts[(i + 1) % verts.size()] - verts[i]) * (s / 10.0);
        for (int d = 0; d < 16; ++d) {
          const double ang = 2.0 * M_PI * d / 16.0;
          const Point2 p = base + r * Point2(std::cos(ang), std::sin(ang));
          CHECK(big.contains(p, 1e-9));
        }
      }
    }
  }
}

TEST_CASE("clip to box") {
  const ConvexPolygon sq =
      ConvexPolygon::from_points({{-1, -1}, {3, -1}, {3, 3}, {-1, 3}});
  const ConvexPolygon clipped = geom::clip_to_box(sq, {0, 0, 2, 2});
  CHECK(clipped.area() == doctest::Approx(4.0));
  CHECK_THROWS_AS(geom::clip_to_box(sq, {10, 10, 12, 12}), std::invalid_argument);
}

TEST_CASE("polytope vertex enumeration and area") {
  const Polytope h = unit_square_polytope();
  const auto verts = h.vertices();
  REQUIRE(verts.size() == 4);
  CHECK(h.area() == doctest::Approx(1.0));
}
