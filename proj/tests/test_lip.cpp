#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lipnav/lip.hpp"
#include "lipnav/rng.hpp"
#include "oracles.hpp"

using namespace lipnav;
using lip::LipInput;
using lip::LipParams;
using lip::LipState;
using lip::Stance;
using lip::StanceBounds;

namespace {

const LipParams kParams = LipParams::make(0.3, 0.91, 9.81);

LipState random_state(Rng& rng) {
  LipState x;
  x.x = rng.uniform(-5.0, 5.0);
  x.xdot = rng.uniform(-1.5, 1.5);
  x.y = rng.uniform(-5.0, 5.0);
  x.ydot = rng.uniform(-1.5, 1.5);
  x.theta = rng.uniform(-M_PI, M_PI);
  return x;
}

LipInput random_input(Rng& rng) {
  return {rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.3, 0.3)};
}

}  // namespace

TEST_CASE("step matrices against the scalar closed form") {
  const auto [a, b] = lip::step_matrices(kParams);

  // Scalar oracle, evaluated directly from the hyperbolic expressions.
  const double w = std::sqrt(9.81 / 0.91);
  CHECK(kParams.omega == doctest::Approx(w).epsilon(1e-14));
  CHECK(kParams.omega == doctest::Approx(3.28332).epsilon(1e-5));
  const double ch = std::cosh(w * 0.3);
  const double sh = std::sinh(w * 0.3);
  CHECK(ch == doctest::Approx(1.52562).epsilon(1e-5));
  CHECK(sh == doctest::Approx(1.15218).epsilon(1e-5));

  CHECK(a(0, 0) == 1.0);
  CHECK(a(0, 1) == doctest::Approx(sh / w).epsilon(1e-14));
  CHECK(a(1, 1) == doctest::Approx(ch).epsilon(1e-14));
  CHECK(a(2, 3) == doctest::Approx(sh / w).epsilon(1e-14));
  CHECK(b(0, 0) == doctest::Approx(1.0 - ch).epsilon(1e-14));
  CHECK(b(1, 0) == doctest::Approx(-w * sh).epsilon(1e-14));
  CHECK(b(3, 1) == doctest::Approx(-w * sh).epsilon(1e-14));

  // Heading block is exactly 1 for any parameters.
  CHECK(a(4, 4) == 1.0);
  CHECK(b(4, 2) == 1.0);
  for (int i = 0; i < 4; ++i) {
    CHECK(a(4, i) == 0.0);
    CHECK(a(i, 4) == 0.0);
    CHECK(b(i, 2) == 0.0);
  }
}

TEST_CASE("zero-duration limit") {
  const auto [a, b] = lip::step_matrices(LipParams::make(1e-9, 0.91, 9.81));
  CHECK((a - lip::Mat5::Identity()).norm() <= 1e-7);
  for (int r = 0; r < 4; ++r) {
    CHECK(std::abs(b(r, 0)) <= 1e-7);
    CHECK(std::abs(b(r, 1)) <= 1e-7);
  }
  CHECK(b(4, 2) == 1.0);
}

TEST_CASE("step basics") {
  const LipState zero;
  const LipState still = lip::step(zero, {0, 0, 0}, kParams);
  CHECK(still.vec().norm() == 0.0);

  // A pure heading input changes only theta.
  const LipState turned = lip::step(zero, {0, 0, 0.1}, kParams);
  CHECK(turned.theta == doctest::Approx(0.1));
  CHECK(turned.x == 0.0);
  CHECK(turned.xdot == 0.0);
  CHECK(turned.y == 0.0);
  CHECK(turned.ydot == 0.0);
}

TEST_CASE("discrete step matches the RK4 oracle on 1000 random cases") {
  Rng rng(101);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const LipState x = random_state(rng);
    const LipInput u = random_input(rng);
    const LipState got = lip::step(x, u, kParams);
    const LipState ref = oracles::rk4_propagate(x, u, kParams.step_duration, kParams);
    worst = std::max({worst, std::abs(got.x - ref.x), std::abs(got.xdot - ref.xdot),
                      std::abs(got.y - ref.y), std::abs(got.ydot - ref.ydot)});
    CHECK(got.theta == doctest::Approx(ref.theta).epsilon(1e-12));
  }
  CHECK(worst <= 1e-7);
}

TEST_CASE("propagate_continuous consistency and semigroup property") {
  Rng rng(102);
  for (int i = 0; i < 200; ++i) {
    const LipState x = random_state(rng);
    const LipInput u = random_input(rng);

    // Full-step propagation equals the discrete step.
    const LipState full = lip::propagate_continuous(x, u, kParams.step_duration, kParams);
    const LipState stepd = lip::step(x, u, kParams);
    CHECK((full.vec() - stepd.vec()).lpNorm<Eigen::Infinity>() <= 1e-9);

    // Half then half equals full; the foot stays planted at COM(0) + u, so
    // the second half carries the offset relative to the mid state. The
    // heading exchange is a discrete event at the true step end, applied by
    // hand here since the second half ends early in its own clock.
    const double half = 0.5 * kParams.step_duration;
    const LipState mid = lip::propagate_continuous(x, u, half, kParams);
    CHECK(mid.theta == x.theta);
    LipInput u_mid;
    u_mid.ux = (x.x + u.ux) - mid.x;
    u_mid.uy = (x.y + u.uy) - mid.y;
    u_mid.utheta = u.utheta;
    LipState again = lip::propagate_continuous(mid, u_mid, half, kParams);
    again.theta = lip::wrap_angle(again.theta + u.utheta);
    CHECK((again.vec() - full.vec()).lpNorm<Eigen::Infinity>() <= 1e-9);
  }
}

TEST_CASE("equilibrium stays put") {
  LipState x;
  x.x = 1.0;
  x.y = -2.0;
  x.theta = 0.4;
  for (double t : {0.0, 0.1, 0.2, 0.3}) {
    const LipState s = lip::propagate_continuous(x, {0, 0, 0}, t, kParams);
    CHECK(s.x == doctest::Approx(1.0));
    CHECK(s.y == doctest::Approx(-2.0));
    CHECK(s.xdot == doctest::Approx(0.0));
    CHECK(s.ydot == doctest::Approx(0.0));
  }
}

TEST_CASE("output projection") {
  LipState x{1, 2, 3, 4, 5};
  CHECK(lip::output(x) == Point2(1, 3));
  CHECK(lip::output(LipState{}) == Point2(0, 0));
  const LipState nxt = lip::step(x, {0.1, 0.2, 0.0}, kParams);
  CHECK(lip::output(nxt).x() == doctest::Approx(nxt.x));
}

TEST_CASE("x and y channels are decoupled") {
  Rng rng(103);
  for (int i = 0; i < 100; ++i) {
    LipState x = random_state(rng);
    LipInput u = random_input(rng);
    const LipState both = lip::step(x, u, kParams);
    x.y = 0.0;
    x.ydot = 0.0;
    u.uy = 0.0;
    const LipState xonly = lip::step(x, u, kParams);
    CHECK(xonly.x == doctest::Approx(both.x).epsilon(1e-14));
    CHECK(xonly.xdot == doctest::Approx(both.xdot).epsilon(1e-14));
  }
}

TEST_CASE("heading accumulates exactly modulo the wrap") {
  Rng rng(104);
  LipState x;
  double total = 0.0;
  for (int k = 0; k < 200; ++k) {
    const double du = rng.uniform(-0.3, 0.3);
    x = lip::step(x, {0.0, 0.0, du}, kParams);
    total += du;
    CHECK(x.theta == doctest::Approx(lip::wrap_angle(total)).epsilon(1e-11));
    CHECK(x.theta <= M_PI);
    CHECK(x.theta > -M_PI);
  }
}

TEST_CASE("constraint residuals with the default bounds") {
  const StanceBounds bounds;
  LipState x;
  const LipInput ok{0.1, -0.3, 0.0};
  const LipState xn = lip::step(x, ok, kParams);
  const Eigen::VectorXd r = lip::constraint_residuals(x, ok, xn, Stance::Left, bounds);
  REQUIRE(r.size() == 7);  // travel lower bound is vacuous at zero
  CHECK(r.minCoeff() >= 0.0);

  // Forward reach beyond 0.5 m flips the second residual negative.
  const LipInput far{0.6, -0.3, 0.0};
  const LipState xf = lip::step(x, far, kParams);
  const Eigen::VectorXd rf = lip::constraint_residuals(x, far, xf, Stance::Left, bounds);
  CHECK(rf(1) < 0.0);

  // Same lateral offset on the wrong side violates the right-stance band.
  const Eigen::VectorXd rr = lip::constraint_residuals(x, ok, xn, Stance::Right, bounds);
  CHECK(rr(2) < 0.0);

  // A nonzero lower travel bound adds the eighth residual.
  StanceBounds with_min = bounds;
  with_min.travel_min = 0.05;
  const Eigen::VectorXd r8 =
      lip::constraint_residuals(x, ok, xn, Stance::Left, with_min);
  CHECK(r8.size() == 8);
}

TEST_CASE("residuals are invariant under joint rotation") {
  Rng rng(105);
  const StanceBounds bounds;
  for (int i = 0; i < 200; ++i) {
    LipState x = random_state(rng);
    const LipInput u = random_input(rng);
    const LipState xn = lip::step(x, u, kParams);
    const Eigen::VectorXd r0 = lip::constraint_residuals(x, u, xn, Stance::Left, bounds);

    const double rot = rng.uniform(-M_PI, M_PI);
    const double c = std::cos(rot), s = std::sin(rot);
    LipState xr = x;
    xr.theta = x.theta + rot;  // deliberately unwrapped; residuals use cos/sin
    xr.x = c * x.x - s * x.y;
    xr.y = s * x.x + c * x.y;
    xr.xdot = c * x.xdot - s * x.ydot;
    xr.ydot = s * x.xdot + c * x.ydot;
    const LipInput ur{c * u.ux - s * u.uy, s * u.ux + c * u.uy, u.utheta};
    const LipState xnr = lip::step(xr, ur, kParams);
    const Eigen::VectorXd r1 = lip::constraint_residuals(xr, ur, xnr, Stance::Left, bounds);
    CHECK((r0 - r1).lpNorm<Eigen::Infinity>() <= 1e-9);
  }
}

TEST_CASE("predict_step_end") {
  Rng rng(106);
  for (int i = 0; i < 200; ++i) {
    const LipState x = random_state(rng);
    const LipInput u = random_input(rng);
    const Point2 foot(x.x + u.ux, x.y + u.uy);

    // Full-step prediction from the start equals the discrete step with the
    // heading held (the exchange applies the heading change separately).
    const LipState predicted = lip::predict_step_end(x, foot, 0.0, kParams);
    const LipState stepped = lip::step(x, {u.ux, u.uy, 0.0}, kParams);
    CHECK(std::abs(predicted.x - stepped.x) <= 1e-12);
    CHECK(std::abs(predicted.xdot - stepped.xdot) <= 1e-12);
    CHECK(std::abs(predicted.y - stepped.y) <= 1e-12);
    CHECK(std::abs(predicted.ydot - stepped.ydot) <= 1e-12);
    CHECK(predicted.theta == x.theta);

    // Mid-step prediction agrees with the RK4 oracle.
    const double xi = rng.uniform(0.0, kParams.step_duration * 0.99);
    const LipState mid = oracles::rk4_propagate(x, u, xi, kParams);
    const LipState end_pred = lip::predict_step_end(mid, foot, xi, kParams);
    const LipState end_ref = oracles::rk4_propagate(x, u, kParams.step_duration, kParams);
    CHECK(std::abs(end_pred.x - end_ref.x) <= 1e-7);
    CHECK(std::abs(end_pred.xdot - end_ref.xdot) <= 1e-7);
    CHECK(std::abs(end_pred.y - end_ref.y) <= 1e-7);
    CHECK(std::abs(end_pred.ydot - end_ref.ydot) <= 1e-7);
  }

  // Vanishing remaining time returns the feedback state unchanged.
  const LipState x = random_state(rng);
  const LipState same =
      lip::predict_step_end(x, {x.x + 0.1, x.y}, kParams.step_duration - 1e-13, kParams);
  CHECK(same.vec() == x.vec());
}

TEST_CASE("angle helpers") {
  CHECK(lip::wrap_angle(M_PI) == doctest::Approx(M_PI));
  CHECK(lip::wrap_angle(-M_PI) == doctest::Approx(M_PI));
  CHECK(lip::wrap_angle(3 * M_PI) == doctest::Approx(M_PI));
  CHECK(lip::wrap_angle(0.1) == doctest::Approx(0.1));
  CHECK(lip::angle_diff(0.1, -0.1) == doctest::Approx(0.2));
  CHECK(lip::angle_diff(M_PI - 0.05, -M_PI + 0.05) == doctest::Approx(-0.1));
}
