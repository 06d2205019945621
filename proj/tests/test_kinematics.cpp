#include <doctest.h>

#include <cmath>

#include "coopnav/kinematics.hpp"

using namespace coopnav;

TEST_CASE("wrap_angle convention (-pi, pi]") {
  CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(7.5 * kPi) == doctest::Approx(-0.5 * kPi));
  CHECK(wrap_angle(0.25) == doctest::Approx(0.25));
  CHECK_THROWS_AS(wrap_angle(std::nan("")), std::domain_error);
  for (double t = -50.0; t < 50.0; t += 0.7) {
    const double w = wrap_angle(t);
    CHECK(w > -kPi);
    CHECK(w <= kPi);
    CHECK(std::remainder(w - t, kTwoPi) == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("straight-line and axis-aligned steps") {
  const auto a = step(VehicleState::make(0, 0, 0), {0.0}, 5.0, 0.1);
  CHECK(a.x == doctest::Approx(0.5));
  CHECK(a.y == doctest::Approx(0.0));
  CHECK(a.psi == doctest::Approx(0.0));

  const auto b = step(VehicleState::make(0, 0, kPi / 2), {0.0}, 5.0, 0.1);
  CHECK(b.x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(b.y == doctest::Approx(0.5));
  CHECK(b.psi == doctest::Approx(kPi / 2));
}

TEST_CASE("Euler turn stays within O(Ts) of the analytic arc") {
  // Closed-form unicycle arc: (x, y) = (v/w)(sin wt, 1 - cos wt).
  const double v = 5.0, w = kPi / 2, ts = 0.1;
  VehicleState s = VehicleState::make(0, 0, 0);
  for (int k = 0; k < 40; ++k) s = step(s, {w}, v, ts);
  const double t = 4.0;
  const double ax = (v / w) * std::sin(w * t);
  const double ay = (v / w) * (1.0 - std::cos(w * t));
  const double err = std::hypot(s.x - ax, s.y - ay);
  CHECK(err <= 0.5);
}

TEST_CASE("step is exact for omega = 0") {
  const VehicleState s = VehicleState::make(3.2, -1.1, 0.9);
  const auto next = step(s, {0.0}, 4.0, 0.25);
  const double disp = std::hypot(next.x - s.x, next.y - s.y);
  CHECK(disp == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(next.psi == s.psi);
}

TEST_CASE("rotational equivariance") {
  const double alpha = 0.83;
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  const VehicleState s = VehicleState::make(2.0, -3.0, 0.4);
  const ControlInput u{0.7};

  const auto direct = step(s, u, 5.0, 0.1);
  const VehicleState rotated =
      VehicleState::make(ca * s.x - sa * s.y, sa * s.x + ca * s.y, s.psi + alpha);
  const auto stepped = step(rotated, u, 5.0, 0.1);
  const VehicleState back = VehicleState::make(
      ca * stepped.x + sa * stepped.y, -sa * stepped.x + ca * stepped.y,
      stepped.psi - alpha);
  CHECK(back.x == doctest::Approx(direct.x).epsilon(1e-12));
  CHECK(back.y == doctest::Approx(direct.y).epsilon(1e-12));
  CHECK(wrap_angle(back.psi - direct.psi) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("propagate composes steps") {
  std::vector<VehicleState> init{VehicleState::make(0, 0, 0.3)};
  const Eigen::VectorXd x0 = to_stacked(init);

  SUBCASE("single step reproduces step") {
    const auto traj = propagate(x0, {{0.2}}, 5.0, 0.1);
    REQUIRE(traj.states.size() == 2);
    const auto direct = step(init[0], {0.2}, 5.0, 0.1);
    CHECK(traj.states[1][0] == doctest::Approx(direct.x));
    CHECK(traj.states[1][1] == doctest::Approx(direct.y));
    CHECK(traj.states[1][2] == doctest::Approx(direct.psi));
  }

  SUBCASE("semigroup property") {
    const std::vector<std::vector<double>> part1{{0.2}, {-0.1}};
    const std::vector<std::vector<double>> part2{{0.5}, {0.0}, {0.3}};
    std::vector<std::vector<double>> whole = part1;
    whole.insert(whole.end(), part2.begin(), part2.end());

    const auto full = propagate(x0, whole, 5.0, 0.1);
    const auto first = propagate(x0, part1, 5.0, 0.1);
    const auto second = propagate(first.states.back(), part2, 5.0, 0.1);
    CHECK((full.states.back() - second.states.back()).cwiseAbs().maxCoeff() <= 1e-14);
  }

  SUBCASE("empty control list rejected") {
    CHECK_THROWS_AS(propagate(x0, {}, 5.0, 0.1), std::invalid_argument);
  }
}

TEST_CASE("multi-vehicle propagation decouples per block") {
  std::vector<VehicleState> init{VehicleState::make(0, 0, 0),
                                 VehicleState::make(10, 5, 1.0),
                                 VehicleState::make(-4, 2, -2.0)};
  const std::vector<std::vector<double>> controls{{0.1, -0.3, 0.5}, {0.0, 0.2, -0.5}};
  const auto joint = propagate(to_stacked(init), controls, 5.0, 0.1);

  for (int i = 0; i < 3; ++i) {
    std::vector<std::vector<double>> own;
    for (const auto& c : controls) own.push_back({c[i]});
    const auto solo = propagate(to_stacked({init[i]}), own, 5.0, 0.1);
    for (std::size_t k = 0; k < solo.states.size(); ++k) {
      CHECK((joint.states[k].segment(3 * i, 3) - solo.states[k]).cwiseAbs().maxCoeff() <=
            1e-15);
    }
  }
}

TEST_CASE("propagate stays finite for bounded inputs") {
  std::vector<std::vector<double>> controls(500, {kPi / 2});
  const auto traj = propagate(to_stacked({VehicleState::make(0, 0, 0)}), controls, 5.0, 0.1);
  for (const auto& x : traj.states) CHECK(x.allFinite());
}

TEST_CASE("frozen vehicles do not move in step_stacked") {
  std::vector<VehicleState> init{VehicleState::make(0, 0, 0), VehicleState::make(5, 5, 1)};
  const Eigen::VectorXd x0 = to_stacked(init);
  const auto next = step_stacked(x0, {0.3, 0.3}, {true, false}, 5.0, 0.1);
  CHECK(next.segment(3, 3) == x0.segment(3, 3));
  CHECK(next[0] != x0[0]);
}
