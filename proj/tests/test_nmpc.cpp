#include <doctest.h>

#include <cmath>

#include "coopnav/kinematics.hpp"
#include "coopnav/nmpc.hpp"
#include "coopnav/rng.hpp"

using namespace coopnav;

namespace {

NmpcProblem goal_only_problem(const VehicleState& start, const Eigen::Vector2d& goal,
                              int horizon, int hold) {
  NmpcProblem problem;
  problem.estimate = to_stacked({start});
  problem.destinations = {goal};
  problem.sigma_p2_now = {0.01};
  problem.arrived = {false};
  problem.params.horizon_steps = horizon;
  problem.params.control_hold_steps = hold;
  problem.params.w_connectivity = 0.0;  // goal seeking only
  return problem;
}

}  // namespace

TEST_CASE("goal cost is squared distance and translation invariant") {
  CHECK(c1_cost({3, 4}, {3, 4}) == 0.0);
  CHECK(c1_cost({0, 0}, {3, 4}) == doctest::Approx(25.0));
  CHECK(c1_cost({10, -2}, {13, 2}) == doctest::Approx(25.0));
}

TEST_CASE("connectivity shortfall cost") {
  CHECK(c2_cost(2.0, 2.0) == 0.0);
  CHECK(c2_cost(0.0, 2.0) == doctest::Approx(4.0));
  CHECK(c2_cost(3.0, 2.0) == 0.0);
  // Continuous at the boundary.
  CHECK(c2_cost(2.0 - 1e-9, 2.0) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("adaptive weight switches on the 3-sigma bound") {
  CHECK(adaptive_weight(1.0, 3.0, 10000.0) == doctest::Approx(10000.0));  // 3s == sc
  CHECK(adaptive_weight(0.0, 3.0, 10000.0) == 0.0);
  CHECK(adaptive_weight(3.0, 3.0, 10000.0) == doctest::Approx(10000.0));
  CHECK(adaptive_weight(0.9, 3.0, 500.0) == 0.0);
}

TEST_CASE("series normalization") {
  CHECK(normalize_series({2, 4, 6}) == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(normalize_series({7, 7, 7}) == std::vector<double>{0.0, 0.0, 0.0});
  RngStream rng(71);
  std::vector<double> values;
  for (int i = 0; i < 40; ++i) values.push_back(rng.uniform(-50, 50));
  for (double v : normalize_series(values)) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK_THROWS_AS(normalize_series({}), std::invalid_argument);
}

TEST_CASE("goal-only objective rewards plans that reach the goal in-horizon") {
  // Goal 15 m ahead: flying straight arrives and parks at the series
  // minimum, while circling never does.
  auto problem = goal_only_problem(VehicleState::make(0, 0, kPi / 2), {0, 15}, 40, 5);
  Eigen::VectorXd straight = Eigen::VectorXd::Zero(problem.n_vars());
  Eigen::VectorXd circling(problem.n_vars());
  circling.setConstant(kPi / 2);
  CHECK(nmpc_objective(straight, problem) < nmpc_objective(circling, problem));
}

TEST_CASE("frozen warm-start scales restore goal pull beyond the horizon") {
  // Far goal: under self-normalization any monotone distance series flattens
  // to the same ramp, so the solve scales against its warm start instead.
  auto problem = goal_only_problem(VehicleState::make(0, 0, kPi / 2), {200, 0}, 20, 5);
  Eigen::VectorXd toward(problem.n_vars()), away(problem.n_vars());
  toward.setConstant(-kPi / 2);
  away.setConstant(kPi / 2);
  const auto scales = series_scales(Eigen::VectorXd::Zero(problem.n_vars()), problem);
  CHECK(nmpc_objective(toward, problem, nullptr, &scales) <
        nmpc_objective(away, problem, nullptr, &scales));
}

TEST_CASE("objective is zero when all vehicles rest at goals with strong connectivity") {
  // Three vehicles parked at their destinations inside a tight cluster of
  // three landmarks: every local graph stays above the connectivity target.
  NmpcProblem problem;
  std::vector<VehicleState> states{VehicleState::make(0, 0, 0),
                                   VehicleState::make(1.2, 0, 0),
                                   VehicleState::make(0.6, 1.0, 0)};
  problem.estimate = to_stacked(states);
  problem.destinations = {{0, 0}, {1.2, 0}, {0.6, 1.0}};
  problem.landmarks = {{0, 0.0, 0.6}, {1, 1.2, 0.6}, {2, 0.6, -0.6}};
  problem.sigma_p2_now = {4.0, 4.0, 4.0};  // W active
  problem.arrived = {true, true, true};
  problem.params.horizon_steps = 30;
  problem.params.control_hold_steps = 5;

  CostBreakdown breakdown;
  const double j = nmpc_objective(Eigen::VectorXd::Zero(problem.n_vars()), problem,
                                  &breakdown);
  CHECK(j == 0.0);
  for (const auto& steps : breakdown.vehicle_steps) {
    for (const auto& sc : steps) {
      CHECK(sc.lambda >= problem.params.eta);
      CHECK(sc.c2_raw == 0.0);
      CHECK(sc.c2_norm == 0.0);
    }
  }
}

TEST_CASE("plans that hold sensor contact win when uncertainty is critical") {
  // One vehicle beside a single landmark, goal far to the east. Straight
  // flight leaves the landmark's range mid-horizon; orbiting the landmark
  // keeps the local graph above the connectivity target the whole horizon.
  NmpcProblem problem;
  problem.estimate = to_stacked({VehicleState::make(0, 0, 0)});
  problem.destinations = {{200, 0}};
  problem.landmarks = {{0, 0, 3}};
  problem.sigma_p2_now = {9.0};
  problem.arrived = {false};
  problem.params.horizon_steps = 40;
  problem.params.control_hold_steps = 5;
  problem.params.rs = 12.0;
  problem.params.eta = 0.2;  // reachable for a single vehicle-landmark pair
  problem.params.goal_radius = 1.0;

  Eigen::VectorXd straight = Eigen::VectorXd::Zero(problem.n_vars());
  Eigen::VectorXd orbit(problem.n_vars());
  orbit.setConstant(kPi / 2);  // circles the landmark at the turn radius

  CostBreakdown bd_straight, bd_orbit;
  const double j_straight = nmpc_objective(straight, problem, &bd_straight);
  const double j_orbit = nmpc_objective(orbit, problem, &bd_orbit);

  // The straight plan must actually lose contact; the orbit must hold the
  // connectivity target throughout.
  CHECK(bd_straight.vehicle_steps[0].back().lambda == 0.0);
  for (const auto& sc : bd_orbit.vehicle_steps[0]) {
    CHECK(sc.lambda >= problem.params.eta);
  }
  CHECK(j_orbit < j_straight);
}

TEST_CASE("normalized breakdown values stay in range") {
  NmpcProblem problem;
  problem.estimate = to_stacked({VehicleState::make(0, 0, 0.3),
                                 VehicleState::make(20, 5, -0.9)});
  problem.destinations = {{60, 40}, {-10, 30}};
  problem.landmarks = {{0, 10, 10}, {1, 30, 0}};
  problem.sigma_p2_now = {1.0, 1.0};
  problem.arrived = {false, false};
  problem.params.horizon_steps = 25;
  problem.params.control_hold_steps = 5;
  problem.params.rs = 25.0;

  RngStream rng(73);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd u(problem.n_vars());
    for (int c = 0; c < u.size(); ++c) u[c] = rng.uniform(-kPi / 2, kPi / 2);
    CostBreakdown breakdown;
    const double j = nmpc_objective(u, problem, &breakdown);
    CHECK(j >= 0.0);
    for (const auto& steps : breakdown.vehicle_steps) {
      for (const auto& sc : steps) {
        CHECK(sc.c1_norm >= 0.0);
        CHECK(sc.c1_norm <= 1.0);
        CHECK(sc.c2_norm >= 0.0);
        CHECK(sc.c2_norm <= 1.0);
      }
    }
  }
}

TEST_CASE("objective evaluation is deterministic") {
  auto problem = goal_only_problem(VehicleState::make(3, -2, 0.7), {50, 10}, 30, 5);
  Eigen::VectorXd u(problem.n_vars());
  u.setConstant(0.21);
  const double a = nmpc_objective(u, problem);
  const double b = nmpc_objective(u, problem);
  CHECK(a == b);
}

TEST_CASE("solver gradient wiring matches the shared differencing scheme") {
  auto problem = goal_only_problem(VehicleState::make(0, 0, 0.4), {40, 20}, 20, 5);
  problem.landmarks = {{0, 10, 0}};
  problem.params.w_connectivity = 10000.0;
  problem.params.rs = 18.0;

  RngStream rng(79);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd u(problem.n_vars());
    for (int c = 0; c < u.size(); ++c) u[c] = rng.uniform(-1.2, 1.2);
    const Eigen::VectorXd solver_grad = nmpc_gradient(u, problem);
    const Eigen::VectorXd reference = nlp::finite_diff_grad(
        [&](const Eigen::VectorXd& v) { return nmpc_objective(v, problem); }, u,
        kNmpcFdStep);
    const double scale = std::max(1.0, reference.cwiseAbs().maxCoeff());
    REQUIRE((solver_grad - reference).cwiseAbs().maxCoeff() / scale <= 1e-6);
  }
}

TEST_CASE("nmpc_step basics") {
  nlp::SolverOptions opts;
  opts.max_iters = 12;

  SUBCASE("arrived and well-localized vehicle holds zero turn rate") {
    auto problem = goal_only_problem(VehicleState::make(10, 10, 0.2), {10, 10}, 20, 5);
    problem.arrived = {true};
    const auto result = nmpc_step(problem, opts);
    CHECK(std::abs(result.controls[0]) <= 1e-3);
  }

  SUBCASE("heading north with the goal due east turns clockwise") {
    auto problem = goal_only_problem(VehicleState::make(0, 0, kPi / 2), {30, 0}, 20, 5);
    const auto result = nmpc_step(problem, opts);
    CHECK(result.controls[0] < 0.0);
  }

  SUBCASE("returned controls respect the bounds") {
    auto problem = goal_only_problem(VehicleState::make(0, 0, kPi), {100, 0}, 30, 5);
    const auto result = nmpc_step(problem, opts);
    for (double w : result.controls) {
      CHECK(w >= problem.params.omega_min);
      CHECK(w <= problem.params.omega_max);
    }
    for (int c = 0; c < result.plan.size(); ++c) {
      CHECK(result.plan[c] >= problem.params.omega_min);
      CHECK(result.plan[c] <= problem.params.omega_max);
    }
  }
}

TEST_CASE("closed-loop distance to goal shrinks once roughly aligned") {
  nlp::SolverOptions opts;
  opts.max_iters = 10;
  VehicleState state = VehicleState::make(0, 0, 1.2);
  const Eigen::Vector2d goal(40, 0);

  Eigen::VectorXd plan;
  double prev_dist = (state.position() - goal).norm();
  bool aligned = false;
  for (int t = 0; t < 160; ++t) {
    auto problem = goal_only_problem(state, goal, 20, 5);
    if (plan.size() == problem.n_vars()) problem.warm_start = shift_plan(plan, problem, 1);
    const auto result = nmpc_step(problem, opts);
    plan = result.plan;
    state = step(state, {result.controls[0]}, problem.params.v, problem.params.ts);

    const double dist = (state.position() - goal).norm();
    const double heading_err =
        std::abs(wrap_angle(std::atan2(goal.y() - state.y, goal.x() - state.x) - state.psi));
    if (dist <= problem.params.goal_radius) break;
    if (aligned) CHECK(dist <= prev_dist + 1e-9);
    if (heading_err < kPi / 2 - 0.2) aligned = true;
    prev_dist = dist;
  }
  CHECK((state.position() - goal).norm() <= 5.0);
}

TEST_CASE("plan shifting resamples by elapsed steps") {
  NmpcProblem problem;
  problem.estimate = to_stacked({VehicleState::make(0, 0, 0)});
  problem.destinations = {{10, 0}};
  problem.sigma_p2_now = {0.0};
  problem.arrived = {false};
  problem.params.horizon_steps = 20;
  problem.params.control_hold_steps = 5;  // 4 segments

  Eigen::VectorXd plan(4);
  plan << 1, 2, 3, 4;
  const Eigen::VectorXd shifted = shift_plan(plan, problem, 5);
  CHECK(shifted[0] == 2);
  CHECK(shifted[1] == 3);
  CHECK(shifted[2] == 4);
  CHECK(shifted[3] == 4);  // last entry repeated

  const Eigen::VectorXd part = shift_plan(plan, problem, 3);
  CHECK(part[0] == 1);  // still inside segment 0
  CHECK(part[3] == 4);
}
