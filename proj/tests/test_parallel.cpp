#include <doctest.h>

#include <cmath>

#include "coopnav/kinematics.hpp"
#include "coopnav/nlp.hpp"
#include "coopnav/nmpc.hpp"
#include "coopnav/rng.hpp"
#include "coopnav/sim.hpp"

using namespace coopnav;

TEST_CASE("parallel finite differences are bitwise equal to the serial reference") {
  // Representative planner objective: the hot kernel the OpenMP path exists
  // for. Per-component arithmetic is identical, so results must match
  // exactly regardless of thread count.
  NmpcProblem problem;
  problem.estimate = to_stacked({VehicleState::make(0, 0, 0.3),
                                 VehicleState::make(15, 10, -0.8),
                                 VehicleState::make(30, 5, 1.4)});
  problem.destinations = {{60, 40}, {-5, 35}, {50, -10}};
  problem.landmarks = {{0, 10, 10}, {1, 30, 0}, {2, 45, 25}};
  problem.sigma_p2_now = {1.0, 2.0, 0.5};
  problem.arrived = {false, false, false};
  problem.params.horizon_steps = 30;
  problem.params.control_hold_steps = 5;
  problem.params.rs = 30.0;

  const auto cost = [&](const Eigen::VectorXd& u) { return nmpc_objective(u, problem); };
  RngStream rng(83);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd u(problem.n_vars());
    for (int c = 0; c < u.size(); ++c) u[c] = rng.uniform(-1.0, 1.0);
    const Eigen::VectorXd serial = nlp::finite_diff_grad(cost, u, kNmpcFdStep);
    const Eigen::VectorXd parallel = nlp::finite_diff_grad_parallel(cost, u, kNmpcFdStep);
    REQUIRE(serial == parallel);
  }
}

TEST_CASE("parallel monte carlo equals the serial run") {
  Scenario base;
  base.vehicles = {{VehicleState::make(10, 10, 0.2), {60, 55}},
                   {VehicleState::make(15, 40, -0.4), {70, 20}}};
  base.landmarks = {{0, 30, 30}, {1, 55, 40}, {2, 45, 12}};
  base.arena_max_x_m = 100;
  base.arena_max_y_m = 100;
  base.tau_h_s = 1.5;
  base.control_hold_steps = 5;
  base.replan_every_steps = 5;
  base.seed = 77;
  validate_scenario(base);

  const auto serial =
      run_monte_carlo(base, 4, "", {}, EstimatorKind::ekf, true, 30, 1);
  const auto parallel =
      run_monte_carlo(base, 4, "", {}, EstimatorKind::ekf, true, 30, 2);

  REQUIRE(serial.cells.size() == parallel.cells.size());
  for (std::size_t c = 0; c < serial.cells.size(); ++c) {
    REQUIRE(serial.cells[c].runs.size() == parallel.cells[c].runs.size());
    for (std::size_t r = 0; r < serial.cells[c].runs.size(); ++r) {
      CHECK(serial.cells[c].runs[r].seed == parallel.cells[c].runs[r].seed);
      CHECK(serial.cells[c].runs[r].mean_mse_m2 == parallel.cells[c].runs[r].mean_mse_m2);
      CHECK(serial.cells[c].runs[r].total_path_length_m ==
            parallel.cells[c].runs[r].total_path_length_m);
    }
    CHECK(serial.cells[c].median_mse_m2 == parallel.cells[c].median_mse_m2);
  }
}
