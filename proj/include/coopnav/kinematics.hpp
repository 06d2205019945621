#pragma once

#include <vector>

#include <Eigen/Core>

#include "coopnav/world.hpp"

namespace coopnav {

// Stacked trajectory: one entry per time step, each a 3*n_vehicles vector
// laid out [x_0, y_0, psi_0, x_1, y_1, psi_1, ...].
struct Trajectory {
  std::vector<Eigen::VectorXd> states;
  double dt = 0.0;
};

Eigen::VectorXd to_stacked(const std::vector<VehicleState>& states);
std::vector<VehicleState> from_stacked(const Eigen::VectorXd& x);

// One forward-Euler step of the unicycle model.
VehicleState step(const VehicleState& state, const ControlInput& u, double v, double ts);

// Stacked Euler step; vehicles with active[i] == false are frozen in place
// (used once a vehicle has arrived at its goal).
Eigen::VectorXd step_stacked(const Eigen::VectorXd& x, const std::vector<double>& omegas,
                             const std::vector<bool>& active, double v, double ts);

// Jacobian of step_stacked w.r.t. the stacked state (block diagonal;
// identity blocks for frozen vehicles).
Eigen::MatrixXd step_jacobian(const Eigen::VectorXd& x, const std::vector<bool>& active,
                              double v, double ts);

// Roll the plant forward; element 0 of the result equals `initial`.
// controls[k] holds one omega per vehicle for the transition k -> k+1.
Trajectory propagate(const Eigen::VectorXd& initial,
                     const std::vector<std::vector<double>>& controls, double v, double ts);

}  // namespace coopnav
