#include "coopnav/kinematics.hpp"

#include <cmath>
#include <stdexcept>

namespace coopnav {

Eigen::VectorXd to_stacked(const std::vector<VehicleState>& states) {
  Eigen::VectorXd x(3 * states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    x[3 * i] = states[i].x;
    x[3 * i + 1] = states[i].y;
    x[3 * i + 2] = states[i].psi;
  }
  return x;
}

std::vector<VehicleState> from_stacked(const Eigen::VectorXd& x) {
  std::vector<VehicleState> out(x.size() / 3);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = VehicleState::make(x[3 * i], x[3 * i + 1], x[3 * i + 2]);
  }
  return out;
}

VehicleState step(const VehicleState& state, const ControlInput& u, double v, double ts) {
  return VehicleState::make(state.x + ts * v * std::cos(state.psi),
                            state.y + ts * v * std::sin(state.psi),
                            state.psi + ts * u.omega);
}

Eigen::VectorXd step_stacked(const Eigen::VectorXd& x, const std::vector<double>& omegas,
                             const std::vector<bool>& active, double v, double ts) {
  const int n = static_cast<int>(omegas.size());
  Eigen::VectorXd out = x;
  for (int i = 0; i < n; ++i) {
    if (!active.empty() && !active[i]) continue;
    const double psi = x[3 * i + 2];
    out[3 * i] = x[3 * i] + ts * v * std::cos(psi);
    out[3 * i + 1] = x[3 * i + 1] + ts * v * std::sin(psi);
    out[3 * i + 2] = wrap_angle(psi + ts * omegas[i]);
  }
  return out;
}

Eigen::MatrixXd step_jacobian(const Eigen::VectorXd& x, const std::vector<bool>& active,
                              double v, double ts) {
  const int n = static_cast<int>(x.size()) / 3;
  Eigen::MatrixXd f = Eigen::MatrixXd::Identity(3 * n, 3 * n);
  for (int i = 0; i < n; ++i) {
    if (!active.empty() && !active[i]) continue;
    const double psi = x[3 * i + 2];
    f(3 * i, 3 * i + 2) = -ts * v * std::sin(psi);
    f(3 * i + 1, 3 * i + 2) = ts * v * std::cos(psi);
  }
  return f;
}

Trajectory propagate(const Eigen::VectorXd& initial,
                     const std::vector<std::vector<double>>& controls, double v, double ts) {
  if (controls.empty()) {
    throw std::invalid_argument("propagate: empty control list");
  }
  Trajectory traj;
  traj.dt = ts;
  traj.states.reserve(controls.size() + 1);
  traj.states.push_back(initial);
  const std::vector<bool> all_active;
  for (const auto& omegas : controls) {
    traj.states.push_back(step_stacked(traj.states.back(), omegas, all_active, v, ts));
  }
  return traj;
}

}  // namespace coopnav
