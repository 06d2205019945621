#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "coopnav/angles.hpp"

namespace coopnav {

// Planar pose of one vehicle. Heading is stored wrapped to (-pi, pi];
// construct through make() (or re-wrap after mutating psi directly).
struct VehicleState {
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;

  static VehicleState make(double x, double y, double psi) {
    return VehicleState{x, y, wrap_angle(psi)};
  }
  Eigen::Vector2d position() const { return {x, y}; }
};

struct ControlInput {
  double omega = 0.0;  // turn rate [rad/s]
};

inline double clamp_omega(double omega, double lo, double hi) {
  return omega < lo ? lo : (omega > hi ? hi : omega);
}

struct Landmark {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  Eigen::Vector2d position() const { return {x, y}; }
};

struct VehicleSpec {
  VehicleState source;
  Eigen::Vector2d destination{0.0, 0.0};
};

// Scenario configuration. Field names carry units; defaults follow the
// reference simulation setup (see README for the config file format).
struct Scenario {
  int version = 1;

  std::vector<VehicleSpec> vehicles;
  std::vector<Landmark> landmarks;

  double v_mps = 5.0;           // common vehicle speed
  double ts_s = 0.1;            // plant / discretization step
  double rs_m = 50.0;           // sensor range
  double eta = 2.0;             // connectivity target
  double kappa = 5.0;           // adjacency decay rate
  double rho_m = 0.5;           // minimum-distance offset
  double w_connectivity = 10000.0;
  double sigma_c_m = 3.0;       // critical 1-sigma position bound
  double gamma_rad2 = 0.01;     // per-measurement bearing noise variance
  double q_diag = 1e-4;         // per-state process noise variance
  double tau_h_s = 25.0;        // NMPC prediction horizon
  int n_e_steps = 20;           // MHE horizon (steps)
  double omega_min_rads = -kPi / 2.0;
  double omega_max_rads = kPi / 2.0;
  double goal_radius_m = 3.0;
  double arena_min_x_m = 0.0;
  double arena_max_x_m = 200.0;
  double arena_min_y_m = 0.0;
  double arena_max_y_m = 200.0;
  std::uint64_t seed = 1;

  // Estimator initialization (the reference setup never states these). The
  // initial covariance is diag(std^2) of the matching perturbations.
  double init_est_std_m = 0.5;          // initial position estimate 1-sigma
  double init_est_heading_std_rad = 0.1;  // initial heading estimate 1-sigma

  // Noise injection scales; residual weights are unaffected. 0 = noiseless.
  double meas_noise_scale = 1.0;
  double process_noise_scale = 1.0;

  // Planner discretization knobs.
  int control_hold_steps = 5;    // plant steps per piecewise-constant control
  int replan_every_steps = 1;    // plant steps between NMPC solves
  int cost_stride_steps = 1;     // prediction steps between connectivity/covariance samples
  bool w_predictive = true;      // re-evaluate W_i along predictions (vs frozen at t)
  int max_hops = 0;              // path enumeration cap; 0 = n_vehicles + 1

  int n_vehicles() const { return static_cast<int>(vehicles.size()); }
  int n_landmarks() const { return static_cast<int>(landmarks.size()); }
  double arena_diagonal() const {
    const double dx = arena_max_x_m - arena_min_x_m;
    const double dy = arena_max_y_m - arena_min_y_m;
    return std::sqrt(dx * dx + dy * dy);
  }
  int effective_max_hops() const {
    return max_hops > 0 ? max_hops : n_vehicles() + 1;
  }
};

struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parse a scenario config document (line-based "key = value" format; see
// README). Throws ScenarioError naming the offending field on parse or
// validation failure.
Scenario load_scenario(const std::string& text);

// Canonical serialization; load_scenario(serialize_scenario(s)) == s.
std::string serialize_scenario(const Scenario& s);

// Validate invariants; throws ScenarioError naming the violated field.
void validate_scenario(const Scenario& s);

bool operator==(const Scenario& a, const Scenario& b);

}  // namespace coopnav
