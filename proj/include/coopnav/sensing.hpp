#pragma once

#include <vector>

#include <Eigen/Core>

#include "coopnav/rng.hpp"
#include "coopnav/world.hpp"

namespace coopnav {

// Node ids: vehicles occupy [0, n_vehicles), landmarks
// [n_vehicles, n_vehicles + n_landmarks) in scenario order.
inline bool is_vehicle_node(int id, int n_vehicles) { return id < n_vehicles; }

enum class MeasurementKind { bearing, range };

struct Measurement {
  int observer = 0;  // vehicle node id
  int target = 0;    // vehicle or landmark node id
  MeasurementKind kind = MeasurementKind::bearing;
  double value = 0.0;     // rad (bearing) or m (range)
  double variance = 0.0;  // rad^2 or m^2
  int time_step = 0;
};

struct MeasurementSet {
  int time_step = 0;
  std::vector<Measurement> items;
};

// Relative bearing from the observer's heading to the line of sight.
// Throws std::domain_error on coincident positions.
double bearing(const VehicleState& observer, const Eigen::Vector2d& target);

double range(const Eigen::Vector2d& a, const Eigen::Vector2d& b);

// One noisy bearing per ordered vehicle -> node pair within sensor range.
// noise_scale multiplies the injected noise std only; the reported variance
// stays gamma_rad2. include_vehicle_targets = false drops vehicle-vehicle
// measurements (non-cooperative mode).
MeasurementSet sense_all(const std::vector<VehicleState>& vehicles,
                         const std::vector<Landmark>& landmarks, double rs, double gamma_rad2,
                         RngStream& rng, int time_step, bool include_vehicle_targets = true,
                         double noise_scale = 1.0);

// Gradient row of a bearing measurement over the stacked 3*n state:
// (sin(theta)/R, -cos(theta)/R, -1) on the observer block, negated
// positional entries on the target block when the target is a vehicle.
Eigen::RowVectorXd bearing_gradient(const Eigen::VectorXd& stacked, int n_vehicles,
                                    int observer, int target,
                                    const std::vector<Landmark>& landmarks);

// Position of a node given the stacked vehicle state and the landmark list.
Eigen::Vector2d node_position(const Eigen::VectorXd& stacked, int n_vehicles, int id,
                              const std::vector<Landmark>& landmarks);

}  // namespace coopnav
