#include "coopnav/sensing.hpp"

#include <cmath>
#include <stdexcept>

namespace coopnav {

double bearing(const VehicleState& observer, const Eigen::Vector2d& target) {
  const double dx = target.x() - observer.x;
  const double dy = target.y() - observer.y;
  if (dx == 0.0 && dy == 0.0) {
    throw std::domain_error("bearing: coincident observer and target");
  }
  return wrap_angle(std::atan2(dy, dx) - observer.psi);
}

double range(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return (a - b).norm();
}

MeasurementSet sense_all(const std::vector<VehicleState>& vehicles,
                         const std::vector<Landmark>& landmarks, double rs, double gamma_rad2,
                         RngStream& rng, int time_step, bool include_vehicle_targets,
                         double noise_scale) {
  const int nv = static_cast<int>(vehicles.size());
  const int nl = static_cast<int>(landmarks.size());
  MeasurementSet set;
  set.time_step = time_step;
  for (int i = 0; i < nv; ++i) {
    const int n_targets = include_vehicle_targets ? nv + nl : nl;
    for (int t = 0; t < n_targets; ++t) {
      const int target = include_vehicle_targets ? t : nv + t;
      if (target == i) continue;
      const Eigen::Vector2d tp = target < nv ? vehicles[target].position()
                                             : landmarks[target - nv].position();
      if (range(vehicles[i].position(), tp) > rs) continue;
      Measurement m;
      m.observer = i;
      m.target = target;
      m.kind = MeasurementKind::bearing;
      m.variance = gamma_rad2;
      m.time_step = time_step;
      const double noise = rng.gaussian(0.0, gamma_rad2 * noise_scale * noise_scale);
      m.value = wrap_angle(bearing(vehicles[i], tp) + noise);
      set.items.push_back(m);
    }
  }
  return set;
}

Eigen::Vector2d node_position(const Eigen::VectorXd& stacked, int n_vehicles, int id,
                              const std::vector<Landmark>& landmarks) {
  if (id < n_vehicles) {
    return {stacked[3 * id], stacked[3 * id + 1]};
  }
  return landmarks.at(id - n_vehicles).position();
}

Eigen::RowVectorXd bearing_gradient(const Eigen::VectorXd& stacked, int n_vehicles,
                                    int observer, int target,
                                    const std::vector<Landmark>& landmarks) {
  const Eigen::Vector2d po(stacked[3 * observer], stacked[3 * observer + 1]);
  const Eigen::Vector2d pt = node_position(stacked, n_vehicles, target, landmarks);
  const Eigen::Vector2d d = pt - po;
  const double r2 = d.squaredNorm();
  if (r2 == 0.0) {
    throw std::domain_error("bearing_gradient: coincident observer and target");
  }
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(stacked.size());
  // d/dtheta of atan2: (sin(theta)/R, -cos(theta)/R) = (dy, -dx)/R^2.
  row[3 * observer] = d.y() / r2;
  row[3 * observer + 1] = -d.x() / r2;
  row[3 * observer + 2] = -1.0;
  if (target < n_vehicles) {
    row[3 * target] = -d.y() / r2;
    row[3 * target + 1] = d.x() / r2;
  }
  return row;
}

}  // namespace coopnav
