#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "coopnav/rpmg.hpp"
#include "coopnav/sensing.hpp"

namespace coopnav {

// Floors for the closed-form csc^2 / cosine-denominator singularities; keep
// the planner cost finite near degenerate geometry.
inline constexpr double kSinFloor = 1e-3;
inline constexpr double kDenomFloor = 1e-6;

using EdgeKey = std::pair<int, int>;  // normalized: first < second

inline EdgeKey edge_key(int a, int b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

// Information weight of one edge: squared positional-gradient magnitude of
// its measurement (bearing: 1/R^2, range: 1). Throws on zero-length edges.
double edge_information(double distance, MeasurementKind kind);

// Covariance contribution of one path: sum of 1/epsilon over its edges.
double path_covariance(const Path& path, const std::map<EdgeKey, double>& epsilon_by_edge);

// Total position covariance of a vehicle: sum over reachable landmarks of
// the per-path contributions (paths truncated at max_hops edges).
// nullopt = no landmark reachable (caller dead-reckons).
std::optional<double> vehicle_covariance(const Rpmg& rpmg, int vehicle, int max_hops,
                                         MeasurementKind kind = MeasurementKind::bearing);

struct GeometrySummary {
  double rg = 0.0;       // mean incident edge distance
  double theta_g = 0.0;  // circular mean of incident LOS angles
  int edge_count = 0;
};

// Mean distance and circular-mean LOS angle over a vehicle's incident
// edges; nullopt when the vehicle is isolated.
std::optional<GeometrySummary> avg_geometry(const Rpmg& rpmg, int vehicle);

// Closed-form position uncertainty for range measurements:
// sqrt(2/3 + Rg^2 csc^2(psi - theta_g)), |sin| floored at kSinFloor.
double sigma_p_range(double rg, double psi, double theta_g);

// Closed-form position uncertainty for bearing measurements:
// sigma^2 = 9/2 Rg^2 (1 + Rg^2 / (2 + Rg^2 + 2 cos(2 (psi - theta_g))))
//           + (Rg^2 + Rg^4) csc^2(psi - theta_g),
// with the cosine denominator floored at kDenomFloor.
double sigma_p_bearing(double rg, double psi, double theta_g);

// ---------------------------------------------------------------------------
// Observability-Gramian oracle for the path-sum rule. Configurations are
// abstract: one scalar column per vehicle, one row per edge with the edge's
// measurement-gradient magnitude o_e (epsilon = o_e^2).

struct OracleEdge {
  int a = 0;         // vehicle index
  int b = -1;        // second vehicle index, or -1 for a landmark edge
  int landmark = -1; // landmark index when b < 0
  double weight = 1.0;
};

struct OracleConfig {
  int n_vehicles = 0;
  int n_landmarks = 0;
  std::vector<OracleEdge> edges;
};

// Rows: +w in column a; -w in column b for vehicle-vehicle edges.
Eigen::MatrixXd observability_matrix(const OracleConfig& config);

// (O^T O)^{-1} with unit measurement covariance. Throws
// std::invalid_argument when O is column-rank deficient.
Eigen::MatrixXd gramian_covariance(const OracleConfig& config);

// Per-vehicle covariance by the path-sum rule applied to the config graph.
std::vector<std::optional<double>> oracle_path_sums(const OracleConfig& config);

// The four reference configurations (two- and three-vehicle chains).
OracleConfig config_p2a(double oa1, double o12);
OracleConfig config_p2b(double ob2, double o12);
OracleConfig config_p3a(double oa1, double o12, double oa3);
OracleConfig config_p3b(double ob2, double o12, double ob3);

// Drop the far-landmark term from the middle vehicle's covariance entry,
// re-invert, and compare against the true Gramian of the three-vehicle
// chain. A large residual shows the dropped term was required.
struct ContradictionReport {
  Eigen::MatrixXd modified_gramian;
  Eigen::MatrixXd reference_gramian;
  double residual_norm = 0.0;
};
ContradictionReport theorem2_contradiction(double oa1, double o12, double oa3);

}  // namespace coopnav
