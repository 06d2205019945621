#pragma once

#include <vector>

#include <Eigen/Core>

#include "coopnav/world.hpp"

namespace coopnav {

struct RpmgEdge {
  int a = 0;  // node ids, a < b
  int b = 0;
  double distance = 0.0;
};

// Relative position measurement graph: vehicles and landmarks as nodes,
// available relative measurements (pairs within sensor range) as edges.
// Node ids follow the sensing convention: vehicles first, then landmarks.
// Immutable snapshot for one time step.
struct Rpmg {
  int n_vehicles = 0;
  std::vector<Eigen::Vector2d> positions;   // all nodes
  std::vector<RpmgEdge> edges;
  std::vector<std::vector<int>> neighbors;  // sorted adjacency lists

  int n_nodes() const { return static_cast<int>(positions.size()); }
  bool is_landmark(int id) const { return id >= n_vehicles; }
  double edge_distance(int a, int b) const;  // throws if absent
  bool has_edge(int a, int b) const;

  Eigen::MatrixXd dist_;  // pairwise edge distances, -1 where no edge
};

// Simple path from a vehicle to a landmark; intermediate vertices are
// vehicles (a landmark terminates a path).
struct Path {
  std::vector<int> vertices;  // first = vehicle, last = landmark
};

struct GraphParams {
  double kappa = 5.0;
  double rho = 0.5;
  double rs = 50.0;
};

// Build the RPMG: vehicle-vehicle and vehicle-landmark edges within rs.
// No landmark-landmark edges. include_vehicle_edges = false drops
// vehicle-vehicle edges (non-cooperative mode).
Rpmg build_rpmg(const std::vector<VehicleState>& vehicles,
                const std::vector<Landmark>& landmarks, double rs,
                bool include_vehicle_edges = true);

// Exponential adjacency weight: exp(-kappa (d - rho) / (rs - rho)) for
// d <= rs, else 0. Throws std::invalid_argument when rs <= rho.
double adjacency_weight(double distance, double kappa, double rho, double rs);

// Weighted Laplacian of the one-hop induced subgraph around a vehicle
// (the vehicle plus in-range neighbors and the edges among them).
// Row/col 0 corresponds to the vehicle itself.
Eigen::MatrixXd vehicle_laplacian(const Rpmg& rpmg, int vehicle, const GraphParams& params);

// Second-smallest eigenvalue (0 for 1x1 matrices). Throws on asymmetry
// beyond 1e-9.
double lambda2(const Eigen::MatrixXd& laplacian);

// All simple vehicle-to-landmark paths of at most max_hops edges whose
// intermediate vertices are vehicles, in lexicographic vertex order.
std::vector<Path> enumerate_paths(const Rpmg& rpmg, int vehicle, int landmark, int max_hops);

// True when some landmark can be reached from the vehicle through
// vehicle-only intermediates.
bool landmark_reachable(const Rpmg& rpmg, int vehicle);

// Debug dump: one line per edge "node_a node_b distance weight".
std::string dump_edges(const Rpmg& rpmg, const GraphParams& params);

}  // namespace coopnav
