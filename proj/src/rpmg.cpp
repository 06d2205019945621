#include "coopnav/rpmg.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace coopnav {

double Rpmg::edge_distance(int a, int b) const {
  const double d = dist_(a, b);
  if (d < 0.0) throw std::out_of_range("Rpmg: no such edge");
  return d;
}

bool Rpmg::has_edge(int a, int b) const { return dist_(a, b) >= 0.0; }

Rpmg build_rpmg(const std::vector<VehicleState>& vehicles,
                const std::vector<Landmark>& landmarks, double rs,
                bool include_vehicle_edges) {
  Rpmg g;
  g.n_vehicles = static_cast<int>(vehicles.size());
  g.positions.reserve(vehicles.size() + landmarks.size());
  for (const auto& v : vehicles) g.positions.push_back(v.position());
  for (const auto& lm : landmarks) g.positions.push_back(lm.position());

  const int n = g.n_nodes();
  g.neighbors.assign(n, {});
  g.dist_ = Eigen::MatrixXd::Constant(n, n, -1.0);
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (g.is_landmark(a) && g.is_landmark(b)) continue;
      if (!include_vehicle_edges && !g.is_landmark(a) && !g.is_landmark(b)) continue;
      const double d = (g.positions[a] - g.positions[b]).norm();
      if (d > rs) continue;
      g.edges.push_back({a, b, d});
      g.neighbors[a].push_back(b);
      g.neighbors[b].push_back(a);
      g.dist_(a, b) = d;
      g.dist_(b, a) = d;
    }
  }
  return g;
}

double adjacency_weight(double distance, double kappa, double rho, double rs) {
  if (rs <= rho) {
    throw std::invalid_argument("adjacency_weight: rs must exceed rho");
  }
  if (distance > rs) return 0.0;
  return std::exp(-kappa * (distance - rho) / (rs - rho));
}

Eigen::MatrixXd vehicle_laplacian(const Rpmg& rpmg, int vehicle, const GraphParams& params) {
  if (vehicle < 0 || vehicle >= rpmg.n_vehicles) {
    throw std::out_of_range("vehicle_laplacian: unknown vehicle id");
  }
  // Local node set: the vehicle plus its in-range neighbors.
  std::vector<int> local{vehicle};
  local.insert(local.end(), rpmg.neighbors[vehicle].begin(), rpmg.neighbors[vehicle].end());

  const int m = static_cast<int>(local.size());
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(m, m);
  for (int p = 0; p < m; ++p) {
    for (int q = p + 1; q < m; ++q) {
      if (!rpmg.has_edge(local[p], local[q])) continue;
      const double w =
          adjacency_weight(rpmg.edge_distance(local[p], local[q]), params.kappa, params.rho,
                           params.rs);
      lap(p, q) -= w;
      lap(q, p) -= w;
      lap(p, p) += w;
      lap(q, q) += w;
    }
  }
  return lap;
}

double lambda2(const Eigen::MatrixXd& laplacian) {
  if ((laplacian - laplacian.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
    throw std::invalid_argument("lambda2: matrix not symmetric");
  }
  if (laplacian.rows() <= 1) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian,
                                                        Eigen::EigenvaluesOnly);
  return solver.eigenvalues()[1];  // ascending order
}

namespace {

void dfs_paths(const Rpmg& rpmg, int node, int landmark, int max_hops,
               std::vector<int>& stack, std::vector<bool>& visited,
               std::vector<Path>& out) {
  for (int next : rpmg.neighbors[node]) {  // sorted: lexicographic output order
    if (next == landmark) {
      Path p;
      p.vertices = stack;
      p.vertices.push_back(landmark);
      out.push_back(std::move(p));
      continue;
    }
    if (rpmg.is_landmark(next)) continue;  // other landmarks end paths elsewhere
    if (visited[next]) continue;
    if (static_cast<int>(stack.size()) >= max_hops) continue;
    visited[next] = true;
    stack.push_back(next);
    dfs_paths(rpmg, next, landmark, max_hops, stack, visited, out);
    stack.pop_back();
    visited[next] = false;
  }
}

}  // namespace

std::vector<Path> enumerate_paths(const Rpmg& rpmg, int vehicle, int landmark,
                                  int max_hops) {
  if (vehicle < 0 || vehicle >= rpmg.n_vehicles || landmark < rpmg.n_vehicles ||
      landmark >= rpmg.n_nodes()) {
    throw std::out_of_range("enumerate_paths: node ids out of range");
  }
  if (max_hops < 1) {
    throw std::invalid_argument("enumerate_paths: max_hops must be >= 1");
  }
  std::vector<Path> out;
  std::vector<int> stack{vehicle};
  std::vector<bool> visited(rpmg.n_nodes(), false);
  visited[vehicle] = true;
  dfs_paths(rpmg, vehicle, landmark, max_hops, stack, visited, out);
  return out;
}

bool landmark_reachable(const Rpmg& rpmg, int vehicle) {
  std::vector<bool> seen(rpmg.n_vehicles, false);
  std::deque<int> queue{vehicle};
  seen[vehicle] = true;
  while (!queue.empty()) {
    const int node = queue.front();
    queue.pop_front();
    for (int next : rpmg.neighbors[node]) {
      if (rpmg.is_landmark(next)) return true;
      if (!seen[next]) {
        seen[next] = true;
        queue.push_back(next);
      }
    }
  }
  return false;
}

std::string dump_edges(const Rpmg& rpmg, const GraphParams& params) {
  std::ostringstream out;
  for (const auto& e : rpmg.edges) {
    out << e.a << " " << e.b << " " << e.distance << " "
        << adjacency_weight(e.distance, params.kappa, params.rho, params.rs) << "\n";
  }
  return out.str();
}

}  // namespace coopnav
