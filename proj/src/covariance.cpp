#include "coopnav/covariance.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "coopnav/angles.hpp"

namespace coopnav {

double edge_information(double distance, MeasurementKind kind) {
  if (distance <= 0.0) {
    throw std::domain_error("edge_information: zero-length edge");
  }
  return kind == MeasurementKind::bearing ? 1.0 / (distance * distance) : 1.0;
}

double path_covariance(const Path& path, const std::map<EdgeKey, double>& epsilon_by_edge) {
  if (path.vertices.size() < 2) {
    throw std::invalid_argument("path_covariance: empty path");
  }
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < path.vertices.size(); ++i) {
    const auto it = epsilon_by_edge.find(edge_key(path.vertices[i], path.vertices[i + 1]));
    if (it == epsilon_by_edge.end()) {
      throw std::invalid_argument("path_covariance: missing edge information");
    }
    total += 1.0 / it->second;
  }
  return total;
}

std::optional<double> vehicle_covariance(const Rpmg& rpmg, int vehicle, int max_hops,
                                         MeasurementKind kind) {
  std::map<EdgeKey, double> eps;
  for (const auto& e : rpmg.edges) {
    eps[edge_key(e.a, e.b)] = edge_information(e.distance, kind);
  }
  double total = 0.0;
  bool any = false;
  for (int lm = rpmg.n_vehicles; lm < rpmg.n_nodes(); ++lm) {
    for (const auto& path : enumerate_paths(rpmg, vehicle, lm, max_hops)) {
      total += path_covariance(path, eps);
      any = true;
    }
  }
  if (!any) return std::nullopt;
  return total;
}

std::optional<GeometrySummary> avg_geometry(const Rpmg& rpmg, int vehicle) {
  const auto& nbrs = rpmg.neighbors[vehicle];
  if (nbrs.empty()) return std::nullopt;
  GeometrySummary g;
  double sx = 0.0, sy = 0.0;
  for (int n : nbrs) {
    const Eigen::Vector2d d = rpmg.positions[n] - rpmg.positions[vehicle];
    g.rg += d.norm();
    const double los = std::atan2(d.y(), d.x());
    sx += std::cos(los);
    sy += std::sin(los);
  }
  g.edge_count = static_cast<int>(nbrs.size());
  g.rg /= g.edge_count;
  g.theta_g = std::atan2(sy, sx);
  return g;
}

namespace {

double csc2_floored(double delta) {
  const double s = std::max(std::abs(std::sin(delta)), kSinFloor);
  return 1.0 / (s * s);
}

}  // namespace

double sigma_p_range(double rg, double psi, double theta_g) {
  const double delta = wrap_angle(psi - theta_g);
  return std::sqrt(2.0 / 3.0 + rg * rg * csc2_floored(delta));
}

double sigma_p_bearing(double rg, double psi, double theta_g) {
  const double delta = wrap_angle(psi - theta_g);
  const double rg2 = rg * rg;
  const double denom = std::max(2.0 + rg2 + 2.0 * std::cos(2.0 * delta), kDenomFloor);
  const double var =
      4.5 * rg2 * (1.0 + rg2 / denom) + (rg2 + rg2 * rg2) * csc2_floored(delta);
  return std::sqrt(var);
}

Eigen::MatrixXd observability_matrix(const OracleConfig& config) {
  Eigen::MatrixXd o = Eigen::MatrixXd::Zero(config.edges.size(), config.n_vehicles);
  for (std::size_t r = 0; r < config.edges.size(); ++r) {
    const auto& e = config.edges[r];
    o(r, e.a) = e.weight;
    if (e.b >= 0) o(r, e.b) = -e.weight;
  }
  return o;
}

Eigen::MatrixXd gramian_covariance(const OracleConfig& config) {
  const Eigen::MatrixXd o = observability_matrix(config);
  const Eigen::MatrixXd gram = o.transpose() * o;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  const auto& ev = es.eigenvalues();
  if (ev.minCoeff() <= 1e-12 * std::max(1.0, ev.maxCoeff())) {
    throw std::invalid_argument("gramian_covariance: rank-deficient configuration");
  }
  return gram.inverse();
}

std::vector<std::optional<double>> oracle_path_sums(const OracleConfig& config) {
  // Rebuild the config as a graph: vehicles [0, nv), landmarks [nv, nv+nl).
  Rpmg g;
  g.n_vehicles = config.n_vehicles;
  const int n = config.n_vehicles + config.n_landmarks;
  g.positions.assign(n, Eigen::Vector2d::Zero());
  g.neighbors.assign(n, {});
  g.dist_ = Eigen::MatrixXd::Constant(n, n, -1.0);
  std::map<EdgeKey, double> eps;
  for (const auto& e : config.edges) {
    const int b = e.b >= 0 ? e.b : config.n_vehicles + e.landmark;
    g.edges.push_back({std::min(e.a, b), std::max(e.a, b), 1.0});
    g.neighbors[e.a].push_back(b);
    g.neighbors[b].push_back(e.a);
    g.dist_(e.a, b) = 1.0;
    g.dist_(b, e.a) = 1.0;
    eps[edge_key(e.a, b)] = e.weight * e.weight;
  }

  std::vector<std::optional<double>> sums(config.n_vehicles);
  for (int i = 0; i < config.n_vehicles; ++i) {
    double total = 0.0;
    bool any = false;
    for (int lm = config.n_vehicles; lm < n; ++lm) {
      for (const auto& path : enumerate_paths(g, i, lm, config.n_vehicles + 1)) {
        total += path_covariance(path, eps);
        any = true;
      }
    }
    if (any) sums[i] = total;
  }
  return sums;
}

OracleConfig config_p2a(double oa1, double o12) {
  OracleConfig c;
  c.n_vehicles = 2;
  c.n_landmarks = 1;
  c.edges = {{0, -1, 0, oa1}, {0, 1, -1, o12}};
  return c;
}

OracleConfig config_p2b(double ob2, double o12) {
  OracleConfig c;
  c.n_vehicles = 2;
  c.n_landmarks = 1;
  c.edges = {{1, -1, 0, ob2}, {0, 1, -1, o12}};
  return c;
}

OracleConfig config_p3a(double oa1, double o12, double oa3) {
  OracleConfig c;
  c.n_vehicles = 3;
  c.n_landmarks = 1;
  c.edges = {{0, -1, 0, oa1}, {0, 1, -1, o12}, {2, -1, 0, oa3}};
  return c;
}

OracleConfig config_p3b(double ob2, double o12, double ob3) {
  OracleConfig c;
  c.n_vehicles = 3;
  c.n_landmarks = 1;
  c.edges = {{1, -1, 0, ob2}, {0, 1, -1, o12}, {2, -1, 0, ob3}};
  return c;
}

namespace {

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double tol = 1e-12 * std::max(m.rows(), m.cols()) * sv.maxCoeff();
  Eigen::VectorXd inv = sv;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    inv[i] = sv[i] > tol ? 1.0 / sv[i] : 0.0;
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

}  // namespace

ContradictionReport theorem2_contradiction(double oa1, double o12, double oa3) {
  const double oa1_2 = oa1 * oa1, o12_2 = o12 * o12, oa3_2 = oa3 * oa3;

  // Covariance of the three-vehicle chain with the shared-landmark term
  // removed from the middle vehicle's entry.
  Eigen::MatrixXd p_modified(3, 3);
  p_modified << 1.0 / oa1_2, 1.0 / oa1_2, 0.0,
                1.0 / oa1_2, 1.0 / o12_2, 0.0,
                0.0, 0.0, 1.0 / oa3_2;

  ContradictionReport report;
  // At equal weights the modified covariance is singular: use a
  // pseudo-inverse so the comparison stays well defined.
  report.modified_gramian = pseudo_inverse(p_modified);
  const Eigen::MatrixXd o = observability_matrix(config_p3a(oa1, o12, oa3));
  report.reference_gramian = o.transpose() * o;
  report.residual_norm = (report.modified_gramian - report.reference_gramian).norm();
  return report;
}

}  // namespace coopnav
