#include "coopnav/estimation.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace coopnav {

namespace {

// Wrap the heading components of a stacked-state difference.
Eigen::VectorXd wrap_state_diff(Eigen::VectorXd d) {
  for (Eigen::Index i = 2; i < d.size(); i += 3) d[i] = wrap_angle(d[i]);
  return d;
}

double predicted_bearing(const Eigen::VectorXd& x, const Measurement& m, int n_vehicles,
                         const std::vector<Landmark>& landmarks) {
  const VehicleState obs{x[3 * m.observer], x[3 * m.observer + 1], x[3 * m.observer + 2]};
  return bearing(obs, node_position(x, n_vehicles, m.target, landmarks));
}

}  // namespace

Eigen::MatrixXd arrival_cost_update(const Eigen::MatrixXd& p, const Eigen::MatrixXd& f,
                                    const Eigen::MatrixXd& h, const Eigen::MatrixXd& q,
                                    const Eigen::MatrixXd& gamma) {
  Eigen::MatrixXd inner = p;
  if (h.rows() > 0) {
    const Eigen::MatrixXd s = h * p * h.transpose() + gamma;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(s);
    if (!lu.isInvertible()) {
      throw std::runtime_error("arrival_cost_update: singular innovation matrix");
    }
    inner -= p * h.transpose() * lu.inverse() * h * p;
  }
  Eigen::MatrixXd out = q + f * inner * f.transpose();
  return 0.5 * (out + out.transpose());
}

Eigen::MatrixXd process_noise_matrix(const EstimationModel& model,
                                     const std::vector<bool>& active) {
  Eigen::MatrixXd q = model.q_diag.asDiagonal();
  for (int i = 0; i < model.n_vehicles; ++i) {
    if (!active.empty() && !active[i]) {
      q.block(3 * i, 3 * i, 3, 3).setZero();
    }
  }
  return q;
}

Eigen::MatrixXd measurement_jacobian(const Eigen::VectorXd& x, const MeasurementSet& set,
                                     const EstimationModel& model) {
  Eigen::MatrixXd h(set.items.size(), x.size());
  for (std::size_t r = 0; r < set.items.size(); ++r) {
    h.row(r) = bearing_gradient(x, model.n_vehicles, set.items[r].observer,
                                set.items[r].target, model.landmarks);
  }
  return h;
}

// ---------------------------------------------------------------------------
// MheWindow

MheWindow::MheWindow(EstimationModel model, int horizon, Eigen::VectorXd prior,
                     Eigen::MatrixXd arrival_p)
    : model_(std::move(model)),
      horizon_(horizon),
      prior_(std::move(prior)),
      arrival_p_(std::move(arrival_p)) {
  if (horizon_ < 1) throw std::invalid_argument("MheWindow: horizon must be >= 1");
  if ((arrival_p_ - arrival_p_.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
    throw std::invalid_argument("MheWindow: arrival P not symmetric");
  }
}

std::vector<Eigen::VectorXd> MheWindow::flow(const Eigen::VectorXd& x_tau) const {
  std::vector<Eigen::VectorXd> states;
  states.reserve(steps_.size());
  states.push_back(x_tau);
  for (std::size_t k = 1; k < steps_.size(); ++k) {
    states.push_back(step_stacked(states.back(), steps_[k].omegas, steps_[k].active,
                                  model_.v, model_.ts));
  }
  return states;
}

Eigen::VectorXd MheWindow::residuals(const Eigen::VectorXd& x_tau) const {
  std::size_t n_meas = 0;
  for (const auto& s : steps_) n_meas += s.measurements.items.size();
  const Eigen::Index n = prior_.size();

  Eigen::VectorXd r(n + static_cast<Eigen::Index>(n_meas));
  const Eigen::LLT<Eigen::MatrixXd> llt(arrival_p_);
  r.head(n) = llt.matrixL().solve(wrap_state_diff(x_tau - prior_));

  const double w = 1.0 / std::sqrt(model_.gamma);
  const auto states = flow(x_tau);
  Eigen::Index row = n;
  for (std::size_t k = 0; k < steps_.size(); ++k) {
    for (const auto& m : steps_[k].measurements.items) {
      r[row++] = w * wrap_angle(predicted_bearing(states[k], m, model_.n_vehicles,
                                                  model_.landmarks) -
                                m.value);
    }
  }
  return r;
}

Eigen::MatrixXd MheWindow::residual_jacobian(const Eigen::VectorXd& x_tau) const {
  std::size_t n_meas = 0;
  for (const auto& s : steps_) n_meas += s.measurements.items.size();
  const Eigen::Index n = prior_.size();

  Eigen::MatrixXd j(n + static_cast<Eigen::Index>(n_meas), n);
  const Eigen::LLT<Eigen::MatrixXd> llt(arrival_p_);
  j.topRows(n) = llt.matrixL().solve(Eigen::MatrixXd::Identity(n, n));

  const double w = 1.0 / std::sqrt(model_.gamma);
  const auto states = flow(x_tau);
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(n, n);  // d states[k] / d x_tau
  Eigen::Index row = n;
  for (std::size_t k = 0; k < steps_.size(); ++k) {
    if (k > 0) {
      phi = step_jacobian(states[k - 1], steps_[k].active, model_.v, model_.ts) * phi;
    }
    for (const auto& m : steps_[k].measurements.items) {
      j.row(row++) = w *
                     bearing_gradient(states[k], model_.n_vehicles, m.observer, m.target,
                                      model_.landmarks) *
                     phi;
    }
  }
  return j;
}

double MheWindow::window_cost(const Eigen::VectorXd& x_tau) const {
  return residuals(x_tau).squaredNorm();
}

MheResult MheWindow::estimate(const nlp::SolverOptions& opts) {
  if (steps_.empty()) {
    throw std::logic_error("MheWindow::estimate: empty measurement window");
  }
  const Eigen::Index n = prior_.size();
  const Eigen::VectorXd lo = Eigen::VectorXd::Constant(n, -1e30);
  const Eigen::VectorXd hi = Eigen::VectorXd::Constant(n, 1e30);

  const auto report = nlp::solve_nls(
      [this](const Eigen::VectorXd& x) { return residuals(x); },
      [this](const Eigen::VectorXd& x) { return residual_jacobian(x); }, prior_, lo, hi,
      opts);

  MheResult result;
  result.report = report;
  result.degraded = report.termination == nlp::Termination::max_iters;
  result.trajectory = flow(report.solution);
  result.head = result.trajectory.back();

  // The advance the next slide will apply: a filtering update on (prior, P)
  // with the measurements about to leave the window.
  EkfState exit_filter{prior_, arrival_p_};
  exit_filter = ekf_step(exit_filter, {}, steps_[0].active, steps_[0].measurements,
                         model_, false);
  if (steps_.size() > 1) {
    exit_filter = ekf_step(exit_filter, steps_[1].omegas, steps_[1].active,
                           MeasurementSet{}, model_, true);
  }
  result.next_prior = exit_filter.x;
  result.next_arrival_p = exit_filter.p;
  return result;
}

void MheWindow::advance_prior() {
  EkfState exit_filter{prior_, arrival_p_};
  exit_filter = ekf_step(exit_filter, {}, steps_[0].active, steps_[0].measurements,
                         model_, false);
  exit_filter = ekf_step(exit_filter, steps_[1].omegas, steps_[1].active,
                         MeasurementSet{}, model_, true);
  prior_ = exit_filter.x;
  arrival_p_ = exit_filter.p;
  steps_.pop_front();
}

void MheWindow::push(MheStepData step) {
  steps_.push_back(std::move(step));
  if (static_cast<int>(steps_.size()) > horizon_ + 1) {
    advance_prior();
  }
}

// ---------------------------------------------------------------------------
// EKF

EkfState ekf_step(const EkfState& state, const std::vector<double>& omegas,
                  const std::vector<bool>& active, const MeasurementSet& measurements,
                  const EstimationModel& model, bool do_predict) {
  EkfState out = state;
  if (do_predict) {
    const Eigen::MatrixXd f = step_jacobian(state.x, active, model.v, model.ts);
    out.x = step_stacked(state.x, omegas, active, model.v, model.ts);
    out.p = f * state.p * f.transpose() + process_noise_matrix(model, active);
  }
  if (measurements.items.empty()) {
    out.p = 0.5 * (out.p + out.p.transpose());
    return out;
  }

  const Eigen::MatrixXd h = measurement_jacobian(out.x, measurements, model);
  Eigen::VectorXd innovation(h.rows());
  for (Eigen::Index r = 0; r < innovation.size(); ++r) {
    const auto& m = measurements.items[r];
    innovation[r] = wrap_angle(
        m.value - predicted_bearing(out.x, m, model.n_vehicles, model.landmarks));
  }

  const Eigen::MatrixXd s =
      h * out.p * h.transpose() +
      model.gamma * Eigen::MatrixXd::Identity(h.rows(), h.rows());
  Eigen::FullPivLU<Eigen::MatrixXd> lu(s);
  if (!lu.isInvertible()) {
    throw std::runtime_error("ekf_step: singular innovation covariance");
  }
  const Eigen::MatrixXd k = out.p * h.transpose() * lu.inverse();

  out.x += k * innovation;
  for (Eigen::Index i = 2; i < out.x.size(); i += 3) out.x[i] = wrap_angle(out.x[i]);

  const Eigen::MatrixXd ikh =
      Eigen::MatrixXd::Identity(out.p.rows(), out.p.cols()) - k * h;
  out.p = ikh * out.p * ikh.transpose() + model.gamma * k * k.transpose();
  out.p = 0.5 * (out.p + out.p.transpose());
  return out;
}

// ---------------------------------------------------------------------------
// Stability bound

ZetaBound zeta_bound(const StabilityParams& params, double zeta0, int n_steps) {
  if (params.c1 <= 0 || params.c2 <= 0 || params.c3 <= 0 || params.k_f <= 0 ||
      params.p <= 0 || params.delta < 0 || params.r_mu < 0) {
    throw std::invalid_argument("zeta_bound: invalid stability parameters");
  }
  if (zeta0 < 0) throw std::invalid_argument("zeta_bound: zeta0 must be >= 0");

  ZetaBound out;
  out.contraction = params.c1 * params.k_f * params.p / (params.p + params.c2 * params.delta);
  out.beta = params.c3 * params.r_mu / (params.p + params.c2 * params.delta);
  if (out.contraction < 1.0) {
    out.fixed_point = out.beta / (1.0 - out.contraction);
  }
  out.sequence.reserve(n_steps + 1);
  out.sequence.push_back(zeta0);
  double z = zeta0;
  for (int i = 0; i < n_steps; ++i) {
    z = out.contraction * z + out.beta;
    out.sequence.push_back(z);
  }
  return out;
}

}  // namespace coopnav
