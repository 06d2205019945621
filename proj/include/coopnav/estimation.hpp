#pragma once

#include <deque>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "coopnav/kinematics.hpp"
#include "coopnav/nlp.hpp"
#include "coopnav/sensing.hpp"
#include "coopnav/world.hpp"

namespace coopnav {

// Model context shared by the MHE and the EKF so estimator comparisons
// isolate the estimator, not the models.
struct EstimationModel {
  int n_vehicles = 0;
  double v = 5.0;
  double ts = 0.1;
  double gamma = 0.01;       // per-measurement variance
  Eigen::VectorXd q_diag;    // process covariance diagonal (3 * n_vehicles)
  std::vector<Landmark> landmarks;
};

// The weighting-matrix recursion for the arrival cost:
// P' = Q + F (P - P H^T (H P H^T + Gamma)^{-1} H P) F^T, symmetrized.
// H may have zero rows (pure prediction).
Eigen::MatrixXd arrival_cost_update(const Eigen::MatrixXd& p, const Eigen::MatrixXd& f,
                                    const Eigen::MatrixXd& h, const Eigen::MatrixXd& q,
                                    const Eigen::MatrixXd& gamma);

// One buffered step of the sliding window. omegas/active describe the
// transition from the previous step (empty on the first step of a run).
struct MheStepData {
  std::vector<double> omegas;
  std::vector<bool> active;
  MeasurementSet measurements;
};

struct MheResult {
  std::vector<Eigen::VectorXd> trajectory;  // smoothed window states
  Eigen::VectorXd head;                     // last trajectory state
  Eigen::VectorXd next_prior;               // prior advanced one step
  Eigen::MatrixXd next_arrival_p;           // P advanced one step
  nlp::SolveReport report;
  bool degraded = false;
};

// Moving-horizon estimator: windowed nonlinear least squares over the
// window's initial state (single shooting; the dynamics constraint holds by
// construction), with the arrival cost weighting deviations from the prior.
//
// The prior advances by the filtering update: one predict-update step on
// (prior, P) with the measurements leaving the window. Advancing with the
// smoothed state instead re-imports in-window measurements into the prior
// every slide and measurably degrades the estimate (see README).
class MheWindow {
 public:
  MheWindow(EstimationModel model, int horizon, Eigen::VectorXd prior,
            Eigen::MatrixXd arrival_p);

  // Append one step; once the buffer exceeds horizon + 1 states the oldest
  // step is dropped and (prior, P) advance by the filtering update on the
  // evicted measurements.
  void push(MheStepData step);

  // Solve the windowed least squares; also refreshes the cached smoothed
  // trajectory used by push(). Throws std::logic_error on an empty window.
  MheResult estimate(const nlp::SolverOptions& opts);

  // Objective of the window's cost at a candidate initial state (prior
  // term plus wrapped measurement residuals); exposed for tests.
  double window_cost(const Eigen::VectorXd& x_tau) const;

  int size() const { return static_cast<int>(steps_.size()); }
  int horizon() const { return horizon_; }
  const Eigen::VectorXd& prior() const { return prior_; }
  const Eigen::MatrixXd& arrival_p() const { return arrival_p_; }

  // Residual stack and its Jacobian at a candidate initial state (prior
  // rows whitened by chol(P)^-1, measurement rows by 1/sqrt(gamma)).
  Eigen::VectorXd residuals(const Eigen::VectorXd& x_tau) const;
  Eigen::MatrixXd residual_jacobian(const Eigen::VectorXd& x_tau) const;

 private:
  std::vector<Eigen::VectorXd> flow(const Eigen::VectorXd& x_tau) const;
  void advance_prior();

  EstimationModel model_;
  int horizon_;
  Eigen::VectorXd prior_;
  Eigen::MatrixXd arrival_p_;
  std::deque<MheStepData> steps_;
};

struct EkfState {
  Eigen::VectorXd x;
  Eigen::MatrixXd p;
};

// Standard EKF step: predict through the plant model, then update with the
// stacked bearing rows (angle-wrapped innovations, Joseph-form covariance).
// Pass do_predict = false for an update-only step (initial measurement).
EkfState ekf_step(const EkfState& state, const std::vector<double>& omegas,
                  const std::vector<bool>& active, const MeasurementSet& measurements,
                  const EstimationModel& model, bool do_predict = true);

// Estimation-error bound recursion:
// zeta_{m+1} = a zeta_m + beta,  a = c1 k_f p / (p + c2 delta),
// beta = c3 r_mu / (p + c2 delta); fixed point beta / (1 - a) when a < 1.
struct StabilityParams {
  double c1 = 1.0;
  double c2 = 1.0;
  double c3 = 1.0;
  double k_f = 1.0;    // Lipschitz bound of the state model
  double p = 1.0;      // arrival weight scalar
  double delta = 0.0;  // observability sensitivity
  double r_mu = 0.0;   // max squared measurement noise
};

struct ZetaBound {
  std::vector<double> sequence;  // zeta_0 .. zeta_n
  double contraction = 0.0;      // a(p, delta)
  double beta = 0.0;
  std::optional<double> fixed_point;  // absent when a >= 1
};

ZetaBound zeta_bound(const StabilityParams& params, double zeta0, int n_steps);

// Process covariance with frozen vehicles' blocks zeroed.
Eigen::MatrixXd process_noise_matrix(const EstimationModel& model,
                                     const std::vector<bool>& active);

// Stacked bearing-gradient rows for a measurement set at a state.
Eigen::MatrixXd measurement_jacobian(const Eigen::VectorXd& x, const MeasurementSet& set,
                                     const EstimationModel& model);

}  // namespace coopnav
