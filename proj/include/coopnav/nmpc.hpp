#pragma once

#include <vector>

#include <Eigen/Core>

#include "coopnav/covariance.hpp"
#include "coopnav/nlp.hpp"
#include "coopnav/rpmg.hpp"
#include "coopnav/world.hpp"

namespace coopnav {

// Squared distance to the destination.
double c1_cost(const Eigen::Vector2d& position, const Eigen::Vector2d& destination);

// Connectivity shortfall: 0 when lambda >= eta, else (eta - lambda)^2.
double c2_cost(double lambda, double eta);

// Adaptive connectivity weight: W when 3 sigma_p >= sigma_c, else 0.
double adaptive_weight(double sigma_p, double sigma_c, double w);

// Min-max normalization over a horizon series; a constant series maps to
// all zeros.
std::vector<double> normalize_series(const std::vector<double>& values);

struct NmpcParams {
  int horizon_steps = 1;       // H = round(tau_h / ts)
  int control_hold_steps = 1;  // plant steps per decision variable
  int cost_stride_steps = 1;   // steps between connectivity/covariance samples
  double v = 5.0;
  double ts = 0.1;
  double eta = 2.0;
  double kappa = 5.0;
  double rho = 0.5;
  double rs = 50.0;
  double w_connectivity = 10000.0;
  double sigma_c = 3.0;
  double gamma = 0.01;  // measurement variance; scales the closed-form sigma
  double omega_min = -kPi / 2.0;
  double omega_max = kPi / 2.0;
  double goal_radius = 3.0;
  double q_trace_per_step = 2e-4;  // dead-reckoning variance growth per plant step
  bool w_predictive = true;        // re-evaluate W_i along predictions
  bool cooperation = true;         // vehicle-vehicle edges in predicted graphs
};

// Predicted position uncertainty along the horizon, feeding the adaptive
// weight: landmark-connected steps take the closed-form geometry value
// scaled by sqrt(gamma) (the Gramian bound assumes unit measurement noise);
// disconnected steps dead-reckon, growing by the process noise trace plus
// the coherent drift v * Ts * sigma_psi from the current heading
// uncertainty.
struct NmpcProblem {
  Eigen::VectorXd estimate;  // stacked current state estimate
  std::vector<Eigen::Vector2d> destinations;
  std::vector<Landmark> landmarks;
  std::vector<double> sigma_p2_now;    // per-vehicle current position variance
  std::vector<double> sigma_psi_now;   // per-vehicle current heading std [rad]
  std::vector<bool> arrived;
  Eigen::VectorXd warm_start;  // empty or n_vars(); clamped to bounds
  NmpcParams params;

  int n_vehicles() const { return static_cast<int>(destinations.size()); }
  int n_segments() const {
    return (params.horizon_steps + params.control_hold_steps - 1) /
           params.control_hold_steps;
  }
  int n_vars() const { return n_vehicles() * n_segments(); }
};

struct StepCosts {
  double c1_raw = 0.0;
  double c2_raw = 0.0;
  double lambda = 0.0;
  double sigma_p = 0.0;
  double w = 0.0;
  double c1_norm = 0.0;
  double c2_norm = 0.0;
};

struct CostBreakdown {
  // [vehicle][prediction step 1..H]
  std::vector<std::vector<StepCosts>> vehicle_steps;
  double total = 0.0;
};

// Fixed normalization scales for one receding-horizon solve. Min-max bounds
// that depend on the decision variables leave the objective insensitive to
// goals beyond the horizon (any monotone distance series normalizes to the
// same ramp), so each solve freezes the bounds at its warm start and the
// candidate series are scaled against those.
struct SeriesScale {
  double lo = 0.0;
  double range = 1.0;
};

struct NormalizationScales {
  std::vector<SeriesScale> c1;  // per vehicle
  std::vector<SeriesScale> c2;
};

// Horizon min-max bounds of the raw cost series under the given plan.
NormalizationScales series_scales(const Eigen::VectorXd& controls,
                                  const NmpcProblem& problem);

// Predicted-horizon objective: roll the plant forward with the candidate
// piecewise-constant turn rates, rebuild the RPMG at each sampled step,
// score goal progress (C1) and connectivity shortfall (C2 weighted by the
// adaptive W), normalize each series per vehicle, and integrate by the
// rectangle rule. With frozen == nullptr the normalization is the series'
// own horizon min-max (a constant series maps to zeros); a solve passes the
// warm-start scales instead. Throws on non-finite intermediates.
double nmpc_objective(const Eigen::VectorXd& controls, const NmpcProblem& problem,
                      CostBreakdown* breakdown = nullptr,
                      const NormalizationScales* frozen = nullptr);

// Finite-difference step shared by the solver gradient and the tests.
inline constexpr double kNmpcFdStep = 1e-6;

Eigen::VectorXd nmpc_gradient(const Eigen::VectorXd& controls, const NmpcProblem& problem,
                              const NormalizationScales* frozen = nullptr);

struct NmpcStepResult {
  std::vector<double> controls;  // first action per vehicle
  Eigen::VectorXd plan;          // full decision vector at the solution
  CostBreakdown breakdown;
  nlp::SolveReport report;
  bool degraded = false;
};

// One receding-horizon solve; only the first action per vehicle is meant to
// be applied. Falls back to the warm start (flagged degraded) if the solver
// throws, so a closed loop never halts.
NmpcStepResult nmpc_step(const NmpcProblem& problem, const nlp::SolverOptions& opts);

// Warm start for the next solve: re-sample the previous plan shifted by the
// elapsed plant steps, repeating the last entry.
Eigen::VectorXd shift_plan(const Eigen::VectorXd& plan, const NmpcProblem& problem,
                           int shift_steps);

}  // namespace coopnav
