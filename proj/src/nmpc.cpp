#include "coopnav/nmpc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "coopnav/kinematics.hpp"

namespace coopnav {

double c1_cost(const Eigen::Vector2d& position, const Eigen::Vector2d& destination) {
  return (position - destination).squaredNorm();
}

double c2_cost(double lambda, double eta) {
  if (lambda >= eta) return 0.0;
  const double d = eta - lambda;
  return d * d;
}

double adaptive_weight(double sigma_p, double sigma_c, double w) {
  return 3.0 * sigma_p >= sigma_c ? w : 0.0;
}

std::vector<double> normalize_series(const std::vector<double>& values) {
  if (values.empty()) {
    throw std::invalid_argument("normalize_series: empty series");
  }
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  std::vector<double> out(values.size(), 0.0);
  if (hi > lo) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      out[i] = (values[i] - lo) / (hi - lo);
    }
  }
  return out;
}

namespace {

double control_at(const Eigen::VectorXd& controls, const NmpcProblem& problem, int vehicle,
                  int step) {
  const int seg = std::min(step / problem.params.control_hold_steps,
                           problem.n_segments() - 1);
  return controls[vehicle * problem.n_segments() + seg];
}

}  // namespace

NormalizationScales series_scales(const Eigen::VectorXd& controls,
                                  const NmpcProblem& problem) {
  NormalizationScales scales;
  CostBreakdown breakdown;
  nmpc_objective(controls, problem, &breakdown);
  const double eta2 = problem.params.eta * problem.params.eta;
  for (const auto& steps : breakdown.vehicle_steps) {
    double c1_lo = steps[0].c1_raw, c1_hi = steps[0].c1_raw;
    double c2_lo = steps[0].c2_raw, c2_hi = steps[0].c2_raw;
    for (const auto& sc : steps) {
      c1_lo = std::min(c1_lo, sc.c1_raw);
      c1_hi = std::max(c1_hi, sc.c1_raw);
      c2_lo = std::min(c2_lo, sc.c2_raw);
      c2_hi = std::max(c2_hi, sc.c2_raw);
    }
    scales.c1.push_back({c1_lo, std::max(c1_hi - c1_lo, 1e-9)});
    scales.c2.push_back({c2_lo, std::max(c2_hi - c2_lo, eta2)});
  }
  return scales;
}

double nmpc_objective(const Eigen::VectorXd& controls, const NmpcProblem& problem,
                      CostBreakdown* breakdown, const NormalizationScales* frozen) {
  const auto& p = problem.params;
  const int nv = problem.n_vehicles();
  const int h = p.horizon_steps;
  if (controls.size() != problem.n_vars()) {
    throw std::invalid_argument("nmpc_objective: control vector size mismatch");
  }

  Eigen::VectorXd x = problem.estimate;
  std::vector<bool> active(nv);
  for (int i = 0; i < nv; ++i) {
    active[i] = problem.arrived.empty() || !problem.arrived[i];
  }

  std::vector<std::vector<double>> c1(nv, std::vector<double>(h));
  std::vector<std::vector<double>> c2(nv, std::vector<double>(h));
  std::vector<std::vector<double>> w_series(nv, std::vector<double>(h));
  std::vector<std::vector<double>> lambda_series, sigma_series;
  if (breakdown) {
    lambda_series.assign(nv, std::vector<double>(h));
    sigma_series.assign(nv, std::vector<double>(h));
  }

  std::vector<double> sigma2_dr = problem.sigma_p2_now;
  if (sigma2_dr.empty()) sigma2_dr.assign(nv, 0.0);
  std::vector<double> lambda_held(nv, 0.0);
  std::vector<double> sigma_held(nv, 0.0);
  std::vector<double> omegas(nv);
  const GraphParams graph_params{p.kappa, p.rho, p.rs};

  for (int k = 0; k < h; ++k) {
    for (int i = 0; i < nv; ++i) {
      omegas[i] = control_at(controls, problem, i, k);
    }
    x = step_stacked(x, omegas, active, p.v, p.ts);
    if (!x.allFinite()) {
      throw std::runtime_error("nmpc_objective: non-finite state at prediction step " +
                               std::to_string(k + 1));
    }
    auto states = from_stacked(x);
    for (int i = 0; i < nv; ++i) {
      if (active[i] &&
          (states[i].position() - problem.destinations[i]).norm() <= p.goal_radius) {
        active[i] = false;  // predicted arrival freezes the vehicle
      }
    }

    if (k % p.cost_stride_steps == 0) {
      const Rpmg rpmg = build_rpmg(states, problem.landmarks, p.rs, p.cooperation);
      const double meas_scale = std::sqrt(p.gamma);
      for (int i = 0; i < nv; ++i) {
        lambda_held[i] = lambda2(vehicle_laplacian(rpmg, i, graph_params));
        const auto geom = avg_geometry(rpmg, i);
        if (geom && landmark_reachable(rpmg, i)) {
          sigma_held[i] =
              meas_scale * sigma_p_bearing(geom->rg, states[i].psi, geom->theta_g);
          sigma2_dr[i] = sigma_held[i] * sigma_held[i];
        } else {
          const double sigma_psi =
              problem.sigma_psi_now.empty() ? 0.0 : problem.sigma_psi_now[i];
          const double drift = p.v * p.ts * p.cost_stride_steps * sigma_psi;
          sigma_held[i] =
              std::sqrt(sigma2_dr[i] + p.q_trace_per_step * p.cost_stride_steps) + drift;
          sigma2_dr[i] = sigma_held[i] * sigma_held[i];
        }
      }
    }

    for (int i = 0; i < nv; ++i) {
      c1[i][k] = c1_cost(states[i].position(), problem.destinations[i]);
      c2[i][k] = c2_cost(lambda_held[i], p.eta);
      const double sigma_for_w =
          p.w_predictive ? sigma_held[i]
                         : std::sqrt(std::max(0.0, problem.sigma_p2_now.empty()
                                                       ? 0.0
                                                       : problem.sigma_p2_now[i]));
      w_series[i][k] = adaptive_weight(sigma_for_w, p.sigma_c, p.w_connectivity);
      if (breakdown) {
        lambda_series[i][k] = lambda_held[i];
        sigma_series[i][k] = sigma_held[i];
      }
    }
  }

  double total = 0.0;
  if (breakdown) {
    breakdown->vehicle_steps.assign(nv, std::vector<StepCosts>(h));
  }
  const auto scaled = [](const std::vector<double>& values, const SeriesScale& scale) {
    std::vector<double> out(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
      out[k] = (values[k] - scale.lo) / scale.range;
    }
    return out;
  };
  for (int i = 0; i < nv; ++i) {
    const auto c1n = frozen ? scaled(c1[i], frozen->c1[i]) : normalize_series(c1[i]);
    const auto c2n = frozen ? scaled(c2[i], frozen->c2[i]) : normalize_series(c2[i]);
    for (int k = 0; k < h; ++k) {
      total += (c1n[k] + w_series[i][k] * c2n[k]) * p.ts;
      if (breakdown) {
        auto& sc = breakdown->vehicle_steps[i][k];
        sc.c1_raw = c1[i][k];
        sc.c2_raw = c2[i][k];
        sc.lambda = lambda_series[i][k];
        sc.sigma_p = sigma_series[i][k];
        sc.w = w_series[i][k];
        sc.c1_norm = c1n[k];
        sc.c2_norm = c2n[k];
      }
    }
  }
  if (breakdown) breakdown->total = total;
  return total;
}

Eigen::VectorXd nmpc_gradient(const Eigen::VectorXd& controls, const NmpcProblem& problem,
                              const NormalizationScales* frozen) {
  return nlp::finite_diff_grad_parallel(
      [&problem, frozen](const Eigen::VectorXd& u) {
        return nmpc_objective(u, problem, nullptr, frozen);
      },
      controls, kNmpcFdStep);
}

Eigen::VectorXd shift_plan(const Eigen::VectorXd& plan, const NmpcProblem& problem,
                           int shift_steps) {
  const int ns = problem.n_segments();
  const int nv = problem.n_vehicles();
  Eigen::VectorXd out(plan.size());
  for (int i = 0; i < nv; ++i) {
    for (int s = 0; s < ns; ++s) {
      const int src = std::min(
          (s * problem.params.control_hold_steps + shift_steps) /
              problem.params.control_hold_steps,
          ns - 1);
      out[i * ns + s] = plan[i * ns + src];
    }
  }
  return out;
}

NmpcStepResult nmpc_step(const NmpcProblem& problem, const nlp::SolverOptions& opts) {
  const auto& p = problem.params;
  const int n = problem.n_vars();
  const Eigen::VectorXd lo = Eigen::VectorXd::Constant(n, p.omega_min);
  const Eigen::VectorXd hi = Eigen::VectorXd::Constant(n, p.omega_max);

  Eigen::VectorXd x0 = problem.warm_start.size() == n
                           ? problem.warm_start
                           : Eigen::VectorXd::Zero(n);
  x0 = x0.cwiseMax(lo).cwiseMin(hi);

  NmpcStepResult result;
  try {
    const NormalizationScales scales = series_scales(x0, problem);
    result.report = nlp::solve_box_min(
        [&problem, &scales](const Eigen::VectorXd& u) {
          return nmpc_objective(u, problem, nullptr, &scales);
        },
        [&problem, &scales](const Eigen::VectorXd& u) {
          return nmpc_gradient(u, problem, &scales);
        },
        x0, lo, hi, opts);
    result.plan = result.report.solution;
  } catch (const std::exception&) {
    result.degraded = true;
    result.plan = x0;
  }

  nmpc_objective(result.plan, problem, &result.breakdown);
  result.controls.resize(problem.n_vehicles());
  for (int i = 0; i < problem.n_vehicles(); ++i) {
    result.controls[i] = result.plan[i * problem.n_segments()];
  }
  return result;
}

}  // namespace coopnav
