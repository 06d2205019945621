#include "coopnav/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "coopnav/kinematics.hpp"
#include "coopnav/rng.hpp"

namespace coopnav {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string to_string(EstimatorKind kind) {
  return kind == EstimatorKind::mhe ? "mhe" : "ekf";
}

std::string scenario_digest(const Scenario& scenario) {
  const std::string text = serialize_scenario(scenario);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

std::vector<double> per_vehicle_sigma2(const Eigen::MatrixXd& p, int nv) {
  std::vector<double> out(nv);
  for (int i = 0; i < nv; ++i) {
    out[i] = p(3 * i, 3 * i) + p(3 * i + 1, 3 * i + 1);
  }
  return out;
}

nlp::SolverOptions mhe_solver_options() {
  nlp::SolverOptions opts;
  opts.max_iters = 30;
  opts.gradient_tolerance = 1e-9;
  opts.step_tolerance = 1e-14;
  opts.initial_damping = 1e-3;
  return opts;
}

nlp::SolverOptions nmpc_solver_options() {
  nlp::SolverOptions opts;
  opts.max_iters = 12;
  opts.gradient_tolerance = 1e-4;
  opts.step_tolerance = 1e-10;
  return opts;
}

NmpcParams nmpc_params_from(const Scenario& s, bool cooperation) {
  NmpcParams p;
  p.horizon_steps = std::max(1, static_cast<int>(std::lround(s.tau_h_s / s.ts_s)));
  p.control_hold_steps = s.control_hold_steps;
  p.cost_stride_steps = s.cost_stride_steps;
  p.v = s.v_mps;
  p.ts = s.ts_s;
  p.eta = s.eta;
  p.kappa = s.kappa;
  p.rho = s.rho_m;
  p.rs = s.rs_m;
  p.w_connectivity = s.w_connectivity;
  p.sigma_c = s.sigma_c_m;
  p.gamma = s.gamma_rad2;
  p.omega_min = s.omega_min_rads;
  p.omega_max = s.omega_max_rads;
  p.goal_radius = s.goal_radius_m;
  p.q_trace_per_step = 2.0 * s.q_diag;
  p.w_predictive = s.w_predictive;
  p.cooperation = cooperation;
  return p;
}

}  // namespace

RunResult run_closed_loop(const Scenario& scenario, EstimatorKind estimator,
                          bool cooperation, int max_steps) {
  validate_scenario(scenario);
  const int nv = scenario.n_vehicles();
  const double arena_diag = scenario.arena_diagonal();

  RunResult result;
  result.seed = scenario.seed;
  result.scenario_digest = scenario_digest(scenario);
  result.estimator = estimator;
  result.cooperation = cooperation;

  EstimationModel model;
  model.n_vehicles = nv;
  model.v = scenario.v_mps;
  model.ts = scenario.ts_s;
  model.gamma = scenario.gamma_rad2;
  model.q_diag = Eigen::VectorXd::Constant(3 * nv, scenario.q_diag);
  model.landmarks = scenario.landmarks;

  RngStream master(scenario.seed);
  RngStream rng_meas = master.child("measurement");
  RngStream rng_proc = master.child("process");
  RngStream rng_init = master.child("init_estimate");

  // Plant state and the perturbed initial estimate; the initial covariance
  // mirrors the perturbation (floored to stay positive definite).
  std::vector<VehicleState> truth(nv);
  for (int i = 0; i < nv; ++i) truth[i] = scenario.vehicles[i].source;
  Eigen::VectorXd x_hat = to_stacked(truth);
  const double pos_var = scenario.init_est_std_m * scenario.init_est_std_m;
  const double psi_var =
      scenario.init_est_heading_std_rad * scenario.init_est_heading_std_rad;
  Eigen::MatrixXd p0 = Eigen::MatrixXd::Zero(3 * nv, 3 * nv);
  for (int i = 0; i < nv; ++i) {
    x_hat[3 * i] = rng_init.gaussian(x_hat[3 * i], pos_var);
    x_hat[3 * i + 1] = rng_init.gaussian(x_hat[3 * i + 1], pos_var);
    x_hat[3 * i + 2] = wrap_angle(rng_init.gaussian(x_hat[3 * i + 2], psi_var));
    p0(3 * i, 3 * i) = std::max(pos_var, 1e-9);
    p0(3 * i + 1, 3 * i + 1) = std::max(pos_var, 1e-9);
    p0(3 * i + 2, 3 * i + 2) = std::max(psi_var, 1e-9);
  }

  MheWindow window(model, scenario.n_e_steps, x_hat, p0);
  EkfState ekf{x_hat, p0};
  Eigen::MatrixXd p_report = p0;  // head covariance for traces / planner seed

  std::vector<bool> arrived(nv, false);
  std::vector<std::optional<int>> arrival_step(nv);
  for (int i = 0; i < nv; ++i) {
    if ((truth[i].position() - scenario.vehicles[i].destination).norm() <=
        scenario.goal_radius_m) {
      arrived[i] = true;
      arrival_step[i] = 0;
    }
  }

  const auto mhe_opts = mhe_solver_options();
  const auto nmpc_opts = nmpc_solver_options();
  NmpcParams planner_params = nmpc_params_from(scenario, cooperation);

  std::vector<double> omegas_prev;
  std::vector<bool> active_prev;
  Eigen::VectorXd plan;
  int steps_since_solve = 0;
  Eigen::VectorXd x_hat_prev = x_hat;

  for (int t = 0; t < max_steps; ++t) {
    std::vector<bool> active(nv);
    for (int i = 0; i < nv; ++i) active[i] = !arrived[i];

    // (1) Sense.
    MeasurementSet meas =
        sense_all(truth, scenario.landmarks, scenario.rs_m, scenario.gamma_rad2, rng_meas,
                  t, cooperation, scenario.meas_noise_scale);

    // (2) Estimate. The estimators see measurements, applied controls and
    // the arrival mask, never the true states. Numerical blowups count as
    // divergence and abort the run (flagged), never crash it.
    try {
      if (estimator == EstimatorKind::mhe) {
        window.push({omegas_prev, active_prev, meas});
        const MheResult mhe = window.estimate(mhe_opts);
        x_hat = mhe.head;
        if (t > 0) {
          const Eigen::MatrixXd f =
              step_jacobian(x_hat_prev, active_prev, model.v, model.ts);
          const Eigen::MatrixXd h = measurement_jacobian(x_hat, meas, model);
          const Eigen::MatrixXd gamma_stack =
              model.gamma * Eigen::MatrixXd::Identity(h.rows(), h.rows());
          p_report = arrival_cost_update(p_report, f, h,
                                         process_noise_matrix(model, active_prev),
                                         gamma_stack);
        }
      } else {
        ekf = ekf_step(ekf, omegas_prev, active_prev, meas, model, t > 0);
        x_hat = ekf.x;
        p_report = ekf.p;
      }
    } catch (const std::exception&) {
      result.aborted = true;
    }
    if (!x_hat.allFinite() || !p_report.allFinite()) result.aborted = true;
    if (result.aborted) {
      result.true_trajectory.push_back(to_stacked(truth));
      result.estimated_trajectory.push_back(x_hat_prev);
      result.sigma_x.push_back(std::vector<double>(nv, 0.0));
      result.sigma_y.push_back(std::vector<double>(nv, 0.0));
      result.measurement_log.push_back(meas);
      break;
    }
    x_hat_prev = x_hat;

    // Record the step.
    result.true_trajectory.push_back(to_stacked(truth));
    result.estimated_trajectory.push_back(x_hat);
    std::vector<double> sx(nv), sy(nv);
    for (int i = 0; i < nv; ++i) {
      sx[i] = std::sqrt(std::max(0.0, p_report(3 * i, 3 * i)));
      sy[i] = std::sqrt(std::max(0.0, p_report(3 * i + 1, 3 * i + 1)));
    }
    result.sigma_x.push_back(sx);
    result.sigma_y.push_back(sy);
    result.measurement_log.push_back(meas);

    // Divergence abort.
    double worst_error = 0.0;
    for (int i = 0; i < nv; ++i) {
      const Eigen::Vector2d err(x_hat[3 * i] - truth[i].x, x_hat[3 * i + 1] - truth[i].y);
      worst_error = std::max(worst_error, err.norm());
    }
    if (worst_error > arena_diag) {
      result.aborted = true;
      break;
    }

    if (std::all_of(arrived.begin(), arrived.end(), [](bool a) { return a; })) {
      break;
    }

    // (3)+(4) Covariance prediction feeds the planner; receding-horizon
    // solve only every replan interval.
    if (plan.size() == 0 || t % scenario.replan_every_steps == 0) {
      NmpcProblem problem;
      problem.estimate = x_hat;
      problem.destinations.reserve(nv);
      for (int i = 0; i < nv; ++i) {
        problem.destinations.push_back(scenario.vehicles[i].destination);
      }
      problem.landmarks = scenario.landmarks;
      problem.sigma_p2_now = per_vehicle_sigma2(p_report, nv);
      problem.sigma_psi_now.resize(nv);
      for (int i = 0; i < nv; ++i) {
        problem.sigma_psi_now[i] = std::sqrt(std::max(0.0, p_report(3 * i + 2, 3 * i + 2)));
      }
      problem.arrived = arrived;
      problem.params = planner_params;
      if (plan.size() == problem.n_vars()) {
        problem.warm_start = shift_plan(plan, problem, steps_since_solve);
      }

      const auto t0 = std::chrono::steady_clock::now();
      NmpcStepResult step_result = nmpc_step(problem, nmpc_opts);
      const auto t1 = std::chrono::steady_clock::now();
      result.iteration_times_s.push_back(
          std::chrono::duration<double>(t1 - t0).count());

      plan = step_result.plan;
      steps_since_solve = 0;

      PlannerTraceRow row;
      row.step = t;
      row.j = step_result.breakdown.total;
      row.degraded = step_result.degraded;
      row.omega = step_result.controls;
      for (int i = 0; i < nv; ++i) {
        const auto& sc = step_result.breakdown.vehicle_steps[i].front();
        row.lambda.push_back(sc.lambda);
        row.sigma_p.push_back(sc.sigma_p);
        row.w.push_back(sc.w);
        row.c2_raw.push_back(sc.c2_raw);
      }
      result.planner_trace.push_back(row);
    }

    // (5) Plant step with the plan's current segment.
    const int ns = std::max(1, (planner_params.horizon_steps +
                                planner_params.control_hold_steps - 1) /
                                   planner_params.control_hold_steps);
    const int seg =
        std::min(steps_since_solve / planner_params.control_hold_steps, ns - 1);
    std::vector<double> omegas(nv, 0.0);
    for (int i = 0; i < nv; ++i) {
      if (!active[i]) continue;
      omegas[i] = clamp_omega(plan[i * ns + seg], scenario.omega_min_rads,
                              scenario.omega_max_rads);
    }

    Eigen::VectorXd next = step_stacked(to_stacked(truth), omegas, active,
                                        scenario.v_mps, scenario.ts_s);
    const double q_std =
        std::sqrt(scenario.q_diag) * scenario.process_noise_scale;
    for (int i = 0; i < nv; ++i) {
      if (!active[i]) continue;
      next[3 * i] += rng_proc.gaussian(0.0, q_std * q_std);
      next[3 * i + 1] += rng_proc.gaussian(0.0, q_std * q_std);
      next[3 * i + 2] = wrap_angle(next[3 * i + 2] + rng_proc.gaussian(0.0, q_std * q_std));
    }
    truth = from_stacked(next);

    for (int i = 0; i < nv; ++i) {
      if (!arrived[i] && (truth[i].position() - scenario.vehicles[i].destination).norm() <=
                             scenario.goal_radius_m) {
        arrived[i] = true;
        arrival_step[i] = t + 1;
      }
    }

    omegas_prev = omegas;
    active_prev = active;
    ++steps_since_solve;
  }

  result.steps = static_cast<int>(result.true_trajectory.size());
  result.vehicle_metrics.assign(nv, {});
  for (int i = 0; i < nv; ++i) {
    result.vehicle_metrics[i].arrival_step = arrival_step[i];
  }
  const MetricRecord record = metrics(result);
  result.vehicle_metrics = record.per_vehicle;
  return result;
}

MetricRecord metrics(const RunResult& result) {
  MetricRecord record;
  const int nv = result.n_vehicles();
  record.per_vehicle = result.vehicle_metrics;
  record.per_vehicle.resize(nv);

  for (int i = 0; i < nv; ++i) {
    auto& vm = record.per_vehicle[i];
    vm.path_length_m = 0.0;
    vm.mse_m2 = 0.0;
    for (std::size_t t = 0; t + 1 < result.true_trajectory.size(); ++t) {
      const auto& a = result.true_trajectory[t];
      const auto& b = result.true_trajectory[t + 1];
      vm.path_length_m += Eigen::Vector2d(b[3 * i] - a[3 * i], b[3 * i + 1] - a[3 * i + 1])
                              .norm();
    }
    for (std::size_t t = 0; t < result.true_trajectory.size(); ++t) {
      const auto& truth = result.true_trajectory[t];
      const auto& est = result.estimated_trajectory[t];
      vm.mse_m2 += Eigen::Vector2d(est[3 * i] - truth[3 * i],
                                   est[3 * i + 1] - truth[3 * i + 1])
                       .squaredNorm();
    }
    if (!result.true_trajectory.empty()) {
      vm.mse_m2 /= static_cast<double>(result.true_trajectory.size());
    }
    record.total_path_length_m += vm.path_length_m;
    record.mean_mse_m2 += vm.mse_m2;
  }
  if (nv > 0) record.mean_mse_m2 /= nv;

  record.all_arrived = nv > 0;
  for (int i = 0; i < nv; ++i) {
    if (!record.per_vehicle[i].arrival_step) {
      record.all_arrived = false;
    } else if (!record.last_arrival_step ||
               *record.per_vehicle[i].arrival_step > *record.last_arrival_step) {
      record.last_arrival_step = record.per_vehicle[i].arrival_step;
    }
  }
  if (!record.all_arrived) record.last_arrival_step.reset();

  if (!result.iteration_times_s.empty()) {
    record.mean_iteration_time_s =
        std::accumulate(result.iteration_times_s.begin(), result.iteration_times_s.end(),
                        0.0) /
        static_cast<double>(result.iteration_times_s.size());
  }
  return record;
}

namespace {

std::string fmt17(double d) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", d);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("export_traces: cannot open " + path.string());
  }
  return out;
}

json metrics_json(const RunResult& result) {
  const MetricRecord record = metrics(result);
  json per_vehicle = json::array();
  for (const auto& vm : record.per_vehicle) {
    json v{{"path_length_m", vm.path_length_m}, {"mse_m2", vm.mse_m2}};
    if (vm.arrival_step) v["arrival_step"] = *vm.arrival_step;
    per_vehicle.push_back(v);
  }
  json out{{"per_vehicle", per_vehicle},
           {"total_path_length_m", record.total_path_length_m},
           {"mean_mse_m2", record.mean_mse_m2},
           {"all_arrived", record.all_arrived},
           {"mean_iteration_time_s", record.mean_iteration_time_s}};
  if (record.last_arrival_step) out["last_arrival_step"] = *record.last_arrival_step;
  return out;
}

json manifest_json(const RunResult& result) {
  return json{{"format_version", 1},
              {"scenario_digest", result.scenario_digest},
              {"seed", result.seed},
              {"estimator", to_string(result.estimator)},
              {"cooperation", result.cooperation},
              {"steps", result.steps},
              {"aborted", result.aborted},
              {"threads", static_cast<int>(std::thread::hardware_concurrency())}};
}

}  // namespace

void export_traces(const RunResult& result, const std::string& directory,
                   TraceFormat format) {
  const fs::path dir(directory);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw std::runtime_error("export_traces: cannot create " + dir.string() + ": " +
                             ec.message());
  }
  const int nv = result.n_vehicles();

  if (format == TraceFormat::csv) {
    {
      auto out = open_out(dir / "true_trajectory.csv");
      out << "step,vehicle,x_m,y_m,psi_rad\n";
      for (std::size_t t = 0; t < result.true_trajectory.size(); ++t) {
        const auto& x = result.true_trajectory[t];
        for (int i = 0; i < nv; ++i) {
          out << t << "," << i << "," << fmt17(x[3 * i]) << "," << fmt17(x[3 * i + 1])
              << "," << fmt17(x[3 * i + 2]) << "\n";
        }
      }
    }
    {
      auto out = open_out(dir / "estimated_trajectory.csv");
      out << "step,vehicle,x_m,y_m,psi_rad,sigma_x_m,sigma_y_m,pos_error_m\n";
      for (std::size_t t = 0; t < result.estimated_trajectory.size(); ++t) {
        const auto& xe = result.estimated_trajectory[t];
        const auto& xt = result.true_trajectory[t];
        for (int i = 0; i < nv; ++i) {
          const double err = Eigen::Vector2d(xe[3 * i] - xt[3 * i],
                                             xe[3 * i + 1] - xt[3 * i + 1])
                                 .norm();
          out << t << "," << i << "," << fmt17(xe[3 * i]) << "," << fmt17(xe[3 * i + 1])
              << "," << fmt17(xe[3 * i + 2]) << "," << fmt17(result.sigma_x[t][i]) << ","
              << fmt17(result.sigma_y[t][i]) << "," << fmt17(err) << "\n";
        }
      }
    }
    {
      auto out = open_out(dir / "measurements.csv");
      out << "step,observer,target,kind,value,variance\n";
      for (const auto& set : result.measurement_log) {
        for (const auto& m : set.items) {
          out << set.time_step << "," << m.observer << "," << m.target << ","
              << (m.kind == MeasurementKind::bearing ? "bearing" : "range") << ","
              << fmt17(m.value) << "," << fmt17(m.variance) << "\n";
        }
      }
    }
    {
      auto out = open_out(dir / "planner_trace.csv");
      out << "step,j,vehicle,lambda2,sigma_p_m,w,c2_raw,omega_rads,degraded\n";
      for (const auto& row : result.planner_trace) {
        for (int i = 0; i < nv; ++i) {
          out << row.step << "," << fmt17(row.j) << "," << i << ","
              << fmt17(row.lambda[i]) << "," << fmt17(row.sigma_p[i]) << ","
              << fmt17(row.w[i]) << "," << fmt17(row.c2_raw[i]) << ","
              << fmt17(row.omega[i]) << "," << (row.degraded ? 1 : 0) << "\n";
        }
      }
    }
  } else {
    json run;
    run["true_trajectory"] = json::array();
    run["estimated_trajectory"] = json::array();
    for (std::size_t t = 0; t < result.true_trajectory.size(); ++t) {
      json ts = json::array(), es = json::array();
      for (int i = 0; i < nv; ++i) {
        const auto& xt = result.true_trajectory[t];
        const auto& xe = result.estimated_trajectory[t];
        ts.push_back({{"x_m", xt[3 * i]}, {"y_m", xt[3 * i + 1]}, {"psi_rad", xt[3 * i + 2]}});
        es.push_back({{"x_m", xe[3 * i]},
                      {"y_m", xe[3 * i + 1]},
                      {"psi_rad", xe[3 * i + 2]},
                      {"sigma_x_m", result.sigma_x[t][i]},
                      {"sigma_y_m", result.sigma_y[t][i]}});
      }
      run["true_trajectory"].push_back(ts);
      run["estimated_trajectory"].push_back(es);
    }
    json meas = json::array();
    for (const auto& set : result.measurement_log) {
      for (const auto& m : set.items) {
        meas.push_back({{"step", set.time_step},
                        {"observer", m.observer},
                        {"target", m.target},
                        {"kind", m.kind == MeasurementKind::bearing ? "bearing" : "range"},
                        {"value", m.value},
                        {"variance", m.variance}});
      }
    }
    run["measurements"] = meas;
    json planner = json::array();
    for (const auto& row : result.planner_trace) {
      planner.push_back({{"step", row.step},
                         {"j", row.j},
                         {"lambda2", row.lambda},
                         {"sigma_p_m", row.sigma_p},
                         {"w", row.w},
                         {"c2_raw", row.c2_raw},
                         {"omega_rads", row.omega},
                         {"degraded", row.degraded}});
    }
    run["planner_trace"] = planner;
    auto out = open_out(dir / "run.json");
    out << run.dump(2) << "\n";
  }

  {
    auto out = open_out(dir / "metrics.json");
    out << metrics_json(result).dump(2) << "\n";
  }
  {
    auto out = open_out(dir / "manifest.json");
    out << manifest_json(result).dump(2) << "\n";
  }
}

void apply_override(Scenario& scenario, const std::string& key, double value) {
  if (key == "v_mps") scenario.v_mps = value;
  else if (key == "ts_s") scenario.ts_s = value;
  else if (key == "rs_m") scenario.rs_m = value;
  else if (key == "eta") scenario.eta = value;
  else if (key == "kappa") scenario.kappa = value;
  else if (key == "rho_m") scenario.rho_m = value;
  else if (key == "w_connectivity") scenario.w_connectivity = value;
  else if (key == "sigma_c_m") scenario.sigma_c_m = value;
  else if (key == "gamma_rad2") scenario.gamma_rad2 = value;
  else if (key == "q_diag") scenario.q_diag = value;
  else if (key == "tau_h_s") scenario.tau_h_s = value;
  else if (key == "n_e_steps") scenario.n_e_steps = static_cast<int>(value);
  else if (key == "goal_radius_m") scenario.goal_radius_m = value;
  else if (key == "init_est_std_m") scenario.init_est_std_m = value;
  else if (key == "init_est_heading_std_rad") scenario.init_est_heading_std_rad = value;
  else if (key == "meas_noise_scale") scenario.meas_noise_scale = value;
  else if (key == "process_noise_scale") scenario.process_noise_scale = value;
  else if (key == "control_hold_steps") scenario.control_hold_steps = static_cast<int>(value);
  else if (key == "replan_every_steps") scenario.replan_every_steps = static_cast<int>(value);
  else if (key == "cost_stride_steps") scenario.cost_stride_steps = static_cast<int>(value);
  else if (key == "max_hops") scenario.max_hops = static_cast<int>(value);
  else throw ScenarioError("apply_override: unknown field '" + key + "'");
}

void randomize_landmarks(Scenario& scenario, std::uint64_t seed) {
  RngStream placement = RngStream(seed).child("placement");
  for (auto& lm : scenario.landmarks) {
    lm.x = placement.uniform(scenario.arena_min_x_m, scenario.arena_max_x_m);
    lm.y = placement.uniform(scenario.arena_min_y_m, scenario.arena_max_y_m);
  }
}

namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double iqr_of(std::vector<double> v) {
  if (v.size() < 2) return 0.0;
  std::sort(v.begin(), v.end());
  const auto quartile = [&](double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    return lo + 1 < v.size() ? v[lo] * (1.0 - frac) + v[lo + 1] * frac : v[lo];
  };
  return quartile(0.75) - quartile(0.25);
}

}  // namespace

MonteCarloSummary run_monte_carlo(const Scenario& base, int n_seeds,
                                  const std::string& grid_key,
                                  const std::vector<double>& grid_values,
                                  EstimatorKind estimator, bool cooperation, int max_steps,
                                  int jobs) {
  if (n_seeds < 1) throw std::invalid_argument("run_monte_carlo: n_seeds must be >= 1");
  std::vector<double> values = grid_values;
  if (grid_key.empty() || values.empty()) values = {0.0};

  const int n_cells = static_cast<int>(values.size());
  const int n_tasks = n_cells * n_seeds;
  std::vector<McRunDigest> digests(n_tasks);

  RngStream master(base.seed);
  std::vector<std::uint64_t> run_seeds(n_seeds);
  for (int s = 0; s < n_seeds; ++s) {
    run_seeds[s] = master.child("mc_run_" + std::to_string(s)).seed();
    for (int prev = 0; prev < s; ++prev) {
      if (run_seeds[prev] == run_seeds[s]) {
        throw std::invalid_argument("run_monte_carlo: duplicate derived seed");
      }
    }
  }

#pragma omp parallel for schedule(dynamic) num_threads(jobs > 0 ? jobs : 1)
  for (int task = 0; task < n_tasks; ++task) {
    const int cell = task / n_seeds;
    const int s = task % n_seeds;
    Scenario scenario = base;
    if (!grid_key.empty() && !grid_values.empty()) {
      apply_override(scenario, grid_key, values[cell]);
    }
    scenario.seed = run_seeds[s];
    randomize_landmarks(scenario, run_seeds[s]);

    McRunDigest digest;
    digest.seed = scenario.seed;
    try {
      const RunResult run = run_closed_loop(scenario, estimator, cooperation, max_steps);
      const MetricRecord record = metrics(run);
      digest.aborted = run.aborted;
      digest.all_arrived = record.all_arrived;
      digest.mean_mse_m2 = record.mean_mse_m2;
      digest.total_path_length_m = record.total_path_length_m;
      digest.last_arrival_step = record.last_arrival_step;
      digest.mean_iteration_time_s = record.mean_iteration_time_s;
    } catch (const std::exception&) {
      digest.aborted = true;
    }
    digests[task] = digest;
  }

  MonteCarloSummary summary;
  summary.grid_key = grid_key;
  for (int cell = 0; cell < n_cells; ++cell) {
    McCell out;
    out.grid_value = values[cell];
    std::vector<double> mses, paths, arrivals, times;
    for (int s = 0; s < n_seeds; ++s) {
      const auto& digest = digests[cell * n_seeds + s];
      out.runs.push_back(digest);
      if (digest.aborted) {
        ++out.failures;
        continue;
      }
      mses.push_back(digest.mean_mse_m2);
      paths.push_back(digest.total_path_length_m);
      times.push_back(digest.mean_iteration_time_s);
      if (digest.last_arrival_step) {
        arrivals.push_back(static_cast<double>(*digest.last_arrival_step));
      }
    }
    out.median_mse_m2 = median_of(mses);
    out.iqr_mse_m2 = iqr_of(mses);
    out.median_path_length_m = median_of(paths);
    out.iqr_path_length_m = iqr_of(paths);
    out.median_last_arrival_step = median_of(arrivals);
    out.median_iteration_time_s = median_of(times);
    summary.cells.push_back(std::move(out));
  }
  return summary;
}

}  // namespace coopnav
