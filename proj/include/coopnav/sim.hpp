#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "coopnav/estimation.hpp"
#include "coopnav/nmpc.hpp"
#include "coopnav/sensing.hpp"
#include "coopnav/world.hpp"

namespace coopnav {

enum class EstimatorKind { mhe, ekf };

std::string to_string(EstimatorKind kind);

struct PlannerTraceRow {
  int step = 0;
  double j = 0.0;
  std::vector<double> lambda;   // per vehicle, first prediction step
  std::vector<double> sigma_p;  // per vehicle, first prediction step
  std::vector<double> w;        // per vehicle, first prediction step
  std::vector<double> c2_raw;   // per vehicle, first prediction step
  std::vector<double> omega;    // chosen first action per vehicle
  bool degraded = false;
};

struct VehicleMetrics {
  double path_length_m = 0.0;
  double mse_m2 = 0.0;
  std::optional<int> arrival_step;
};

struct RunResult {
  std::vector<Eigen::VectorXd> true_trajectory;       // stacked state per step
  std::vector<Eigen::VectorXd> estimated_trajectory;  // aligned with the above
  std::vector<std::vector<double>> sigma_x;           // [step][vehicle]
  std::vector<std::vector<double>> sigma_y;
  std::vector<MeasurementSet> measurement_log;
  std::vector<PlannerTraceRow> planner_trace;
  std::vector<VehicleMetrics> vehicle_metrics;
  std::vector<double> iteration_times_s;  // planner wall time per solve
  std::uint64_t seed = 0;
  std::string scenario_digest;
  EstimatorKind estimator = EstimatorKind::mhe;
  bool cooperation = true;
  bool aborted = false;  // estimator divergence
  int steps = 0;

  int n_vehicles() const {
    return true_trajectory.empty() ? 0
                                   : static_cast<int>(true_trajectory.front().size()) / 3;
  }
};

struct MetricRecord {
  std::vector<VehicleMetrics> per_vehicle;
  double total_path_length_m = 0.0;
  double mean_mse_m2 = 0.0;
  std::optional<int> last_arrival_step;
  double mean_iteration_time_s = 0.0;
  bool all_arrived = false;
};

// Full Fig-2-style closed loop: sense, estimate, predict covariance, plan,
// step the plant. Ends when every vehicle is inside its goal radius or at
// max_steps; aborts (flagged) when the estimation error exceeds the arena
// diagonal.
RunResult run_closed_loop(const Scenario& scenario, EstimatorKind estimator,
                          bool cooperation, int max_steps);

MetricRecord metrics(const RunResult& result);

// FNV-1a hash of the canonical scenario serialization (covers the seed).
std::string scenario_digest(const Scenario& scenario);

enum class TraceFormat { csv, json };

// Write trajectory/measurement/planner traces, a metrics summary, and a
// manifest into the directory. Throws std::runtime_error with path context
// on I/O failure.
void export_traces(const RunResult& result, const std::string& directory,
                   TraceFormat format);

struct McRunDigest {
  std::uint64_t seed = 0;
  bool aborted = false;
  bool all_arrived = false;
  double mean_mse_m2 = 0.0;
  double total_path_length_m = 0.0;
  std::optional<int> last_arrival_step;
  double mean_iteration_time_s = 0.0;
};

struct McCell {
  double grid_value = 0.0;
  std::vector<McRunDigest> runs;
  int failures = 0;
  double median_mse_m2 = 0.0;
  double iqr_mse_m2 = 0.0;
  double median_path_length_m = 0.0;
  double iqr_path_length_m = 0.0;
  double median_last_arrival_step = 0.0;  // over runs that fully arrived
  double median_iteration_time_s = 0.0;
};

struct MonteCarloSummary {
  std::string grid_key;  // empty = no sweep, single cell
  std::vector<McCell> cells;
};

// Seeded independent runs over a one-key parameter grid. Landmark layouts
// are re-randomized per seed index from the placement child stream, so runs
// with equal seed indices share layouts across grid values and estimators.
MonteCarloSummary run_monte_carlo(const Scenario& base, int n_seeds,
                                  const std::string& grid_key,
                                  const std::vector<double>& grid_values,
                                  EstimatorKind estimator, bool cooperation, int max_steps,
                                  int jobs);

// Set a scalar scenario field by its config-file key. Throws ScenarioError
// on unknown keys.
void apply_override(Scenario& scenario, const std::string& key, double value);

// Replace landmark positions with uniform draws inside the arena,
// deterministic in (seed, landmark count).
void randomize_landmarks(Scenario& scenario, std::uint64_t seed);

}  // namespace coopnav
