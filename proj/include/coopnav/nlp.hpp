#pragma once

#include <functional>
#include <string>

#include <Eigen/Core>

namespace coopnav::nlp {

struct SolverOptions {
  int max_iters = 100;
  double gradient_tolerance = 1e-8;
  double step_tolerance = 1e-12;
  double initial_damping = 1e-3;  // Levenberg-Marquardt
  double armijo_c = 1e-4;         // projected gradient line search
  double backtrack = 0.5;
};

enum class Termination { converged, max_iters, stalled };

struct SolveReport {
  Eigen::VectorXd solution;
  double objective = 0.0;  // sum of squared residuals / cost value
  int iterations = 0;
  Termination termination = Termination::max_iters;
  double gradient_norm = 0.0;  // projected gradient, infinity norm

  bool converged() const { return termination == Termination::converged; }
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;
using CostFn = std::function<double(const Eigen::VectorXd&)>;
using GradientFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Box-constrained nonlinear least squares (Levenberg-Marquardt with
// projection). Accepted steps never increase the objective.
SolveReport solve_nls(const ResidualFn& residual, const JacobianFn& jacobian,
                      const Eigen::VectorXd& x0, const Eigen::VectorXd& lower,
                      const Eigen::VectorXd& upper, const SolverOptions& opts);

// Box-constrained smooth minimization: projected gradient with Armijo
// backtracking and an adaptive step length.
SolveReport solve_box_min(const CostFn& cost, const GradientFn& gradient,
                          const Eigen::VectorXd& x0, const Eigen::VectorXd& lower,
                          const Eigen::VectorXd& upper, const SolverOptions& opts);

// Central finite differences, component-wise. Serial reference.
Eigen::VectorXd finite_diff_grad(const CostFn& f, const Eigen::VectorXd& x, double h);

// OpenMP variant: perturbed evaluations run in parallel, one component per
// task; results are bitwise identical to the serial reference. f must be
// safe to call concurrently.
Eigen::VectorXd finite_diff_grad_parallel(const CostFn& f, const Eigen::VectorXd& x,
                                          double h);

}  // namespace coopnav::nlp
