#include "coopnav/nlp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

namespace coopnav::nlp {

namespace {

Eigen::VectorXd project(const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                        const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

// Infinity norm of the projected gradient: zero exactly when x is a
// first-order stationary point of the box-constrained problem.
double projected_gradient_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                               const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  return (x - project(x - g, lo, hi)).cwiseAbs().maxCoeff();
}

void check_box(const Eigen::VectorXd& x0, const Eigen::VectorXd& lo,
               const Eigen::VectorXd& hi) {
  if (x0.size() != lo.size() || x0.size() != hi.size()) {
    throw std::invalid_argument("solver: bound dimensions mismatch x0");
  }
  if (((x0 - lo).minCoeff() < 0.0) || ((hi - x0).minCoeff() < 0.0)) {
    throw std::invalid_argument("solver: x0 violates bounds");
  }
}

}  // namespace

SolveReport solve_nls(const ResidualFn& residual, const JacobianFn& jacobian,
                      const Eigen::VectorXd& x0, const Eigen::VectorXd& lower,
                      const Eigen::VectorXd& upper, const SolverOptions& opts) {
  check_box(x0, lower, upper);

  Eigen::VectorXd x = x0;
  Eigen::VectorXd r = residual(x);
  if (!r.allFinite()) {
    throw std::invalid_argument("solve_nls: non-finite residual at x0");
  }
  Eigen::MatrixXd j = jacobian(x);
  if (j.rows() != r.size() || j.cols() != x.size()) {
    throw std::invalid_argument("solve_nls: jacobian dimensions mismatch");
  }

  double cost = r.squaredNorm();
  double damping = opts.initial_damping;

  SolveReport report;
  report.termination = Termination::max_iters;

  int iter = 0;
  for (; iter < opts.max_iters; ++iter) {
    const Eigen::VectorXd grad = 2.0 * j.transpose() * r;
    report.gradient_norm = projected_gradient_norm(x, grad, lower, upper);
    if (report.gradient_norm <= opts.gradient_tolerance) {
      report.termination = Termination::converged;
      break;
    }

    const Eigen::MatrixXd jtj = j.transpose() * j;
    bool accepted = false;
    for (int tries = 0; tries < 24; ++tries) {
      Eigen::MatrixXd aug = jtj;
      aug.diagonal().array() += damping;
      const Eigen::VectorXd step = aug.ldlt().solve(-0.5 * grad);
      const Eigen::VectorXd x_new = project(x + step, lower, upper);
      if ((x_new - x).cwiseAbs().maxCoeff() <= opts.step_tolerance) {
        break;  // damped into numerical stall
      }
      const Eigen::VectorXd r_new = residual(x_new);
      const double cost_new = r_new.allFinite() ? r_new.squaredNorm()
                                                : std::numeric_limits<double>::infinity();
      if (cost_new < cost) {
        x = x_new;
        r = r_new;
        cost = cost_new;
        j = jacobian(x);
        damping = std::max(damping * 0.1, 1e-12);
        accepted = true;
        break;
      }
      damping = std::max(damping, 1e-12) * 10.0;
    }
    if (!accepted) {
      const Eigen::VectorXd grad_now = 2.0 * j.transpose() * r;
      report.gradient_norm = projected_gradient_norm(x, grad_now, lower, upper);
      report.termination = report.gradient_norm <= opts.gradient_tolerance
                               ? Termination::converged
                               : Termination::stalled;
      break;
    }
  }

  if (iter == opts.max_iters) {
    const Eigen::VectorXd grad = 2.0 * j.transpose() * r;
    report.gradient_norm = projected_gradient_norm(x, grad, lower, upper);
    if (report.gradient_norm <= opts.gradient_tolerance) {
      report.termination = Termination::converged;
    }
  }
  report.solution = x;
  report.objective = cost;
  report.iterations = iter;
  return report;
}

SolveReport solve_box_min(const CostFn& cost, const GradientFn& gradient,
                          const Eigen::VectorXd& x0, const Eigen::VectorXd& lower,
                          const Eigen::VectorXd& upper, const SolverOptions& opts) {
  check_box(x0, lower, upper);

  Eigen::VectorXd x = x0;
  double f = cost(x);
  if (!std::isfinite(f)) {
    throw std::invalid_argument("solve_box_min: non-finite cost at x0");
  }

  SolveReport report;
  report.termination = Termination::max_iters;

  double alpha = 1.0;
  int iter = 0;
  for (; iter < opts.max_iters; ++iter) {
    const Eigen::VectorXd g = gradient(x);
    report.gradient_norm = projected_gradient_norm(x, g, lower, upper);
    if (report.gradient_norm <= opts.gradient_tolerance) {
      report.termination = Termination::converged;
      break;
    }

    bool accepted = false;
    for (int tries = 0; tries < 60; ++tries) {
      const Eigen::VectorXd x_new = project(x - alpha * g, lower, upper);
      const Eigen::VectorXd dx = x_new - x;
      if (dx.cwiseAbs().maxCoeff() <= opts.step_tolerance) break;
      const double f_new = cost(x_new);
      // Armijo condition on the projected step.
      if (std::isfinite(f_new) && f_new <= f + opts.armijo_c * g.dot(dx)) {
        x = x_new;
        f = f_new;
        alpha /= opts.backtrack;  // re-grow after a success
        accepted = true;
        break;
      }
      alpha *= opts.backtrack;
    }
    if (!accepted) {
      report.termination = Termination::stalled;
      break;
    }
  }

  if (report.termination != Termination::converged) {
    const Eigen::VectorXd g = gradient(x);
    report.gradient_norm = projected_gradient_norm(x, g, lower, upper);
    if (report.gradient_norm <= opts.gradient_tolerance) {
      report.termination = Termination::converged;
    }
  }
  report.solution = x;
  report.objective = f;
  report.iterations = iter;
  return report;
}

Eigen::VectorXd finite_diff_grad(const CostFn& f, const Eigen::VectorXd& x, double h) {
  if (h <= 0.0) throw std::invalid_argument("finite_diff_grad: h must be > 0");
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x;
    Eigen::VectorXd xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

Eigen::VectorXd finite_diff_grad_parallel(const CostFn& f, const Eigen::VectorXd& x,
                                          double h) {
  if (h <= 0.0) throw std::invalid_argument("finite_diff_grad: h must be > 0");
  Eigen::VectorXd g(x.size());
  const Eigen::Index n = x.size();
#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd xp = x;
    Eigen::VectorXd xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

}  // namespace coopnav::nlp
