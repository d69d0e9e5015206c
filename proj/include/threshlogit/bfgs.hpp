#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Core>

namespace threshlogit {

struct BfgsOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;  ///< max-norm of the gradient
  double armijo_c1 = 1e-4;
  int max_backtracks = 60;
};

struct BfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  int iterations = 0;
  bool converged = false;
};

/// Minimizes a smooth function with BFGS and a backtracking Armijo line search.
///
/// `objective(x, grad)` returns f(x) and writes the gradient into grad. Near the
/// optimum the decrease in f drops below its rounding error long before the
/// gradient reaches the tolerance, so a step that leaves f unchanged to within
/// a few ulps is also accepted when it reduces the gradient norm.
template <typename Objective>
BfgsResult minimize_bfgs(Objective&& objective, Eigen::VectorXd x0, const BfgsOptions& options = {}) {
  const Eigen::Index n = x0.size();
  BfgsResult res;
  res.x = std::move(x0);
  res.gradient.resize(n);
  res.value = objective(res.x, res.gradient);
  if (!std::isfinite(res.value) || !res.gradient.allFinite()) return res;

  Eigen::MatrixXd inv_hessian = Eigen::MatrixXd::Identity(n, n);
  // Keep the first trial step at unit length.
  const double g0 = res.gradient.lpNorm<Eigen::Infinity>();
  if (g0 > 1.0) inv_hessian /= g0;
  bool scaled = false;

  Eigen::VectorXd trial_x(n), trial_g(n), step(n), dg(n), dir(n);
  for (int it = 0; it < options.max_iterations; ++it) {
    res.iterations = it;
    const double gnorm = res.gradient.lpNorm<Eigen::Infinity>();
    if (gnorm < options.gradient_tolerance) {
      res.converged = true;
      return res;
    }
    dir.noalias() = -inv_hessian * res.gradient;
    double slope = dir.dot(res.gradient);
    if (!(slope < 0.0)) {
      inv_hessian.setIdentity();
      if (gnorm > 1.0) inv_hessian /= gnorm;
      dir.noalias() = -inv_hessian * res.gradient;
      slope = dir.dot(res.gradient);
    }

    double t = 1.0;
    double trial_value = std::numeric_limits<double>::infinity();
    bool accepted = false;
    const double noise = 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(res.value));
    for (int k = 0; k < options.max_backtracks; ++k, t *= 0.5) {
      trial_x.noalias() = res.x + t * dir;
      trial_value = objective(trial_x, trial_g);
      if (!std::isfinite(trial_value) || !trial_g.allFinite()) continue;
      if (trial_value <= res.value + options.armijo_c1 * t * slope) {
        accepted = true;
        break;
      }
      if (trial_value <= res.value + noise && trial_g.lpNorm<Eigen::Infinity>() < gnorm) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      res.iterations = it + 1;
      return res;
    }

    step = trial_x - res.x;
    dg = trial_g - res.gradient;
    res.x = trial_x;
    res.value = trial_value;
    res.gradient = trial_g;

    const double sy = step.dot(dg);
    if (sy > 1e-12 * step.norm() * dg.norm()) {
      if (!scaled) {
        inv_hessian = Eigen::MatrixXd::Identity(n, n) * (sy / dg.squaredNorm());
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = inv_hessian * dg;
      const double yhy = dg.dot(hy);
      inv_hessian += ((1.0 + rho * yhy) * rho) * (step * step.transpose()) - rho * (hy * step.transpose() + step * hy.transpose());
    }
  }
  res.iterations = options.max_iterations;
  res.converged = res.gradient.lpNorm<Eigen::Infinity>() < options.gradient_tolerance;
  return res;
}

}  // namespace threshlogit
