#pragma once

// Maximum-likelihood estimation of the binary-logit threshold models.
//
// Smooth kinds (Linear, STF1, STF2, Power, Reverting) are fitted jointly over
// all free parameters with BFGS; alpha and the group scales live on a log
// scale. HTF is not differentiable in alpha, so it is fitted by profile
// likelihood: a grid over alpha, a smooth inner fit of the remaining
// parameters at each grid point, and golden-section refinement around the best
// grid point.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "threshlogit/bfgs.hpp"
#include "threshlogit/errors.hpp"
#include "threshlogit/likelihood.hpp"
#include "threshlogit/model.hpp"

namespace threshlogit {

struct FitOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;
  double alpha_start = 1.0;  ///< start for smooth kinds other than Power
  double htf_grid_step = 0.25;
  double htf_refine_tolerance = 1e-4;
  bool compute_covariance = true;
};

struct FitResult {
  UtilitySpec spec;  ///< normalization resolved, transform.alpha set to the estimate
  ParameterSet estimates;
  std::vector<std::string> parameter_names;
  std::optional<Eigen::MatrixXd> covariance;  ///< over parameter_names, natural coordinates
  std::vector<double> std_errors;             ///< empty when covariance is absent
  double final_ll = 0.0;
  double null_ll = 0.0;
  bool converged = false;
  int iterations = 0;
  double gradient_max_norm = 0.0;
  std::size_t n_obs = 0;
  std::size_t n_free_params = 0;
  std::vector<std::string> notes;

  std::optional<std::size_t> index_of(const std::string& name) const {
    const auto it = std::find(parameter_names.begin(), parameter_names.end(), name);
    if (it == parameter_names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - parameter_names.begin());
  }

  double estimate(const std::string& name) const {
    const auto i = index_of(name);
    if (!i) throw InvalidSpecError("fit has no parameter named '" + name + "'");
    return ParameterLayout(spec).pack(estimates)[static_cast<Eigen::Index>(*i)];
  }

  std::optional<double> std_error(const std::string& name) const {
    const auto i = index_of(name);
    if (!i || std_errors.empty()) return std::nullopt;
    return std_errors[*i];
  }
};

/// Two-sided normal p-value for H0: parameter == target.
inline double wald_test(double estimate, double std_error, double target) {
  if (!(std_error > 0.0)) throw DomainError("wald_test requires a positive standard error");
  const double z = (estimate - target) / std_error;
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

namespace detail {

struct InnerFit {
  ParameterSet params;
  double ll = -std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;
  double gradient_max_norm = std::numeric_limits<double>::infinity();
};

// Maximizes the log-likelihood over `layout`'s free parameters starting at `start`.
inline InnerFit maximize(const LogitModel& model, const ParameterLayout& layout, const ParameterSet& start,
                         const FitOptions& options) {
  Eigen::VectorXd natural_grad;
  auto objective = [&](const Eigen::VectorXd& w, Eigen::VectorXd& g) {
    const Eigen::VectorXd nat = layout.to_natural(w);
    for (Eigen::Index i = 0; i < nat.size(); ++i) {
      if (!std::isfinite(nat[i]) || (layout.is_log_scaled(static_cast<std::size_t>(i)) && !(nat[i] > 0.0))) {
        g.setZero(w.size());
        return std::numeric_limits<double>::infinity();
      }
    }
    const double ll = model.log_likelihood(layout.unpack(nat, start), layout, natural_grad);
    g = -natural_grad;
    for (Eigen::Index i = 0; i < nat.size(); ++i) {
      if (layout.is_log_scaled(static_cast<std::size_t>(i))) g[i] *= nat[i];
    }
    return -ll;
  };
  BfgsOptions bopts;
  bopts.max_iterations = options.max_iterations;
  bopts.gradient_tolerance = options.gradient_tolerance;
  const auto res = minimize_bfgs(objective, layout.to_working(layout.pack(start)), bopts);

  InnerFit out;
  out.params = layout.unpack(layout.to_natural(res.x), start);
  out.ll = -res.value;
  out.converged = res.converged;
  out.iterations = res.iterations;
  out.gradient_max_norm = res.gradient.size() ? res.gradient.lpNorm<Eigen::Infinity>() : 0.0;
  return out;
}

// Distance from alpha to the nearest kink |dt_i| of the HTF likelihood, ignoring
// exact ties; `tie` reports whether alpha sits exactly on a kink.
inline double htf_kink_gap(std::span<const double> dts, double alpha, bool& tie) {
  double gap = std::numeric_limits<double>::infinity();
  tie = false;
  for (double dt : dts) {
    const double d = std::abs(std::abs(dt) - alpha);
    if (d == 0.0) {
      tie = true;
    } else {
      gap = std::min(gap, d);
    }
  }
  return gap;
}

// Hessian of the log-likelihood in natural coordinates by central differences
// of the analytic gradient. For HTF the alpha step stays inside the current
// kink-free interval, so the result is the curvature of the locally smooth
// likelihood; on an exact kink a backward (outside-branch) difference is used.
inline Eigen::MatrixXd numerical_hessian(const LogitModel& model, const ParameterLayout& layout,
                                         const ParameterSet& at) {
  const Eigen::VectorXd theta = layout.pack(at);
  const Eigen::Index n = theta.size();
  Eigen::MatrixXd h(n, n);
  Eigen::VectorXd gp, gm;
  const bool htf = model.spec().transform.kind == TransformKind::HTF && layout.has_alpha();
  for (Eigen::Index j = 0; j < n; ++j) {
    const bool positive = layout.is_log_scaled(static_cast<std::size_t>(j));
    double step = positive ? 1e-5 * theta[j] : 1e-5 * std::max(std::abs(theta[j]), 1e-3);
    bool backward = false;
    if (htf && static_cast<std::size_t>(j) == layout.alpha_index()) {
      bool tie = false;
      const double gap = htf_kink_gap(model.time_differences(), theta[j], tie);
      step = std::min(step, 0.4 * gap);
      backward = tie;
    }
    Eigen::VectorXd plus = theta;
    Eigen::VectorXd minus = theta;
    minus[j] -= step;
    model.log_likelihood(layout.unpack(minus, at), layout, gm);
    if (backward) {
      model.log_likelihood(at, layout, gp);
      h.col(j) = (gp - gm) / step;
    } else {
      plus[j] += step;
      model.log_likelihood(layout.unpack(plus, at), layout, gp);
      h.col(j) = (gp - gm) / (2.0 * step);
    }
  }
  return 0.5 * (h + h.transpose());
}

inline void attach_covariance(FitResult& result, const LogitModel& model, const ParameterLayout& layout) {
  const Eigen::MatrixXd info = -numerical_hessian(model, layout, result.estimates);
  if (!info.allFinite()) {
    result.notes.emplace_back("information matrix is not finite; covariance unavailable");
    return;
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info, Eigen::EigenvaluesOnly);
  const double max_ev = eig.eigenvalues().cwiseAbs().maxCoeff();
  const double min_ev = eig.eigenvalues().minCoeff();
  if (!(min_ev > 1e-12 * max_ev) || !(max_ev > 0.0)) {
    result.notes.emplace_back("information matrix is singular or not positive definite; covariance unavailable");
    return;
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(info);
  if (llt.info() != Eigen::Success) {
    result.notes.emplace_back("information matrix Cholesky factorization failed; covariance unavailable");
    return;
  }
  Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols()));
  cov = 0.5 * (cov + cov.transpose());
  result.std_errors.resize(static_cast<std::size_t>(cov.rows()));
  for (Eigen::Index i = 0; i < cov.rows(); ++i) result.std_errors[static_cast<std::size_t>(i)] = std::sqrt(cov(i, i));
  result.covariance = std::move(cov);
}

inline InnerFit fit_htf_profile(const LogitModel& model, const InnerFit& linear, const FitOptions& options,
                                std::vector<std::string>& notes) {
  const UtilitySpec& spec = model.spec();
  const ParameterLayout inner(spec, false);
  double max_abs_dt = 0.0;
  for (double dt : model.time_differences()) max_abs_dt = std::max(max_abs_dt, std::abs(dt));
  const double step = options.htf_grid_step;
  const double upper = std::max(step, 0.5 * max_abs_dt);
  constexpr double kAlphaFloor = 1e-9;

  ParameterSet warm = linear.params;
  auto profile = [&](double alpha) {
    ParameterSet start = warm;
    start.alpha = alpha;
    InnerFit f = maximize(model, inner, start, options);
    if (f.converged) warm = f.params;
    return f;
  };

  // alpha -> 0 is the linear model, whose fit is already known.
  std::vector<double> grid{0.0};
  std::vector<double> values{linear.ll};
  InnerFit best = linear;
  best.params.alpha = kAlphaFloor;
  for (double a = step; a <= upper + 1e-12; a += step) {
    InnerFit f = profile(a);
    grid.push_back(a);
    values.push_back(f.ll);
    if (f.ll > best.ll) best = f;
  }
  const auto k = static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
  double lo = k == 0 ? kAlphaFloor : grid[k - 1];
  double hi = k + 1 < grid.size() ? grid[k + 1] : grid[k];
  lo = std::max(lo, kAlphaFloor);

  // Golden-section refinement of the profile log-likelihood on [lo, hi].
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  InnerFit f1 = profile(x1);
  InnerFit f2 = profile(x2);
  for (const InnerFit* f : {&f1, &f2}) {
    if (f->ll > best.ll) best = *f;
  }
  while (hi - lo > options.htf_refine_tolerance) {
    if (f1.ll >= f2.ll) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = profile(x1);
      if (f1.ll > best.ll) best = f1;
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = profile(x2);
      if (f2.ll > best.ll) best = f2;
    }
  }
  if (*best.params.alpha <= kAlphaFloor) {
    notes.emplace_back("HTF threshold estimate is at the alpha -> 0 boundary (linear model)");
  }
  notes.emplace_back(
      "HTF alpha standard error uses the curvature of the likelihood between kinks; the likelihood is not "
      "differentiable in alpha at observed |dt| values");
  return best;
}

}  // namespace detail

/// Maximum-likelihood fit of `spec` on `data`.
///
/// Throws DataError for empty data or a declared group without records. A fit
/// that fails the gradient criterion within the iteration cap is returned with
/// converged == false; a singular information matrix leaves covariance unset.
inline FitResult fit(std::span<const ChoiceRecord> data, const UtilitySpec& spec_in, const FitOptions& options = {}) {
  validate(spec_in);
  if (data.empty()) throw DataError("cannot fit an empty dataset");
  std::vector<std::size_t> group_counts(static_cast<std::size_t>(spec_in.n_groups), 0);
  for (const auto& r : data) {
    if (r.group >= 0 && r.group < spec_in.n_groups) ++group_counts[static_cast<std::size_t>(r.group)];
  }
  for (std::size_t g = 0; g < group_counts.size(); ++g) {
    if (group_counts[g] == 0) throw DataError("declared group " + std::to_string(g) + " has no records");
  }

  const UtilitySpec spec = resolve_normalization(spec_in, data);
  const TransformKind kind = spec.transform.kind;

  // Starting values come from the linear version of the same specification.
  UtilitySpec linear_spec = spec;
  linear_spec.transform = TransformSpec{TransformKind::Linear, 1.0};
  const LogitModel linear_model(data, linear_spec);
  const detail::InnerFit linear =
      detail::maximize(linear_model, ParameterLayout(linear_spec), zero_parameters(linear_spec), options);

  FitResult result;
  std::vector<std::string> notes;
  detail::InnerFit best;
  const LogitModel model(data, spec);
  if (kind == TransformKind::Linear) {
    best = linear;
  } else if (kind == TransformKind::HTF) {
    best = detail::fit_htf_profile(model, linear, options, notes);
  } else {
    ParameterSet start = linear.params;
    start.alpha = kind == TransformKind::Power ? 1.0 : options.alpha_start;
    const ParameterLayout layout(spec);
    best = detail::maximize(model, layout, start, options);
    // Guard against a local optimum below the nested linear model.
    if (best.ll < linear.ll - 1e-9 && kind != TransformKind::Power) {
      ParameterSet restart = start;
      double restart_ll = -std::numeric_limits<double>::infinity();
      for (double a : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
        ParameterSet candidate = start;
        candidate.alpha = a;
        const double ll = model.log_likelihood(candidate);
        if (ll > restart_ll) {
          restart_ll = ll;
          restart = candidate;
        }
      }
      detail::InnerFit second = detail::maximize(model, layout, restart, options);
      if (second.ll > best.ll) {
        best = second;
        notes.emplace_back("refitted from a grid start after the default start ended below the linear model");
      }
    }
  }

  result.spec = spec;
  if (best.params.alpha) result.spec.transform.alpha = *best.params.alpha;
  result.estimates = best.params;
  const ParameterLayout full(spec);
  result.parameter_names = full.names();
  result.final_ll = best.ll;
  result.null_ll = null_log_likelihood(data.size());
  result.converged = best.converged;
  result.iterations = best.iterations;
  result.gradient_max_norm = best.gradient_max_norm;
  result.n_obs = data.size();
  result.n_free_params = full.size();
  result.notes = std::move(notes);

  if (!best.converged) {
    result.notes.emplace_back("optimizer stopped before the gradient criterion was met");
  }
  if (result.final_ll > -1e-3) {
    result.converged = false;
    result.notes.emplace_back("choices are perfectly predicted (separation); estimates diverge");
    return result;
  }
  if (options.compute_covariance) detail::attach_covariance(result, model, full);
  return result;
}

}  // namespace threshlogit
