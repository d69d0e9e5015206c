#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "threshlogit/errors.hpp"
#include "threshlogit/model.hpp"
#include "threshlogit/transforms.hpp"

namespace threshlogit {

/// P(alternative 1) for a utility difference dv; overflow-free for any finite dv.
inline double choice_probability(double dv) {
  if (dv >= 0.0) return 1.0 / (1.0 + std::exp(-dv));
  const double e = std::exp(dv);
  return e / (1.0 + e);
}

/// log(1 + exp(x)) without overflow or cancellation.
inline double log1p_exp(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

namespace detail {

inline double log_ratio(const std::optional<double>& value, const std::optional<double>& mean, const char* what) {
  if (!value) return 0.0;
  if (!mean) throw InvalidSpecError(std::string("normalization mean for ") + what + " is unresolved");
  return std::log(*value / *mean);
}

}  // namespace detail

/// Unscaled systematic utility difference of one record:
///   beta_t f(dt) + beta_c dc (I/Ibar)^lambda_i (T/Tbar)^lambda_t + beta_h dh + beta_k dk
/// Optional terms contribute only when enabled in the spec.
inline double systematic_utility(const ChoiceRecord& record, const ParameterSet& params, const UtilitySpec& spec) {
  check_consistent(params, spec);
  TransformSpec transform = spec.transform;
  if (params.alpha) transform.alpha = *params.alpha;
  double v = params.beta_t * eval_transform(transform, record.dt);
  double elasticity = 0.0;
  if (params.lambda_i) elasticity += *params.lambda_i * detail::log_ratio(record.income, spec.income_mean, "income");
  if (params.lambda_t) {
    elasticity += *params.lambda_t * detail::log_ratio(record.mean_trip_time, spec.time_mean, "mean_trip_time");
  }
  v += params.beta_c * record.dc * (elasticity == 0.0 ? 1.0 : std::exp(elasticity));
  if (params.beta_h) v += *params.beta_h * record.dh;
  if (params.beta_k) v += *params.beta_k * record.dk;
  return v;
}

/// Error-scale multiplier applied to the record's utility difference.
inline double scale_for(const ChoiceRecord& record, const ParameterSet& params) {
  const auto g = static_cast<std::size_t>(record.group);
  if (g >= params.scales.size()) throw InvalidSpecError("record group exceeds the number of scale groups");
  return g == 0 ? 1.0 : params.scales[g];
}

/// Binary-logit log-likelihood over a fixed dataset, with the analytic gradient
/// with respect to the free parameters of a ParameterLayout (natural
/// coordinates). Construction validates every record once and caches the
/// per-record elasticity log-ratios, so repeated evaluations skip the checks.
class LogitModel {
public:
  LogitModel(std::span<const ChoiceRecord> data, const UtilitySpec& spec)
      : spec_(resolve_normalization(spec, data)) {
    validate(spec_);
    if (data.empty()) throw DataError("log-likelihood needs at least one choice record");
    const std::size_t n = data.size();
    dt_.resize(n);
    dc_.resize(n);
    dh_.resize(n);
    dk_.resize(n);
    log_income_.resize(n);
    log_time_.resize(n);
    group_.resize(n);
    chosen_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& r = data[i];
      validate(r);
      if (r.group >= spec_.n_groups) {
        throw DataError("record " + std::to_string(i) + " has group " + std::to_string(r.group) +
                        " but the spec declares " + std::to_string(spec_.n_groups) + " group(s)");
      }
      dt_[i] = r.dt;
      dc_[i] = r.dc;
      dh_[i] = r.dh;
      dk_[i] = r.dk;
      log_income_[i] = spec_.use_income_elasticity ? detail::log_ratio(r.income, spec_.income_mean, "income") : 0.0;
      log_time_[i] =
          spec_.use_time_elasticity ? detail::log_ratio(r.mean_trip_time, spec_.time_mean, "mean_trip_time") : 0.0;
      group_[i] = r.group;
      chosen_[i] = r.chose_alt1 ? 1 : 0;
    }
  }

  const UtilitySpec& spec() const { return spec_; }
  std::size_t size() const { return dt_.size(); }
  std::span<const double> time_differences() const { return dt_; }

  double log_likelihood(const ParameterSet& params) const { return evaluate(params, nullptr, nullptr); }

  /// Log-likelihood plus its gradient over `layout`'s free parameters.
  double log_likelihood(const ParameterSet& params, const ParameterLayout& layout, Eigen::VectorXd& gradient) const {
    return evaluate(params, &layout, &gradient);
  }

private:
  double evaluate(const ParameterSet& params, const ParameterLayout* layout, Eigen::VectorXd* gradient) const {
    check_consistent(params, spec_);
    const TransformKind kind = spec_.transform.kind;
    const double alpha = params.alpha.value_or(spec_.transform.alpha);
    const double beta_t = params.beta_t;
    const double beta_c = params.beta_c;
    const double beta_h = params.beta_h.value_or(0.0);
    const double beta_k = params.beta_k.value_or(0.0);
    const double lambda_i = params.lambda_i.value_or(0.0);
    const double lambda_t = params.lambda_t.value_or(0.0);
    const bool elastic = params.lambda_i.has_value() || params.lambda_t.has_value();

    const bool want_grad = gradient != nullptr;
    std::size_t idx_alpha = 0, idx_h = 0, idx_k = 0, idx_li = 0, idx_lt = 0, idx_scale = 0;
    bool g_alpha = false;
    if (want_grad) {
      gradient->setZero(static_cast<Eigen::Index>(layout->size()));
      std::size_t next = 2;
      g_alpha = layout->has_alpha();
      if (g_alpha) idx_alpha = next++;
      if (params.beta_h) idx_h = next++;
      if (params.beta_k) idx_k = next++;
      if (params.lambda_i) idx_li = next++;
      if (params.lambda_t) idx_lt = next++;
      idx_scale = next;
    }

    double ll = 0.0;
    double* g = want_grad ? gradient->data() : nullptr;
    const std::size_t n = dt_.size();
    for (std::size_t i = 0; i < n; ++i) {
      double f;
      double df_dalpha = 0.0;
      if (g_alpha) {
        const auto te = eval_transform_unchecked(kind, alpha, dt_[i]);
        f = te.value;
        df_dalpha = te.d_alpha;
      } else {
        f = eval_transform_value_unchecked(kind, alpha, dt_[i]);
      }
      const double e = elastic ? std::exp(lambda_i * log_income_[i] + lambda_t * log_time_[i]) : 1.0;
      const double cost_term = dc_[i] * e;
      const double v = beta_t * f + beta_c * cost_term + beta_h * dh_[i] + beta_k * dk_[i];
      const int grp = group_[i];
      const double s = grp == 0 ? 1.0 : params.scales[static_cast<std::size_t>(grp)];
      const double z = s * v;
      // residual = y - P(alt 1)
      double resid;
      if (chosen_[i]) {
        ll -= log1p_exp(-z);
        resid = want_grad ? choice_probability(-z) : 0.0;
      } else {
        ll -= log1p_exp(z);
        resid = want_grad ? -choice_probability(z) : 0.0;
      }
      if (!want_grad) continue;
      const double rs = resid * s;
      g[0] += rs * f;
      g[1] += rs * cost_term;
      if (g_alpha) g[idx_alpha] += rs * beta_t * df_dalpha;
      if (params.beta_h) g[idx_h] += rs * dh_[i];
      if (params.beta_k) g[idx_k] += rs * dk_[i];
      if (params.lambda_i) g[idx_li] += rs * beta_c * cost_term * log_income_[i];
      if (params.lambda_t) g[idx_lt] += rs * beta_c * cost_term * log_time_[i];
      if (grp > 0) g[idx_scale + static_cast<std::size_t>(grp - 1)] += resid * v;
    }
    return ll;
  }

  UtilitySpec spec_;
  std::vector<double> dt_, dc_, dh_, dk_, log_income_, log_time_;
  std::vector<int> group_;
  std::vector<unsigned char> chosen_;
};

/// Sum over records of log P(observed choice).
inline double log_likelihood(const ParameterSet& params, std::span<const ChoiceRecord> data, const UtilitySpec& spec) {
  return LogitModel(data, spec).log_likelihood(params);
}

/// Log-likelihood of the equal-probability model, n * ln(1/2).
inline double null_log_likelihood(std::size_t n_obs) { return static_cast<double>(n_obs) * std::log(0.5); }

}  // namespace threshlogit
