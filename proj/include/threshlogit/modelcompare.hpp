#pragma once

// Likelihood-ratio test for nested models and the Horowitz bound for
// non-nested models.

#include <cmath>
#include <string_view>

#include <boost/math/special_functions/gamma.hpp>

#include "threshlogit/errors.hpp"

namespace threshlogit {

enum class TestMethod { LikelihoodRatio, HorowitzOriginal, HorowitzBAL };

inline std::string_view to_string(TestMethod m) {
  switch (m) {
    case TestMethod::LikelihoodRatio: return "likelihood_ratio";
    case TestMethod::HorowitzOriginal: return "horowitz_original";
    case TestMethod::HorowitzBAL: return "horowitz_bal";
  }
  return "unknown";
}

struct TestReport {
  double statistic = 0.0;  ///< LR statistic, or the adjusted rho-squared difference z
  double p_value = 1.0;    ///< p-value (LR) or upper bound on the probability (Horowitz)
  int df = 0;              ///< degrees of freedom (LR) or k_b - k_a (Horowitz)
  TestMethod method = TestMethod::LikelihoodRatio;
};

/// Upper tail of the chi-squared distribution.
inline double chi_squared_sf(double x, int df) {
  if (df < 1) throw DomainError("chi-squared degrees of freedom must be positive");
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

/// 2 (ll_full - ll_restricted) against chi-squared(df). Differences down to
/// -1e-9 are treated as optimizer noise and clamped to zero.
inline TestReport lr_test(double ll_restricted, double ll_full, int df) {
  if (df < 1) throw DomainError("likelihood-ratio test needs df >= 1");
  const double diff = ll_full - ll_restricted;
  if (diff < -1e-9) {
    throw DomainError("full model log-likelihood is below the restricted one; check the model order");
  }
  TestReport r;
  r.method = TestMethod::LikelihoodRatio;
  r.df = df;
  r.statistic = 2.0 * std::max(0.0, diff);
  r.p_value = chi_squared_sf(r.statistic, df);
  return r;
}

/// Adjusted rho-squared used by each Horowitz variant. The original form
/// penalizes half the parameter count, the textbook form the full count.
inline double adjusted_rho_squared(double ll, int k, double null_ll, TestMethod variant) {
  const double penalty = variant == TestMethod::HorowitzOriginal ? 0.5 * k : static_cast<double>(k);
  return 1.0 - (ll - penalty) / null_ll;
}

/// Upper bound on the probability that model A (the lower adjusted fit) is the
/// true model although B fits better by z = rhobar2_B - rhobar2_A:
///   Phi(-sqrt(-2 z null_ll + (k_b - k_a))).
/// Throws when z < 0; swap the models in that case.
inline TestReport horowitz_test(double ll_a, int k_a, double ll_b, int k_b, double null_ll,
                                TestMethod variant = TestMethod::HorowitzOriginal) {
  if (variant == TestMethod::LikelihoodRatio) throw DomainError("horowitz_test needs a Horowitz variant");
  if (!(null_ll < 0.0)) throw DomainError("null log-likelihood must be negative");
  if (ll_a < null_ll || ll_b < null_ll) throw DomainError("model log-likelihoods must not be below the null");
  if (k_a < 0 || k_b < 0) throw DomainError("parameter counts must be non-negative");
  const double z = adjusted_rho_squared(ll_b, k_b, null_ll, variant) - adjusted_rho_squared(ll_a, k_a, null_ll, variant);
  if (z < -1e-15) {
    throw DomainError("model B must have the higher adjusted rho-squared; swap models A and B");
  }
  TestReport r;
  r.method = variant;
  r.df = k_b - k_a;
  r.statistic = std::max(0.0, z);
  const double arg = std::max(0.0, -2.0 * r.statistic * null_ll + static_cast<double>(k_b - k_a));
  r.p_value = 0.5 * std::erfc(std::sqrt(arg) / std::sqrt(2.0));
  return r;
}

}  // namespace threshlogit
