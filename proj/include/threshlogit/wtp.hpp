#pragma once

// Value of travel time savings (money per hour) implied by a fitted model and
// confidence intervals for the asymptotic value 60 * beta_t / beta_c.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <boost/math/distributions/normal.hpp>

#include "threshlogit/errors.hpp"
#include "threshlogit/model.hpp"
#include "threshlogit/random.hpp"
#include "threshlogit/transforms.hpp"

namespace threshlogit {

inline constexpr double kMinutesPerHour = 60.0;

/// Average VTTS for a time difference dt: the cost change that keeps utility
/// constant, per unit time, in money per hour. Equals the asymptotic ratio
/// times f(dt)/dt; at dt = 0 the analytic limit of that factor is used.
inline double vtts_at(const ParameterSet& params, const TransformSpec& spec, double dt) {
  validate(spec);
  if (params.beta_c == 0.0) throw DomainError("VTTS is undefined for a zero cost coefficient");
  if (!std::isfinite(dt)) throw DomainError("VTTS time difference must be finite");
  const double ratio = params.beta_t / params.beta_c * kMinutesPerHour;
  const double a = std::abs(dt);
  const double alpha = spec.alpha;
  double factor = 1.0;
  switch (spec.kind) {
    case TransformKind::Linear:
      factor = 1.0;
      break;
    case TransformKind::HTF:
      factor = a < alpha ? 0.0 : 1.0 - alpha / a;
      break;
    case TransformKind::STF1:
      if (a == 0.0) {
        factor = 0.0;
      } else if (alpha < detail::kSoftThresholdFloor) {
        factor = 1.0;
      } else {
        factor = 1.0 - alpha * std::tanh(a / alpha) / a;
      }
      break;
    case TransformKind::STF2: {
      if (alpha < detail::kSoftThresholdFloor) {
        factor = a == 0.0 ? 0.0 : 1.0;
      } else {
        const double u = a / alpha;
        factor = 1.0 - 1.0 / std::sqrt(u * u + 1.0);
      }
      break;
    }
    case TransformKind::Power:
      if (a == 0.0) {
        factor = alpha > 1.0 ? 0.0 : (alpha == 1.0 ? 1.0 : std::numeric_limits<double>::infinity());
      } else {
        factor = std::pow(a, alpha - 1.0);
      }
      break;
    case TransformKind::Reverting:
      factor = 1.0 / (1.0 + std::exp(alpha - a));
      break;
  }
  return ratio * factor;
}

/// The asymptotic VTTS, or no value for Power (whose slope has no limit).
/// `ratio` always holds 60 * beta_t / beta_c for diagnostics.
struct AsymptoticVtts {
  std::optional<double> value;
  double ratio = 0.0;
};

inline AsymptoticVtts asymptotic_vtts(const ParameterSet& params, const TransformSpec& spec) {
  if (params.beta_c == 0.0) throw DomainError("VTTS is undefined for a zero cost coefficient");
  AsymptoticVtts out;
  out.ratio = params.beta_t / params.beta_c * kMinutesPerHour;
  if (spec.kind != TransformKind::Power) out.value = out.ratio;
  return out;
}

struct CurvePoint {
  double dt;
  double vtts;
};

/// VTTS over dt in [dt_min, dt_max] with the given step, skipping dt = 0.
inline std::vector<CurvePoint> vtts_curve(const ParameterSet& params, const TransformSpec& spec,
                                          double dt_min = -25.0, double dt_max = 25.0, double step = 0.25) {
  if (!(step > 0.0) || !(dt_max >= dt_min)) throw DomainError("invalid VTTS curve grid");
  std::vector<CurvePoint> out;
  const auto n = static_cast<long>(std::floor((dt_max - dt_min) / step + 1e-9));
  for (long i = 0; i <= n; ++i) {
    const double dt = dt_min + static_cast<double>(i) * step;
    if (std::abs(dt) < 1e-12) continue;
    out.push_back({dt, vtts_at(params, spec, dt)});
  }
  return out;
}

enum class CiMethod { MvnSimulation, Fieller };

inline std::string_view to_string(CiMethod m) { return m == CiMethod::MvnSimulation ? "sim" : "fieller"; }

/// Confidence interval for 60 * beta_t / beta_c. `bounded` is false when the
/// Fieller set is not a finite interval; low/high are then meaningless.
struct RatioInterval {
  bool bounded = true;
  double low = 0.0;
  double high = 0.0;
};

namespace detail {

inline void check_ratio_inputs(const Eigen::Vector2d& mean, const Eigen::Matrix2d& cov, double level) {
  if (!mean.allFinite() || !cov.allFinite()) throw DomainError("ratio CI inputs must be finite");
  if (!(level > 0.0 && level < 1.0)) throw DomainError("confidence level must lie in (0, 1)");
  if (std::abs(cov(0, 1) - cov(1, 0)) > 1e-12 * std::max(1.0, cov.cwiseAbs().maxCoeff())) {
    throw DomainError("covariance matrix must be symmetric");
  }
}

// Lower Cholesky factor of a symmetric positive semi-definite 2x2 matrix;
// zero variances are allowed (degenerate draws), negative curvature is not.
inline Eigen::Matrix2d cholesky_psd(const Eigen::Matrix2d& cov) {
  const double scale = std::max(1e-300, cov.cwiseAbs().maxCoeff());
  const double tol = 1e-12 * scale;
  if (cov(0, 0) < -tol || cov(1, 1) < -tol) throw DomainError("covariance matrix is not positive semi-definite");
  Eigen::Matrix2d l = Eigen::Matrix2d::Zero();
  l(0, 0) = std::sqrt(std::max(0.0, cov(0, 0)));
  l(1, 0) = l(0, 0) > 0.0 ? cov(1, 0) / l(0, 0) : 0.0;
  if (l(0, 0) == 0.0 && std::abs(cov(1, 0)) > tol) throw DomainError("covariance matrix is not positive semi-definite");
  const double rem = cov(1, 1) - l(1, 0) * l(1, 0);
  if (rem < -tol) throw DomainError("covariance matrix is not positive semi-definite");
  l(1, 1) = std::sqrt(std::max(0.0, rem));
  return l;
}

// Empirical quantile with linear interpolation between order statistics
// (h = (n - 1) p) on sorted data.
inline double sorted_quantile(const std::vector<double>& sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace detail

/// Percentile interval of 60 * b_t / b_c over `draws` bivariate-normal draws
/// of (b_t, b_c) ~ N(mean, cov). The standard-normal pairs depend only on the
/// seed, so rescaling mean and cov reuses the same underlying draws.
inline RatioInterval vtts_ci_simulation(const Eigen::Vector2d& mean, const Eigen::Matrix2d& cov, std::size_t draws,
                                        double level, std::uint64_t seed) {
  detail::check_ratio_inputs(mean, cov, level);
  if (draws < 1000) throw DomainError("MVN simulation needs at least 1000 draws");
  const Eigen::Matrix2d l = detail::cholesky_psd(cov);
  Rng rng(seed);
  std::vector<double> ratios(draws);
  for (std::size_t i = 0; i < draws; ++i) {
    const auto [z0, z1] = rng.normal_pair();
    const double bt = mean[0] + l(0, 0) * z0;
    const double bc = mean[1] + l(1, 0) * z0 + l(1, 1) * z1;
    ratios[i] = kMinutesPerHour * bt / bc;
  }
  std::sort(ratios.begin(), ratios.end());
  const double tail = (1.0 - level) / 2.0;
  return {true, detail::sorted_quantile(ratios, tail), detail::sorted_quantile(ratios, 1.0 - tail)};
}

/// Fieller interval for 60 * b_t / b_c: the set of rho with
/// (b_t - rho b_c)^2 <= z^2 Var(b_t - rho b_c). Unbounded when b_c is not
/// significantly different from zero at the requested level.
inline RatioInterval vtts_ci_fieller(const Eigen::Vector2d& mean, const Eigen::Matrix2d& cov, double level) {
  detail::check_ratio_inputs(mean, cov, level);
  detail::cholesky_psd(cov);
  const double z = boost::math::quantile(boost::math::normal(), 1.0 - (1.0 - level) / 2.0);
  const double z2 = z * z;
  const double a = mean[0], b = mean[1];
  const double v11 = cov(0, 0), v12 = cov(0, 1), v22 = cov(1, 1);
  // rho^2 (b^2 - z^2 v22) - 2 rho (a b - z^2 v12) + (a^2 - z^2 v11) <= 0
  const double qa = b * b - z2 * v22;
  const double qb = a * b - z2 * v12;
  const double qc = a * a - z2 * v11;
  if (!(qa > 0.0)) return {false, 0.0, 0.0};
  const double disc = qb * qb - qa * qc;
  const double root = std::sqrt(std::max(0.0, disc));
  const double r1 = (qb - root) / qa;
  const double r2 = (qb + root) / qa;
  return {true, kMinutesPerHour * std::min(r1, r2), kMinutesPerHour * std::max(r1, r2)};
}

/// Asymptotic VTTS with its confidence interval and the VTTS curve.
struct VttsSummary {
  std::optional<double> asymptotic_vtts;
  double diagnostic_ratio = 0.0;
  RatioInterval interval;
  CiMethod method = CiMethod::MvnSimulation;
  double level = 0.95;
  std::size_t draws = 0;
  std::uint64_t seed = 0;
  std::vector<CurvePoint> curve;
};

}  // namespace threshlogit
