#pragma once

// Attribute transformations applied to the time difference before it enters
// the systematic utility. Every transform is an odd function of dt, so the
// implementations work on |dt| and restore the sign at the end.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "threshlogit/errors.hpp"

namespace threshlogit {

enum class TransformKind { Linear, HTF, STF1, STF2, Power, Reverting };

inline constexpr std::array<TransformKind, 6> kAllTransformKinds = {
    TransformKind::Linear, TransformKind::HTF,   TransformKind::STF1,
    TransformKind::STF2,   TransformKind::Power, TransformKind::Reverting};

/// Lower-case identifier used on the command line and in JSON documents.
inline std::string_view to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::Linear: return "linear";
    case TransformKind::HTF: return "htf";
    case TransformKind::STF1: return "stf1";
    case TransformKind::STF2: return "stf2";
    case TransformKind::Power: return "power";
    case TransformKind::Reverting: return "reverting";
  }
  return "unknown";
}

inline std::optional<TransformKind> parse_transform_kind(std::string_view name) {
  for (auto kind : kAllTransformKinds) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

/// Transformation kind plus its shape parameter. For the threshold kinds alpha
/// is a width in minutes, for Power it is the exponent. Linear ignores it.
struct TransformSpec {
  TransformKind kind = TransformKind::Linear;
  double alpha = 1.0;

  bool operator==(const TransformSpec&) const = default;
};

inline bool has_shape_parameter(TransformKind kind) { return kind != TransformKind::Linear; }

inline void validate(const TransformSpec& spec) {
  if (!has_shape_parameter(spec.kind)) return;
  if (!std::isfinite(spec.alpha) || spec.alpha <= 0.0) {
    throw InvalidSpecError("transform '" + std::string(to_string(spec.kind)) +
                           "' requires alpha > 0, got " + std::to_string(spec.alpha));
  }
}

/// Partial derivatives of a transform value.
struct TransformGradient {
  double d_dt = 0.0;
  double d_alpha = 0.0;
};

namespace detail {

// Below this width the soft thresholds are numerically indistinguishable from
// the identity and dt / alpha would overflow.
inline constexpr double kSoftThresholdFloor = 1e-8;

inline double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

inline void check_inputs(const TransformSpec& spec, double dt) {
  validate(spec);
  if (!std::isfinite(dt)) throw DomainError("transform argument dt must be finite");
}

// Logistic function, evaluated without overflow.
inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Value on the positive half-axis, a = |dt| >= 0.
inline double magnitude(TransformKind kind, double alpha, double a) {
  switch (kind) {
    case TransformKind::Linear:
      return a;
    case TransformKind::HTF:
      return a < alpha ? 0.0 : a - alpha;
    case TransformKind::STF1:
      if (alpha < kSoftThresholdFloor) return a;
      return std::max(0.0, a - alpha * std::tanh(a / alpha));
    case TransformKind::STF2: {
      if (alpha < kSoftThresholdFloor) return a;
      // 1 - 1/sqrt(r) rewritten as u^2 / (sqrt(r) (sqrt(r) + 1)) to avoid cancellation near 0.
      const double u = a / alpha;
      const double s = std::sqrt(u * u + 1.0);
      return a * (u * u / (s * (s + 1.0)));
    }
    case TransformKind::Power:
      return a == 0.0 ? 0.0 : std::pow(a, alpha);
    case TransformKind::Reverting:
      return a * logistic(a - alpha);
  }
  return a;
}

// Derivatives on the positive half-axis. d/da is even in dt, d/dalpha is odd,
// so the caller multiplies only d_alpha by sign(dt).
inline TransformGradient magnitude_gradient(TransformKind kind, double alpha, double a) {
  switch (kind) {
    case TransformKind::Linear:
      return {1.0, 0.0};
    case TransformKind::HTF:
      // One-sided derivative from outside the threshold at a == alpha.
      if (a < alpha) return {0.0, 0.0};
      return {1.0, -1.0};
    case TransformKind::STF1: {
      if (alpha < kSoftThresholdFloor) return {1.0, a > 0.0 ? -1.0 : 0.0};
      const double u = a / alpha;
      const double t = std::tanh(u);
      const double c = std::cosh(u);
      const double sech2 = 1.0 / (c * c);
      return {t * t, -(t - u * sech2)};
    }
    case TransformKind::STF2: {
      if (alpha < kSoftThresholdFloor) return {1.0, a > 0.0 ? -1.0 : 0.0};
      const double u = a / alpha;
      const double r = u * u + 1.0;
      const double r32 = 1.0 / (r * std::sqrt(r));
      return {1.0 - r32, -u * u * u * r32};
    }
    case TransformKind::Power: {
      if (a == 0.0) return {0.0, 0.0};
      const double value = std::pow(a, alpha);
      return {alpha * value / a, value * std::log(a)};
    }
    case TransformKind::Reverting: {
      const double s = logistic(a - alpha);
      const double ds = s * (1.0 - s);
      return {s + a * ds, -a * ds};
    }
  }
  return {1.0, 0.0};
}

}  // namespace detail

/// f(dt; alpha) for the given transform. Throws DomainError for non-finite dt
/// and InvalidSpecError for alpha <= 0 on kinds that use alpha.
inline double eval_transform(const TransformSpec& spec, double dt) {
  detail::check_inputs(spec, dt);
  const double a = std::abs(dt);
  const double m = detail::magnitude(spec.kind, spec.alpha, a);
  return dt < 0.0 ? -m : m;
}

/// Analytic (df/d_dt, df/d_alpha). For HTF the kink at |dt| == alpha takes the
/// derivative from the outside branch.
inline TransformGradient transform_gradient(const TransformSpec& spec, double dt) {
  detail::check_inputs(spec, dt);
  const double a = std::abs(dt);
  auto g = detail::magnitude_gradient(spec.kind, spec.alpha, a);
  g.d_alpha *= detail::sign_of(dt);
  return g;
}

/// Value and both partials in one pass; skips input validation. Used by the
/// likelihood inner loop after the spec has been validated once.
struct TransformEval {
  double value;
  double d_alpha;
};

inline TransformEval eval_transform_unchecked(TransformKind kind, double alpha, double dt) {
  const double a = std::abs(dt);
  const double s = detail::sign_of(dt);
  const double m = detail::magnitude(kind, alpha, a);
  const double da = detail::magnitude_gradient(kind, alpha, a).d_alpha;
  return {dt < 0.0 ? -m : m, s * da};
}

inline double eval_transform_value_unchecked(TransformKind kind, double alpha, double dt) {
  const double m = detail::magnitude(kind, alpha, std::abs(dt));
  return dt < 0.0 ? -m : m;
}

}  // namespace threshlogit
