#pragma once

// Data types shared by estimation, simulation and serialization: a binary
// choice observation, the utility specification, and the parameter set with
// its packing into a flat vector of free parameters.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "threshlogit/errors.hpp"
#include "threshlogit/transforms.hpp"

namespace threshlogit {

/// One binary choice. Differences are alternative 1 minus alternative 2.
struct ChoiceRecord {
  double dt = 0.0;  ///< travel time difference, minutes
  double dc = 0.0;  ///< cost difference
  double dh = 0.0;  ///< headway difference, minutes
  double dk = 0.0;  ///< difference in number of changes
  std::optional<double> income;          ///< absent means "at the normalization mean"
  std::optional<double> mean_trip_time;  ///< minutes; absent means "at the normalization mean"
  int group = 0;                         ///< error-scale group, 0 is the reference
  bool chose_alt1 = false;

  bool operator==(const ChoiceRecord&) const = default;
};

inline void validate(const ChoiceRecord& r) {
  if (!std::isfinite(r.dt) || !std::isfinite(r.dc) || !std::isfinite(r.dh) || !std::isfinite(r.dk)) {
    throw DataError("choice record has a non-finite attribute difference");
  }
  if (r.income && !(*r.income > 0.0 && std::isfinite(*r.income))) {
    throw DataError("choice record income must be positive");
  }
  if (r.mean_trip_time && !(*r.mean_trip_time > 0.0 && std::isfinite(*r.mean_trip_time))) {
    throw DataError("choice record mean_trip_time must be positive");
  }
  if (r.group < 0) throw DataError("choice record group must be non-negative");
}

/// Which terms enter the systematic utility difference.
struct UtilitySpec {
  TransformSpec transform;
  bool use_headway = false;
  bool use_changes = false;
  bool use_income_elasticity = false;
  bool use_time_elasticity = false;
  int n_groups = 1;
  /// Normalization constants for the elasticity terms. Unset means "use the
  /// estimation-sample mean", see resolve_normalization().
  std::optional<double> income_mean;
  std::optional<double> time_mean;

  bool operator==(const UtilitySpec&) const = default;
};

inline void validate(const UtilitySpec& spec) {
  validate(spec.transform);
  if (spec.n_groups < 1) throw InvalidSpecError("n_groups must be at least 1");
  if (spec.income_mean && !(*spec.income_mean > 0.0)) throw InvalidSpecError("income_mean must be positive");
  if (spec.time_mean && !(*spec.time_mean > 0.0)) throw InvalidSpecError("time_mean must be positive");
}

/// Fills unset normalization means with the sample means of the records that
/// carry the covariate. A mean that cannot be computed stays unset.
inline UtilitySpec resolve_normalization(UtilitySpec spec, std::span<const ChoiceRecord> data) {
  auto sample_mean = [&](auto member) -> std::optional<double> {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : data) {
      if (const auto& v = r.*member) {
        sum += *v;
        ++n;
      }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  };
  if (!spec.income_mean) spec.income_mean = sample_mean(&ChoiceRecord::income);
  if (!spec.time_mean) spec.time_mean = sample_mean(&ChoiceRecord::mean_trip_time);
  return spec;
}

/// Model coefficients. Optional members are present exactly when the matching
/// UtilitySpec term is enabled; scales[0] is the reference group and equals 1.
struct ParameterSet {
  double beta_t = 0.0;
  double beta_c = 0.0;
  std::optional<double> alpha;
  std::optional<double> beta_h;
  std::optional<double> beta_k;
  std::optional<double> lambda_i;
  std::optional<double> lambda_t;
  std::vector<double> scales{1.0};

  bool operator==(const ParameterSet&) const = default;
};

/// All-zero coefficients (alpha = 1, unit scales) shaped for the given spec.
inline ParameterSet zero_parameters(const UtilitySpec& spec) {
  ParameterSet p;
  if (has_shape_parameter(spec.transform.kind)) p.alpha = spec.transform.alpha;
  if (spec.use_headway) p.beta_h = 0.0;
  if (spec.use_changes) p.beta_k = 0.0;
  if (spec.use_income_elasticity) p.lambda_i = 0.0;
  if (spec.use_time_elasticity) p.lambda_t = 0.0;
  p.scales.assign(static_cast<std::size_t>(spec.n_groups), 1.0);
  return p;
}

inline void check_consistent(const ParameterSet& p, const UtilitySpec& spec) {
  auto mismatch = [](const char* what) {
    throw InvalidSpecError(std::string("parameter set does not match utility spec: ") + what);
  };
  if (p.alpha.has_value() != has_shape_parameter(spec.transform.kind)) mismatch("alpha");
  if (p.beta_h.has_value() != spec.use_headway) mismatch("beta_h");
  if (p.beta_k.has_value() != spec.use_changes) mismatch("beta_k");
  if (p.lambda_i.has_value() != spec.use_income_elasticity) mismatch("lambda_i");
  if (p.lambda_t.has_value() != spec.use_time_elasticity) mismatch("lambda_t");
  if (p.scales.size() != static_cast<std::size_t>(spec.n_groups)) mismatch("scales");
  if (p.scales.front() != 1.0) mismatch("scales[0] must equal 1");
  if (p.alpha && !(*p.alpha > 0.0)) mismatch("alpha must be positive");
  for (double s : p.scales) {
    if (!(s > 0.0)) mismatch("scales must be positive");
  }
}

/// Maps a ParameterSet to a flat vector of free parameters and back.
///
/// Order: beta_t, beta_c, [alpha], [beta_h], [beta_k], [lambda_i], [lambda_t],
/// scale_1 .. scale_{G-1}. Alpha is left out when it is held fixed (HTF
/// profile fits). In "working" coordinates alpha and the scales are stored as
/// logarithms so that an unconstrained optimizer keeps them positive.
class ParameterLayout {
public:
  ParameterLayout(const UtilitySpec& spec, bool alpha_free)
      : alpha_(alpha_free && has_shape_parameter(spec.transform.kind)),
        beta_h_(spec.use_headway),
        beta_k_(spec.use_changes),
        lambda_i_(spec.use_income_elasticity),
        lambda_t_(spec.use_time_elasticity),
        n_groups_(spec.n_groups) {}

  explicit ParameterLayout(const UtilitySpec& spec) : ParameterLayout(spec, true) {}

  std::size_t size() const {
    return 2 + alpha_ + beta_h_ + beta_k_ + lambda_i_ + lambda_t_ + static_cast<std::size_t>(n_groups_ - 1);
  }

  bool has_alpha() const { return alpha_; }
  std::size_t alpha_index() const { return 2; }
  std::size_t first_scale_index() const { return size() - static_cast<std::size_t>(n_groups_ - 1); }

  std::vector<std::string> names() const {
    std::vector<std::string> out{"beta_t", "beta_c"};
    if (alpha_) out.emplace_back("alpha");
    if (beta_h_) out.emplace_back("beta_h");
    if (beta_k_) out.emplace_back("beta_k");
    if (lambda_i_) out.emplace_back("lambda_i");
    if (lambda_t_) out.emplace_back("lambda_t");
    for (int g = 1; g < n_groups_; ++g) out.push_back("scale_" + std::to_string(g));
    return out;
  }

  /// True for entries stored as logarithms in working coordinates.
  bool is_log_scaled(std::size_t i) const { return (alpha_ && i == alpha_index()) || i >= first_scale_index(); }

  Eigen::VectorXd pack(const ParameterSet& p) const {
    Eigen::VectorXd x(static_cast<Eigen::Index>(size()));
    std::size_t i = 0;
    auto put = [&](double v) { x[static_cast<Eigen::Index>(i++)] = v; };
    put(p.beta_t);
    put(p.beta_c);
    if (alpha_) put(p.alpha.value());
    if (beta_h_) put(p.beta_h.value());
    if (beta_k_) put(p.beta_k.value());
    if (lambda_i_) put(p.lambda_i.value());
    if (lambda_t_) put(p.lambda_t.value());
    for (int g = 1; g < n_groups_; ++g) put(p.scales.at(static_cast<std::size_t>(g)));
    return x;
  }

  /// Writes the free entries of x into a copy of `base`, which supplies the
  /// fixed alpha when alpha is not free.
  ParameterSet unpack(const Eigen::VectorXd& x, const ParameterSet& base) const {
    ParameterSet p = base;
    std::size_t i = 0;
    auto get = [&]() { return x[static_cast<Eigen::Index>(i++)]; };
    p.beta_t = get();
    p.beta_c = get();
    if (alpha_) p.alpha = get();
    if (beta_h_) p.beta_h = get();
    if (beta_k_) p.beta_k = get();
    if (lambda_i_) p.lambda_i = get();
    if (lambda_t_) p.lambda_t = get();
    p.scales.resize(static_cast<std::size_t>(n_groups_));
    p.scales[0] = 1.0;
    for (int g = 1; g < n_groups_; ++g) p.scales[static_cast<std::size_t>(g)] = get();
    return p;
  }

  Eigen::VectorXd to_working(Eigen::VectorXd natural) const {
    for (Eigen::Index i = 0; i < natural.size(); ++i) {
      if (is_log_scaled(static_cast<std::size_t>(i))) natural[i] = std::log(natural[i]);
    }
    return natural;
  }

  Eigen::VectorXd to_natural(Eigen::VectorXd working) const {
    for (Eigen::Index i = 0; i < working.size(); ++i) {
      if (is_log_scaled(static_cast<std::size_t>(i))) working[i] = std::exp(working[i]);
    }
    return working;
  }

private:
  bool alpha_;
  bool beta_h_;
  bool beta_k_;
  bool lambda_i_;
  bool lambda_t_;
  int n_groups_;
};

}  // namespace threshlogit
