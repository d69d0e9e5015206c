#pragma once

// Synthetic choice data and Monte Carlo replication of estimation runs.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "threshlogit/errors.hpp"
#include "threshlogit/estimation.hpp"
#include "threshlogit/likelihood.hpp"
#include "threshlogit/model.hpp"
#include "threshlogit/random.hpp"

namespace threshlogit {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const Interval&) const = default;
};

/// Covariates and coefficients for data shaped like a stated-choice survey:
/// headway, number of changes, income and trip-time elasticities of the cost
/// term, and error-scale groups. Covariates are uniform over their ranges.
struct ExtendedDgp {
  double beta_h = -0.05;
  double beta_k = -1.43;
  double lambda_i = -0.25;
  double lambda_t = -0.4;
  Interval headway_range{-30.0, 30.0};
  long changes_min = -2;
  long changes_max = 2;
  Interval income_range{3000.0, 12000.0};
  Interval trip_time_range{10.0, 60.0};
  std::vector<double> group_scales{1.0, 0.8};  ///< groups drawn with equal probability

  bool operator==(const ExtendedDgp&) const = default;
};

struct SimConfig {
  std::size_t n_obs = 5000;
  Interval cost_range{-10.0, 10.0};
  Interval time_range{-25.0, 25.0};
  TransformSpec dgp_transform{TransformKind::HTF, 5.0};
  double beta_t = -0.1;
  double beta_c = -0.6;
  std::uint64_t seed = 1;
  std::optional<ExtendedDgp> extended;

  bool operator==(const SimConfig&) const = default;
};

inline void validate(const SimConfig& c) {
  if (c.n_obs < 1) throw InvalidSpecError("n_obs must be at least 1");
  auto check_range = [](const Interval& r, const char* what) {
    if (!(r.lo < 0.0 && r.hi > 0.0) || !std::isfinite(r.lo) || !std::isfinite(r.hi)) {
      throw InvalidSpecError(std::string(what) + " range must have a negative lower and a positive upper bound");
    }
  };
  check_range(c.cost_range, "cost");
  check_range(c.time_range, "time");
  validate(c.dgp_transform);
  if (c.extended) {
    const auto& e = *c.extended;
    if (e.group_scales.empty() || e.group_scales.front() != 1.0) {
      throw InvalidSpecError("extended DGP group_scales must start with the reference scale 1");
    }
    for (double s : e.group_scales) {
      if (!(s > 0.0)) throw InvalidSpecError("extended DGP scales must be positive");
    }
    if (!(e.income_range.lo > 0.0 && e.income_range.hi >= e.income_range.lo)) {
      throw InvalidSpecError("income range must be positive");
    }
    if (!(e.trip_time_range.lo > 0.0 && e.trip_time_range.hi >= e.trip_time_range.lo)) {
      throw InvalidSpecError("trip time range must be positive");
    }
    if (e.changes_max < e.changes_min) throw InvalidSpecError("changes range is empty");
  }
}

/// Utility specification and coefficients that generate the data.
inline UtilitySpec dgp_utility_spec(const SimConfig& c) {
  UtilitySpec spec;
  spec.transform = c.dgp_transform;
  if (c.extended) {
    spec.use_headway = spec.use_changes = spec.use_income_elasticity = spec.use_time_elasticity = true;
    spec.n_groups = static_cast<int>(c.extended->group_scales.size());
  }
  return spec;
}

inline ParameterSet dgp_parameters(const SimConfig& c) {
  ParameterSet p = zero_parameters(dgp_utility_spec(c));
  p.beta_t = c.beta_t;
  p.beta_c = c.beta_c;
  if (p.alpha) p.alpha = c.dgp_transform.alpha;
  if (c.extended) {
    p.beta_h = c.extended->beta_h;
    p.beta_k = c.extended->beta_k;
    p.lambda_i = c.extended->lambda_i;
    p.lambda_t = c.extended->lambda_t;
    p.scales = c.extended->group_scales;
  }
  return p;
}

/// Draws `n_obs` choices. (dt, dc) pairs are redrawn until their signs differ
/// (no dominant alternative); the choice is alternative 1 iff the scaled
/// utility difference plus a standard logistic error is positive. Elasticity
/// covariates are normalized by their sample means, the same convention the
/// estimator uses by default.
inline std::vector<ChoiceRecord> generate_dataset(const SimConfig& config) {
  validate(config);
  Rng rng(config.seed);
  std::vector<ChoiceRecord> data(config.n_obs);
  std::vector<double> errors(config.n_obs);
  for (std::size_t i = 0; i < config.n_obs; ++i) {
    ChoiceRecord& r = data[i];
    do {
      r.dt = rng.uniform(config.time_range.lo, config.time_range.hi);
      r.dc = rng.uniform(config.cost_range.lo, config.cost_range.hi);
    } while (r.dt == 0.0 || r.dc == 0.0 || (r.dt > 0.0) == (r.dc > 0.0));
    if (config.extended) {
      const auto& e = *config.extended;
      r.dh = rng.uniform(e.headway_range.lo, e.headway_range.hi);
      r.dk = static_cast<double>(rng.uniform_int(e.changes_min, e.changes_max));
      r.income = rng.uniform(e.income_range.lo, e.income_range.hi);
      r.mean_trip_time = rng.uniform(e.trip_time_range.lo, e.trip_time_range.hi);
      r.group = static_cast<int>(rng.uniform_int(0, static_cast<long>(e.group_scales.size()) - 1));
    }
    errors[i] = rng.logistic();
  }
  const UtilitySpec spec = resolve_normalization(dgp_utility_spec(config), data);
  const ParameterSet params = dgp_parameters(config);
  for (std::size_t i = 0; i < config.n_obs; ++i) {
    ChoiceRecord& r = data[i];
    const double dv = scale_for(r, params) * systematic_utility(r, params, spec);
    r.chose_alt1 = dv + errors[i] > 0.0;
  }
  return data;
}

/// One fitted specification in a replication study.
struct FitSpecEntry {
  std::string label;
  UtilitySpec spec;
};

struct RunFit {
  std::uint64_t seed = 0;
  std::optional<FitResult> fit;  ///< absent when fitting threw
  std::string error;

  /// Counted in the summary statistics.
  bool included() const { return fit.has_value() && fit->converged; }
};

/// Table-style aggregate over runs for one specification.
struct ReplicationSummary {
  std::string label;
  std::vector<std::string> parameter_names;
  std::vector<double> mean;
  std::vector<double> empirical_sd;
  std::vector<double> mean_std_error;  ///< NaN when no included run has standard errors
  std::size_t runs = 0;                ///< included (converged) runs
  std::size_t excluded = 0;
  std::vector<double> run_ll;  ///< per run index; NaN for excluded runs
};

struct ReplicationOptions {
  unsigned threads = 1;
  bool reuse_master_seed = false;  ///< every run uses config.seed itself (degenerate study)
  FitOptions fit;
};

struct ReplicationStudy {
  std::vector<ReplicationSummary> summaries;    ///< one per fit spec
  std::vector<std::vector<RunFit>> run_fits;    ///< [spec][run]
};

inline ReplicationSummary summarize_runs(const std::string& label, const std::vector<RunFit>& fits) {
  ReplicationSummary s;
  s.label = label;
  s.run_ll.assign(fits.size(), std::nan(""));
  std::vector<const FitResult*> ok;
  for (std::size_t r = 0; r < fits.size(); ++r) {
    if (fits[r].included()) {
      ok.push_back(&*fits[r].fit);
      s.run_ll[r] = fits[r].fit->final_ll;
    } else {
      ++s.excluded;
    }
    if (s.parameter_names.empty() && fits[r].fit) s.parameter_names = fits[r].fit->parameter_names;
  }
  s.runs = ok.size();
  const std::size_t k = s.parameter_names.size();
  s.mean.assign(k, std::nan(""));
  s.empirical_sd.assign(k, std::nan(""));
  s.mean_std_error.assign(k, std::nan(""));
  if (ok.empty()) return s;
  for (std::size_t j = 0; j < k; ++j) {
    const std::string& name = s.parameter_names[j];
    double sum = 0.0;
    for (const auto* f : ok) sum += f->estimate(name);
    const double mean = sum / static_cast<double>(ok.size());
    double ss = 0.0;
    for (const auto* f : ok) ss += (f->estimate(name) - mean) * (f->estimate(name) - mean);
    s.mean[j] = mean;
    s.empirical_sd[j] = ok.size() > 1 ? std::sqrt(ss / static_cast<double>(ok.size() - 1)) : 0.0;
    double se_sum = 0.0;
    std::size_t se_n = 0;
    for (const auto* f : ok) {
      if (auto se = f->std_error(name)) {
        se_sum += *se;
        ++se_n;
      }
    }
    if (se_n) s.mean_std_error[j] = se_sum / static_cast<double>(se_n);
  }
  return s;
}

/// Generates `runs` datasets (run r uses derive_seed(config.seed, r)) and fits
/// every spec on each. Runs are independent and may execute on several
/// threads; results are stored by run index so aggregation does not depend on
/// scheduling. A fit that throws or fails to converge is excluded and counted.
inline ReplicationStudy replicate_study(const SimConfig& config, const std::vector<FitSpecEntry>& specs,
                                        std::size_t runs, const ReplicationOptions& options = {}) {
  validate(config);
  if (runs < 2) throw InvalidSpecError("a replication study needs at least 2 runs");
  if (specs.empty()) throw InvalidSpecError("a replication study needs at least one fit spec");
  ReplicationStudy study;
  study.run_fits.assign(specs.size(), std::vector<RunFit>(runs));

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t r = next++; r < runs; r = next++) {
      SimConfig run_config = config;
      run_config.seed = options.reuse_master_seed ? config.seed : derive_seed(config.seed, r);
      const auto data = generate_dataset(run_config);
      for (std::size_t s = 0; s < specs.size(); ++s) {
        RunFit& out = study.run_fits[s][r];
        out.seed = run_config.seed;
        try {
          out.fit = fit(data, specs[s].spec, options.fit);
        } catch (const std::exception& e) {
          out.error = e.what();
        }
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(runs)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (std::size_t s = 0; s < specs.size(); ++s) {
    study.summaries.push_back(summarize_runs(specs[s].label, study.run_fits[s]));
  }
  return study;
}

}  // namespace threshlogit
