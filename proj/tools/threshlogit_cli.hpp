#pragma once

// Command-line front end: simulate, estimate, replicate, vtts, compare.
//
// Exit codes: 0 success, 1 validation error (bad flags, unreadable or invalid
// input), 2 numerical failure (non-convergence, unusable covariance).

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "threshlogit/threshlogit.hpp"

namespace threshlogit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitNumerical = 2;

/// Validation problem detected by a command (maps to exit code 1).
class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct SimulateOptions {
  long long n_obs = 5000;
  std::uint64_t seed = 1;
  std::string transform = "htf";
  double alpha = 5.0;
  double beta_t = -0.1;
  double beta_c = -0.6;
  double cost_min = -10.0, cost_max = 10.0;
  double time_min = -25.0, time_max = 25.0;
  bool extended = false;
  ExtendedDgp extended_dgp;
  std::string out;
};

struct EstimateOptions {
  std::string data;
  std::string transform = "linear";
  double alpha_start = 1.0;
  bool headway = false, changes = false, income_elasticity = false, time_elasticity = false;
  int groups = 1;
  std::optional<double> income_mean, time_mean;
  int max_iter = 500;
  std::map<std::string, double> targets;  ///< parameter name -> Wald target
  std::string out;
};

struct ReplicateOptions {
  std::size_t runs = 500;
  std::uint64_t seed = 1;
  long long n_obs = 5000;
  std::string dgp_transform = "htf";
  double dgp_alpha = 5.0;
  double beta_t = -0.1;
  double beta_c = -0.6;
  double cost_min = -10.0, cost_max = 10.0;
  double time_min = -25.0, time_max = 25.0;
  std::vector<std::string> transforms{"linear", "htf", "stf1", "stf2", "power"};
  unsigned threads = 1;
  std::string out;
  std::string runs_out;
};

struct VttsOptions {
  std::string fit;
  std::string ci_method = "sim";
  std::size_t draws = 100000;
  double level = 0.95;
  std::uint64_t seed = 1;
  double dt_min = -25.0, dt_max = 25.0, dt_step = 0.25;
  std::string out_curve;
  std::string out_summary;
  std::string svg;
};

struct CompareOptions {
  std::string test = "lr";
  std::string fit_a, fit_b;
  std::optional<double> ll_a, ll_b, null_ll;
  std::optional<int> k_a, k_b;
  std::optional<int> df;
  std::string variant = "original";
  std::string out;
};

namespace detail {

inline std::string timestamp_utc() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline TransformKind kind_or_throw(const std::string& name) {
  const auto k = parse_transform_kind(name);
  if (!k) throw UsageError("unknown transform '" + name + "' (expected linear|htf|stf1|stf2|power|reverting)");
  return *k;
}

struct Invocation {
  std::string command;
  std::vector<std::string> argv;
  std::string options_config;
};

inline void write_manifest(const std::string& output_path, const Invocation& inv, const json& inputs,
                           const json& outputs) {
  json m{{"schema_version", kSchemaVersion},
         {"kind", "manifest"},
         {"tool", "threshlogit"},
         {"tool_version", std::string(kToolVersion)},
         {"command", inv.command},
         {"argv", inv.argv},
         {"options", inv.options_config},
         {"inputs", inputs},
         {"outputs", outputs},
         {"created_at", timestamp_utc()}};
  write_json_file(output_path + ".manifest.json", m);
}

}  // namespace detail

inline SimConfig to_sim_config(const SimulateOptions& o) {
  if (o.n_obs < 1) throw UsageError("--n-obs must be at least 1");
  SimConfig c;
  c.n_obs = static_cast<std::size_t>(o.n_obs);
  c.seed = o.seed;
  c.dgp_transform = {detail::kind_or_throw(o.transform), o.alpha};
  c.beta_t = o.beta_t;
  c.beta_c = o.beta_c;
  c.cost_range = {o.cost_min, o.cost_max};
  c.time_range = {o.time_min, o.time_max};
  if (o.extended) c.extended = o.extended_dgp;
  validate(c);
  return c;
}

inline int cmd_simulate(const SimulateOptions& o, const detail::Invocation& inv = {}) {
  if (o.out.empty()) throw UsageError("--out is required");
  const auto data = generate_dataset(to_sim_config(o));
  write_choice_csv(o.out, data);
  detail::write_manifest(o.out, inv, json::array(), json::array({o.out}));
  std::cout << "wrote " << data.size() << " records to " << o.out << '\n';
  return kExitOk;
}

inline UtilitySpec to_utility_spec(const EstimateOptions& o) {
  UtilitySpec s;
  s.transform = {detail::kind_or_throw(o.transform), o.alpha_start};
  s.use_headway = o.headway;
  s.use_changes = o.changes;
  s.use_income_elasticity = o.income_elasticity;
  s.use_time_elasticity = o.time_elasticity;
  s.n_groups = o.groups;
  s.income_mean = o.income_mean;
  s.time_mean = o.time_mean;
  validate(s);
  return s;
}

inline int cmd_estimate(const EstimateOptions& o, const detail::Invocation& inv = {}) {
  if (o.out.empty()) throw UsageError("--out is required");
  const auto data = read_choice_csv(o.data);
  const UtilitySpec spec = to_utility_spec(o);
  FitOptions fo;
  fo.max_iterations = o.max_iter;
  fo.alpha_start = o.alpha_start;
  const FitResult f = fit(data, spec, fo);

  std::vector<WaldEntry> wald;
  for (const auto& [name, target] : o.targets) {
    if (!f.index_of(name)) throw UsageError("--target-" + name + " given but the model has no parameter '" + name + "'");
    const auto se = f.std_error(name);
    if (!se) continue;
    wald.push_back({name, target, wald_test(f.estimate(name), *se, target)});
  }
  write_json_file(o.out, to_json(f, wald));
  detail::write_manifest(o.out, inv, json::array({o.data}), json::array({o.out}));
  std::cout << "final_ll " << format_double(f.final_ll) << " converged " << (f.converged ? "true" : "false") << '\n';
  if (!f.converged || !f.covariance) return kExitNumerical;
  return kExitOk;
}

inline int cmd_replicate(const ReplicateOptions& o, const detail::Invocation& inv = {}) {
  if (o.out.empty()) throw UsageError("--out is required");
  if (o.runs < 2) throw UsageError("--runs must be at least 2");
  SimulateOptions so;
  so.n_obs = o.n_obs;
  so.seed = o.seed;
  so.transform = o.dgp_transform;
  so.alpha = o.dgp_alpha;
  so.beta_t = o.beta_t;
  so.beta_c = o.beta_c;
  so.cost_min = o.cost_min;
  so.cost_max = o.cost_max;
  so.time_min = o.time_min;
  so.time_max = o.time_max;
  const SimConfig config = to_sim_config(so);
  std::vector<FitSpecEntry> specs;
  for (const auto& t : o.transforms) {
    UtilitySpec s;
    s.transform.kind = detail::kind_or_throw(t);
    specs.push_back({t, s});
  }
  ReplicationOptions ro;
  ro.threads = o.threads;
  const auto study = replicate_study(config, specs, o.runs, ro);

  std::ofstream out(o.out);
  if (!out) throw DataError("cannot write '" + o.out + "'");
  write_replication_csv(out, study.summaries);
  json outputs = json::array({o.out});
  if (!o.runs_out.empty()) {
    std::ofstream runs(o.runs_out);
    if (!runs) throw DataError("cannot write '" + o.runs_out + "'");
    runs << "spec,run,seed,included,final_ll,parameter,estimate,std_error\n";
    for (std::size_t s = 0; s < specs.size(); ++s) {
      for (std::size_t r = 0; r < o.runs; ++r) {
        const RunFit& rf = study.run_fits[s][r];
        if (!rf.fit) {
          runs << specs[s].label << ',' << r << ',' << rf.seed << ",0,nan,,,\n";
          continue;
        }
        for (const auto& name : rf.fit->parameter_names) {
          const auto se = rf.fit->std_error(name);
          runs << specs[s].label << ',' << r << ',' << rf.seed << ',' << (rf.included() ? 1 : 0) << ','
               << format_double(rf.fit->final_ll) << ',' << name << ',' << format_double(rf.fit->estimate(name)) << ','
               << (se ? format_double(*se) : "nan") << '\n';
        }
      }
    }
    outputs.push_back(o.runs_out);
  }
  detail::write_manifest(o.out, inv, json::array(), outputs);
  bool any_empty = false;
  for (const auto& s : study.summaries) {
    std::cout << s.label << ": " << s.runs << " runs included, " << s.excluded << " excluded\n";
    any_empty = any_empty || s.runs == 0;
  }
  return any_empty ? kExitNumerical : kExitOk;
}

inline int cmd_vtts(const VttsOptions& o, const detail::Invocation& inv = {}) {
  if (o.out_curve.empty() || o.out_summary.empty()) throw UsageError("--out-curve and --out-summary are required");
  CiMethod method;
  if (o.ci_method == "sim") {
    method = CiMethod::MvnSimulation;
  } else if (o.ci_method == "fieller") {
    method = CiMethod::Fieller;
  } else {
    throw UsageError("--ci-method must be sim or fieller");
  }
  if (!(o.level > 0.0 && o.level < 1.0)) throw UsageError("--level must lie in (0, 1)");
  if (method == CiMethod::MvnSimulation && o.draws < 1000) throw UsageError("--draws must be at least 1000");
  const FitResult f = fit_result_from_json(read_json_file(o.fit));
  const TransformSpec transform = f.spec.transform;

  VttsSummary s;
  s.method = method;
  s.level = o.level;
  s.draws = method == CiMethod::MvnSimulation ? o.draws : 0;
  s.seed = o.seed;
  const auto asym = asymptotic_vtts(f.estimates, transform);
  s.asymptotic_vtts = asym.value;
  s.diagnostic_ratio = asym.ratio;
  s.curve = vtts_curve(f.estimates, transform, o.dt_min, o.dt_max, o.dt_step);
  int code = kExitOk;
  if (s.asymptotic_vtts) {
    if (!f.covariance) {
      s.interval.bounded = false;
      code = kExitNumerical;
      std::cerr << "fit has no covariance matrix; confidence interval unavailable\n";
    } else {
      const Eigen::Vector2d mean(f.estimates.beta_t, f.estimates.beta_c);
      const Eigen::Matrix2d cov = f.covariance->topLeftCorner<2, 2>();
      s.interval = method == CiMethod::MvnSimulation ? vtts_ci_simulation(mean, cov, o.draws, o.level, o.seed)
                                                     : vtts_ci_fieller(mean, cov, o.level);
    }
  } else {
    s.interval.bounded = false;
  }

  {
    std::ofstream curve(o.out_curve);
    if (!curve) throw DataError("cannot write '" + o.out_curve + "'");
    write_curve_csv(curve, s.curve);
  }
  write_json_file(o.out_summary, to_json(s, transform));
  json outputs = json::array({o.out_curve, o.out_summary});
  if (!o.svg.empty()) {
    std::ofstream svg(o.svg);
    if (!svg) throw DataError("cannot write '" + o.svg + "'");
    svg << curve_svg(s.curve, "VTTS, " + std::string(to_string(transform.kind)));
    outputs.push_back(o.svg);
  }
  detail::write_manifest(o.out_summary, inv, json::array({o.fit}), outputs);
  if (s.asymptotic_vtts) {
    std::cout << "asymptotic VTTS " << format_double(*s.asymptotic_vtts) << '\n';
  } else {
    std::cout << "asymptotic VTTS undefined for " << to_string(transform.kind) << " (coefficient ratio "
              << format_double(asym.ratio) << ")\n";
  }
  return code;
}

namespace detail {

inline bool same_covariates(const UtilitySpec& a, const UtilitySpec& b) {
  return a.use_headway == b.use_headway && a.use_changes == b.use_changes &&
         a.use_income_elasticity == b.use_income_elasticity && a.use_time_elasticity == b.use_time_elasticity &&
         a.n_groups == b.n_groups;
}

// Linear is the alpha -> 0 limit of the threshold kinds and alpha = 1 of Power.
inline bool nested_in(const UtilitySpec& restricted, const UtilitySpec& full) {
  if (!same_covariates(restricted, full)) return false;
  const auto r = restricted.transform.kind, f = full.transform.kind;
  if (r == f) return true;
  return r == TransformKind::Linear &&
         (f == TransformKind::HTF || f == TransformKind::STF1 || f == TransformKind::STF2 || f == TransformKind::Power);
}

}  // namespace detail

inline int cmd_compare(const CompareOptions& o, const detail::Invocation& inv = {}) {
  if (o.out.empty()) throw UsageError("--out is required");
  double ll_a = 0, ll_b = 0, null_ll = 0;
  int k_a = 0, k_b = 0;
  bool same_model = false;
  json inputs = json::array();
  std::optional<FitResult> fa, fb;
  if (!o.fit_a.empty() || !o.fit_b.empty()) {
    if (o.fit_a.empty() || o.fit_b.empty()) throw UsageError("--fit-a and --fit-b must be given together");
    fa = fit_result_from_json(read_json_file(o.fit_a));
    fb = fit_result_from_json(read_json_file(o.fit_b));
    if (fa->n_obs != fb->n_obs) throw UsageError("the two fits were estimated on datasets of different size");
    ll_a = fa->final_ll;
    ll_b = fb->final_ll;
    null_ll = fa->null_ll;
    k_a = static_cast<int>(fa->n_free_params);
    k_b = static_cast<int>(fb->n_free_params);
    inputs = json::array({o.fit_a, o.fit_b});
  } else {
    if (!o.ll_a || !o.ll_b || !o.k_a || !o.k_b) {
      throw UsageError("give --fit-a/--fit-b or --ll-a/--k-a/--ll-b/--k-b");
    }
    ll_a = *o.ll_a;
    ll_b = *o.ll_b;
    k_a = *o.k_a;
    k_b = *o.k_b;
    null_ll = o.null_ll.value_or(0.0);
  }

  TestReport report;
  if (o.test == "lr") {
    if (fa && fb) {
      if (!detail::nested_in(fa->spec, fb->spec)) {
        throw UsageError("model A (" + std::string(to_string(fa->spec.transform.kind)) + ") is not nested in model B (" +
                         std::string(to_string(fb->spec.transform.kind)) +
                         "); use --test horowitz for non-nested models");
      }
      same_model = fa->spec.transform.kind == fb->spec.transform.kind;
    }
    int df = o.df.value_or(k_b - k_a);
    if (same_model && !o.df) df = std::max(df, 1);
    if (df < 1) throw UsageError("likelihood-ratio test needs model B to have more parameters (or pass --df)");
    report = lr_test(ll_a, ll_b, df);
  } else if (o.test == "horowitz") {
    if (!fa && !o.null_ll) throw UsageError("--null-ll is required for the Horowitz test without fit files");
    TestMethod variant;
    if (o.variant == "original") {
      variant = TestMethod::HorowitzOriginal;
    } else if (o.variant == "bal") {
      variant = TestMethod::HorowitzBAL;
    } else {
      throw UsageError("--variant must be original or bal");
    }
    report = horowitz_test(ll_a, k_a, ll_b, k_b, null_ll, variant);
  } else {
    throw UsageError("--test must be lr or horowitz");
  }
  write_json_file(o.out, to_json(report));
  detail::write_manifest(o.out, inv, inputs, json::array({o.out}));
  std::cout << to_string(report.method) << " statistic " << format_double(report.statistic) << " p "
            << format_double(report.p_value) << '\n';
  return kExitOk;
}

/// Parses argv and runs one subcommand; returns the process exit code.
inline int run(int argc, const char* const* argv) {
  CLI::App app{"Binary-logit threshold models: simulate, estimate, replicate, VTTS and model tests"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  SimulateOptions sim;
  auto* c_sim = app.add_subcommand("simulate", "generate a synthetic choice dataset");
  c_sim->add_option("--n-obs", sim.n_obs, "number of choices")->capture_default_str();
  c_sim->add_option("--seed", sim.seed, "random seed")->capture_default_str();
  c_sim->add_option("--transform", sim.transform, "DGP transform")->capture_default_str();
  c_sim->add_option("--alpha", sim.alpha, "DGP threshold / exponent")->capture_default_str();
  c_sim->add_option("--beta-t", sim.beta_t)->capture_default_str();
  c_sim->add_option("--beta-c", sim.beta_c)->capture_default_str();
  c_sim->add_option("--cost-min", sim.cost_min)->capture_default_str();
  c_sim->add_option("--cost-max", sim.cost_max)->capture_default_str();
  c_sim->add_option("--time-min", sim.time_min)->capture_default_str();
  c_sim->add_option("--time-max", sim.time_max)->capture_default_str();
  c_sim->add_flag("--extended", sim.extended, "add headway, changes, income, trip time and two scale groups");
  c_sim->add_option("--beta-h", sim.extended_dgp.beta_h)->capture_default_str();
  c_sim->add_option("--beta-k", sim.extended_dgp.beta_k)->capture_default_str();
  c_sim->add_option("--lambda-i", sim.extended_dgp.lambda_i)->capture_default_str();
  c_sim->add_option("--lambda-t", sim.extended_dgp.lambda_t)->capture_default_str();
  double scale2 = 0.8;
  c_sim->add_option("--scale-2", scale2, "error scale of the second group")->capture_default_str();
  c_sim->add_option("--out", sim.out, "output CSV")->required();

  EstimateOptions est;
  auto* c_est = app.add_subcommand("estimate", "fit a model to a dataset");
  c_est->add_option("--data", est.data, "dataset CSV")->required();
  c_est->add_option("--transform", est.transform)->capture_default_str();
  c_est->add_option("--alpha-start", est.alpha_start)->capture_default_str();
  c_est->add_flag("--headway", est.headway);
  c_est->add_flag("--changes", est.changes);
  c_est->add_flag("--income-elasticity", est.income_elasticity);
  c_est->add_flag("--time-elasticity", est.time_elasticity);
  c_est->add_option("--groups", est.groups)->capture_default_str();
  c_est->add_option("--income-mean", est.income_mean);
  c_est->add_option("--time-mean", est.time_mean);
  c_est->add_option("--max-iter", est.max_iter)->capture_default_str();
  std::map<std::string, std::optional<double>> target_flags;
  for (const char* p : {"beta_t", "beta_c", "alpha", "beta_h", "beta_k", "lambda_i", "lambda_t", "scale_1"}) {
    std::string flag = std::string("--target-") + p;
    std::replace(flag.begin(), flag.end(), '_', '-');
    c_est->add_option(flag, target_flags[p], std::string("Wald target for ") + p);
  }
  c_est->add_option("--out", est.out, "output fit JSON")->required();

  ReplicateOptions rep;
  auto* c_rep = app.add_subcommand("replicate", "Monte Carlo replication of simulate + estimate");
  c_rep->add_option("--runs", rep.runs)->capture_default_str();
  c_rep->add_option("--seed", rep.seed)->capture_default_str();
  c_rep->add_option("--n-obs", rep.n_obs)->capture_default_str();
  c_rep->add_option("--dgp-transform", rep.dgp_transform)->capture_default_str();
  c_rep->add_option("--dgp-alpha", rep.dgp_alpha)->capture_default_str();
  c_rep->add_option("--beta-t", rep.beta_t)->capture_default_str();
  c_rep->add_option("--beta-c", rep.beta_c)->capture_default_str();
  c_rep->add_option("--cost-min", rep.cost_min)->capture_default_str();
  c_rep->add_option("--cost-max", rep.cost_max)->capture_default_str();
  c_rep->add_option("--time-min", rep.time_min)->capture_default_str();
  c_rep->add_option("--time-max", rep.time_max)->capture_default_str();
  c_rep->add_option("--transforms", rep.transforms, "fitted transforms")->delimiter(',')->capture_default_str();
  c_rep->add_option("--threads", rep.threads)->capture_default_str();
  c_rep->add_option("--out", rep.out, "summary CSV")->required();
  c_rep->add_option("--runs-out", rep.runs_out, "per-run CSV");

  VttsOptions vt;
  auto* c_vt = app.add_subcommand("vtts", "VTTS curve and asymptotic VTTS confidence interval");
  c_vt->add_option("--fit", vt.fit, "fit JSON")->required();
  c_vt->add_option("--ci-method", vt.ci_method, "sim|fieller")->capture_default_str();
  c_vt->add_option("--draws", vt.draws)->capture_default_str();
  c_vt->add_option("--level", vt.level)->capture_default_str();
  c_vt->add_option("--seed", vt.seed)->capture_default_str();
  c_vt->add_option("--dt-min", vt.dt_min)->capture_default_str();
  c_vt->add_option("--dt-max", vt.dt_max)->capture_default_str();
  c_vt->add_option("--dt-step", vt.dt_step)->capture_default_str();
  c_vt->add_option("--out-curve", vt.out_curve)->required();
  c_vt->add_option("--out-summary", vt.out_summary)->required();
  c_vt->add_option("--svg", vt.svg);

  CompareOptions cmp;
  auto* c_cmp = app.add_subcommand("compare", "likelihood-ratio or Horowitz test between two fits");
  c_cmp->add_option("--test", cmp.test, "lr|horowitz")->capture_default_str();
  c_cmp->add_option("--fit-a", cmp.fit_a, "restricted / lower-fit model");
  c_cmp->add_option("--fit-b", cmp.fit_b, "full / higher-fit model");
  c_cmp->add_option("--ll-a", cmp.ll_a);
  c_cmp->add_option("--ll-b", cmp.ll_b);
  c_cmp->add_option("--k-a", cmp.k_a);
  c_cmp->add_option("--k-b", cmp.k_b);
  c_cmp->add_option("--null-ll", cmp.null_ll);
  c_cmp->add_option("--df", cmp.df);
  c_cmp->add_option("--variant", cmp.variant, "original|bal")->capture_default_str();
  c_cmp->add_option("--out", cmp.out, "report JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  detail::Invocation inv;
  for (int i = 0; i < argc; ++i) inv.argv.emplace_back(argv[i]);
  try {
    if (c_sim->parsed()) {
      inv.command = "simulate";
      inv.options_config = c_sim->config_to_str(true);
      if (sim.extended) {
        sim.extended_dgp.group_scales = {1.0, scale2};
      }
      return cmd_simulate(sim, inv);
    }
    if (c_est->parsed()) {
      inv.command = "estimate";
      inv.options_config = c_est->config_to_str(true);
      for (const auto& [name, value] : target_flags) {
        if (value) est.targets[name] = *value;
      }
      return cmd_estimate(est, inv);
    }
    if (c_rep->parsed()) {
      inv.command = "replicate";
      inv.options_config = c_rep->config_to_str(true);
      return cmd_replicate(rep, inv);
    }
    if (c_vt->parsed()) {
      inv.command = "vtts";
      inv.options_config = c_vt->config_to_str(true);
      return cmd_vtts(vt, inv);
    }
    if (c_cmp->parsed()) {
      inv.command = "compare";
      inv.options_config = c_cmp->config_to_str(true);
      return cmd_compare(cmp, inv);
    }
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace threshlogit::cli
