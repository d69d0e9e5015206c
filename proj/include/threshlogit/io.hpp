#pragma once

// File formats: choice-data CSV, fit/report/summary JSON, VTTS curve CSV and a
// minimal SVG line plot of a curve.

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "threshlogit/errors.hpp"
#include "threshlogit/estimation.hpp"
#include "threshlogit/model.hpp"
#include "threshlogit/modelcompare.hpp"
#include "threshlogit/synthetic.hpp"
#include "threshlogit/wtp.hpp"

namespace threshlogit {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kToolVersion = "1.0.0";

/// Shortest representation is not required; 17 significant digits always
/// round-trip a double exactly.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline std::optional<double> parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  for (auto& c : out) {
    while (!c.empty() && (c.back() == '\r' || c.back() == ' ')) c.pop_back();
    while (!c.empty() && c.front() == ' ') c.erase(c.begin());
  }
  return out;
}

}  // namespace detail

inline constexpr std::string_view kRequiredColumns[] = {"chose_alt1", "dt", "dc"};
inline constexpr std::string_view kOptionalColumns[] = {"dh", "dk", "income", "mean_trip_time", "group"};

/// Parses choice data. The header must contain chose_alt1, dt and dc; dh, dk,
/// income, mean_trip_time and group are optional, any other column is an error.
/// Empty optional cells take their defaults.
inline std::vector<ChoiceRecord> read_choice_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("dataset is empty: missing header row");
  const auto header = detail::split_csv_line(line);
  enum Col { kChose, kDt, kDc, kDh, kDk, kIncome, kTripTime, kGroup, kNumCols };
  const std::string_view names[kNumCols] = {"chose_alt1", "dt", "dc", "dh", "dk", "income", "mean_trip_time", "group"};
  int index[kNumCols];
  std::fill(std::begin(index), std::end(index), -1);
  for (std::size_t c = 0; c < header.size(); ++c) {
    int found = -1;
    for (int k = 0; k < kNumCols; ++k) {
      if (header[c] == names[k]) found = k;
    }
    if (found < 0) throw DataError("unknown column '" + header[c] + "' in dataset header");
    if (index[found] >= 0) throw DataError("duplicate column '" + header[c] + "' in dataset header");
    index[found] = static_cast<int>(c);
  }
  for (int k : {kChose, kDt, kDc}) {
    if (index[k] < 0) throw DataError("missing required column '" + std::string(names[k]) + "'");
  }

  std::vector<ChoiceRecord> data;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = detail::split_csv_line(line);
    const std::size_t row = data.size() + 1;
    auto fail = [&](int k, const std::string& why) {
      throw DataError("row " + std::to_string(row) + " (line " + std::to_string(line_no) + "), column '" +
                      std::string(names[k]) + "': " + why);
    };
    if (cells.size() != header.size()) {
      throw DataError("row " + std::to_string(row) + " (line " + std::to_string(line_no) + ") has " +
                      std::to_string(cells.size()) + " cells, header has " + std::to_string(header.size()));
    }
    auto cell = [&](int k) -> std::optional<std::string_view> {
      if (index[k] < 0) return std::nullopt;
      const std::string& c = cells[static_cast<std::size_t>(index[k])];
      if (c.empty()) return std::nullopt;
      return std::string_view(c);
    };
    auto number = [&](int k, bool required) -> std::optional<double> {
      const auto c = cell(k);
      if (!c) {
        if (required) fail(k, "value is missing");
        return std::nullopt;
      }
      const auto v = parse_double(*c);
      if (!v) fail(k, "'" + std::string(*c) + "' is not a number");
      if (!std::isfinite(*v)) fail(k, "value must be finite");
      return v;
    };
    ChoiceRecord r;
    const auto chose = number(kChose, true);
    if (*chose != 0.0 && *chose != 1.0) fail(kChose, "must be 0 or 1");
    r.chose_alt1 = *chose == 1.0;
    r.dt = *number(kDt, true);
    r.dc = *number(kDc, true);
    r.dh = number(kDh, false).value_or(0.0);
    r.dk = number(kDk, false).value_or(0.0);
    r.income = number(kIncome, false);
    if (r.income && !(*r.income > 0.0)) fail(kIncome, "must be positive");
    r.mean_trip_time = number(kTripTime, false);
    if (r.mean_trip_time && !(*r.mean_trip_time > 0.0)) fail(kTripTime, "must be positive");
    if (const auto g = number(kGroup, false)) {
      if (*g < 0.0 || *g != std::floor(*g) || *g > 1e6) fail(kGroup, "must be a non-negative integer");
      r.group = static_cast<int>(*g);
    }
    data.push_back(r);
  }
  return data;
}

inline std::vector<ChoiceRecord> read_choice_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset '" + path + "'");
  return read_choice_csv(in);
}

/// Writes all columns; absent income / mean_trip_time are empty cells.
inline void write_choice_csv(std::ostream& out, std::span<const ChoiceRecord> data) {
  out << "chose_alt1,dt,dc,dh,dk,income,mean_trip_time,group\n";
  for (const auto& r : data) {
    out << (r.chose_alt1 ? 1 : 0) << ',' << format_double(r.dt) << ',' << format_double(r.dc) << ','
        << format_double(r.dh) << ',' << format_double(r.dk) << ',' << (r.income ? format_double(*r.income) : "")
        << ',' << (r.mean_trip_time ? format_double(*r.mean_trip_time) : "") << ',' << r.group << '\n';
  }
}

inline void write_choice_csv(const std::string& path, std::span<const ChoiceRecord> data) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_choice_csv(out, data);
}

// ---------------------------------------------------------------------------
// JSON

using nlohmann::json;

inline json to_json(const TransformSpec& t) {
  json j{{"kind", std::string(to_string(t.kind))}};
  if (has_shape_parameter(t.kind)) j["alpha"] = t.alpha;
  return j;
}

inline TransformSpec transform_from_json(const json& j) {
  TransformSpec t;
  const auto kind = parse_transform_kind(j.at("kind").get<std::string>());
  if (!kind) throw DataError("unknown transform kind '" + j.at("kind").get<std::string>() + "'");
  t.kind = *kind;
  if (j.contains("alpha")) t.alpha = j.at("alpha").get<double>();
  return t;
}

inline json to_json(const UtilitySpec& s) {
  json j{{"transform", to_json(s.transform)},
         {"use_headway", s.use_headway},
         {"use_changes", s.use_changes},
         {"use_income_elasticity", s.use_income_elasticity},
         {"use_time_elasticity", s.use_time_elasticity},
         {"n_groups", s.n_groups}};
  j["income_mean"] = s.income_mean ? json(*s.income_mean) : json(nullptr);
  j["time_mean"] = s.time_mean ? json(*s.time_mean) : json(nullptr);
  return j;
}

inline UtilitySpec utility_spec_from_json(const json& j) {
  UtilitySpec s;
  s.transform = transform_from_json(j.at("transform"));
  s.use_headway = j.value("use_headway", false);
  s.use_changes = j.value("use_changes", false);
  s.use_income_elasticity = j.value("use_income_elasticity", false);
  s.use_time_elasticity = j.value("use_time_elasticity", false);
  s.n_groups = j.value("n_groups", 1);
  if (j.contains("income_mean") && !j["income_mean"].is_null()) s.income_mean = j["income_mean"].get<double>();
  if (j.contains("time_mean") && !j["time_mean"].is_null()) s.time_mean = j["time_mean"].get<double>();
  return s;
}

inline json to_json(const ParameterSet& p) {
  json j{{"beta_t", p.beta_t}, {"beta_c", p.beta_c}};
  if (p.alpha) j["alpha"] = *p.alpha;
  if (p.beta_h) j["beta_h"] = *p.beta_h;
  if (p.beta_k) j["beta_k"] = *p.beta_k;
  if (p.lambda_i) j["lambda_i"] = *p.lambda_i;
  if (p.lambda_t) j["lambda_t"] = *p.lambda_t;
  j["scales"] = p.scales;
  return j;
}

inline ParameterSet parameters_from_json(const json& j) {
  ParameterSet p;
  p.beta_t = j.at("beta_t").get<double>();
  p.beta_c = j.at("beta_c").get<double>();
  auto opt = [&](const char* key) -> std::optional<double> {
    if (j.contains(key)) return j.at(key).get<double>();
    return std::nullopt;
  };
  p.alpha = opt("alpha");
  p.beta_h = opt("beta_h");
  p.beta_k = opt("beta_k");
  p.lambda_i = opt("lambda_i");
  p.lambda_t = opt("lambda_t");
  if (j.contains("scales")) p.scales = j.at("scales").get<std::vector<double>>();
  return p;
}

/// Per-parameter Wald p-values against user-supplied targets.
struct WaldEntry {
  std::string parameter;
  double target;
  double p_value;
};

inline json to_json(const FitResult& f, const std::vector<WaldEntry>& wald = {}) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "fit_result";
  j["spec"] = to_json(f.spec);
  j["estimates"] = to_json(f.estimates);
  j["parameter_names"] = f.parameter_names;
  const Eigen::VectorXd packed = ParameterLayout(f.spec).pack(f.estimates);
  json params = json::array();
  for (std::size_t i = 0; i < f.parameter_names.size(); ++i) {
    json e{{"name", f.parameter_names[i]}, {"estimate", packed[static_cast<Eigen::Index>(i)]}};
    e["std_error"] = f.std_errors.empty() ? json(nullptr) : json(f.std_errors[i]);
    params.push_back(e);
  }
  j["parameters"] = params;
  if (f.covariance) {
    json cov = json::array();
    for (Eigen::Index r = 0; r < f.covariance->rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < f.covariance->cols(); ++c) row.push_back((*f.covariance)(r, c));
      cov.push_back(row);
    }
    j["covariance"] = cov;
  } else {
    j["covariance"] = nullptr;
  }
  j["std_errors"] = f.std_errors;
  j["final_ll"] = f.final_ll;
  j["null_ll"] = f.null_ll;
  j["converged"] = f.converged;
  j["iterations"] = f.iterations;
  j["gradient_max_norm"] = f.gradient_max_norm;
  j["n_obs"] = f.n_obs;
  j["n_free_params"] = f.n_free_params;
  j["notes"] = f.notes;
  if (!wald.empty()) {
    json w = json::object();
    for (const auto& e : wald) w[e.parameter] = {{"target", e.target}, {"p_value", e.p_value}};
    j["wald"] = w;
  }
  return j;
}

inline FitResult fit_result_from_json(const json& j) {
  if (j.value("schema_version", 0) != kSchemaVersion) throw DataError("unsupported fit JSON schema_version");
  FitResult f;
  f.spec = utility_spec_from_json(j.at("spec"));
  f.estimates = parameters_from_json(j.at("estimates"));
  check_consistent(f.estimates, f.spec);
  f.parameter_names = ParameterLayout(f.spec).names();
  if (j.contains("covariance") && !j["covariance"].is_null()) {
    const auto& cov = j["covariance"];
    const auto n = static_cast<Eigen::Index>(f.parameter_names.size());
    if (static_cast<Eigen::Index>(cov.size()) != n) throw DataError("covariance size does not match the parameters");
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
      if (static_cast<Eigen::Index>(cov[static_cast<std::size_t>(r)].size()) != n) {
        throw DataError("covariance must be square");
      }
      for (Eigen::Index c = 0; c < n; ++c) m(r, c) = cov[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
    f.covariance = m;
  }
  f.std_errors = j.value("std_errors", std::vector<double>{});
  f.final_ll = j.at("final_ll").get<double>();
  f.null_ll = j.at("null_ll").get<double>();
  f.converged = j.at("converged").get<bool>();
  f.iterations = j.value("iterations", 0);
  f.gradient_max_norm = j.value("gradient_max_norm", 0.0);
  f.n_obs = j.at("n_obs").get<std::size_t>();
  f.n_free_params = j.value("n_free_params", f.parameter_names.size());
  f.notes = j.value("notes", std::vector<std::string>{});
  return f;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

inline json to_json(const TestReport& r) {
  return {{"schema_version", kSchemaVersion},
          {"kind", "test_report"},
          {"method", std::string(to_string(r.method))},
          {"statistic", r.statistic},
          {"p_value", r.p_value},
          {"df", r.df}};
}

/// Summary fields: method, level, point, low, high, draws, seed.
inline json to_json(const VttsSummary& s, const TransformSpec& transform) {
  json j{{"schema_version", kSchemaVersion},
         {"kind", "vtts_summary"},
         {"transform", to_json(transform)},
         {"method", std::string(to_string(s.method))},
         {"level", s.level},
         {"draws", s.draws},
         {"seed", s.seed},
         {"asymptotic_defined", s.asymptotic_vtts.has_value()},
         {"diagnostic_ratio", s.diagnostic_ratio},
         {"bounded", s.interval.bounded}};
  j["point"] = s.asymptotic_vtts ? json(*s.asymptotic_vtts) : json(nullptr);
  const bool numeric = s.asymptotic_vtts && s.interval.bounded;
  j["low"] = numeric ? json(s.interval.low) : json(nullptr);
  j["high"] = numeric ? json(s.interval.high) : json(nullptr);
  return j;
}

inline void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve) {
  out << "dt_minutes,vtts_per_hour\n";
  for (const auto& p : curve) out << format_double(p.dt) << ',' << format_double(p.vtts) << '\n';
}

/// Table-2 layout: one row per (spec, parameter).
inline void write_replication_csv(std::ostream& out, const std::vector<ReplicationSummary>& summaries) {
  out << "spec,parameter,mean,empirical_sd,mean_reported_se,runs,excluded\n";
  for (const auto& s : summaries) {
    for (std::size_t j = 0; j < s.parameter_names.size(); ++j) {
      out << s.label << ',' << s.parameter_names[j] << ',' << format_double(s.mean[j]) << ','
          << format_double(s.empirical_sd[j]) << ',' << format_double(s.mean_std_error[j]) << ',' << s.runs << ','
          << s.excluded << '\n';
    }
    if (s.parameter_names.empty()) out << s.label << ",,nan,nan,nan," << s.runs << ',' << s.excluded << '\n';
  }
}

/// Self-contained SVG polyline of a curve; draws only, computes nothing.
inline std::string curve_svg(const std::vector<CurvePoint>& curve, const std::string& title) {
  constexpr double w = 640, h = 400, m = 50;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool first = true;
  for (const auto& p : curve) {
    if (!std::isfinite(p.vtts)) continue;
    if (first) {
      xmin = xmax = p.dt;
      ymin = ymax = p.vtts;
      first = false;
    }
    xmin = std::min(xmin, p.dt);
    xmax = std::max(xmax, p.dt);
    ymin = std::min(ymin, p.vtts);
    ymax = std::max(ymax, p.vtts);
  }
  ymin = std::min(ymin, 0.0);
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  auto sx = [&](double x) { return m + (x - xmin) / (xmax - xmin) * (w - 2 * m); };
  auto sy = [&](double y) { return h - m - (y - ymin) / (ymax - ymin) * (h - 2 * m); };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  s << "<line x1=\"" << m << "\" y1=\"" << sy(0) << "\" x2=\"" << w - m << "\" y2=\"" << sy(0)
    << "\" stroke=\"gray\"/>\n";
  s << "<line x1=\"" << sx(0) << "\" y1=\"" << m << "\" x2=\"" << sx(0) << "\" y2=\"" << h - m
    << "\" stroke=\"gray\"/>\n";
  s << "<text x=\"" << w / 2 << "\" y=\"" << h - 12 << "\" text-anchor=\"middle\" font-size=\"12\">dt [min]</text>\n";
  s << "<text x=\"12\" y=\"" << m - 8 << "\" font-size=\"12\">VTTS [per hour], max " << ymax << "</text>\n";
  s << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (const auto& p : curve) {
    if (std::isfinite(p.vtts)) s << sx(p.dt) << ',' << sy(p.vtts) << ' ';
  }
  s << "\"/>\n</svg>\n";
  return s.str();
}

}  // namespace threshlogit
