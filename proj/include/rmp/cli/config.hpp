#pragma once

// Scenario files: a JSON document with a schema version, a mandatory seed,
// optional defaults and a list of sweeps. Each sweep is the defaults object
// overlaid with its own keys, then checked against a closed key set.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rmp/error.hpp"
#include "rmp/oc.hpp"
#include "rmp/priors.hpp"

namespace rmp::cli {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

enum class Analysis { OneArmOc, HybridOc, Bimodality, WeightPropagation, SweetSpot, DeltaTable, AverageOc, ExactT };

inline const char* analysis_name(Analysis a) {
  switch (a) {
    case Analysis::OneArmOc: return "one_arm_oc";
    case Analysis::HybridOc: return "hybrid_oc";
    case Analysis::Bimodality: return "bimodality";
    case Analysis::WeightPropagation: return "weight_propagation";
    case Analysis::SweetSpot: return "sweet_spot";
    case Analysis::DeltaTable: return "delta_table";
    case Analysis::AverageOc: return "average_oc";
    case Analysis::ExactT: return "exact_t";
  }
  return "?";
}

inline bool is_hybrid(Analysis a) {
  return a == Analysis::HybridOc || a == Analysis::SweetSpot || a == Analysis::DeltaTable || a == Analysis::AverageOc;
}

enum class LocationKind { ExternalMean, NullBoundary, CurrentMean };
enum class Units { Absolute, SigmaExt };
enum class ScaleRule { ScaleSquaredIsVariance, ScaleIsVariance, MatchVariance };
enum class DesignKind { Informative, Rmp, UnitInfo };

inline const char* design_name(DesignKind d) {
  switch (d) {
    case DesignKind::Informative: return "informative";
    case DesignKind::Rmp: return "rmp";
    case DesignKind::UnitInfo: return "unit_info";
  }
  return "?";
}

// One robust dispersion: an effective sample size or an explicit variance.
struct Dispersion {
  double n_robust = 1.0;
  std::optional<double> variance;
};

struct Sweep {
  std::string path;  // e.g. "sweeps[2]", used in error messages
  std::string id;
  Analysis analysis = Analysis::OneArmOc;
  std::string description;

  double sigma = 1.0;
  double alpha = 0.025;
  int n_ext = 15;
  double ybar_ext = 0.0;
  double theta0 = 0.0;
  std::optional<double> theta1;
  int n = 20;
  int n_t = 20;
  int n_c = 20;

  std::vector<LocationKind> locations{LocationKind::ExternalMean};
  std::vector<Dispersion> dispersions{Dispersion{}};
  std::vector<double> w{0.5};
  std::vector<double> bias;
  Units units = Units::Absolute;
  std::vector<double> delta;
  int delta_steps = 20;

  bool student_t = false;
  double df = 3.0;
  std::optional<double> t_scale;
  ScaleRule t_scale_rule = ScaleRule::ScaleSquaredIsVariance;
  std::vector<int> k{100};

  TreatmentPrior treatment_prior = TreatmentPrior::Flat;
  std::vector<DesignKind> design_priors{DesignKind::Informative, DesignKind::Rmp, DesignKind::UnitInfo};
  double design_w = 0.5;
  std::vector<double> analysis_shift;

  std::uint64_t reps = 1'000'000;
  std::uint64_t seed = 0;

  double sigma_ext() const { return sigma / std::sqrt(static_cast<double>(n_ext)); }
  double scale_unit() const { return units == Units::SigmaExt ? sigma_ext() : 1.0; }
  double effect() const { return theta1 ? *theta1 : (is_hybrid(analysis) ? 0.83 : 0.5); }
};

struct ScenarioFile {
  int schema_version = kSchemaVersion;
  std::uint64_t seed = 0;
  std::string description;
  std::vector<Sweep> sweeps;
};

// Seed and replication overrides; CLI flags are applied after the
// environment, so they win.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> reps;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline std::size_t line_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) line += text[i] == '\n';
  return line;
}

[[noreturn]] inline void fail(const std::string& field, const std::string& what) {
  throw ConfigError(field + ": " + what);
}

inline const std::set<std::string>& sweep_keys() {
  static const std::set<std::string> keys{
      "id",          "analysis",  "trial",        "description",     "sigma",        "alpha",
      "n_ext",       "ybar_ext",  "theta0",       "theta1",          "n",            "n_t",
      "n_c",         "locations", "n_robust",     "robust_variance", "w",            "bias",
      "units",       "delta",     "delta_steps",  "form",            "df",           "t_scale",
      "t_scale_rule", "k",        "treatment_prior", "design_priors", "design_w",    "analysis_shift",
      "reps"};
  return keys;
}

inline double get_number(const json& j, const std::string& field) {
  if (!j.is_number()) fail(field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(field, "must be finite");
  return v;
}

inline std::int64_t get_integer(const json& j, const std::string& field) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) {
    if (j.is_number_float()) {
      const double v = j.get<double>();
      if (v == std::floor(v) && std::abs(v) < 9e15) return static_cast<std::int64_t>(v);
    }
    fail(field, "expected an integer");
  }
  return j.get<std::int64_t>();
}

inline std::uint64_t get_count(const json& j, const std::string& field) {
  if (j.is_number_unsigned()) {
    const auto v = j.get<std::uint64_t>();
    if (v == 0) fail(field, "must be >= 1");
    return v;
  }
  const auto v = get_integer(j, field);
  if (v < 1) fail(field, "must be >= 1");
  return static_cast<std::uint64_t>(v);
}

inline std::string get_string(const json& j, const std::string& field) {
  if (!j.is_string()) fail(field, "expected a string");
  return j.get<std::string>();
}

// A list of numbers, or {"from", "to", "step"} / {"from", "to", "count"}.
inline std::vector<double> get_grid(const json& j, const std::string& field) {
  std::vector<double> out;
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_number(j[i], field + "[" + std::to_string(i) + "]"));
  } else if (j.is_number()) {
    out.push_back(get_number(j, field));
  } else if (j.is_object()) {
    for (const auto& [key, _] : j.items()) {
      if (key != "from" && key != "to" && key != "step" && key != "count") fail(field + "." + key, "unknown key");
    }
    if (!j.contains("from") || !j.contains("to")) fail(field, "range needs 'from' and 'to'");
    const double from = get_number(j["from"], field + ".from");
    const double to = get_number(j["to"], field + ".to");
    if (to < from) fail(field, "range 'to' must be >= 'from'");
    if (j.contains("step") == j.contains("count")) fail(field, "range needs exactly one of 'step' or 'count'");
    std::int64_t count = 0;
    if (j.contains("step")) {
      const double step = get_number(j["step"], field + ".step");
      if (step <= 0.0) fail(field + ".step", "must be > 0");
      count = static_cast<std::int64_t>(std::floor((to - from) / step + 1e-9)) + 1;
      if (count > 1'000'000) fail(field, "grid too large");
      for (std::int64_t i = 0; i < count; ++i) out.push_back(from + static_cast<double>(i) * step);
    } else {
      count = get_integer(j["count"], field + ".count");
      if (count < 1) fail(field + ".count", "must be >= 1");
      if (count > 1'000'000) fail(field, "grid too large");
      if (count == 1) {
        out.push_back(from);
      } else {
        for (std::int64_t i = 0; i < count; ++i) out.push_back(from + (to - from) * static_cast<double>(i) / static_cast<double>(count - 1));
      }
    }
  } else {
    fail(field, "expected a number, a list of numbers or a range object");
  }
  if (out.empty()) fail(field, "must not be empty");
  return out;
}

template <class T, class F>
std::vector<T> get_list(const json& j, const std::string& field, F&& item) {
  std::vector<T> out;
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(item(j[i], field + "[" + std::to_string(i) + "]"));
  } else {
    out.push_back(item(j, field));
  }
  if (out.empty()) fail(field, "must not be empty");
  return out;
}

inline LocationKind parse_location(const json& j, const std::string& field) {
  const auto s = get_string(j, field);
  if (s == "external_mean") return LocationKind::ExternalMean;
  if (s == "null_boundary") return LocationKind::NullBoundary;
  if (s == "current_mean") return LocationKind::CurrentMean;
  fail(field, "unknown location '" + s + "' (external_mean, null_boundary, current_mean)");
}

inline DesignKind parse_design(const json& j, const std::string& field) {
  const auto s = get_string(j, field);
  if (s == "informative") return DesignKind::Informative;
  if (s == "rmp") return DesignKind::Rmp;
  if (s == "unit_info") return DesignKind::UnitInfo;
  fail(field, "unknown design prior '" + s + "' (informative, rmp, unit_info)");
}

inline Analysis parse_analysis(const json& j, const std::string& field) {
  const auto s = get_string(j, field);
  for (auto a : {Analysis::OneArmOc, Analysis::HybridOc, Analysis::Bimodality, Analysis::WeightPropagation,
                 Analysis::SweetSpot, Analysis::DeltaTable, Analysis::AverageOc, Analysis::ExactT}) {
    if (s == analysis_name(a)) return a;
  }
  fail(field, "unknown analysis '" + s + "'");
}

inline void check(bool ok, const std::string& field, const std::string& what) {
  if (!ok) fail(field, what);
}

inline Sweep parse_sweep(const json& j, const std::string& path, std::uint64_t seed,
                         std::optional<std::uint64_t> file_reps) {
  for (const auto& [key, _] : j.items()) {
    if (!sweep_keys().count(key)) fail(path + "." + key, "unknown key");
  }
  auto f = [&](const char* key) { return path + "." + key; };
  Sweep s;
  s.path = path;
  s.seed = seed;
  if (file_reps) s.reps = *file_reps;
  if (!j.contains("id")) fail(f("id"), "missing");
  s.id = get_string(j["id"], f("id"));
  check(!s.id.empty(), f("id"), "must not be empty");
  check(s.id.find_first_of("/\\,\"\n") == std::string::npos, f("id"), "must not contain path separators, commas or quotes");
  if (!j.contains("analysis")) fail(f("analysis"), "missing");
  s.analysis = parse_analysis(j["analysis"], f("analysis"));
  if (j.contains("trial")) {
    const auto t = get_string(j["trial"], f("trial"));
    check(t == "one_arm" || t == "hybrid", f("trial"), "must be 'one_arm' or 'hybrid'");
    check((t == "hybrid") == is_hybrid(s.analysis), f("trial"),
          std::string("does not match analysis '") + analysis_name(s.analysis) + "'");
  }
  if (j.contains("description")) s.description = get_string(j["description"], f("description"));

  if (j.contains("sigma")) s.sigma = get_number(j["sigma"], f("sigma"));
  check(s.sigma > 0.0, f("sigma"), "must be > 0");
  if (j.contains("alpha")) s.alpha = get_number(j["alpha"], f("alpha"));
  check(s.alpha > 0.0 && s.alpha < 1.0, f("alpha"), "must lie in (0, 1)");
  if (j.contains("n_ext")) s.n_ext = static_cast<int>(get_count(j["n_ext"], f("n_ext")));
  if (j.contains("ybar_ext")) s.ybar_ext = get_number(j["ybar_ext"], f("ybar_ext"));
  if (j.contains("theta0")) s.theta0 = get_number(j["theta0"], f("theta0"));
  if (j.contains("theta1")) s.theta1 = get_number(j["theta1"], f("theta1"));
  if (is_hybrid(s.analysis)) {
    check(s.effect() > 0.0, f("theta1"), "effect must be > 0");
  } else {
    check(s.effect() > s.theta0, f("theta1"), "must exceed theta0");
  }
  if (j.contains("n")) s.n = static_cast<int>(get_count(j["n"], f("n")));
  if (j.contains("n_t")) s.n_t = static_cast<int>(get_count(j["n_t"], f("n_t")));
  if (j.contains("n_c")) s.n_c = static_cast<int>(get_count(j["n_c"], f("n_c")));

  if (j.contains("locations")) s.locations = get_list<LocationKind>(j["locations"], f("locations"), parse_location);
  if (is_hybrid(s.analysis)) {
    for (auto l : s.locations) {
      check(l != LocationKind::NullBoundary, f("locations"), "null_boundary is not available in the hybrid design");
    }
  }
  check(!(j.contains("n_robust") && j.contains("robust_variance")), f("n_robust"),
        "give either n_robust or robust_variance, not both");
  if (j.contains("n_robust")) {
    s.dispersions.clear();
    for (double v : get_grid(j["n_robust"], f("n_robust"))) {
      check(v > 0.0, f("n_robust"), "must be > 0");
      s.dispersions.push_back({v, std::nullopt});
    }
  }
  if (j.contains("robust_variance")) {
    s.dispersions.clear();
    for (double v : get_grid(j["robust_variance"], f("robust_variance"))) {
      check(v > 0.0, f("robust_variance"), "must be > 0");
      s.dispersions.push_back({s.sigma * s.sigma / v, v});
    }
  }
  if (j.contains("w")) s.w = get_grid(j["w"], f("w"));
  for (double w : s.w) check(w >= 0.0 && w <= 1.0, f("w"), "value " + json(w).dump() + " outside [0, 1]");

  if (j.contains("units")) {
    const auto u = get_string(j["units"], f("units"));
    check(u == "absolute" || u == "sigma_ext", f("units"), "must be 'absolute' or 'sigma_ext'");
    s.units = u == "sigma_ext" ? Units::SigmaExt : Units::Absolute;
  }
  if (j.contains("bias")) s.bias = get_grid(j["bias"], f("bias"));
  if (j.contains("delta")) s.delta = get_grid(j["delta"], f("delta"));
  for (double d : s.delta) check(d > 0.0, f("delta"), "must be > 0");
  if (j.contains("delta_steps")) s.delta_steps = static_cast<int>(get_count(j["delta_steps"], f("delta_steps")));

  if (j.contains("form")) {
    const auto form = get_string(j["form"], f("form"));
    check(form == "normal" || form == "student_t", f("form"), "must be 'normal' or 'student_t'");
    s.student_t = form == "student_t";
  }
  if (j.contains("df")) s.df = get_number(j["df"], f("df"));
  check(s.df > 2.0, f("df"), "must be > 2");
  if (j.contains("t_scale")) {
    s.t_scale = get_number(j["t_scale"], f("t_scale"));
    check(*s.t_scale > 0.0, f("t_scale"), "must be > 0");
  }
  if (j.contains("t_scale_rule")) {
    const auto r = get_string(j["t_scale_rule"], f("t_scale_rule"));
    if (r == "scale_squared_is_variance") {
      s.t_scale_rule = ScaleRule::ScaleSquaredIsVariance;
    } else if (r == "scale_is_variance") {
      s.t_scale_rule = ScaleRule::ScaleIsVariance;
    } else if (r == "match_variance") {
      s.t_scale_rule = ScaleRule::MatchVariance;
    } else {
      fail(f("t_scale_rule"), "must be scale_squared_is_variance, scale_is_variance or match_variance");
    }
  }
  if (j.contains("k")) {
    s.k = get_list<int>(j["k"], f("k"), [](const json& v, const std::string& fld) {
      const auto k = get_integer(v, fld);
      if (k < 1 || k > 100000) fail(fld, "must lie in [1, 100000]");
      return static_cast<int>(k);
    });
  }
  if (j.contains("treatment_prior")) {
    const auto t = get_string(j["treatment_prior"], f("treatment_prior"));
    check(t == "flat" || t == "unit_info_external", f("treatment_prior"), "must be 'flat' or 'unit_info_external'");
    s.treatment_prior = t == "flat" ? TreatmentPrior::Flat : TreatmentPrior::UnitInfoAtExternalMean;
  }
  if (j.contains("design_priors")) s.design_priors = get_list<DesignKind>(j["design_priors"], f("design_priors"), parse_design);
  if (j.contains("design_w")) s.design_w = get_number(j["design_w"], f("design_w"));
  check(s.design_w >= 0.0 && s.design_w <= 1.0, f("design_w"), "value outside [0, 1]");
  if (j.contains("analysis_shift")) s.analysis_shift = get_grid(j["analysis_shift"], f("analysis_shift"));
  if (j.contains("reps")) s.reps = get_count(j["reps"], f("reps"));

  // Axes each analysis needs.
  switch (s.analysis) {
    case Analysis::DeltaTable:
      check(!s.delta.empty(), f("delta"), "delta_table needs a non-empty delta list");
      break;
    case Analysis::AverageOc:
      check(!s.analysis_shift.empty(), f("analysis_shift"), "average_oc needs a non-empty analysis_shift grid");
      check(!s.design_priors.empty(), f("design_priors"), "must not be empty");
      break;
    case Analysis::SweetSpot:
      check(s.bias.size() >= 2, f("bias"), "sweet_spot needs at least two bias points");
      break;
    default:
      check(!s.bias.empty(), f("bias"), "missing or empty bias grid");
  }
  if (s.analysis == Analysis::Bimodality) check(!s.student_t, f("form"), "bimodality needs the normal form");
  if (s.analysis == Analysis::ExactT) check(s.student_t, f("form"), "exact_t needs form 'student_t'");
  return s;
}

}  // namespace detail

inline ScenarioFile parse_scenario(const std::string& text, const Overrides& ov = {}) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("parse error at line " + std::to_string(detail::line_of(text, e.byte)) + ": " + e.what());
  }
  if (!root.is_object()) detail::fail("<root>", "expected a JSON object");
  for (const auto& [key, _] : root.items()) {
    if (key != "schema_version" && key != "seed" && key != "reps" && key != "description" && key != "defaults" &&
        key != "sweeps") {
      detail::fail(key, "unknown key");
    }
  }
  ScenarioFile f;
  if (!root.contains("schema_version")) detail::fail("schema_version", "missing");
  f.schema_version = static_cast<int>(detail::get_integer(root["schema_version"], "schema_version"));
  if (f.schema_version != kSchemaVersion) {
    detail::fail("schema_version", "unsupported version " + std::to_string(f.schema_version) + " (expected " +
                                       std::to_string(kSchemaVersion) + ")");
  }
  if (!root.contains("seed")) detail::fail("seed", "missing (a seed is mandatory)");
  if (root["seed"].is_number_unsigned()) {
    f.seed = root["seed"].get<std::uint64_t>();
  } else {
    const auto s = detail::get_integer(root["seed"], "seed");
    if (s < 0) detail::fail("seed", "must be >= 0");
    f.seed = static_cast<std::uint64_t>(s);
  }
  if (ov.seed) f.seed = *ov.seed;
  std::optional<std::uint64_t> reps;
  if (root.contains("reps")) reps = detail::get_count(root["reps"], "reps");
  if (root.contains("description")) f.description = detail::get_string(root["description"], "description");

  json defaults = json::object();
  if (root.contains("defaults")) {
    defaults = root["defaults"];
    if (!defaults.is_object()) detail::fail("defaults", "expected an object");
    for (const auto& [key, _] : defaults.items()) {
      if (!detail::sweep_keys().count(key) || key == "id") detail::fail("defaults." + key, "unknown key");
    }
  }
  if (!root.contains("sweeps") || !root["sweeps"].is_array() || root["sweeps"].empty()) {
    detail::fail("sweeps", "expected a non-empty list of sweeps");
  }
  std::set<std::string> ids;
  for (std::size_t i = 0; i < root["sweeps"].size(); ++i) {
    const auto path = "sweeps[" + std::to_string(i) + "]";
    const auto& sj = root["sweeps"][i];
    if (!sj.is_object()) detail::fail(path, "expected an object");
    json merged = defaults;
    for (const auto& [key, value] : sj.items()) merged[key] = value;
    auto sweep = detail::parse_sweep(merged, path, f.seed, reps);
    if (ov.reps) sweep.reps = *ov.reps;
    if (!ids.insert(sweep.id).second) detail::fail(path + ".id", "duplicate id '" + sweep.id + "'");
    f.sweeps.push_back(std::move(sweep));
  }
  return f;
}

inline ScenarioFile load_scenario(const std::string& path, const Overrides& ov = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), ov);
}

// Overrides from OC_SEED and OC_REPS. Non-numeric values are an error.
inline Overrides env_overrides() {
  Overrides ov;
  auto read = [](const char* name) -> std::optional<std::uint64_t> {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    std::size_t pos = 0;
    std::uint64_t x = 0;
    try {
      x = std::stoull(v, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || v[pos] != '\0' || v[0] == '-') throw ConfigError(std::string(name) + ": expected a non-negative integer");
    return x;
  };
  ov.seed = read("OC_SEED");
  ov.reps = read("OC_REPS");
  if (ov.reps && *ov.reps == 0) throw ConfigError("OC_REPS: must be >= 1");
  return ov;
}

}  // namespace rmp::cli
