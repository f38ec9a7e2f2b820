#pragma once

// Built-in scenario files. Each recipe is a complete scenario document that can
// be run as is or printed and edited.

#include <string>
#include <string_view>
#include <vector>

namespace rmp::cli {

struct Recipe {
  std::string_view name;
  std::string_view summary;
  std::string_view document;
};

inline const std::vector<Recipe>& recipes() {
  static const std::vector<Recipe> all{
      {"fig1", "one-arm TIE, power and standardized RMSE over bias for the three locations and a t robust component",
       R"({
  "schema_version": 1,
  "seed": 20250101,
  "defaults": {"analysis": "one_arm_oc", "n": 20, "n_ext": 15, "theta1": 0.5, "units": "sigma_ext",
               "bias": {"from": -10, "to": 10, "step": 0.5}, "w": [0.25, 0.5]},
  "sweeps": [
    {"id": "fig1_normal", "locations": ["external_mean", "null_boundary", "current_mean"], "n_robust": 1},
    {"id": "fig1_t", "locations": "external_mean", "form": "student_t", "df": 3, "k": 100}
  ]
})"},
      {"fig2", "posterior bimodality (OBM) over prior weight and bias, with ybar at the true value",
       R"({
  "schema_version": 1,
  "seed": 20250102,
  "sweeps": [
    {"id": "fig2", "analysis": "bimodality", "n": 20, "n_ext": 15, "units": "sigma_ext",
     "locations": ["external_mean", "null_boundary", "current_mean"],
     "robust_variance": [400, 25, 4, 1, 0.5],
     "w": {"from": 0, "to": 1, "count": 101}, "bias": {"from": -8, "to": 8, "count": 161}}
  ]
})"},
      {"fig4", "posterior versus prior weight at no, moderate and large bias for several robust variances",
       R"({
  "schema_version": 1,
  "seed": 20250104,
  "sweeps": [
    {"id": "fig4", "analysis": "weight_propagation", "n": 20, "n_ext": 15, "units": "sigma_ext",
     "locations": "external_mean", "robust_variance": [400, 25, 4, 1, 0.5],
     "w": {"from": 0, "to": 1, "count": 21}, "bias": [0, 2, 8]}
  ]
})"},
      {"fig5", "posterior weight over bias at prior weight 0.5 for several robust variances",
       R"({
  "schema_version": 1,
  "seed": 20250105,
  "sweeps": [
    {"id": "fig5", "analysis": "weight_propagation", "n": 20, "n_ext": 15, "units": "sigma_ext",
     "locations": "external_mean", "robust_variance": [400, 25, 4, 1, 0.5],
     "w": 0.5, "bias": {"from": -10, "to": 10, "step": 0.25}}
  ]
})"},
      {"fig7", "hybrid-control TIE, power and calibrated power over bias with a unit-information robust component",
       R"({
  "schema_version": 1,
  "seed": 20250107,
  "defaults": {"analysis": "hybrid_oc", "n_t": 20, "n_c": 20, "n_ext": 15, "theta1": 0.83,
               "bias": {"from": -1.5, "to": 1.5, "step": 0.05}},
  "sweeps": [
    {"id": "fig7", "locations": ["external_mean", "current_mean"], "n_robust": 1, "w": [0.25, 0.5, 0.75]},
    {"id": "fig7_t", "locations": "external_mean", "form": "student_t", "df": 3, "k": 100, "w": 0.5}
  ]
})"},
      {"fig8", "sweet spot width, maximum power and its location over prior weight and sample size",
       R"({
  "schema_version": 1,
  "seed": 20250108,
  "defaults": {"analysis": "sweet_spot", "n_ext": 15, "locations": ["external_mean", "current_mean"],
               "n_robust": 1, "w": [0.25, 0.5, 0.75], "bias": {"from": -1, "to": 1, "step": 0.05}},
  "sweeps": [
    {"id": "fig8_n20", "n_t": 20, "n_c": 20, "theta1": 0.83},
    {"id": "fig8_n40", "n_t": 40, "n_c": 40, "theta1": 0.5891},
    {"id": "fig8_n10", "n_t": 10, "n_c": 10, "theta1": 1.1782}
  ]
})"},
      {"fig10", "average TIE and power over analysis-prior shift for three design priors",
       R"({
  "schema_version": 1,
  "seed": 20250110,
  "sweeps": [
    {"id": "fig10", "analysis": "average_oc", "n_t": 20, "n_c": 20, "n_ext": 15, "theta1": 0.83,
     "locations": ["external_mean", "current_mean"], "n_robust": 1, "w": 0.5,
     "design_priors": ["informative", "rmp", "unit_info"], "design_w": 0.5,
     "analysis_shift": {"from": -1, "to": 1, "step": 0.1}}
  ]
})"},
      {"table1", "maximum TIE and power gain when the bias is known to lie within +-delta",
       R"({
  "schema_version": 1,
  "seed": 20250111,
  "sweeps": [
    {"id": "table1", "analysis": "delta_table", "n_t": 20, "n_c": 20, "n_ext": 15, "theta1": 0.83,
     "locations": ["external_mean", "current_mean"], "n_robust": 1, "w": 0.5,
     "delta": [0.1, 0.2, 0.4, 0.5], "delta_steps": 20}
  ]
})"},
      {"a1_a5", "one-arm TIE, power and RMSE over the robust dispersion grid and three prior weights",
       R"({
  "schema_version": 1,
  "seed": 20250201,
  "sweeps": [
    {"id": "a1_a5", "analysis": "one_arm_oc", "n": 20, "n_ext": 15, "theta1": 0.5, "units": "sigma_ext",
     "locations": ["external_mean", "null_boundary", "current_mean"],
     "robust_variance": [400, 25, 4, 1, 0.5], "w": [0.25, 0.5, 0.75],
     "bias": {"from": -10, "to": 10, "step": 1}}
  ]
})"},
      {"a2", "one-arm TIE with a unit-information robust component at the null boundary for several current sizes",
       R"({
  "schema_version": 1,
  "seed": 20250202,
  "defaults": {"analysis": "one_arm_oc", "n_ext": 15, "theta1": 0.5, "units": "sigma_ext",
               "locations": "null_boundary", "n_robust": 1, "w": 0.5, "bias": {"from": -10, "to": 10, "step": 0.5}},
  "sweeps": [
    {"id": "a2_n5", "n": 5},
    {"id": "a2_n10", "n": 10},
    {"id": "a2_n20", "n": 20},
    {"id": "a2_n50", "n": 50},
    {"id": "a2_n100", "n": 100}
  ]
})"},
      {"a3_a4", "one-arm TIE and power for several ratios of current to external sample size",
       R"({
  "schema_version": 1,
  "seed": 20250203,
  "defaults": {"analysis": "one_arm_oc", "theta1": 0.5, "units": "sigma_ext",
               "locations": ["external_mean", "null_boundary", "current_mean"], "n_robust": 1, "w": 0.5,
               "bias": {"from": -10, "to": 10, "step": 0.5}},
  "sweeps": [
    {"id": "a3_n20_ext10", "n": 20, "n_ext": 10},
    {"id": "a3_n20_ext20", "n": 20, "n_ext": 20},
    {"id": "a3_n20_ext40", "n": 20, "n_ext": 40},
    {"id": "a3_n40_ext20", "n": 40, "n_ext": 20},
    {"id": "a3_n10_ext20", "n": 10, "n_ext": 20}
  ]
})"},
      {"a7", "one-arm TIE for t robust components with k normal pieces against the exact t",
       R"({
  "schema_version": 1,
  "seed": 20250207,
  "sweeps": [
    {"id": "a7", "analysis": "exact_t", "n": 20, "n_ext": 15, "theta1": 0.5, "units": "sigma_ext",
     "locations": "external_mean", "form": "student_t", "df": 3, "t_scale": 1, "w": 0.5,
     "k": [5, 10, 25, 50, 100, 200], "bias": {"from": 0, "to": 30, "step": 1}}
  ]
})"},
      {"a8", "one-arm TIE for t robust components with different scales, including the variance-matched scale",
       R"({
  "schema_version": 1,
  "seed": 20250208,
  "defaults": {"analysis": "one_arm_oc", "n": 20, "n_ext": 15, "theta1": 0.5, "units": "sigma_ext",
               "locations": "external_mean", "w": 0.5, "bias": {"from": -10, "to": 30, "step": 1}},
  "sweeps": [
    {"id": "a8_unit_normal", "n_robust": 1},
    {"id": "a8_t_scale_0.5", "form": "student_t", "df": 3, "t_scale": 0.5},
    {"id": "a8_t_scale_1", "form": "student_t", "df": 3, "t_scale": 1},
    {"id": "a8_t_scale_2", "form": "student_t", "df": 3, "t_scale": 2},
    {"id": "a8_t_matched", "form": "student_t", "df": 3, "t_scale_rule": "match_variance", "n_robust": 1}
  ]
})"},
      {"a13_a14", "hybrid-control TIE with the unit-information component also used as treatment-arm prior",
       R"({
  "schema_version": 1,
  "seed": 20250213,
  "defaults": {"analysis": "hybrid_oc", "n_ext": 15, "theta1": 0.83, "treatment_prior": "unit_info_external",
               "locations": ["external_mean", "current_mean"], "n_robust": 1, "w": [0.25, 0.5, 0.75],
               "bias": {"from": -3, "to": 3, "step": 0.1}},
  "sweeps": [
    {"id": "a13_balanced", "n_t": 20, "n_c": 20},
    {"id": "a14_unbalanced_t40", "n_t": 40, "n_c": 20},
    {"id": "a14_unbalanced_c40", "n_t": 20, "n_c": 40}
  ]
})"},
  };
  return all;
}

inline const Recipe* find_recipe(std::string_view name) {
  for (const auto& r : recipes()) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

}  // namespace rmp::cli
