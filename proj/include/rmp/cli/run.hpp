#pragma once

// Sweep execution and result emission. Every analysis produces rows of the
// fixed OC table plus optional analysis-specific summary tables.

#include <array>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rmp/cli/config.hpp"
#include "rmp/diagnostics.hpp"
#include "rmp/oc.hpp"

#ifndef RMP_BUILD_ID
#define RMP_BUILD_ID "unknown"
#endif

namespace rmp::cli {

struct OcRow {
  std::string scenario_id;
  std::string trial;
  std::string location;
  std::string form;
  double n_robust = 0.0;
  double w = 0.0;
  double bias = 0.0;
  std::optional<double> tie;
  std::optional<double> power;
  std::optional<double> power_calibrated;
  std::optional<double> rmse_std;
  std::optional<double> w_tilde;
  std::optional<double> obm;
  std::optional<std::uint64_t> reps;
  std::uint64_t seed = 0;
};

inline constexpr const char* kOcHeader =
    "scenario_id,trial,location,form,n_robust,w,bias,tie,power,power_calibrated,rmse_std,w_tilde,obm,reps,seed";

struct Table {
  std::string name;  // file suffix
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

struct SweepResult {
  std::string id;
  Analysis analysis = Analysis::OneArmOc;
  std::vector<OcRow> rows;
  std::vector<Table> tables;
  std::string summary;
  double wall_seconds = 0.0;
};

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt(const std::optional<double>& v) {
  return v && std::isfinite(*v) ? fmt(*v) : std::string();
}

inline std::string csv_line(const OcRow& r) {
  std::string s = r.scenario_id + "," + r.trial + "," + r.location + ",\"" + r.form + "\"," + fmt(r.n_robust) + "," +
                  fmt(r.w) + "," + fmt(r.bias) + "," + fmt(r.tie) + "," + fmt(r.power) + "," +
                  fmt(r.power_calibrated) + "," + fmt(r.rmse_std) + "," + fmt(r.w_tilde) + "," + fmt(r.obm) + ",";
  if (r.reps) s += std::to_string(*r.reps);
  s += "," + std::to_string(r.seed);
  return s;
}

namespace detail {

inline LocationPolicy make_location(LocationKind k, double theta0) {
  switch (k) {
    case LocationKind::ExternalMean: return ExternalMean{};
    case LocationKind::NullBoundary: return NullBoundary{theta0};
    case LocationKind::CurrentMean: return CurrentMean{};
  }
  return ExternalMean{};
}

inline MixturePriorSpec make_prior(const Sweep& s, LocationKind loc, const Dispersion& d, int k, double w) {
  MixturePriorSpec p;
  p.w = w;
  p.external = SufficientStat(s.ybar_ext, s.n_ext, s.sigma);
  p.location = make_location(loc, s.theta0);
  p.n_robust = d.n_robust;
  p.robust_variance = d.variance;
  if (s.student_t) {
    const double var = p.robust_variance_value();
    double scale = 0.0;
    if (s.t_scale) {
      scale = *s.t_scale;
    } else if (s.t_scale_rule == ScaleRule::MatchVariance) {
      scale = t_scale_matching_variance(s.df, var);
    } else {
      scale = t_scale_from_unit_information(var, s.t_scale_rule == ScaleRule::ScaleSquaredIsVariance
                                                     ? TScaleReading::ScaleSquaredIsVariance
                                                     : TScaleReading::ScaleIsVariance);
    }
    p.form = StudentT{s.df, scale, k};
  }
  return p;
}

inline OneArmScenario make_one_arm(const Sweep& s, const MixturePriorSpec& prior) {
  OneArmScenario o;
  o.id = s.id;
  o.theta0 = s.theta0;
  o.theta1 = s.effect();
  o.n = s.n;
  o.sigma = s.sigma;
  o.prior = prior;
  o.alpha = s.alpha;
  o.reps = s.reps;
  o.seed = s.seed;
  return o;
}

inline HybridScenario make_hybrid(const Sweep& s, const MixturePriorSpec& prior) {
  HybridScenario h;
  h.id = s.id;
  h.n_t = s.n_t;
  h.n_c = s.n_c;
  h.sigma = s.sigma;
  h.prior = prior;
  h.treatment_prior = s.treatment_prior;
  h.alpha = s.alpha;
  h.theta1 = s.effect();
  h.reps = s.reps;
  h.seed = s.seed;
  return h;
}

inline std::vector<int> k_axis(const Sweep& s) { return s.student_t ? s.k : std::vector<int>{0}; }

struct Cell {
  LocationKind location;
  Dispersion dispersion;
  int k;
  double w;
};

// Location x dispersion x k x w, in that nesting order.
inline std::vector<Cell> prior_cells(const Sweep& s) {
  std::vector<Cell> out;
  for (auto loc : s.locations)
    for (const auto& d : s.dispersions)
      for (int k : k_axis(s))
        for (double w : s.w) out.push_back({loc, d, k, w});
  return out;
}

inline OcRow base_row(const Sweep& s, const MixturePriorSpec& p) {
  OcRow r;
  r.scenario_id = s.id;
  r.trial = is_hybrid(s.analysis) ? "hybrid" : "one_arm";
  r.location = location_name(p.location);
  r.form = form_name(p.form);
  r.n_robust = s.sigma * s.sigma / p.robust_variance_value();
  r.w = p.w;
  r.seed = s.seed;
  return r;
}

inline std::optional<double> calibrated(double tie, const std::function<double(double)>& f) {
  if (!(tie > 0.0)) return std::nullopt;
  return f(tie);
}

inline std::vector<double> scaled(const std::vector<double>& v, double unit) {
  std::vector<double> out;
  out.reserve(v.size());
  for (double x : v) out.push_back(x * unit);
  return out;
}

}  // namespace detail

// Number of table rows and Monte Carlo replications a sweep will use. The
// sweet-spot count excludes endpoint refinement, whose length is data driven.
struct CostEstimate {
  std::uint64_t cells = 0;
  std::uint64_t mc_reps = 0;
};

inline CostEstimate estimate_cost(const Sweep& s) {
  const auto priors = detail::prior_cells(s).size();
  const std::uint64_t nb = s.bias.size();
  CostEstimate c;
  switch (s.analysis) {
    case Analysis::OneArmOc:
    case Analysis::HybridOc:
      c.cells = priors * nb;
      c.mc_reps = 2 * c.cells * s.reps;
      break;
    case Analysis::WeightPropagation:
      c.cells = priors * nb;
      c.mc_reps = c.cells * s.reps;
      break;
    case Analysis::SweetSpot:
      c.cells = priors * nb;
      c.mc_reps = 2 * c.cells * s.reps;
      break;
    case Analysis::Bimodality:
      c.cells = priors * nb;
      break;
    case Analysis::ExactT:
      c.cells = 2 * priors * nb;
      break;
    case Analysis::DeltaTable:
      c.cells = priors * s.delta.size() * static_cast<std::uint64_t>(2 * s.delta_steps + 1);
      c.mc_reps = 2 * c.cells * s.reps;
      break;
    case Analysis::AverageOc:
      c.cells = priors * s.design_priors.size() * s.analysis_shift.size();
      c.mc_reps = 2 * c.cells * s.reps;
      break;
  }
  return c;
}

// Rejects combinations the engine would refuse, before anything runs.
inline void validate_sweep(const Sweep& s) {
  for (const auto& c : detail::prior_cells(s)) {
    const auto p = detail::make_prior(s, c.location, c.dispersion, c.k, c.w);
    try {
      p.validate();
      if (is_hybrid(s.analysis)) {
        detail::make_hybrid(s, p).validate();
      } else {
        detail::make_one_arm(s, p).validate();
      }
    } catch (const InvalidArgument& e) {
      throw ConfigError(s.path + "." + e.field() + ": " + e.what());
    }
  }
}

inline SweepResult run_sweep(const Sweep& s, const Exec& exec) {
  validate_sweep(s);
  const auto t0 = std::chrono::steady_clock::now();
  SweepResult res;
  res.id = s.id;
  res.analysis = s.analysis;
  const double unit = s.scale_unit();
  const auto bias = detail::scaled(s.bias, unit);
  const auto cells = detail::prior_cells(s);

  switch (s.analysis) {
    case Analysis::OneArmOc: {
      for (const auto& c : cells) {
        const auto p = detail::make_prior(s, c.location, c.dispersion, c.k, c.w);
        const auto sc = detail::make_one_arm(s, p);
        for (double b : bias) {
          const auto null = one_arm_simulate(sc, b, sc.theta0, exec);
          const auto alt = one_arm_simulate(sc, b, sc.theta1, exec);
          auto r = detail::base_row(s, p);
          r.bias = b;
          r.tie = null.reject_rate;
          r.power = alt.reject_rate;
          r.power_calibrated = detail::calibrated(null.reject_rate, [&](double t) { return calibrated_power_no_borrowing(t, sc); });
          r.rmse_std = null.rmse / sc.standard_error();
          r.w_tilde = null.w_tilde_mean;
          r.reps = s.reps;
          res.rows.push_back(r);
        }
      }
      break;
    }
    case Analysis::HybridOc: {
      for (const auto& c : cells) {
        const auto p = detail::make_prior(s, c.location, c.dispersion, c.k, c.w);
        const auto sc = detail::make_hybrid(s, p);
        for (double b : bias) {
          const auto null = hybrid_simulate(sc, b, 0.0, exec);
          const auto alt = hybrid_simulate(sc, b, sc.theta1, exec);
          auto r = detail::base_row(s, p);
          r.bias = b;
          r.tie = null.reject_rate;
          r.power = alt.reject_rate;
          r.power_calibrated = detail::calibrated(null.reject_rate, [&](double t) { return calibrated_power_no_borrowing(t, sc); });
          r.w_tilde = null.w_tilde_mean;
          r.reps = s.reps;
          res.rows.push_back(r);
        }
      }
      break;
    }
    case Analysis::Bimodality: {
      for (auto loc : s.locations) {
        for (const auto& d : s.dispersions) {
          const auto p = detail::make_prior(s, loc, d, 0, 0.5);
          BimodalityGrid g{p, s.n, s.theta0, s.w, bias};
          const auto map = bimodality_map(g, exec);
          for (std::size_t i = 0; i < s.w.size(); ++i) {
            for (std::size_t j = 0; j < bias.size(); ++j) {
              auto r = detail::base_row(s, p);
              r.w = s.w[i];
              r.bias = bias[j];
              r.obm = map[i][j];
              res.rows.push_back(r);
            }
          }
        }
      }
      break;
    }
    case Analysis::WeightPropagation: {
      Table t{"weights", {"location", "form", "n_robust", "w", "bias", "w_tilde_mc", "w_tilde_expected_data"}, {}};
      for (auto loc : s.locations) {
        for (const auto& d : s.dispersions) {
          for (int k : detail::k_axis(s)) {
            const auto p = detail::make_prior(s, loc, d, k, 0.5);
            const auto sc = detail::make_one_arm(s, p);
            const auto wp = weight_propagation(sc, s.w, bias, exec);
            for (std::size_t i = 0; i < s.w.size(); ++i) {
              for (std::size_t j = 0; j < bias.size(); ++j) {
                auto r = detail::base_row(s, p);
                r.w = s.w[i];
                r.bias = bias[j];
                r.w_tilde = wp.mc_mean[i][j];
                r.reps = s.reps;
                res.rows.push_back(r);
                t.rows.push_back({r.location, r.form, fmt(r.n_robust), fmt(r.w), fmt(r.bias), fmt(wp.mc_mean[i][j]),
                                  fmt(wp.at_expected_data[i][j])});
              }
            }
          }
        }
      }
      res.tables.push_back(std::move(t));
      break;
    }
    case Analysis::SweetSpot: {
      Table t{"sweet_spot",
              {"location", "form", "n_robust", "w", "empty", "contiguous", "lower", "upper", "width", "max_power",
               "argmax_bias", "baseline_power", "max_gain"},
              {}};
      for (const auto& c : cells) {
        const auto p = detail::make_prior(s, c.location, c.dispersion, c.k, c.w);
        auto sc = detail::make_hybrid(s, p);
        sc.bias_grid = bias;
        const auto spot = sweet_spot(sc, exec);
        for (const auto& pt : spot.curve) {
          auto r = detail::base_row(s, p);
          r.bias = pt.bias;
          r.tie = pt.tie;
          r.power = pt.power;
          r.power_calibrated = spot.baseline_power;
          r.reps = s.reps;
          res.rows.push_back(r);
        }
        const auto r = detail::base_row(s, p);
        auto opt = [&](double v) { return spot.empty ? std::string() : fmt(v); };
        t.rows.push_back({r.location, r.form, fmt(r.n_robust), fmt(r.w), spot.empty ? "true" : "false",
                          spot.contiguous ? "true" : "false", opt(spot.lower), opt(spot.upper), fmt(spot.width()),
                          opt(spot.max_power), opt(spot.argmax_bias), fmt(spot.baseline_power), fmt(spot.max_gain())});
      }
      res.tables.push_back(std::move(t));
      break;
    }
    case Analysis::DeltaTable: {
      Table t{"summary",
              {"delta", "location", "max_tie_pct", "max_gain_pct", "form", "n_robust", "w", "max_tie", "max_power",
               "argmax_bias", "calibrated_power"},
              {}};
      for (const auto& c : cells) {
        const auto p = detail::make_prior(s, c.location, c.dispersion, c.k, c.w);
        const auto sc = detail::make_hybrid(s, p);
        for (double delta : s.delta) {
          const double d_abs = delta * unit;
          const auto sum = delta_restricted_summary(sc, d_abs, exec, s.delta_steps);
          for (const auto& pt : sum.curve) {
            auto r = detail::base_row(s, p);
            r.bias = pt.bias;
            r.tie = pt.tie;
            r.power = pt.power;
            r.power_calibrated = sum.calibrated_power;
            r.reps = s.reps;
            res.rows.push_back(r);
          }
          const auto r = detail::base_row(s, p);
          t.rows.push_back({fmt(d_abs), r.location, fmt(100.0 * sum.max_tie), fmt(100.0 * sum.max_power_gain), r.form,
                            fmt(r.n_robust), fmt(r.w), fmt(sum.max_tie), fmt(sum.max_power), fmt(sum.argmax_bias),
                            fmt(sum.calibrated_power)});
        }
      }
      res.tables.push_back(std::move(t));
      break;
    }
    case Analysis::AverageOc: {
      Table t{"average", {"design_prior", "location", "form", "n_robust", "w", "analysis_shift", "average_tie",
                          "average_power"}, {}};
      const auto shifts = detail::scaled(s.analysis_shift, unit);
      for (const auto& c : cells) {
        const auto p = detail::make_prior(s, c.location, c.dispersion, c.k, c.w);
        const auto sc = detail::make_hybrid(s, p);
        for (auto dk : s.design_priors) {
          const DesignPrior design = dk == DesignKind::Informative ? DesignPrior::informative(sc)
                                     : dk == DesignKind::Rmp       ? DesignPrior::rmp(sc, s.design_w)
                                                                   : DesignPrior::unit_info(sc);
          for (double shift : shifts) {
            const auto tie = hybrid_simulate(sc, 0.0, 0.0, exec, &design, shift);
            const auto pow = hybrid_simulate(sc, 0.0, sc.theta1, exec, &design, shift);
            auto r = detail::base_row(s, p);
            r.scenario_id = s.id + ":" + design_name(dk);
            r.bias = shift;
            r.tie = tie.reject_rate;
            r.power = pow.reject_rate;
            r.w_tilde = tie.w_tilde_mean;
            r.reps = s.reps;
            res.rows.push_back(r);
            t.rows.push_back({design_name(dk), r.location, r.form, fmt(r.n_robust), fmt(r.w), fmt(shift),
                              fmt(tie.reject_rate), fmt(pow.reject_rate)});
          }
        }
      }
      res.tables.push_back(std::move(t));
      break;
    }
    case Analysis::ExactT: {
      Table t{"exact_t", {"location", "form", "n_robust", "w", "bias", "tie_mixture", "tie_exact", "abs_diff"}, {}};
      for (const auto& c : cells) {
        const auto p = detail::make_prior(s, c.location, c.dispersion, c.k, c.w);
        const auto sc = detail::make_one_arm(s, p);
        const auto& tf = std::get<StudentT>(p.form);
        char exact_name[64];
        std::snprintf(exact_name, sizeof exact_name, "student_t_exact(df=%g,scale=%g)", tf.df, tf.scale);
        std::vector<std::array<double, 4>> vals(bias.size());
        parallel_for(bias.size(), exec, [&](std::size_t j) {
          const auto mix = one_arm_rejection_region(sc, bias[j]);
          const auto ex = one_arm_exact_t_region(sc, bias[j]);
          const double se = sc.standard_error();
          vals[j] = {region_probability(mix, sc.theta0, se), region_probability(mix, sc.theta1, se),
                     region_probability(ex, sc.theta0, se), region_probability(ex, sc.theta1, se)};
        });
        for (std::size_t j = 0; j < bias.size(); ++j) {
          auto r = detail::base_row(s, p);
          r.bias = bias[j];
          r.tie = vals[j][0];
          r.power = vals[j][1];
          res.rows.push_back(r);
          r.form = exact_name;
          r.tie = vals[j][2];
          r.power = vals[j][3];
          res.rows.push_back(r);
          t.rows.push_back({r.location, form_name(p.form), fmt(r.n_robust), fmt(r.w), fmt(bias[j]), fmt(vals[j][0]),
                            fmt(vals[j][2]), fmt(std::abs(vals[j][0] - vals[j][2]))});
        }
      }
      res.tables.push_back(std::move(t));
      break;
    }
  }

  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  char line[160];
  std::snprintf(line, sizeof line, "%s [%s]: %zu rows, reps %llu, %.2f s", s.id.c_str(), analysis_name(s.analysis),
                res.rows.size(), static_cast<unsigned long long>(s.reps), res.wall_seconds);
  res.summary = line;
  return res;
}

inline void write_table(const std::filesystem::path& path, const Table& t) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (std::size_t i = 0; i < t.header.size(); ++i) out << (i ? "," : "") << t.header[i];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      const bool quote = row[i].find(',') != std::string::npos;
      out << (i ? "," : "") << (quote ? "\"" + row[i] + "\"" : row[i]);
    }
    out << '\n';
  }
  if (!out) throw Error("write failed for " + path.string());
}

struct RunOutcome {
  std::vector<SweepResult> results;
  std::filesystem::path csv;
  std::filesystem::path sidecar;
};

// Runs every sweep in order and writes oc_rows.csv, one CSV per summary table
// and run.json (metadata that varies between runs lives only there).
inline RunOutcome run_scenario(const ScenarioFile& file, const std::filesystem::path& out_dir, const Exec& exec,
                               std::ostream& log) {
  for (const auto& s : file.sweeps) validate_sweep(s);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error("cannot create output directory " + out_dir.string() + ": " + ec.message());

  const auto started = std::chrono::system_clock::now();
  const auto t0 = std::chrono::steady_clock::now();
  RunOutcome outcome;
  for (const auto& s : file.sweeps) {
    outcome.results.push_back(run_sweep(s, exec));
    log << outcome.results.back().summary << '\n';
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  outcome.csv = out_dir / "oc_rows.csv";
  {
    std::ofstream out(outcome.csv);
    if (!out) throw Error("cannot write " + outcome.csv.string());
    out << kOcHeader << '\n';
    for (const auto& r : outcome.results)
      for (const auto& row : r.rows) out << csv_line(row) << '\n';
    if (!out) throw Error("write failed for " + outcome.csv.string());
  }

  json meta;
  meta["schema_version"] = file.schema_version;
  meta["build_id"] = RMP_BUILD_ID;
  meta["seed"] = file.seed;
  meta["threads"] = exec.resolved_threads();
  const std::time_t tt = std::chrono::system_clock::to_time_t(started);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
  meta["started_utc"] = stamp;
  meta["wall_seconds"] = wall;
  meta["oc_rows"] = outcome.csv.filename().string();
  meta["sweeps"] = json::array();
  for (const auto& r : outcome.results) {
    const auto& s = file.sweeps[static_cast<std::size_t>(&r - outcome.results.data())];
    json js{{"id", r.id},
            {"analysis", analysis_name(r.analysis)},
            {"reps", s.reps},
            {"rows", r.rows.size()},
            {"bias_units", s.units == Units::SigmaExt ? "sigma_ext" : "absolute"},
            {"wall_seconds", r.wall_seconds},
            {"tables", json::array()}};
    for (const auto& t : r.tables) {
      const auto name = r.id + "_" + t.name + ".csv";
      write_table(out_dir / name, t);
      json tj{{"file", name}, {"columns", t.header}, {"rows", json::array()}};
      for (const auto& row : t.rows) tj["rows"].push_back(row);
      js["tables"].push_back(tj);
    }
    meta["sweeps"].push_back(js);
  }
  outcome.sidecar = out_dir / "run.json";
  std::ofstream side(outcome.sidecar);
  if (!side) throw Error("cannot write " + outcome.sidecar.string());
  side << meta.dump(2) << '\n';
  return outcome;
}

}  // namespace rmp::cli
