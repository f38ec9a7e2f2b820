#pragma once

// Frequentist and prior-averaged operating characteristics of the robust
// mixture prior in one-arm and hybrid-control trials.
//
// Monte Carlo estimates use common random numbers: a replication's standard
// normal draws depend only on (seed, scenario id, replication), never on the
// bias, the prior weight or the robust component, so curves over those axes
// are smooth and their differences have low variance.
//
// Sign conventions: in the one-arm trial the external mean is theta0 + bias;
// in the hybrid trial the true control mean is ybar_ext + bias. In both, a
// positive bias means the external data favour the alternative.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rmp/diagnostics.hpp"
#include "rmp/distcore.hpp"
#include "rmp/error.hpp"
#include "rmp/inference.hpp"
#include "rmp/parallel.hpp"
#include "rmp/priors.hpp"
#include "rmp/rng.hpp"

namespace rmp {

inline double mc_standard_error(double p, std::uint64_t reps) noexcept {
  return std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(reps));
}

// Power of a one-sided z-test at significance `level` for a standardized
// effect (effect / standard error of the difference).
inline double z_test_power(double standardized_effect, double level) {
  if (level >= 1.0) return 1.0;
  if (level <= 0.0) return 0.0;
  return std_normal_cdf(standardized_effect - std_normal_quantile(1.0 - level));
}

// ---------------------------------------------------------------------------
// One-arm trial

struct OneArmScenario {
  std::string id = "one_arm";
  double theta0 = 0.0;
  double theta1 = 0.5;
  int n = 20;
  double sigma = 1.0;
  // external.mean is ignored; it is theta0 + bias for each evaluated bias.
  MixturePriorSpec prior{};
  double alpha = 0.025;
  std::uint64_t reps = 1'000'000;
  std::uint64_t seed = 1;
  std::vector<double> bias_grid;

  void validate() const {
    prior.validate();
    detail::require(std::isfinite(theta0), "theta0", "must be finite");
    detail::require(theta1 > theta0, "theta1", "must exceed theta0");
    detail::require(n >= 1, "n", "must be >= 1");
    detail::require(sigma > 0.0, "sigma", "must be > 0");
    detail::require(alpha > 0.0 && alpha < 1.0, "alpha", "must lie in (0, 1)");
    detail::require(reps >= 1, "reps", "must be >= 1");
  }

  double standard_error() const { return sigma / std::sqrt(static_cast<double>(n)); }
  double sigma_ext() const { return sigma / std::sqrt(static_cast<double>(prior.external.n())); }

  MixturePriorSpec prior_at(double bias) const {
    MixturePriorSpec s = prior;
    s.external = SufficientStat(theta0 + bias, prior.external.n(), sigma);
    return s;
  }

  std::uint64_t stream() const noexcept { return stream_key(id); }
};

struct OneArmMc {
  double reject_rate = 0.0;
  double standard_error = 0.0;
  double w_tilde_mean = 0.0;
  double rmse = 0.0;
  std::uint64_t reps = 0;
};

namespace detail {

struct OneArmAccum {
  std::uint64_t count = 0;
  std::uint64_t rejections = 0;
  double sum_w = 0.0;
  double sum_sq = 0.0;
  OneArmAccum& operator+=(const OneArmAccum& o) {
    count += o.count;
    rejections += o.rejections;
    sum_w += o.sum_w;
    sum_sq += o.sum_sq;
    return *this;
  }
};

}  // namespace detail

// Monte Carlo over ybar ~ N(theta_true, sigma^2/n) at one bias.
inline OneArmMc one_arm_simulate(const OneArmScenario& s, double bias, double theta_true, const Exec& exec = {}) {
  s.validate();
  const auto spec = s.prior_at(bias);
  const double se = s.standard_error();
  const CounterRng rng(s.seed, s.stream());
  auto acc = parallel_reduce<detail::OneArmAccum>(s.reps, exec, [&](std::uint64_t b, std::uint64_t e) {
    PosteriorKernel kernel(spec, se * se);
    detail::OneArmAccum a;
    for (std::uint64_t r = b; r < e; ++r) {
      const double ybar = theta_true + se * rng.normal(r, 0);
      kernel.update(ybar);
      a.rejections += kernel.tail(s.theta0) <= s.alpha;
      a.sum_w += kernel.w_informative();
      const double err = kernel.mean() - theta_true;
      a.sum_sq += err * err;
      ++a.count;
    }
    return a;
  });
  OneArmMc out;
  out.reps = acc.count;
  out.reject_rate = static_cast<double>(acc.rejections) / static_cast<double>(acc.count);
  out.standard_error = mc_standard_error(out.reject_rate, acc.count);
  out.w_tilde_mean = acc.sum_w / static_cast<double>(acc.count);
  out.rmse = std::sqrt(acc.sum_sq / static_cast<double>(acc.count));
  return out;
}

inline double one_arm_tie(const OneArmScenario& s, double bias, const Exec& exec = {}) {
  return one_arm_simulate(s, bias, s.theta0, exec).reject_rate;
}

inline double one_arm_power(const OneArmScenario& s, double bias, const Exec& exec = {}) {
  return one_arm_simulate(s, bias, s.theta1, exec).reject_rate;
}

struct Rmse {
  double rmse;
  double standardized;
};

// RMSE of the posterior mean, and its ratio to the RMSE sigma/sqrt(n) of the
// maximum likelihood estimate.
inline Rmse one_arm_rmse(const OneArmScenario& s, double bias, double theta_true, const Exec& exec = {}) {
  const double r = one_arm_simulate(s, bias, theta_true, exec).rmse;
  return {r, r / s.standard_error()};
}

struct RegionOptions {
  int scan_points = 4000;
  // Half-width of the sample-mean scan window in standard errors.
  double half_width = 12.0;
};

// {x in [lo, hi] : tail(x) <= alpha} from a sign scan refined by root search.
// Intervals touching the window edges are extended to infinity.
template <class TailFn>
std::vector<Interval> rejection_region(TailFn&& tail, double alpha, double lo, double hi, int points) {
  detail::require(points >= 2, "scan_points", "must be >= 2");
  auto h = [&](double x) { return tail(x) - alpha; };
  std::vector<Interval> out;
  const double step = (hi - lo) / (points - 1);
  double prev_x = lo;
  double prev_h = h(lo);
  std::optional<double> open;
  if (prev_h <= 0.0) open = -std::numeric_limits<double>::infinity();
  for (int i = 1; i < points; ++i) {
    const double x = (i == points - 1) ? hi : lo + i * step;
    const double hx = h(x);
    if ((prev_h <= 0.0) != (hx <= 0.0)) {
      const double root = detail::find_root(h, prev_x, x, {.xtol = 1e-12 * std::max(1.0, std::abs(x)), .ftol = 0.0, .max_iter = 400});
      if (hx <= 0.0) {
        open = root;
      } else {
        out.push_back({*open, root});
        open.reset();
      }
    }
    prev_x = x;
    prev_h = hx;
  }
  if (open) out.push_back({*open, std::numeric_limits<double>::infinity()});
  return out;
}

// Probability that N(mean, sd^2) falls in the union of intervals.
inline double region_probability(const std::vector<Interval>& region, double mean, double sd) noexcept {
  double p = 0.0;
  for (const auto& iv : region) {
    const double a = (iv.lo - mean) / sd;
    const double b = (iv.hi - mean) / sd;
    // Difference of upper tails for intervals right of the mean keeps precision.
    p += (a > 0.0) ? std_normal_sf(a) - std_normal_sf(b) : std_normal_cdf(b) - std_normal_cdf(a);
  }
  return std::clamp(p, 0.0, 1.0);
}

// Sample means leading to rejection. The decision depends on the data only
// through ybar, so TIE and power follow from Gaussian interval probabilities.
inline std::vector<Interval> one_arm_rejection_region(const OneArmScenario& s, double bias, RegionOptions opt = {}) {
  s.validate();
  const double se = s.standard_error();
  PosteriorKernel kernel(s.prior_at(bias), se * se);
  auto tail = [&](double ybar) {
    kernel.update(ybar);
    return kernel.tail(s.theta0);
  };
  return rejection_region(tail, s.alpha, s.theta0 - opt.half_width * se, s.theta0 + opt.half_width * se,
                          opt.scan_points);
}

inline double one_arm_tie_deterministic(const OneArmScenario& s, double bias, RegionOptions opt = {}) {
  return region_probability(one_arm_rejection_region(s, bias, opt), s.theta0, s.standard_error());
}

inline double one_arm_power_deterministic(const OneArmScenario& s, double bias, RegionOptions opt = {}) {
  return region_probability(one_arm_rejection_region(s, bias, opt), s.theta1, s.standard_error());
}

// Rejection region when the robust component is an exact Student-t, with the
// tail probability from quadrature.
inline std::vector<Interval> one_arm_exact_t_region(const OneArmScenario& s, double bias,
                                                    RegionOptions opt = {.scan_points = 600, .half_width = 12.0}) {
  s.validate();
  const auto spec = s.prior_at(bias);
  const double se = s.standard_error();
  auto tail = [&](double ybar) { return exact_t_tail_oracle(spec, SufficientStat(ybar, s.n, s.sigma), s.theta0); };
  return rejection_region(tail, s.alpha, s.theta0 - opt.half_width * se, s.theta0 + opt.half_width * se,
                          opt.scan_points);
}

inline double one_arm_exact_t_tie(const OneArmScenario& s, double bias,
                                  RegionOptions opt = {.scan_points = 600, .half_width = 12.0}) {
  return region_probability(one_arm_exact_t_region(s, bias, opt), s.theta0, s.standard_error());
}

// Closed-form power of the test without borrowing, run at significance level
// max_tie.
inline double calibrated_power_no_borrowing(double max_tie, const OneArmScenario& s) {
  detail::require(max_tie > 0.0 && max_tie <= 1.0, "max_tie", "must lie in (0, 1]");
  return z_test_power((s.theta1 - s.theta0) / s.standard_error(), max_tie);
}

// ---------------------------------------------------------------------------
// Hybrid-control trial

struct HybridScenario {
  std::string id = "hybrid";
  int n_t = 20;
  int n_c = 20;
  double sigma = 1.0;
  // Control-arm prior; external.mean is the fixed observed external control mean.
  MixturePriorSpec prior{};
  TreatmentPrior treatment_prior = TreatmentPrior::Flat;
  double alpha = 0.025;
  // Treatment effect theta_t - theta_c at which power is evaluated.
  double theta1 = 0.83;
  std::uint64_t reps = 1'000'000;
  std::uint64_t seed = 1;
  std::vector<double> bias_grid;
  std::vector<double> analysis_shift_grid;

  void validate() const {
    prior.validate();
    detail::require(!std::holds_alternative<NullBoundary>(prior.location), "location",
                    "the null boundary is not a point in the hybrid-control design");
    detail::require(n_t >= 1 && n_c >= 1, "n_t/n_c", "arm sizes must be >= 1");
    detail::require(sigma > 0.0, "sigma", "must be > 0");
    detail::require(std::abs(prior.external.sigma() - sigma) <= 1e-12 * sigma, "sigma",
                    "external data must share the endpoint sd");
    detail::require(theta1 > 0.0, "theta1", "effect must be > 0");
    detail::require(alpha > 0.0 && alpha < 1.0, "alpha", "must lie in (0, 1)");
    detail::require(reps >= 1, "reps", "must be >= 1");
  }

  double external_mean() const noexcept { return prior.external.mean(); }
  double theta_c_at(double bias) const noexcept { return external_mean() + bias; }
  double se_c() const { return sigma / std::sqrt(static_cast<double>(n_c)); }
  double se_t() const { return sigma / std::sqrt(static_cast<double>(n_t)); }
  double sigma_ext() const { return sigma / std::sqrt(static_cast<double>(prior.external.n())); }
  double treatment_prior_variance() const {
    return std::holds_alternative<NormalForm>(prior.form) ? prior.robust_variance_value()
                                                          : unit_information_variance(sigma);
  }
  std::uint64_t stream() const noexcept { return stream_key(id); }
};

// Distribution of the true control mean used to average operating
// characteristics over parameter uncertainty. A zero sd is a point mass.
struct DesignPrior {
  std::string name;
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> sds;

  static DesignPrior informative(const HybridScenario& s) {
    return {"Informative", {1.0}, {s.external_mean()}, {s.prior.external.standard_error()}};
  }
  static DesignPrior rmp(const HybridScenario& s, double w = 0.5) {
    detail::require(w >= 0.0 && w <= 1.0, "w", "design weight must lie in [0, 1]");
    return {"RMP",
            {w, 1.0 - w},
            {s.external_mean(), s.external_mean()},
            {s.prior.external.standard_error(), std::sqrt(s.treatment_prior_variance())}};
  }
  static DesignPrior unit_info(const HybridScenario& s) {
    return {"UnitInfo", {1.0}, {s.external_mean()}, {std::sqrt(s.treatment_prior_variance())}};
  }
  static DesignPrior point(double theta_c) { return {"Point", {1.0}, {theta_c}, {0.0}}; }

  // Slots 2 and 3 of the replication stream; slots 0 and 1 carry the data.
  double sample(const CounterRng& rng, std::uint64_t r) const {
    std::size_t j = 0;
    if (weights.size() > 1) {
      const double u = rng.uniform(r, 3);
      double c = 0.0;
      for (j = 0; j + 1 < weights.size(); ++j) {
        c += weights[j];
        if (u < c) break;
      }
    }
    return sds[j] > 0.0 ? means[j] + sds[j] * rng.normal(r, 2) : means[j];
  }
};

struct HybridMc {
  double reject_rate = 0.0;
  double standard_error = 0.0;
  double w_tilde_mean = 0.0;
  std::uint64_t reps = 0;
};

namespace detail {

struct HybridAccum {
  std::uint64_t count = 0;
  std::uint64_t rejections = 0;
  double sum_w = 0.0;
  HybridAccum& operator+=(const HybridAccum& o) {
    count += o.count;
    rejections += o.rejections;
    sum_w += o.sum_w;
    return *this;
  }
};

}  // namespace detail

// Monte Carlo of the hybrid decision. The control mean is ybar_ext + bias, or a
// draw from `design` when given; the analysis prior's external mean is moved
// down by `analysis_shift`, so a positive shift favours the alternative.
inline HybridMc hybrid_simulate(const HybridScenario& s, double bias, double effect, const Exec& exec = {},
                                const DesignPrior* design = nullptr, double analysis_shift = 0.0) {
  s.validate();
  const double ext_analysis = s.external_mean() - analysis_shift;
  const auto spec = s.prior.with_external_mean(ext_analysis);
  const double se_c = s.se_c();
  const double se_t = s.se_t();
  const double vt_data = se_t * se_t;
  const bool flat = s.treatment_prior == TreatmentPrior::Flat;
  const double v0 = s.treatment_prior_variance();
  const double vt_post = flat ? vt_data : v0 * vt_data / (v0 + vt_data);
  const double shrink_t = flat ? 1.0 : v0 / (v0 + vt_data);
  const CounterRng rng(s.seed, s.stream());
  const double theta_fixed = s.theta_c_at(bias);

  auto acc = parallel_reduce<detail::HybridAccum>(s.reps, exec, [&](std::uint64_t b, std::uint64_t e) {
    PosteriorKernel kernel(spec, se_c * se_c);
    detail::HybridAccum a;
    for (std::uint64_t r = b; r < e; ++r) {
      const double theta_c = design ? design->sample(rng, r) : theta_fixed;
      const double yc = theta_c + se_c * rng.normal(r, 0);
      const double yt = theta_c + effect + se_t * rng.normal(r, 1);
      kernel.update(yc);
      const double mt = ext_analysis + shrink_t * (yt - ext_analysis);
      a.rejections += kernel.prob_t_not_better(mt, vt_post) <= s.alpha;
      a.sum_w += kernel.w_informative();
      ++a.count;
    }
    return a;
  });
  HybridMc out;
  out.reps = acc.count;
  out.reject_rate = static_cast<double>(acc.rejections) / static_cast<double>(acc.count);
  out.standard_error = mc_standard_error(out.reject_rate, acc.count);
  out.w_tilde_mean = acc.sum_w / static_cast<double>(acc.count);
  return out;
}

inline double hybrid_tie(const HybridScenario& s, double bias, const Exec& exec = {}) {
  return hybrid_simulate(s, bias, 0.0, exec).reject_rate;
}

inline double hybrid_power(const HybridScenario& s, double bias, const Exec& exec = {}) {
  return hybrid_simulate(s, bias, s.theta1, exec).reject_rate;
}

inline double calibrated_power_no_borrowing(double max_tie, const HybridScenario& s) {
  detail::require(max_tie > 0.0 && max_tie <= 1.0, "max_tie", "must lie in (0, 1]");
  const double se_diff = s.sigma * std::sqrt(1.0 / s.n_t + 1.0 / s.n_c);
  return z_test_power(s.theta1 / se_diff, max_tie);
}

inline double average_tie(const HybridScenario& s, const DesignPrior& design, double analysis_shift,
                          const Exec& exec = {}) {
  return hybrid_simulate(s, 0.0, 0.0, exec, &design, analysis_shift).reject_rate;
}

inline double average_power(const HybridScenario& s, const DesignPrior& design, double analysis_shift,
                            const Exec& exec = {}) {
  return hybrid_simulate(s, 0.0, s.theta1, exec, &design, analysis_shift).reject_rate;
}

struct BiasPoint {
  double bias;
  double tie;
  double power;
};

struct SweetSpot {
  double lower = 0.0;
  double upper = 0.0;
  double max_power = 0.0;
  double argmax_bias = 0.0;
  bool empty = true;
  // False when the feasible grid points do not form one run; the reported
  // interval is then the run holding the largest power.
  bool contiguous = true;
  double baseline_power = 0.0;
  // TIE and power on the sorted bias grid.
  std::vector<BiasPoint> curve;
  double max_gain() const noexcept { return empty ? 0.0 : max_power - baseline_power; }
  double width() const noexcept { return empty ? 0.0 : upper - lower; }
};

inline std::vector<BiasPoint> hybrid_curve(const HybridScenario& s, const std::vector<double>& biases,
                                           const Exec& exec = {}) {
  std::vector<BiasPoint> out;
  out.reserve(biases.size());
  for (double b : biases) out.push_back({b, hybrid_tie(s, b, exec), hybrid_power(s, b, exec)});
  return out;
}

// Bias range where TIE <= alpha and power >= the no-borrowing power, from the
// scenario's bias grid with both endpoints refined by bisection on the
// feasibility boundary.
inline SweetSpot sweet_spot(const HybridScenario& s, const Exec& exec = {}, double resolution = 1e-3) {
  s.validate();
  detail::require(s.bias_grid.size() >= 2, "bias_grid", "sweet spot needs at least two bias points");
  auto grid = s.bias_grid;
  std::sort(grid.begin(), grid.end());
  SweetSpot spot;
  spot.baseline_power = calibrated_power_no_borrowing(s.alpha, s);
  auto feasible = [&](const BiasPoint& p) { return p.tie <= s.alpha && p.power >= spot.baseline_power; };

  spot.curve = hybrid_curve(s, grid, exec);
  const auto& curve = spot.curve;
  // Runs of feasible grid points.
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (!feasible(curve[i])) continue;
    if (!runs.empty() && runs.back().second + 1 == i) {
      runs.back().second = i;
    } else {
      runs.emplace_back(i, i);
    }
  }
  if (runs.empty()) return spot;
  spot.contiguous = runs.size() == 1;
  auto best_run = runs.front();
  double best_power = -1.0;
  for (const auto& run : runs) {
    for (std::size_t i = run.first; i <= run.second; ++i) {
      if (curve[i].power > best_power) {
        best_power = curve[i].power;
        best_run = run;
      }
    }
  }

  std::vector<BiasPoint> evaluated(curve.begin() + static_cast<std::ptrdiff_t>(best_run.first),
                                   curve.begin() + static_cast<std::ptrdiff_t>(best_run.second) + 1);
  auto refine = [&](double inside, double outside) {
    while (std::abs(outside - inside) > resolution) {
      const double mid = 0.5 * (inside + outside);
      const BiasPoint p{mid, hybrid_tie(s, mid, exec), hybrid_power(s, mid, exec)};
      if (feasible(p)) {
        inside = mid;
        evaluated.push_back(p);
      } else {
        outside = mid;
      }
    }
    return inside;
  };
  spot.lower = best_run.first > 0 ? refine(grid[best_run.first], grid[best_run.first - 1]) : grid[best_run.first];
  spot.upper = best_run.second + 1 < grid.size() ? refine(grid[best_run.second], grid[best_run.second + 1])
                                                 : grid[best_run.second];
  spot.empty = false;
  spot.max_power = -1.0;
  for (const auto& p : evaluated) {
    if (p.power > spot.max_power) {
      spot.max_power = p.power;
      spot.argmax_bias = p.bias;
    }
  }
  return spot;
}

struct DeltaSummary {
  double delta = 0.0;
  double max_tie = 0.0;
  double max_power = 0.0;
  double argmax_bias = 0.0;
  double calibrated_power = 0.0;
  double max_power_gain = 0.0;
  std::vector<BiasPoint> curve;
};

// Grid of [-delta, delta] with step delta / steps (endpoints included).
inline std::vector<double> symmetric_grid(double delta, int steps = 20) {
  std::vector<double> g;
  g.reserve(static_cast<std::size_t>(2 * steps + 1));
  for (int i = -steps; i <= steps; ++i) g.push_back(delta * i / steps);
  return g;
}

// Maximum TIE and maximum power gain when the bias is known to satisfy
// |theta_c - ybar_ext| <= delta. The gain is measured against the
// no-borrowing test calibrated to the maximum TIE over that range.
inline DeltaSummary delta_restricted_summary(const HybridScenario& s, double delta, const Exec& exec = {},
                                             int steps = 20) {
  detail::require(delta > 0.0, "delta", "must be > 0");
  detail::require(steps >= 1, "steps", "must be >= 1");
  DeltaSummary d;
  d.delta = delta;
  d.curve = hybrid_curve(s, symmetric_grid(delta, steps), exec);
  for (const auto& p : d.curve) {
    d.max_tie = std::max(d.max_tie, p.tie);
    if (p.power > d.max_power) {
      d.max_power = p.power;
      d.argmax_bias = p.bias;
    }
  }
  d.calibrated_power = calibrated_power_no_borrowing(std::max(d.max_tie, 1e-300), s);
  d.max_power_gain = d.max_power - d.calibrated_power;
  return d;
}

// ---------------------------------------------------------------------------
// Posterior weight propagation (one-arm)

struct WeightPropagation {
  // [w][bias]: Monte Carlo mean of the posterior informative weight with the
  // data generated at theta0.
  std::vector<std::vector<double>> mc_mean;
  // [w][bias]: posterior informative weight at the expected data ybar = theta0.
  std::vector<std::vector<double>> at_expected_data;
};

inline WeightPropagation weight_propagation(const OneArmScenario& s, const std::vector<double>& w_grid,
                                            const std::vector<double>& bias_grid, const Exec& exec = {}) {
  detail::require(!w_grid.empty(), "w_grid", "must not be empty");
  detail::require(!bias_grid.empty(), "bias_grid", "must not be empty");
  WeightPropagation out;
  const double se = s.standard_error();
  for (double w : w_grid) {
    OneArmScenario cell = s;
    cell.prior.w = w;
    std::vector<double> row_mc, row_exp;
    for (double b : bias_grid) {
      row_mc.push_back(one_arm_simulate(cell, b, s.theta0, exec).w_tilde_mean);
      PosteriorKernel k(cell.prior_at(b), se * se);
      k.update(s.theta0);
      row_exp.push_back(k.w_informative());
    }
    out.mc_mean.push_back(std::move(row_mc));
    out.at_expected_data.push_back(std::move(row_exp));
  }
  return out;
}

}  // namespace rmp
