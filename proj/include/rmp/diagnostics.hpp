#pragma once

// Shape diagnostics for two-component normal mixture posteriors: modes and
// antimode, O'Hagan's bimodality metric (OBM), and highest-density level sets.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "rmp/distcore.hpp"
#include "rmp/error.hpp"
#include "rmp/inference.hpp"
#include "rmp/parallel.hpp"
#include "rmp/priors.hpp"
#include "rmp/roots.hpp"

namespace rmp {

struct DensityPoint {
  double location;
  double density;
};

struct BimodalityReport {
  int n_modes = 1;
  std::vector<DensityPoint> modes;
  std::optional<DensityPoint> antimode;
  double obm = 1.0;
};

namespace detail {

inline constexpr int kModeScanPoints = 2000;

// Stationary points of the mixture density, located by a sign scan of the
// derivative and refined by root search. Grid points where the derivative
// underflows to zero are skipped.
inline std::vector<double> stationary_points(const GaussianMixture& m, double lo, double hi, int points) {
  std::vector<double> roots;
  const double step = (hi - lo) / (points - 1);
  double prev_x = lo;
  double prev_d = mixture_pdf_derivative(lo, m);
  for (int i = 1; i < points; ++i) {
    const double x = lo + i * step;
    const double d = mixture_pdf_derivative(x, m);
    if (d == 0.0 && mixture_pdf(x, m) > 0.0) {
      // Exact stationary point on the grid.
      const double dr = mixture_pdf_derivative(x + 0.5 * step, m);
      if (prev_d != 0.0 && dr != 0.0 && std::signbit(prev_d) != std::signbit(dr)) roots.push_back(x);
      if (dr != 0.0) {
        prev_x = x;
        prev_d = dr;
      }
      continue;
    }
    if (d == 0.0) continue;
    if (prev_d != 0.0 && std::signbit(prev_d) != std::signbit(d)) {
      roots.push_back(find_root([&](double t) { return mixture_pdf_derivative(t, m); }, prev_x, x,
                                {.xtol = 1e-11, .ftol = 0.0, .max_iter = 400}));
    }
    prev_x = x;
    prev_d = d;
  }
  return roots;
}

}  // namespace detail

// Modes of a two-component mixture (at most two) and the antimode between them.
inline BimodalityReport find_modes(const GaussianMixture& m) {
  detail::require(m.size() == 2, "components", "mode analysis needs exactly two components");
  const double lo = m.min_mean() - 6.0 * m.max_sd();
  const double hi = m.max_mean() + 6.0 * m.max_sd();
  const auto roots = detail::stationary_points(m, lo, hi, detail::kModeScanPoints);

  BimodalityReport r;
  std::vector<DensityPoint> maxima, minima;
  for (double x : roots) {
    const double h = 1e-6 * m.max_sd();
    const double curvature = mixture_pdf_derivative(x + h, m) - mixture_pdf_derivative(x - h, m);
    (curvature < 0.0 ? maxima : minima).push_back({x, mixture_pdf(x, m)});
  }
  if (maxima.empty()) {
    // Both stationary points missing means the whole window is monotone,
    // which cannot happen for a proper mixture; fall back to the heavier mean.
    const std::size_t i = m.weight(0) >= m.weight(1) ? 0 : 1;
    const double x = m.component(i).mean();
    maxima.push_back({x, mixture_pdf(x, m)});
  }
  if (maxima.size() >= 2 && !minima.empty()) {
    r.n_modes = 2;
    r.modes = {maxima.front(), maxima.back()};
    // Lowest stationary point between the two maxima.
    DensityPoint anti = minima.front();
    for (const auto& p : minima) {
      if (p.location > r.modes[0].location && p.location < r.modes[1].location && p.density <= anti.density) anti = p;
    }
    r.antimode = anti;
    r.obm = anti.density > 0.0
                ? std::min(r.modes[0].density / anti.density, r.modes[1].density / anti.density)
                : std::numeric_limits<double>::infinity();
  } else {
    r.n_modes = 1;
    r.modes = {*std::max_element(maxima.begin(), maxima.end(),
                                 [](const auto& a, const auto& b) { return a.density < b.density; })};
  }
  return r;
}

inline double obm(const GaussianMixture& m) { return find_modes(m).obm; }

struct Interval {
  double lo;
  double hi;
};

struct HpdResult {
  bool is_disjoint = false;
  std::vector<Interval> intervals;
  double cutoff = 0.0;
  double mass = 0.0;
};

namespace detail {

// Intervals of {x : pdf(x) >= c} within [lo, hi] from a sign scan.
inline std::vector<Interval> level_set(const GaussianMixture& m, double c, double lo, double hi, int points) {
  auto g = [&](double x) { return mixture_pdf(x, m) - c; };
  std::vector<Interval> out;
  const double step = (hi - lo) / (points - 1);
  double prev_x = lo;
  double prev_g = g(lo);
  std::optional<double> open;
  if (prev_g >= 0.0) open = lo;
  for (int i = 1; i < points; ++i) {
    const double x = lo + i * step;
    const double gx = g(x);
    if ((prev_g >= 0.0) != (gx >= 0.0)) {
      const double root = find_root(g, prev_x, x, {.xtol = 1e-13 * std::max(1.0, std::abs(x)), .ftol = 0.0, .max_iter = 400});
      if (gx >= 0.0) {
        open = root;
      } else {
        out.push_back({*open, root});
        open.reset();
      }
    }
    prev_x = x;
    prev_g = gx;
  }
  if (open) out.push_back({*open, hi});
  return out;
}

inline double interval_mass(const GaussianMixture& m, const std::vector<Interval>& iv) {
  double mass = 0.0;
  for (const auto& i : iv) mass += mixture_cdf(i.hi, m) - mixture_cdf(i.lo, m);
  return mass;
}

}  // namespace detail

// Highest-density set with the requested mass, as a union of intervals.
inline HpdResult hpd_disjoint(const GaussianMixture& m, double level) {
  detail::require(level > 0.0 && level < 1.0, "level", "must lie in (0, 1)");
  const double lo = m.min_mean() - 12.0 * m.max_sd();
  const double hi = m.max_mean() + 12.0 * m.max_sd();
  constexpr int kPoints = 4000;

  double fmax = 0.0;
  const double step = (hi - lo) / (kPoints - 1);
  for (int i = 0; i < kPoints; ++i) fmax = std::max(fmax, mixture_pdf(lo + i * step, m));
  for (const auto& c : m.components()) fmax = std::max(fmax, mixture_pdf(c.mean(), m));

  auto excess = [&](double log_c) {
    return detail::interval_mass(m, detail::level_set(m, std::exp(log_c), lo, hi, kPoints)) - level;
  };
  // Mass decreases in the cutoff; search log c between a cutoff below the
  // window-edge density and the largest density seen.
  const double log_hi = std::log(fmax);
  const double log_lo = log_hi - 80.0;
  const double log_c = detail::find_root(excess, log_lo, log_hi, {.xtol = 1e-14, .ftol = 1e-10, .max_iter = 400});

  HpdResult r;
  r.cutoff = std::exp(log_c);
  r.intervals = detail::level_set(m, r.cutoff, lo, hi, kPoints);
  r.mass = detail::interval_mass(m, r.intervals);
  r.is_disjoint = r.intervals.size() > 1;
  return r;
}

// OBM over a grid of prior weights and biases for a one-arm posterior built
// with the sample mean fixed at the true value theta0 and the external mean at
// theta0 + bias.
struct BimodalityGrid {
  MixturePriorSpec prior;  // w and external mean are overwritten per cell
  int n = 20;
  double theta0 = 0.0;
  std::vector<double> w_grid;
  std::vector<double> bias_grid;
};

// Row-major [w][bias] matrix.
inline std::vector<std::vector<double>> bimodality_map(const BimodalityGrid& g, const Exec& exec = {}) {
  detail::require(!g.w_grid.empty(), "w_grid", "must not be empty");
  detail::require(!g.bias_grid.empty(), "bias_grid", "must not be empty");
  detail::require(std::holds_alternative<NormalForm>(g.prior.form), "form",
                  "bimodality is assessed for two-component priors only");
  const std::size_t nw = g.w_grid.size();
  const std::size_t nb = g.bias_grid.size();
  std::vector<std::vector<double>> out(nw, std::vector<double>(nb, 1.0));
  const SufficientStat data(g.theta0, g.n, g.prior.external.sigma());
  parallel_for(nw * nb, exec, [&](std::size_t idx) {
    const std::size_t i = idx / nb;
    const std::size_t j = idx % nb;
    auto spec = g.prior.with_external_mean(g.theta0 + g.bias_grid[j]);
    spec.w = g.w_grid[i];
    const auto post = posterior(build_mixture_prior(spec, data), data);
    out[i][j] = obm(post.posterior);
  });
  return out;
}

}  // namespace rmp
