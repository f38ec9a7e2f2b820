#pragma once

// Posterior computation under a normal-component mixture prior: conjugate
// component updates, log-space weight updates, tail probabilities, posterior
// means and the two-arm superiority probability. PosteriorKernel is the
// allocation-free form of the same update used inside simulation loops.
//
// exact_t_tail_oracle evaluates the posterior tail under an exact Student-t
// robust component by quadrature; it does not share code with the
// normal-mixture path.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rmp/distcore.hpp"
#include "rmp/error.hpp"
#include "rmp/priors.hpp"

namespace rmp {

namespace detail {

// Posterior weights (normalized, log-space with max subtraction), means and
// variances of a normal mixture updated with a sample mean of variance
// data_var. All spans have the same length.
inline void update_mixture(std::span<const double> log_w, std::span<const double> mean,
                           std::span<const double> var, double ybar, double data_var,
                           std::span<double> post_w, std::span<double> post_mean,
                           std::span<double> post_var) {
  const std::size_t k = log_w.size();
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < k; ++i) {
    const double pv = var[i] + data_var;
    const double d = ybar - mean[i];
    const double lm = log_w[i] - 0.5 * d * d / pv - 0.5 * std::log(pv);
    post_w[i] = lm;
    top = std::max(top, lm);
  }
  if (!std::isfinite(top)) throw DegenerateData("all marginal likelihoods vanished");
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    post_w[i] = std::exp(post_w[i] - top);
    total += post_w[i];
  }
  for (std::size_t i = 0; i < k; ++i) {
    post_w[i] /= total;
    const double shrink = var[i] / (var[i] + data_var);
    post_mean[i] = mean[i] + shrink * (ybar - mean[i]);
    post_var[i] = var[i] * data_var / (var[i] + data_var);
  }
}

inline double safe_log(double w) noexcept {
  return w > 0.0 ? std::log(w) : -std::numeric_limits<double>::infinity();
}

}  // namespace detail

struct TailPoint {
  double theta0;
  double probability;
};

struct PosteriorSummary {
  GaussianMixture posterior;
  // Posterior weight of the informative component (component 0).
  double w_informative = 0.0;
  // Posterior weights within the robust block, renormalized to sum to 1.
  std::vector<double> sub_weights;
  double mean = 0.0;
  std::optional<TailPoint> tail_at;
};

inline PosteriorSummary posterior(const GaussianMixture& prior, const SufficientStat& data) {
  const std::size_t k = prior.size();
  std::vector<double> log_w(k), mean(k), var(k);
  for (std::size_t i = 0; i < k; ++i) {
    log_w[i] = detail::safe_log(prior.weights()[i]);
    mean[i] = prior.components()[i].mean();
    var[i] = prior.components()[i].variance();
  }
  std::vector<double> pw(k), pm(k), pv(k);
  detail::update_mixture(log_w, mean, var, data.mean(), data.mean_variance(), pw, pm, pv);

  std::vector<GaussianComponent> comps;
  comps.reserve(k);
  double post_mean = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    comps.push_back(GaussianComponent::from_variance(pm[i], pv[i]));
    post_mean += pw[i] * pm[i];
  }

  // Within-block weights are normalized on their own so they stay defined
  // when the block as a whole has no posterior mass (w = 1).
  std::vector<double> sub;
  if (k > 1) {
    const std::size_t r = k - 1;
    double block_total = 0.0;
    for (std::size_t i = 1; i < k; ++i) block_total += prior.weights()[i];
    std::vector<double> block_log_w(r), bw(r), bm(r), bv(r);
    for (std::size_t i = 0; i < r; ++i) {
      block_log_w[i] = block_total > 0.0 ? detail::safe_log(prior.weights()[i + 1] / block_total)
                                         : -std::log(static_cast<double>(r));
    }
    detail::update_mixture(block_log_w, std::span<const double>(mean).subspan(1),
                           std::span<const double>(var).subspan(1), data.mean(), data.mean_variance(), bw, bm,
                           bv);
    sub = std::move(bw);
  }

  const double w0 = pw[0];
  return PosteriorSummary{GaussianMixture(std::move(comps), std::move(pw)), w0, std::move(sub), post_mean,
                          std::nullopt};
}

// Pr(theta <= theta0 | y).
inline double tail_probability(const GaussianMixture& post, double theta0) noexcept {
  return mixture_cdf(theta0, post);
}

inline double tail_probability(const PosteriorSummary& post, double theta0) noexcept {
  return tail_probability(post.posterior, theta0);
}

inline double posterior_mean(const PosteriorSummary& post) noexcept { return post.mean; }

// Pr(theta_t <= theta_c | y_t, y_c) for independent posteriors.
inline double prob_t_not_better(const GaussianMixture& post_c, const GaussianComponent& post_t) noexcept {
  double p = 0.0;
  const double vt = post_t.variance();
  for (std::size_t j = 0; j < post_c.size(); ++j) {
    const auto& c = post_c.components()[j];
    p += post_c.weights()[j] * std_normal_cdf((c.mean() - post_t.mean()) / std::sqrt(vt + c.variance()));
  }
  return std::clamp(p, 0.0, 1.0);
}

inline double prob_t_not_better(const PosteriorSummary& post_c, const GaussianComponent& post_t) noexcept {
  return prob_t_not_better(post_c.posterior, post_t);
}

// Treatment-arm prior in the hybrid-control design.
enum class TreatmentPrior {
  Flat,                    // limit posterior N(ybar_t, sigma^2 / n_t)
  UnitInfoAtExternalMean,  // N(ybar_ext, robust variance), updated conjugately
};

inline GaussianComponent treatment_posterior(TreatmentPrior prior, const SufficientStat& data_t,
                                             double external_mean, double prior_variance) {
  if (prior == TreatmentPrior::Flat) return GaussianComponent::from_variance(data_t.mean(), data_t.mean_variance());
  return conjugate_update(GaussianComponent::from_variance(external_mean, prior_variance), data_t);
}

// Fixed-shape posterior evaluator for repeated updates with one sample size.
// Component 0 is informative; when the location tracks the current data the
// robust means are reset to each analysed sample mean. Everything that does not
// depend on the sample mean is precomputed.
class PosteriorKernel {
 public:
  PosteriorKernel(const MixturePriorSpec& spec, double data_variance)
      : tracks_current_(tracks_current(spec.location)) {
    spec.validate();
    detail::require(std::isfinite(data_variance) && data_variance > 0.0, "data_variance", "must be > 0");
    const auto block = robust_block(spec);
    const double loc = tracks_current_ ? 0.0 : resolve_location(spec.location, spec.external);
    const std::size_t k = block.variances.size() + 1;
    mean_.resize(k);
    log_c_.resize(k);
    inv_pred_var_.resize(k);
    shrink_.resize(k);
    post_var_.resize(k);
    inv_post_sd_.resize(k);
    post_w_.resize(k);
    post_mean_.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
      const double var = i == 0 ? spec.external.mean_variance() : block.variances[i - 1];
      const double w = i == 0 ? spec.w : (1.0 - spec.w) * block.weights[i - 1];
      const double pv = var + data_variance;
      mean_[i] = i == 0 ? spec.external.mean() : loc;
      log_c_[i] = detail::safe_log(w) - 0.5 * std::log(pv);
      inv_pred_var_[i] = 1.0 / pv;
      shrink_[i] = var / pv;
      post_var_[i] = var * data_variance / pv;
      inv_post_sd_[i] = 1.0 / std::sqrt(post_var_[i]);
    }
  }

  void update(double ybar) {
    if (tracks_current_) std::fill(mean_.begin() + 1, mean_.end(), ybar);
    const std::size_t k = mean_.size();
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i) {
      const double d = ybar - mean_[i];
      post_w_[i] = log_c_[i] - 0.5 * d * d * inv_pred_var_[i];
      post_mean_[i] = mean_[i] + shrink_[i] * d;
      top = std::max(top, post_w_[i]);
    }
    if (!std::isfinite(top)) throw DegenerateData("all marginal likelihoods vanished");
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      post_w_[i] = std::exp(post_w_[i] - top);
      total += post_w_[i];
    }
    const double inv_total = 1.0 / total;
    for (std::size_t i = 0; i < k; ++i) post_w_[i] *= inv_total;
  }

  double tail(double theta0) const noexcept {
    double p = 0.0;
    for (std::size_t i = 0; i < post_w_.size(); ++i) {
      if (post_w_[i] == 0.0) continue;
      p += post_w_[i] * std_normal_cdf((theta0 - post_mean_[i]) * inv_post_sd_[i]);
    }
    return p;
  }

  double mean() const noexcept {
    double m = 0.0;
    for (std::size_t i = 0; i < post_w_.size(); ++i) m += post_w_[i] * post_mean_[i];
    return m;
  }

  double w_informative() const noexcept { return post_w_[0]; }

  double prob_t_not_better(double mean_t, double var_t) const noexcept {
    double p = 0.0;
    for (std::size_t i = 0; i < post_w_.size(); ++i) {
      if (post_w_[i] == 0.0) continue;
      p += post_w_[i] * std_normal_cdf((post_mean_[i] - mean_t) / std::sqrt(var_t + post_var_[i]));
    }
    return p;
  }

  GaussianMixture mixture() const {
    std::vector<GaussianComponent> comps;
    comps.reserve(post_w_.size());
    for (std::size_t i = 0; i < post_w_.size(); ++i) comps.push_back({post_mean_[i], 1.0 / inv_post_sd_[i]});
    return GaussianMixture(std::move(comps), post_w_);
  }

  std::size_t size() const noexcept { return post_w_.size(); }

 private:
  bool tracks_current_;
  std::vector<double> mean_, log_c_, inv_pred_var_, shrink_, post_var_, inv_post_sd_;
  std::vector<double> post_w_, post_mean_;
};

// Log density of the location-scale Student-t.
inline double student_t_log_pdf(double x, double mu, double scale, double df) noexcept {
  const double z = (x - mu) / scale;
  return std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) - 0.5 * std::log(df * std::numbers::pi) -
         std::log(scale) - 0.5 * (df + 1.0) * std::log1p(z * z / df);
}

struct QuadratureOptions {
  double rel_tol = 1e-11;
  unsigned max_depth = 18;
  // Half-width of each integration window, in standard deviations of the
  // piece it covers.
  double window = 15.0;
};

// Pr(theta <= theta0 | y) under w * N(informative) + (1 - w) * t(mu, tau, df)
// by adaptive Gauss-Kronrod quadrature of the unnormalized posterior. The
// informative and t pieces are integrated on separate windows centred on their
// own posterior mass, and on a common log scale so extreme conflict does not
// underflow.
inline double exact_t_tail_oracle(const MixturePriorSpec& spec, const SufficientStat& data, double theta0,
                                  QuadratureOptions opt = {}) {
  spec.validate();
  const auto* t = std::get_if<StudentT>(&spec.form);
  detail::require(t != nullptr, "form", "exact t oracle needs a Student-t robust form");
  const double mu = resolve_location(spec.location, spec.external, data);
  const auto informative = build_informative(spec.external);

  const double ybar = data.mean();
  const double se = data.standard_error();
  const double dv = data.mean_variance();
  auto log_lik = [&](double th) { return std_normal_log_pdf((ybar - th) / se) - std::log(se); };
  auto log_inf = [&](double th) { return gaussian_log_pdf(th, informative); };
  auto log_t = [&](double th) { return student_t_log_pdf(th, mu, t->scale, t->df); };

  // Each piece's mass sits near its own posterior centre; the t piece is
  // dominated by the likelihood unless the t scale is narrower.
  const auto inf_post = conjugate_update(informative, data);
  const double t_sd = std::min(se, t->scale);
  const double t_centre = ybar;

  const double lw_inf = detail::safe_log(spec.w);
  const double lw_t = detail::safe_log(1.0 - spec.w);
  const double shift = std::max(lw_inf + log_inf(inf_post.mean()) + log_lik(inf_post.mean()),
                                lw_t + log_t(t_centre) + log_lik(t_centre));

  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  auto integrate_piece = [&](auto&& logf, double lw, double centre, double sd, double extra) {
    std::pair<double, double> out{0.0, 0.0};  // mass below / above theta0
    if (!std::isfinite(lw)) return out;
    double lo = centre - opt.window * sd;
    double hi = centre + opt.window * sd;
    lo = std::min(lo, extra - opt.window * sd);
    hi = std::max(hi, extra + opt.window * sd);
    std::vector<double> cuts{lo, hi};
    for (double c : {centre, extra, theta0, ybar}) {
      if (c > lo && c < hi) cuts.push_back(c);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    auto f = [&](double th) { return std::exp(lw + logf(th) + log_lik(th) - shift); };
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      double err = 0.0;
      const double v = GK::integrate(f, cuts[i], cuts[i + 1], opt.max_depth, opt.rel_tol, &err);
      if (!std::isfinite(v)) throw NumericalFailure("exact t quadrature produced a non-finite value");
      (cuts[i + 1] <= theta0 ? out.first : out.second) += v;
    }
    return out;
  };

  // Informative piece: likelihood x normal is a normal around inf_post.
  const auto a = integrate_piece(log_inf, lw_inf, inf_post.mean(), inf_post.sd(), inf_post.mean());
  // t piece: mass around ybar; the t centre is included so a narrow t far from
  // the data is still resolved.
  const auto b = integrate_piece(log_t, lw_t, t_centre, std::max(t_sd, 1e-300), std::clamp(mu, ybar - 40 * se, ybar + 40 * se));

  const double below = a.first + b.first;
  const double total = below + a.second + b.second;
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw NumericalFailure("exact t quadrature: posterior normalizer vanished");
  }
  return std::clamp(below / total, 0.0, 1.0);
}

}  // namespace rmp
