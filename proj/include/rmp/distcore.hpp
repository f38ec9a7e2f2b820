#pragma once

// Gaussian and Gaussian-mixture probability algebra for a normal endpoint with
// known variance: densities, distribution functions, quantiles, conjugate
// updates and marginal likelihoods.
//
// Everything here is a pure function of immutable values.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "rmp/error.hpp"
#include "rmp/roots.hpp"

namespace rmp {

inline constexpr double kSqrt2 = std::numbers::sqrt2;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2*pi))

// Standard normal distribution function. erfc keeps full relative accuracy in
// the lower tail, which matters for rejection rates near alpha.
inline double std_normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z / kSqrt2); }

// Upper tail 1 - Phi(z) without cancellation.
inline double std_normal_sf(double z) noexcept { return 0.5 * std::erfc(z / kSqrt2); }

inline double std_normal_log_pdf(double z) noexcept { return -0.5 * z * z - kLogSqrt2Pi; }

inline double std_normal_pdf(double z) noexcept { return std::exp(std_normal_log_pdf(z)); }

// Inverse of std_normal_cdf on (0, 1).
inline double std_normal_quantile(double p) {
  detail::require(p > 0.0 && p < 1.0, "p", "probability must lie in (0, 1)");
  return -kSqrt2 * boost::math::erfc_inv(2.0 * p);
}

class GaussianComponent {
 public:
  GaussianComponent(double mean, double sd) : mean_(mean), sd_(sd) {
    detail::require(std::isfinite(mean), "mean", "must be finite");
    detail::require(std::isfinite(sd) && sd > 0.0, "sd", "must be finite and > 0");
  }

  static GaussianComponent from_variance(double mean, double variance) {
    detail::require(std::isfinite(variance) && variance > 0.0, "variance", "must be finite and > 0");
    return {mean, std::sqrt(variance)};
  }

  double mean() const noexcept { return mean_; }
  double sd() const noexcept { return sd_; }
  double variance() const noexcept { return sd_ * sd_; }

  bool operator==(const GaussianComponent&) const = default;

 private:
  double mean_;
  double sd_;
};

// Observed sample mean of n i.i.d. normal observations with known sd sigma.
class SufficientStat {
 public:
  SufficientStat(double mean, int n, double sigma) : mean_(mean), n_(n), sigma_(sigma) {
    detail::require(std::isfinite(mean), "mean", "must be finite");
    detail::require(n >= 1, "n", "sample size must be >= 1");
    detail::require(std::isfinite(sigma) && sigma > 0.0, "sigma", "must be finite and > 0");
  }

  double mean() const noexcept { return mean_; }
  int n() const noexcept { return n_; }
  double sigma() const noexcept { return sigma_; }
  // Variance of the sample mean, sigma^2 / n.
  double mean_variance() const noexcept { return sigma_ * sigma_ / n_; }
  double standard_error() const noexcept { return sigma_ / std::sqrt(static_cast<double>(n_)); }

  SufficientStat with_mean(double m) const { return {m, n_, sigma_}; }

 private:
  double mean_;
  int n_;
  double sigma_;
};

inline constexpr double kWeightSumTolerance = 1e-9;

// Finite mixture of Gaussian components with normalized weights.
class GaussianMixture {
 public:
  GaussianMixture(std::vector<GaussianComponent> components, std::vector<double> weights)
      : components_(std::move(components)), weights_(std::move(weights)) {
    detail::require(!components_.empty(), "components", "mixture needs at least one component");
    detail::require(components_.size() == weights_.size(), "weights",
                    "must have one weight per component");
    double total = 0.0;
    for (double w : weights_) {
      detail::require(std::isfinite(w) && w >= 0.0 && w <= 1.0 + kWeightSumTolerance, "weights",
                      "each weight must lie in [0, 1]");
      total += w;
    }
    detail::require(std::abs(total - 1.0) <= kWeightSumTolerance, "weights", "must sum to 1");
    for (double& w : weights_) w = std::min(1.0, w / total);
  }

  explicit GaussianMixture(GaussianComponent single) : GaussianMixture({single}, {1.0}) {}

  std::size_t size() const noexcept { return components_.size(); }
  const std::vector<GaussianComponent>& components() const noexcept { return components_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const GaussianComponent& component(std::size_t i) const { return components_.at(i); }
  double weight(std::size_t i) const { return weights_.at(i); }

  double mean() const noexcept {
    double m = 0.0;
    for (std::size_t i = 0; i < size(); ++i) m += weights_[i] * components_[i].mean();
    return m;
  }

  double variance() const noexcept {
    const double m = mean();
    double v = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
      const double d = components_[i].mean() - m;
      v += weights_[i] * (components_[i].variance() + d * d);
    }
    return v;
  }

  double min_mean() const noexcept {
    double m = components_.front().mean();
    for (const auto& c : components_) m = std::min(m, c.mean());
    return m;
  }
  double max_mean() const noexcept {
    double m = components_.front().mean();
    for (const auto& c : components_) m = std::max(m, c.mean());
    return m;
  }
  double max_sd() const noexcept {
    double s = 0.0;
    for (const auto& c : components_) s = std::max(s, c.sd());
    return s;
  }

 private:
  std::vector<GaussianComponent> components_;
  std::vector<double> weights_;
};

inline double gaussian_log_pdf(double x, const GaussianComponent& c) noexcept {
  return std_normal_log_pdf((x - c.mean()) / c.sd()) - std::log(c.sd());
}

inline double gaussian_pdf(double x, const GaussianComponent& c) noexcept {
  return std_normal_pdf((x - c.mean()) / c.sd()) / c.sd();
}

inline double gaussian_cdf(double x, const GaussianComponent& c) noexcept {
  return std_normal_cdf((x - c.mean()) / c.sd());
}

inline double mixture_pdf(double x, const GaussianMixture& m) noexcept {
  double f = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) f += m.weights()[i] * gaussian_pdf(x, m.components()[i]);
  return f;
}

// Derivative of the mixture density.
inline double mixture_pdf_derivative(double x, const GaussianMixture& m) noexcept {
  double d = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto& c = m.components()[i];
    d -= m.weights()[i] * gaussian_pdf(x, c) * (x - c.mean()) / c.variance();
  }
  return d;
}

inline double mixture_cdf(double x, const GaussianMixture& m) noexcept {
  double p = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) p += m.weights()[i] * gaussian_cdf(x, m.components()[i]);
  return std::clamp(p, 0.0, 1.0);
}

// x with mixture_cdf(x) = p, searched on [min mean - 12 max sd, max mean + 12 max sd].
inline double mixture_quantile(double p, const GaussianMixture& m) {
  detail::require(p > 0.0 && p < 1.0, "p", "probability must lie in (0, 1)");
  const double lo = m.min_mean() - 12.0 * m.max_sd();
  const double hi = m.max_mean() + 12.0 * m.max_sd();
  const double scale = std::max({1.0, std::abs(lo), std::abs(hi)});
  return detail::find_root([&](double x) { return mixture_cdf(x, m) - p; }, lo, hi,
                           {.xtol = 1e-14 * scale, .ftol = 1e-13, .max_iter = 400});
}

// Normal prior updated with the sample mean of n observations.
inline GaussianComponent conjugate_update(const GaussianComponent& prior, const SufficientStat& data) {
  const double prior_precision = 1.0 / prior.variance();
  const double data_precision = 1.0 / data.mean_variance();
  const double post_var = 1.0 / (prior_precision + data_precision);
  const double post_mean = post_var * (prior.mean() * prior_precision + data.mean() * data_precision);
  return GaussianComponent::from_variance(post_mean, post_var);
}

// log of the density of the sample mean under the prior predictive
// N(prior.mean, prior.var + sigma^2/n).
inline double log_marginal_likelihood(const GaussianComponent& prior, const SufficientStat& data) noexcept {
  const double sd = std::sqrt(prior.variance() + data.mean_variance());
  return std_normal_log_pdf((data.mean() - prior.mean()) / sd) - std::log(sd);
}

inline double marginal_likelihood(const GaussianComponent& prior, const SufficientStat& data) noexcept {
  return std::exp(log_marginal_likelihood(prior, data));
}

}  // namespace rmp
