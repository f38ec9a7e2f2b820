#pragma once

// Robust mixture prior construction: the informative component comes from a
// single external study, the robust component follows a location and
// dispersion policy and is either normal or a Student-t approximated by an
// equally weighted scale mixture of normals.

#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "rmp/distcore.hpp"
#include "rmp/error.hpp"

namespace rmp {

struct ExternalMean {
  bool operator==(const ExternalMean&) const = default;
};
struct NullBoundary {
  double theta0 = 0.0;
  bool operator==(const NullBoundary&) const = default;
};
// Robust component sits at the observed current (control) mean, so the prior
// is re-resolved for every analysed data set.
struct CurrentMean {
  bool operator==(const CurrentMean&) const = default;
};

using LocationPolicy = std::variant<ExternalMean, NullBoundary, CurrentMean>;

inline std::string location_name(const LocationPolicy& p) {
  struct {
    std::string operator()(const ExternalMean&) const { return "external_mean"; }
    std::string operator()(const NullBoundary&) const { return "null_boundary"; }
    std::string operator()(const CurrentMean&) const { return "current_mean"; }
  } v;
  return std::visit(v, p);
}

inline bool tracks_current(const LocationPolicy& p) noexcept {
  return std::holds_alternative<CurrentMean>(p);
}

struct NormalForm {
  bool operator==(const NormalForm&) const = default;
};

// Location-scale t with df degrees of freedom and scale tau, represented by k
// normal components. As df grows the component tends to N(mu, tau^2).
struct StudentT {
  double df = 3.0;
  double scale = 1.0;
  int k = 100;
  bool operator==(const StudentT&) const = default;
};

using RobustForm = std::variant<NormalForm, StudentT>;

inline std::string form_name(const RobustForm& f) {
  if (const auto* t = std::get_if<StudentT>(&f)) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "student_t(df=%g,scale=%g,k=%d)", t->df, t->scale, t->k);
    return buf;
  }
  return "normal";
}

// How a unit-information variance maps onto the t scale parameter.
enum class TScaleReading {
  ScaleSquaredIsVariance,  // tau^2 = variance; df -> inf recovers the normal component
  ScaleIsVariance,         // tau = variance
};

inline double t_scale_from_unit_information(double unit_variance, TScaleReading reading) {
  detail::require(unit_variance > 0.0, "unit_variance", "must be > 0");
  return reading == TScaleReading::ScaleSquaredIsVariance ? std::sqrt(unit_variance) : unit_variance;
}

// Scale giving the t component the same variance as a normal with `variance`.
inline double t_scale_matching_variance(double df, double variance) {
  detail::require(df > 2.0, "df", "variance-matched scale needs df > 2");
  detail::require(variance > 0.0, "variance", "must be > 0");
  return std::sqrt(variance * (df - 2.0) / df);
}

struct MixturePriorSpec {
  double w = 0.5;
  SufficientStat external{0.0, 15, 1.0};
  LocationPolicy location = ExternalMean{};
  // Robust variance is sigma^2 / n_robust unless robust_variance is set.
  double n_robust = 1.0;
  std::optional<double> robust_variance;
  RobustForm form = NormalForm{};

  double robust_variance_value() const {
    return robust_variance ? *robust_variance : external.sigma() * external.sigma() / n_robust;
  }

  void validate() const {
    detail::require(std::isfinite(w) && w >= 0.0 && w <= 1.0, "w", "prior weight must lie in [0, 1]");
    detail::require(std::isfinite(n_robust) && n_robust > 0.0, "n_robust", "must be > 0");
    if (robust_variance) {
      detail::require(std::isfinite(*robust_variance) && *robust_variance > 0.0, "robust_variance",
                      "must be > 0");
    }
    if (const auto* t = std::get_if<StudentT>(&form)) {
      detail::require(std::isfinite(t->df) && t->df > 2.0, "df", "Student-t df must be > 2");
      detail::require(std::isfinite(t->scale) && t->scale > 0.0, "scale", "Student-t scale must be > 0");
      detail::require(t->k >= 1, "k", "number of t components must be >= 1");
    }
  }

  MixturePriorSpec with_external_mean(double m) const {
    MixturePriorSpec s = *this;
    s.external = external.with_mean(m);
    return s;
  }
};

// N(ybar_ext, sigma^2 / n_ext).
inline GaussianComponent build_informative(const SufficientStat& external) {
  return GaussianComponent::from_variance(external.mean(), external.mean_variance());
}

// Inverse Fisher information of a single N(theta, sigma^2) observation.
inline double unit_information_variance(double sigma) {
  detail::require(std::isfinite(sigma) && sigma > 0.0, "sigma", "must be > 0");
  return sigma * sigma;
}

inline double resolve_location(const LocationPolicy& policy, const SufficientStat& external,
                               const std::optional<SufficientStat>& current = std::nullopt) {
  if (std::holds_alternative<ExternalMean>(policy)) return external.mean();
  if (const auto* nb = std::get_if<NullBoundary>(&policy)) {
    detail::require(std::isfinite(nb->theta0), "theta0", "null boundary must be finite");
    return nb->theta0;
  }
  if (!current) {
    throw MissingInput("current_mean location needs the current data to resolve the robust component");
  }
  return current->mean();
}

// Precision multipliers lambda_i of the equally weighted normal components: the
// Gamma(df/2, rate df/2) quantiles at the stratum midpoints (i - 0.5) / k.
inline std::vector<double> t_precision_nodes(double df, int k) {
  detail::require(std::isfinite(df) && df > 2.0, "df", "Student-t df must be > 2");
  detail::require(k >= 1, "k", "number of components must be >= 1");
  std::vector<double> lambda(static_cast<std::size_t>(k));
  const double shape = 0.5 * df;
  for (int i = 0; i < k; ++i) {
    const double p = (i + 0.5) / k;
    const double q = boost::math::gamma_p_inv(shape, p) / shape;
    if (!(std::isfinite(q) && q > 0.0)) throw NumericalFailure("gamma quantile failed for df=" + std::to_string(df));
    lambda[static_cast<std::size_t>(i)] = q;
  }
  return lambda;
}

inline GaussianMixture t_to_normal_mixture(double mu, const StudentT& form) {
  detail::require(std::isfinite(form.scale) && form.scale > 0.0, "scale", "Student-t scale must be > 0");
  const auto lambda = t_precision_nodes(form.df, form.k);
  std::vector<GaussianComponent> comps;
  comps.reserve(lambda.size());
  const double tau2 = form.scale * form.scale;
  for (double l : lambda) comps.push_back(GaussianComponent::from_variance(mu, tau2 / l));
  return GaussianMixture(std::move(comps), std::vector<double>(lambda.size(), 1.0 / form.k));
}

// The robust block of a prior before its location is known: within-block
// weights and variances.
struct RobustBlock {
  std::vector<double> weights;
  std::vector<double> variances;
};

inline RobustBlock robust_block(const MixturePriorSpec& spec) {
  if (const auto* t = std::get_if<StudentT>(&spec.form)) {
    const auto lambda = t_precision_nodes(t->df, t->k);
    RobustBlock b{std::vector<double>(lambda.size(), 1.0 / t->k), {}};
    b.variances.reserve(lambda.size());
    for (double l : lambda) b.variances.push_back(t->scale * t->scale / l);
    return b;
  }
  return {{1.0}, {spec.robust_variance_value()}};
}

// Component 0 is always the informative component; the robust block follows.
inline GaussianMixture build_mixture_prior(const MixturePriorSpec& spec,
                                           const std::optional<SufficientStat>& current = std::nullopt) {
  spec.validate();
  const double loc = resolve_location(spec.location, spec.external, current);
  const auto block = robust_block(spec);
  std::vector<GaussianComponent> comps{build_informative(spec.external)};
  std::vector<double> weights{spec.w};
  comps.reserve(block.variances.size() + 1);
  weights.reserve(block.variances.size() + 1);
  for (std::size_t i = 0; i < block.variances.size(); ++i) {
    comps.push_back(GaussianComponent::from_variance(loc, block.variances[i]));
    weights.push_back((1.0 - spec.w) * block.weights[i]);
  }
  return GaussianMixture(std::move(comps), std::move(weights));
}

}  // namespace rmp
