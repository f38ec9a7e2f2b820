#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "rmp/error.hpp"
#include "rmp/priors.hpp"

namespace {

using namespace rmp;

TEST(BuildInformative, ExternalStudyOfFifteen) {
  const auto c = build_informative(SufficientStat(0.0, 15, 1.0));
  EXPECT_DOUBLE_EQ(c.mean(), 0.0);
  EXPECT_NEAR(c.variance(), 1.0 / 15, 1e-16);
}

TEST(BuildInformative, SingleObservation) {
  const auto c = build_informative(SufficientStat(0.3, 1, 2.0));
  EXPECT_DOUBLE_EQ(c.mean(), 0.3);
  EXPECT_NEAR(c.variance(), 4.0, 1e-15);
}

TEST(BuildInformative, VarianceHalvesWhenSizeDoubles) {
  for (int n : {1, 7, 15, 40}) {
    const double v1 = build_informative(SufficientStat(0.0, n, 1.7)).variance();
    const double v2 = build_informative(SufficientStat(0.0, 2 * n, 1.7)).variance();
    EXPECT_NEAR(v2, 0.5 * v1, 1e-15 * v1);
  }
}

TEST(UnitInformation, Variance) {
  EXPECT_DOUBLE_EQ(unit_information_variance(1.0), 1.0);
  EXPECT_DOUBLE_EQ(unit_information_variance(2.0), 4.0);
  MixturePriorSpec s;
  s.external = SufficientStat(0.0, 15, 2.0);
  s.n_robust = 1.0;
  EXPECT_DOUBLE_EQ(s.robust_variance_value(), unit_information_variance(2.0));
  EXPECT_THROW(unit_information_variance(0.0), InvalidArgument);
}

TEST(ResolveLocation, Policies) {
  const SufficientStat ext(0.4, 15, 1.0);
  EXPECT_DOUBLE_EQ(resolve_location(ExternalMean{}, ext), 0.4);
  EXPECT_DOUBLE_EQ(resolve_location(NullBoundary{0.0}, ext), 0.0);
  EXPECT_DOUBLE_EQ(resolve_location(CurrentMean{}, ext, SufficientStat(0.12, 20, 1.0)), 0.12);
  EXPECT_THROW(resolve_location(CurrentMean{}, ext), MissingInput);
  EXPECT_THROW(resolve_location(NullBoundary{std::nan("")}, ext), InvalidArgument);
}

TEST(TPrecisionNodes, MatchIncompleteGammaOracle) {
  for (double df : {2.5, 3.0, 7.0, 30.0}) {
    const int k = 20;
    const auto lambda = t_precision_nodes(df, k);
    for (int i = 0; i < k; ++i) {
      const double expected = oracle::gamma_quantile(0.5 * df, 0.5 * df, (i + 0.5) / k);
      EXPECT_NEAR(lambda[static_cast<std::size_t>(i)], expected, 1e-10 * expected) << "df=" << df << " i=" << i;
    }
  }
}

TEST(TToNormalMixture, SingleComponentUsesGammaMedian) {
  const auto m = t_to_normal_mixture(0.7, StudentT{3.0, 1.0, 1});
  ASSERT_EQ(m.size(), 1u);
  const double median = oracle::gamma_quantile(1.5, 1.5, 0.5);
  EXPECT_DOUBLE_EQ(m.component(0).mean(), 0.7);
  EXPECT_NEAR(m.component(0).variance(), 1.0 / median, 1e-10);
}

// Midpoint quantile nodes truncate the heavy precision tail, so the mixture
// variance is the node average of tau^2 / lambda and sits below the t moment.
TEST(TToNormalMixture, VarianceIsNodeAverage) {
  const int k = 100;
  const auto m = t_to_normal_mixture(0.0, StudentT{3.0, 1.0, k});
  double expected = 0.0;
  for (int i = 0; i < k; ++i) expected += 1.0 / oracle::gamma_quantile(1.5, 1.5, (i + 0.5) / k) / k;
  EXPECT_NEAR(m.variance(), expected, 1e-9 * expected);
  EXPECT_LT(m.variance(), 3.0);
  EXPECT_GT(m.variance(), 0.8 * 3.0);
}

TEST(TToNormalMixture, LargeDfRecoversNormal) {
  const auto m = t_to_normal_mixture(0.0, StudentT{1e6, 1.3, 100});
  EXPECT_NEAR(m.variance() / (1.3 * 1.3), 1.0, 1e-3);
}

TEST(TToNormalMixture, VariancesStrictlyDecreasing) {
  for (int k : {2, 10, 100, 250}) {
    const auto m = t_to_normal_mixture(0.0, StudentT{3.0, 0.8, k});
    const auto lambda = t_precision_nodes(3.0, k);
    for (std::size_t i = 0; i < m.size(); ++i) {
      EXPECT_NEAR(m.component(i).variance(), 0.64 / lambda[i], 1e-14 * m.component(i).variance());
      EXPECT_DOUBLE_EQ(m.weight(i), 1.0 / k);
      if (i > 0) {
        EXPECT_LT(m.component(i).variance(), m.component(i - 1).variance());
      }
    }
  }
}

// Sup-norm distance to the exact t density on a fixed grid shrinks as k grows.
TEST(TToNormalMixture, RefinesWithMoreComponents) {
  double previous = std::numeric_limits<double>::infinity();
  for (int k : {10, 25, 50, 100, 200}) {
    const auto m = t_to_normal_mixture(0.0, StudentT{3.0, 1.0, k});
    double sup = 0.0;
    for (double x = -10.0; x <= 10.0; x += 0.01) {
      sup = std::max(sup, std::abs(mixture_pdf(x, m) - oracle::t_pdf(x, 0.0, 1.0, 3.0)));
    }
    EXPECT_LE(sup, previous) << "k=" << k;
    previous = sup;
  }
  EXPECT_LT(previous, 5e-3);
}

TEST(TScale, Readings) {
  EXPECT_DOUBLE_EQ(t_scale_from_unit_information(4.0, TScaleReading::ScaleSquaredIsVariance), 2.0);
  EXPECT_DOUBLE_EQ(t_scale_from_unit_information(4.0, TScaleReading::ScaleIsVariance), 4.0);
  const double tau = t_scale_matching_variance(3.0, 1.0);
  EXPECT_NEAR(tau * tau * 3.0 / (3.0 - 2.0), 1.0, 1e-15);
}

TEST(BuildMixturePrior, WeightOneHasNoRobustMass) {
  MixturePriorSpec s;
  s.w = 1.0;
  const auto m = build_mixture_prior(s);
  EXPECT_DOUBLE_EQ(m.weight(0), 1.0);
  EXPECT_DOUBLE_EQ(m.weight(1), 0.0);
}

TEST(BuildMixturePrior, UnitInformationReferenceSetup) {
  MixturePriorSpec s;
  s.w = 0.5;
  s.external = SufficientStat(0.0, 15, 1.0);
  s.n_robust = 1.0;
  const auto m = build_mixture_prior(s);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_DOUBLE_EQ(m.weight(0), 0.5);
  EXPECT_DOUBLE_EQ(m.weight(1), 0.5);
  EXPECT_NEAR(m.component(0).variance(), 1.0 / 15, 1e-16);
  EXPECT_DOUBLE_EQ(m.component(1).mean(), 0.0);
  EXPECT_DOUBLE_EQ(m.component(1).variance(), 1.0);
}

TEST(BuildMixturePrior, TFormSplitsRobustWeight) {
  MixturePriorSpec s;
  s.w = 0.5;
  s.form = StudentT{3.0, 1.0, 2};
  const auto m = build_mixture_prior(s);
  ASSERT_EQ(m.size(), 3u);
  EXPECT_DOUBLE_EQ(m.weight(0), 0.5);
  EXPECT_DOUBLE_EQ(m.weight(1), 0.25);
  EXPECT_DOUBLE_EQ(m.weight(2), 0.25);
}

TEST(BuildMixturePrior, NormalRobustVarianceIsExact) {
  for (double nr : {1.0 / 400, 1.0 / 25, 0.25, 1.0, 2.0}) {
    MixturePriorSpec s;
    s.external = SufficientStat(0.1, 15, 1.4);
    s.n_robust = nr;
    const auto m = build_mixture_prior(s);
    EXPECT_DOUBLE_EQ(m.component(1).variance(), 1.4 * 1.4 / nr);
  }
}

TEST(BuildMixturePrior, CurrentMeanUsesData) {
  MixturePriorSpec s;
  s.location = CurrentMean{};
  EXPECT_THROW(build_mixture_prior(s), MissingInput);
  const auto m = build_mixture_prior(s, SufficientStat(0.9, 20, 1.0));
  EXPECT_DOUBLE_EQ(m.component(1).mean(), 0.9);
}

TEST(MixturePriorSpec, Validation) {
  MixturePriorSpec s;
  s.w = 1.2;
  try {
    s.validate();
    FAIL() << "expected InvalidArgument";
  } catch (const InvalidArgument& e) {
    EXPECT_EQ(e.field(), "w");
  }
  s.w = 0.5;
  s.n_robust = 0.0;
  EXPECT_THROW(s.validate(), InvalidArgument);
  s.n_robust = 1.0;
  s.form = StudentT{2.0, 1.0, 10};
  EXPECT_THROW(s.validate(), InvalidArgument);
  s.form = StudentT{3.0, 1.0, 0};
  EXPECT_THROW(s.validate(), InvalidArgument);
}

// Every built prior satisfies the mixture invariants.
TEST(BuildMixturePrior, OutputsValidMixtures) {
  for (double w : {0.0, 0.3, 1.0}) {
    for (int k : {1, 5, 100}) {
      MixturePriorSpec s;
      s.w = w;
      s.form = StudentT{3.0, 1.0, k};
      const auto m = build_mixture_prior(s);
      double total = 0.0;
      for (double x : m.weights()) {
        EXPECT_GE(x, 0.0);
        EXPECT_LE(x, 1.0);
        total += x;
      }
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
  }
}

}  // namespace
