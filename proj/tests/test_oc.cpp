#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "rmp/oc.hpp"

namespace {

using namespace rmp;

constexpr std::uint64_t kReps = 200000;
const double kSigmaExt = 1.0 / std::sqrt(15.0);

OneArmScenario one_arm(double w, LocationPolicy loc = ExternalMean{}, std::optional<double> robust_var = std::nullopt) {
  OneArmScenario s;
  s.id = "test_one_arm";
  s.prior.w = w;
  s.prior.location = loc;
  s.prior.robust_variance = robust_var;
  s.reps = kReps;
  s.seed = 42;
  return s;
}

HybridScenario hybrid(double w, LocationPolicy loc = ExternalMean{}, std::optional<double> robust_var = std::nullopt) {
  HybridScenario s;
  s.id = "test_hybrid";
  s.prior.w = w;
  s.prior.location = loc;
  s.prior.robust_variance = robust_var;
  s.reps = kReps;
  s.seed = 43;
  return s;
}

double z_test_power_oracle(double effect_se, double level) {
  // Upper quantile by bisection on the series CDF.
  double lo = -10, hi = 10;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (oracle::normal_cdf_series(mid) < 1 - level ? lo : hi) = mid;
  }
  return oracle::normal_cdf_series(effect_se - 0.5 * (lo + hi));
}

TEST(OneArm, FlatRobustNoBorrowingIsZTest) {
  const auto s = one_arm(0.0, NullBoundary{0.0}, 400.0);
  const double tie = one_arm_tie(s, 0.0);
  EXPECT_NEAR(tie, 0.025, 3 * mc_standard_error(0.025, kReps));
  const double exact_power = z_test_power_oracle(0.5 * std::sqrt(20.0), 0.025);
  EXPECT_NEAR(exact_power, 0.609, 0.001);
  EXPECT_NEAR(one_arm_power(s, 0.0), exact_power, 3 * mc_standard_error(exact_power, kReps));
}

TEST(OneArm, FlatRobustRegionIsZTestRegion) {
  const auto s = one_arm(0.0, NullBoundary{0.0}, 400.0);
  const auto region = one_arm_rejection_region(s, 0.0);
  ASSERT_EQ(region.size(), 1u);
  EXPECT_TRUE(std::isinf(region[0].hi));
  // Nearly flat prior: the cut-off approaches theta0 + z sigma / sqrt(n).
  EXPECT_NEAR(region[0].lo, 1.959963984540054 / std::sqrt(20.0), 2e-3);
}

// With a fixed robust location the prior does not depend on the data, so the
// normal likelihood ratio is monotone and the posterior tail falls with ybar:
// the region is a single half-line at every bias.
TEST(OneArm, FixedLocationRegionIsHalfLine) {
  for (LocationPolicy loc : {LocationPolicy{ExternalMean{}}, LocationPolicy{NullBoundary{0.0}}}) {
    for (double w : {0.25, 0.5, 0.9}) {
      const auto s = one_arm(w, loc, 1.0);
      for (double b = -30.0; b <= 30.0; b += 2.5) {
        const auto region = one_arm_rejection_region(s, b * kSigmaExt);
        ASSERT_EQ(region.size(), 1u) << location_name(loc) << " w " << w << " bias " << b;
        EXPECT_TRUE(std::isinf(region[0].hi));
        // Scan oracle: exactly one sign change of tail - alpha.
        PosteriorKernel k(s.prior_at(b * kSigmaExt), 0.05);
        int changes = 0;
        bool prev = false;
        for (double y = -3.0; y <= 3.0; y += 1e-3) {
          k.update(y);
          const bool rej = k.tail(0.0) <= s.alpha;
          if (y > -3.0 && rej != prev) ++changes;
          prev = rej;
        }
        EXPECT_EQ(changes, 1);
      }
    }
  }
}

TEST(RejectionRegion, ResolvesSeveralPieces) {
  // sin(pi x / 2) <= 0 on [-2, 0] and [2, 4]; the second piece meets the window edge.
  auto tail = [](double x) { return 0.5 + 0.4 * std::sin(std::numbers::pi * x / 2.0); };
  const auto r = rejection_region(tail, 0.5, -3.5, 3.5, 200);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_NEAR(r[0].lo, -2.0, 1e-10);
  EXPECT_NEAR(r[0].hi, 0.0, 1e-10);
  EXPECT_NEAR(r[1].lo, 2.0, 1e-10);
  EXPECT_TRUE(std::isinf(r[1].hi));
  EXPECT_NEAR(region_probability(r, 0.0, 1.0),
              oracle::normal_cdf_series(0.0) - oracle::normal_cdf_series(-2.0) + 1 - oracle::normal_cdf_series(2.0), 1e-12);
}

TEST(OneArm, MonteCarloAgreesWithRegionProbability) {
  for (LocationPolicy loc : {LocationPolicy{ExternalMean{}}, LocationPolicy{NullBoundary{0.0}}, LocationPolicy{CurrentMean{}}}) {
    const auto s = one_arm(0.5, loc, 1.0);
    for (double b : {-4.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0}) {
      const double det = one_arm_tie_deterministic(s, b * kSigmaExt);
      const double mc = one_arm_tie(s, b * kSigmaExt);
      EXPECT_NEAR(mc, det, 3.5 * mc_standard_error(det, kReps) + 1e-6) << location_name(loc) << " bias " << b;
      const double pdet = one_arm_power_deterministic(s, b * kSigmaExt);
      EXPECT_NEAR(one_arm_power(s, b * kSigmaExt), pdet, 3.5 * mc_standard_error(pdet, kReps) + 1e-6);
    }
  }
}

TEST(OneArm, PowerAtLeastTie) {
  const auto s = one_arm(0.5, ExternalMean{}, 1.0);
  for (double b : {-3.0, 0.0, 2.0, 6.0}) {
    EXPECT_GE(one_arm_power_deterministic(s, b * kSigmaExt), one_arm_tie_deterministic(s, b * kSigmaExt));
  }
}

TEST(OneArm, PowerTendsToOne) {
  auto s = one_arm(0.5, ExternalMean{}, 1.0);
  s.theta1 = 5.0;
  EXPECT_GT(one_arm_power_deterministic(s, 0.0), 1 - 1e-12);
}

TEST(OneArm, ExternalMeanTieRisesWithoutBound) {
  const auto s = one_arm(0.5, ExternalMean{}, 1.0);
  double prev = 0.0;
  for (double b = 10.0; b <= 30.0; b += 5.0) {
    const double t = one_arm_tie_deterministic(s, b * kSigmaExt);
    EXPECT_GT(t, prev);
    prev = t;
  }
  // Far out only the robust component N(b, 1) counts, so the test rejects
  // when (20 ybar + b) / 21 > z / sqrt(21).
  auto robust_only = [](double b) {
    const double cut = (1.959963984540054 * std::sqrt(21.0) - b) / 20.0;
    return 1 - oracle::normal_cdf_series(cut * std::sqrt(20.0));
  };
  EXPECT_NEAR(prev, robust_only(30 * kSigmaExt), 1e-6);
  // The TIE passes one half once b exceeds z sqrt(21), about 34.8 sigma_ext.
  EXPECT_LT(one_arm_tie_deterministic(s, 34 * kSigmaExt), 0.5);
  EXPECT_GT(one_arm_tie_deterministic(s, 36 * kSigmaExt), 0.5);
  EXPECT_NEAR(one_arm_tie_deterministic(s, 60 * kSigmaExt), robust_only(60 * kSigmaExt), 1e-6);
  EXPECT_GT(one_arm_tie_deterministic(s, 120 * kSigmaExt), 0.999);
}

TEST(OneArm, CurrentMeanCapLimit) {
  const auto s = one_arm(0.5, CurrentMean{}, 1.0);
  const double limit = 1 - oracle::normal_cdf_series(1.959963984540054 * std::sqrt(20.0 / 21.0));
  EXPECT_NEAR(limit, 0.0279, 1e-4);
  EXPECT_NEAR(one_arm_tie_deterministic(s, 30 * kSigmaExt), limit, 1e-4);
}

TEST(OneArm, LocationMattersLittleForFlatRobust) {
  std::vector<OneArmScenario> ss{one_arm(0.5, ExternalMean{}, 400.0), one_arm(0.5, NullBoundary{0.0}, 400.0),
                                 one_arm(0.5, CurrentMean{}, 400.0)};
  for (double b = -4.0; b <= 4.0; b += 0.5) {
    std::vector<double> t;
    for (const auto& s : ss) t.push_back(one_arm_tie_deterministic(s, b * kSigmaExt));
    EXPECT_LE(*std::max_element(t.begin(), t.end()) - *std::min_element(t.begin(), t.end()), 0.005) << "bias " << b;
  }
}

TEST(OneArm, RmseIdentityEstimator) {
  const auto s = one_arm(0.0, CurrentMean{}, 1.0);
  const auto r = one_arm_rmse(s, 1.0, 0.0);
  // Posterior mean is ybar, so the standardized RMSE is the MC estimate of 1.
  EXPECT_NEAR(r.standardized, 1.0, 0.01);
}

TEST(OneArm, RmseBorrowingHelpsWithoutBias) {
  const auto s = one_arm(1.0, ExternalMean{}, 1.0);
  const auto r = one_arm_rmse(s, 0.0, 0.0);
  // Closed form: shrinkage estimator with weight n_ext / (n + n_ext) on 0.
  const double shrink = 20.0 / 35.0;
  EXPECT_NEAR(r.standardized, shrink, 0.01);
  EXPECT_LT(r.standardized, 1.0);
}

TEST(OneArm, RmseGrowsWithExternalMeanConflict) {
  const auto s = one_arm(0.5, ExternalMean{}, 1.0);
  double prev = 0.0;
  for (double b : {10.0, 20.0, 40.0}) {
    const double r = one_arm_rmse(s, b * kSigmaExt, 0.0).standardized;
    EXPECT_GT(r, prev);
    prev = r;
  }
}

TEST(OneArm, CalibratedBaseline) {
  const auto s = one_arm(0.0);
  EXPECT_NEAR(calibrated_power_no_borrowing(0.025, s), z_test_power_oracle(0.5 * std::sqrt(20.0), 0.025), 1e-12);
  EXPECT_DOUBLE_EQ(calibrated_power_no_borrowing(1.0, s), 1.0);
  double prev = 0.0;
  for (double a = 0.001; a < 1.0; a += 0.01) {
    const double p = calibrated_power_no_borrowing(a, s);
    EXPECT_GT(p, prev);
    prev = p;
  }
  EXPECT_THROW(calibrated_power_no_borrowing(0.0, s), InvalidArgument);
}

TEST(OneArm, ScenarioValidation) {
  auto s = one_arm(0.5);
  s.theta1 = -1.0;
  EXPECT_THROW(s.validate(), InvalidArgument);
  s = one_arm(0.5);
  s.alpha = 1.0;
  EXPECT_THROW(s.validate(), InvalidArgument);
}

TEST(OneArm, ExactTMatchesMixtureRegion) {
  auto s = one_arm(0.5);
  s.prior.form = StudentT{3.0, 1.0, 100};
  for (double b : {0.0, 2.0, 4.0, 8.0}) {
    EXPECT_NEAR(one_arm_exact_t_tie(s, b * kSigmaExt), one_arm_tie_deterministic(s, b * kSigmaExt), 0.003);
  }
}

TEST(Hybrid, NoBorrowingIsTwoSampleZTest) {
  auto s = hybrid(0.0, ExternalMean{}, 400.0);
  EXPECT_NEAR(hybrid_tie(s, 0.0), 0.025, 3 * mc_standard_error(0.025, kReps));
  const double exact = z_test_power_oracle(0.83 / std::sqrt(0.1), 0.025);
  EXPECT_NEAR(calibrated_power_no_borrowing(0.025, s), exact, 1e-12);
  EXPECT_NEAR(exact, 0.7469, 1e-4);
  // Almost flat control prior; power matches the z-test up to MC error.
  EXPECT_NEAR(hybrid_power(s, 0.0), exact, 3 * mc_standard_error(exact, kReps) + 1e-3);
}

TEST(Hybrid, PowerIncreasesWithEffect) {
  auto s = hybrid(0.5, ExternalMean{}, 1.0);
  double prev = 0.0;
  for (double e : {0.3, 0.6, 0.9, 1.2}) {
    s.theta1 = e;
    const double p = hybrid_power(s, 0.0);
    EXPECT_GT(p, prev);
    prev = p;
  }
}

TEST(Hybrid, BorrowingGainsPowerWithoutBias) {
  EXPECT_GT(hybrid_power(hybrid(0.5, ExternalMean{}, 1.0), 0.0), 0.75);
}

TEST(Hybrid, NullBoundaryRejected) {
  auto s = hybrid(0.5, NullBoundary{0.0});
  EXPECT_THROW(s.validate(), InvalidArgument);
}

TEST(Hybrid, TreatmentUnitInfoCapsTieOnlyWhenBalanced) {
  auto bal = hybrid(0.5, ExternalMean{}, 1.0);
  bal.treatment_prior = TreatmentPrior::UnitInfoAtExternalMean;
  auto flat = bal;
  flat.treatment_prior = TreatmentPrior::Flat;
  const double big = 3.0;
  EXPECT_LT(hybrid_tie(bal, big), 0.1);
  EXPECT_GT(hybrid_tie(flat, big), hybrid_tie(bal, big));
  auto unbal = bal;
  unbal.n_t = 40;
  EXPECT_GT(hybrid_tie(unbal, 6.0), hybrid_tie(bal, 6.0));
}

TEST(Hybrid, CalibratedBaselineEdge) {
  const auto s = hybrid(0.5);
  EXPECT_DOUBLE_EQ(calibrated_power_no_borrowing(1.0, s), 1.0);
}

TEST(Hybrid, ThreadCountDoesNotChangeResults) {
  auto s = hybrid(0.5, CurrentMean{}, 1.0);
  s.reps = 50000;
  const auto a = hybrid_simulate(s, 0.2, 0.0, Exec{.threads = 1, .chunk = 4096});
  const auto b = hybrid_simulate(s, 0.2, 0.0, Exec{.threads = 3, .chunk = 4096});
  EXPECT_EQ(a.reject_rate, b.reject_rate);
  EXPECT_EQ(a.w_tilde_mean, b.w_tilde_mean);
}

TEST(Hybrid, CommonRandomNumbersAcrossBias) {
  // The same replication draws are used at every bias: with w = 0 the decision
  // does not depend on the external mean, so TIE is identical.
  const auto s = hybrid(0.0, CurrentMean{}, 1.0);
  EXPECT_EQ(hybrid_tie(s, -1.0), hybrid_tie(s, 2.0));
}

TEST(SweetSpot, CurrentMeanHalfWeightIsNonEmpty) {
  auto s = hybrid(0.5, CurrentMean{}, 1.0);
  s.reps = 100000;
  for (double b = -0.6; b <= 0.6001; b += 0.1) s.bias_grid.push_back(b);
  const auto spot = sweet_spot(s);
  ASSERT_FALSE(spot.empty);
  EXPECT_LE(spot.lower, spot.upper);
  EXPECT_GE(spot.argmax_bias, spot.lower);
  EXPECT_LE(spot.argmax_bias, spot.upper);
  EXPECT_GT(spot.max_power, 0.75);
  EXPECT_TRUE(spot.contiguous);
}

TEST(SweetSpot, NoBorrowingHasNoMaterialGain) {
  auto s = hybrid(0.0, ExternalMean{}, 400.0);
  s.reps = 100000;
  for (double b = -0.5; b <= 0.5001; b += 0.25) s.bias_grid.push_back(b);
  const auto spot = sweet_spot(s);
  EXPECT_LE(spot.max_gain(), 3 * mc_standard_error(0.75, s.reps));
}

TEST(DeltaSummary, GainsShrinkAsDeltaGrows) {
  auto s = hybrid(0.5, ExternalMean{}, 1.0);
  s.reps = 100000;
  double prev = 1.0;
  for (double d : {0.1, 0.2, 0.4}) {
    const auto r = delta_restricted_summary(s, d, {}, 10);
    EXPECT_LT(r.max_power_gain, prev);
    EXPECT_EQ(r.curve.size(), 21u);
    prev = r.max_power_gain;
  }
  EXPECT_THROW(delta_restricted_summary(s, 0.0), InvalidArgument);
}

TEST(AverageOc, PointDesignReducesToFixedControl) {
  const auto s = hybrid(0.5, ExternalMean{}, 1.0);
  const auto design = DesignPrior::point(0.3);
  EXPECT_EQ(average_tie(s, design, 0.0), hybrid_tie(s, 0.3));
}

TEST(AverageOc, MatchingDesignControlsLevel) {
  // Each design is paired with the analysis prior it equals: w = 1, w = 0.5, w = 0.
  const auto s = hybrid(0.5, ExternalMean{}, 1.0);
  const std::vector<std::pair<DesignPrior, double>> cases{
      {DesignPrior::informative(s), 1.0}, {DesignPrior::rmp(s), 0.5}, {DesignPrior::unit_info(s), 0.0}};
  for (const auto& [d, w] : cases) {
    auto a = s;
    a.prior.w = w;
    EXPECT_NEAR(average_tie(a, d, 0.0), 0.025, 0.003) << d.name;
  }
}

TEST(WeightPropagation, BoundaryColumnsAndLargeBias) {
  auto s = one_arm(0.5, ExternalMean{}, 1.0);
  s.reps = 20000;
  const auto r = weight_propagation(s, {0.0, 0.5, 1.0}, {0.0, 2 * kSigmaExt, 8 * kSigmaExt});
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_DOUBLE_EQ(r.mc_mean[0][j], 0.0);
    EXPECT_DOUBLE_EQ(r.mc_mean[2][j], 1.0);
    EXPECT_DOUBLE_EQ(r.at_expected_data[0][j], 0.0);
  }
  EXPECT_LT(r.mc_mean[1][2], 0.05);
  EXPECT_GT(r.mc_mean[1][0], r.mc_mean[1][1]);
}

TEST(WeightPropagation, LindleyContrast) {
  auto flat = one_arm(0.5, ExternalMean{}, 400.0);
  flat.reps = 50000;
  auto unit = one_arm(0.5, ExternalMean{}, 1.0);
  unit.reps = 50000;
  const auto a = weight_propagation(flat, {0.5}, {0.0, 2 * kSigmaExt});
  const auto b = weight_propagation(unit, {0.5}, {2 * kSigmaExt});
  EXPECT_GT(a.mc_mean[0][0], 0.9);
  EXPECT_GT(a.mc_mean[0][1], 0.9);
  EXPECT_LT(b.mc_mean[0][0], 0.6);
}

}  // namespace
