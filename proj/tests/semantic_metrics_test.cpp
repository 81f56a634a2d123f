#include "issc/semantic_metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "issc/linalg.hpp"
#include "oracles.hpp"

using namespace issc;

using oracle::random_profile;

TEST(Bleu, UncompressedPerfectPrecisionIsOne) {
  EXPECT_NEAR(bleu(SemanticProfile::uniform(4, 1.0, 0.5), 1.0), 1.0, 1e-15);
}

TEST(Bleu, GeometricMeanOfPrecisions) {
  const double direct = std::pow(0.8, 0.25) * std::pow(0.8, 0.25) * std::pow(0.8, 0.25) * std::pow(0.8, 0.25);
  EXPECT_NEAR(bleu(SemanticProfile::uniform(4, 0.8, 0.5), 1.0), direct, 1e-15);
  EXPECT_NEAR(direct, 0.8, 1e-15);
}

TEST(Bleu, VanishesUnderHeavyCompression) {
  const auto p = SemanticProfile::uniform(4, 0.9, 0.5);
  EXPECT_LT(bleu(p, 1e-3), 1e-300);
  EXPECT_LT(bleu(p, 0.05), std::exp(1.0 - 20.0));
}

TEST(Bleu, BrevityPenaltyOracle) {
  SemanticProfile p{{0.1, 0.2, 0.3, 0.4}, {0.95, 0.9, 0.7, 0.6}, 0.3};
  for (double rho : {0.2, 0.5, 0.77, 1.0}) {
    double prod = std::exp(1.0 - 1.0 / rho);
    for (int g = 0; g < 4; ++g) prod *= std::pow(p.precisions[g], p.weights[g]);
    EXPECT_NEAR(bleu(p, rho), prod, 1e-14);
  }
}

TEST(Bleu, RejectsNonPositiveRatio) {
  const auto p = SemanticProfile::uniform(4, 0.9, 0.5);
  EXPECT_THROW(bleu(p, 0.0), DomainError);
  EXPECT_THROW(bleu(p, -0.1), DomainError);
}

TEST(Bleu, StrictlyIncreasingInRatio) {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 200; ++rep) {
    const auto p = random_profile(rng);
    double prev = 0.0;
    for (int i = 1; i <= 100; ++i) {
      const double v = bleu(p, i / 100.0);
      EXPECT_GT(v, prev);
      prev = v;
    }
    EXPECT_LE(prev, 1.0);
  }
}

TEST(RhoLowerBound, ExactFloorGivesOne) {
  SemanticProfile p = SemanticProfile::uniform(4, 0.8, 0.8);
  EXPECT_NEAR(rho_lower_bound(p), 1.0, 1e-12);
}

TEST(RhoLowerBound, WorkedValue) {
  const auto p = SemanticProfile::uniform(4, 0.9, 0.5);
  const double expect = 1.0 / (1.0 - std::log(0.5) + std::log(0.9));
  EXPECT_NEAR(rho_lower_bound(p), expect, 1e-14);
  EXPECT_NEAR(expect, 0.6298, 1e-4);
  EXPECT_NEAR(bleu(p, rho_lower_bound(p)), 0.5, 1e-12);
}

TEST(RhoLowerBound, SmallFloorAllowsHeavyCompression) {
  EXPECT_LT(rho_lower_bound(SemanticProfile::uniform(4, 0.9, 1e-30)), 0.015);
  EXPECT_GT(rho_lower_bound(SemanticProfile::uniform(4, 0.9, 1e-30)), 0.0);
}

TEST(RhoLowerBound, RoundTripOnRandomProfiles) {
  std::mt19937_64 rng(2024);
  for (int rep = 0; rep < 1000; ++rep) {
    const auto p = random_profile(rng);
    const double r = rho_lower_bound(p);
    ASSERT_GT(r, 0.0);
    ASSERT_LE(r, 1.0);
    EXPECT_NEAR(bleu(p, r), p.quality_floor, 1e-9);
  }
}

TEST(RhoLowerBound, UserOneNeedsLargerRatio) {
  EXPECT_GT(rho_lower_bound(SemanticProfile::uniform(4, 0.8, 0.5)),
            rho_lower_bound(SemanticProfile::uniform(4, 0.9, 0.5)));
}

TEST(Profile, ValidateRejectsMalformed) {
  EXPECT_THROW((SemanticProfile{{0.5, 0.4}, {0.9, 0.9}, 0.5}).validate(), DomainError);
  EXPECT_THROW((SemanticProfile{{0.5, 0.5}, {0.9}, 0.5}).validate(), DomainError);
  EXPECT_THROW((SemanticProfile{{0.5, 0.5}, {0.9, 1.2}, 0.5}).validate(), DomainError);
  EXPECT_THROW((SemanticProfile{{1.5, -0.5}, {0.9, 0.9}, 0.5}).validate(), DomainError);
  EXPECT_THROW((SemanticProfile{{1.0}, {0.9}, 0.0}).validate(), DomainError);
  // Floor above the uncompressed score.
  EXPECT_THROW((SemanticProfile{{1.0}, {0.6}, 0.7}).validate(), DomainError);
  EXPECT_THROW(rho_lower_bound(SemanticProfile{{1.0}, {0.6}, 0.7}), DomainError);
}

TEST(SemanticRate, Examples) {
  EXPECT_NEAR(semantic_rate(1.0, 1.0), 1.0, 1e-15);
  EXPECT_NEAR(semantic_rate(0.5, 3.0), 4.0, 1e-15);
  EXPECT_NEAR(semantic_rate(0.6298, 15.0), 4.0 / 0.6298, 1e-12);
  EXPECT_NEAR(semantic_rate(0.6298, 15.0), 6.352, 1e-3);
  EXPECT_THROW(semantic_rate(0.0, 1.0), DomainError);
}

TEST(SemanticRate, LinearInInverseRatio) {
  for (double s : {0.0, 0.3, 2.0, 100.0})
    for (double rho : {0.1, 0.5, 0.9}) EXPECT_NEAR(semantic_rate(rho, s), semantic_rate(1.0, s) / rho, 1e-12);
}

TEST(ComputationPower, Examples) {
  const std::vector<double> ones{1.0, 1.0};
  EXPECT_EQ(computation_power(10.0, ones), 0.0);
  const std::vector<double> half{0.5};
  EXPECT_NEAR(computation_power(10.0, half), 10.0 * std::log(2.0), 1e-14);
  EXPECT_NEAR(computation_power(10.0, half), 6.931, 1e-3);
  const std::vector<double> halves{0.5, 0.5};
  EXPECT_NEAR(computation_power(10.0, halves), 13.863, 1e-3);
  const std::vector<double> bad{0.5, 0.0};
  EXPECT_THROW(computation_power(10.0, bad), DomainError);
}

TEST(ComputationPower, AdditiveAndDecreasing) {
  const std::vector<double> a{0.7}, b{0.4}, ab{0.7, 0.4};
  EXPECT_NEAR(computation_power(3.0, ab), computation_power(3.0, a) + computation_power(3.0, b), 1e-14);
  const std::vector<double> c{0.71};
  EXPECT_LT(computation_power(3.0, c), computation_power(3.0, a));
}

TEST(PowerCheck, Examples) {
  EXPECT_TRUE(power_check({0.0, 0.0, 3.16}));
  EXPECT_FALSE(power_check({6.93, 0.0, 3.16}));
  EXPECT_TRUE(power_check({1.0, 2.0, 3.16}));
  EXPECT_TRUE(power_check({1.0, 2.16, 3.16}));
}
