#include "issc/array_channel.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace issc;

namespace {

Scenario one_user(int n, double gain, double angle, double alpha, double target_angle) {
  Scenario s;
  s.geometry.n_antennas = n;
  s.cu_angles = {angle};
  s.cu_gains = {gain};
  s.target_angles = {target_angle};
  s.target_gains_alpha = {alpha};
  s.target_gains_beta = {alpha};
  s.semantic_profiles = {SemanticProfile::uniform(4, 0.9, 0.5)};
  return s;
}

CMat random_psd(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CMat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = cdouble(g(rng), g(rng));
  return a * a.adjoint();
}

}  // namespace

TEST(SteeringVector, BroadsideIsAllOnes) {
  ArrayGeometry g{4, 0.5};
  const CVec a = steering_vector(g, 0.0);
  for (int m = 0; m < 4; ++m) EXPECT_NEAR(std::abs(a(m) - cdouble(1.0, 0.0)), 0.0, 1e-15);
}

TEST(SteeringVector, EndfireHalfWavelengthAlternates) {
  ArrayGeometry g{2, 0.5};
  const CVec a = steering_vector(g, kPi / 2);
  EXPECT_NEAR(std::abs(a(0) - cdouble(1.0, 0.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(a(1) - cdouble(-1.0, 0.0)), 0.0, 1e-12);
}

TEST(SteeringVector, MatchesElementwiseExponential) {
  ArrayGeometry g{18, 0.5};
  const double th = deg_to_rad(5.0);
  const CVec a = steering_vector(g, th);
  for (int m = 0; m < 18; ++m) {
    const double phase = 2.0 * kPi * m * 0.5 * std::sin(th);
    EXPECT_NEAR(std::abs(a(m) - std::polar(1.0, phase)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(a(m)), 1.0, 1e-15);
  }
  EXPECT_NEAR(a.squaredNorm(), 18.0, 1e-12);
}

TEST(SteeringVector, RejectsAnglesOutsideHalfPlane) {
  ArrayGeometry g{4, 0.5};
  EXPECT_THROW(steering_vector(g, kPi / 2 + 1e-3), DomainError);
  EXPECT_THROW(steering_vector(g, -kPi), DomainError);
}

TEST(Geometry, Validate) {
  EXPECT_THROW((ArrayGeometry{1, 0.5}).validate(), DomainError);
  EXPECT_THROW((ArrayGeometry{4, 0.0}).validate(), DomainError);
  EXPECT_NO_THROW((ArrayGeometry{2, 0.5}).validate());
}

TEST(Channels, CuChannelScalesSteeringVector) {
  Scenario s = one_user(2, 1.0, 0.0, 1.0, 0.3);
  const CVec h = cu_channel(s, 0);
  EXPECT_NEAR(std::abs(h(0) - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(h(1) - 1.0), 0.0, 1e-15);

  s = one_user(18, 0.0025, deg_to_rad(-30.0), 0.003, 0.0);
  const CVec h2 = cu_channel(s, 0);
  const CVec ref = 0.05 * steering_vector(s.geometry, deg_to_rad(-30.0));
  EXPECT_LT((h2 - ref).norm(), 1e-14);

  s = one_user(7, 0.01, 0.7, 0.003, 0.0);
  EXPECT_NEAR(cu_channel(s, 0).squaredNorm(), 0.07, 1e-14);
  EXPECT_THROW(cu_channel(s, 1), std::out_of_range);
}

TEST(Channels, TargetChannel) {
  Scenario s = one_user(3, 0.01, 0.2, 1.0, 0.0);
  const CVec h = target_channel(s, 0);
  for (int m = 0; m < 3; ++m) EXPECT_NEAR(std::abs(h(m) - 1.0), 0.0, 1e-15);

  s = one_user(18, 0.01, 0.2, 0.003, deg_to_rad(45.0));
  EXPECT_NEAR(target_channel(s, 0).squaredNorm(), 0.003 * 0.003 * 18, 1e-15);
  EXPECT_THROW(target_channel(s, 3), std::out_of_range);

  // Same construction as a CU with power gain α².
  Scenario c = one_user(18, 0.003 * 0.003, deg_to_rad(45.0), 0.003, deg_to_rad(45.0));
  EXPECT_LT((target_channel(c, 0) - cu_channel(c, 0)).norm(), 1e-15);
}

TEST(Channels, RayleighIsDeterministicPerSeed) {
  Scenario s = one_user(6, 0.004, 0.1, 0.003, 0.0);
  s.cu_angles.push_back(-0.4);
  s.cu_gains.push_back(0.004);
  s.semantic_profiles.push_back(s.semantic_profiles[0]);
  s.channel_model = ChannelModel::rayleigh;
  s.seed = 77;
  const CVec a = cu_channel(s, 0);
  EXPECT_EQ(a, cu_channel(s, 0));
  EXPECT_GT((a - cu_channel(s, 1)).norm(), 1e-6);
  s.seed = 78;
  EXPECT_GT((a - cu_channel(s, 0)).norm(), 1e-6);
}

TEST(ScenarioValidate, RejectsInconsistentScenarios) {
  Scenario s = one_user(4, 0.01, 0.1, 0.003, 0.0);
  EXPECT_NO_THROW(s.validate());
  Scenario bad = s;
  bad.target_angles = {2.0};
  EXPECT_THROW(bad.validate(), DomainError);
  bad = s;
  bad.cu_gains.push_back(0.01);
  EXPECT_THROW(bad.validate(), DomainError);
  bad = s;
  bad.cu_angles.clear();
  bad.cu_gains.clear();
  bad.semantic_profiles.clear();
  EXPECT_THROW(bad.validate(), DomainError);
  bad = s;
  bad.power_budget_mw = 0.0;
  EXPECT_THROW(bad.validate(), DomainError);
  bad = s;
  bad.target_gains_beta = {-1.0};
  EXPECT_THROW(bad.validate(), DomainError);
}

TEST(TransmitCovariance, SumsAllBeams) {
  BeamformerSet zero{{CMat::Zero(3, 3)}, {CMat::Zero(3, 3)}};
  EXPECT_EQ(transmit_covariance(zero).norm(), 0.0);

  BeamformerSet id{{CMat::Identity(2, 2)}, {CMat::Identity(2, 2)}};
  const CMat rx = transmit_covariance(id);
  EXPECT_LT((rx - 2.0 * CMat::Identity(2, 2)).norm(), 1e-15);
  EXPECT_NEAR(trace_real(rx), 4.0, 1e-15);
  EXPECT_NEAR(id.total_power(), 4.0, 1e-15);
}

TEST(TransmitCovariance, RandomPsdStaysPsdAndLinear) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    BeamformerSet b;
    for (int k = 0; k < 2; ++k) b.w_mats.push_back(random_psd(5, rng));
    for (int l = 0; l < 3; ++l) b.r_mats.push_back(random_psd(5, rng));
    EXPECT_NO_THROW(b.validate());
    const CMat rx = transmit_covariance(b);
    CMat oracle = CMat::Zero(5, 5);
    for (const auto& w : b.w_mats) oracle += w;
    for (const auto& r : b.r_mats) oracle += r;
    EXPECT_LT((rx - oracle).norm(), 1e-12 * oracle.norm());
    EXPECT_GE(min_eigenvalue(rx), -1e-10);
    EXPECT_LT((transmit_covariance(b.scaled(2.5)) - 2.5 * rx).norm(), 1e-12 * rx.norm());
  }
}

TEST(BeamformerSet, ValidateRejectsNonHermitianAndIndefinite) {
  CMat w = CMat::Identity(2, 2);
  w(0, 1) = cdouble(0.5, 0.0);
  BeamformerSet b{{w}, {CMat::Identity(2, 2)}};
  EXPECT_THROW(b.validate(), DomainError);
  CMat indef = CMat::Identity(2, 2);
  indef(1, 1) = -0.5;
  BeamformerSet c{{indef}, {CMat::Identity(2, 2)}};
  EXPECT_THROW(c.validate(), DomainError);
}

TEST(Beampattern, IdentityIsFlat) {
  ArrayGeometry g{6, 0.5};
  const auto grid = default_angle_grid();
  for (double v : beampattern(g, CMat::Identity(6, 6), grid)) EXPECT_NEAR(v, 6.0, 1e-12);
}

TEST(Beampattern, CoherentSumAtSteeringAngle) {
  ArrayGeometry g{8, 0.5};
  const CVec a = steering_vector(g, 0.4);
  const std::vector<double> at{0.4};
  EXPECT_NEAR(beampattern(g, a * a.adjoint(), at)[0], 64.0, 1e-10);
}

TEST(Beampattern, NonNegativeForRandomPsd) {
  std::mt19937_64 rng(11);
  ArrayGeometry g{5, 0.5};
  const auto grid = default_angle_grid();
  for (int rep = 0; rep < 10; ++rep)
    for (double v : beampattern(g, random_psd(5, rng), grid)) EXPECT_GE(v, -1e-10);
}

TEST(Beampattern, RejectsNonHermitian) {
  ArrayGeometry g{2, 0.5};
  CMat m = CMat::Identity(2, 2);
  m(0, 1) = cdouble(0.0, 1.0);
  const std::vector<double> at{0.0};
  EXPECT_THROW(beampattern(g, m, at), DomainError);
}

TEST(AngleGrid, OneDegreeSteps) {
  const auto grid = default_angle_grid();
  ASSERT_EQ(grid.size(), 181u);
  EXPECT_NEAR(grid.front(), -kPi / 2, 1e-15);
  EXPECT_NEAR(grid.back(), kPi / 2, 1e-15);
  EXPECT_NEAR(grid[91] - grid[90], deg_to_rad(1.0), 1e-15);
}

TEST(Units, DbmConversion) {
  EXPECT_NEAR(dbm_to_mw(-60.0), 1e-6, 1e-21);
  EXPECT_NEAR(dbm_to_mw(20.0), 100.0, 1e-12);
  EXPECT_NEAR(dbm_to_mw(5.0), 3.1622776601683795, 1e-14);
}
