#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "homeo/homeostasis.hpp"

using namespace homeo;

TEST(Preference, RejectsInvalidMasses) {
  EXPECT_THROW((PreferenceDist(0.5, 0.6)), std::invalid_argument);
  EXPECT_THROW((PreferenceDist(1.0, 0.0)), std::invalid_argument);
  EXPECT_THROW((PreferenceDist(-0.1, 1.1)), std::invalid_argument);
  EXPECT_NO_THROW((PreferenceDist(0.7, 0.3)));
}

TEST(Drive, CategoricalIsNegativeLogPreference) {
  EXPECT_NEAR(drive_categorical(BinaryEnergy::kHigh, kDefaultPreference).value(), -std::log(0.95), 1e-15);
  EXPECT_NEAR(drive_categorical(BinaryEnergy::kLow, kDefaultPreference).value(), -std::log(0.05), 1e-15);
  EXPECT_NEAR(drive_categorical(BinaryEnergy::kHigh, kDefaultPreference).value(), 0.0513, 1e-4);
  EXPECT_NEAR(drive_categorical(BinaryEnergy::kLow, kDefaultPreference).value(), 2.9957, 1e-4);
}

TEST(Drive, QuadraticSetpointAtZero) {
  EXPECT_EQ(drive_quadratic(0.0).value(), 0.0);
  EXPECT_DOUBLE_EQ(drive_quadratic(-0.5).value(), 0.25);
  EXPECT_DOUBLE_EQ(drive_quadratic(0.3).value(), drive_quadratic(-0.3).value());
}

TEST(Drive, RejectsNegativeAndNonFinite) {
  EXPECT_THROW(Drive{-1e-12}, std::invalid_argument);
  EXPECT_THROW(Drive{std::nan("")}, std::invalid_argument);
  EXPECT_THROW(Drive{INFINITY}, std::invalid_argument);
  EXPECT_THROW(RewardScale{0.0}, std::invalid_argument);
}

TEST(Reward, HighToLowCostsTheDriveGap) {
  const auto high = drive_categorical(BinaryEnergy::kHigh, kDefaultPreference);
  const auto low = drive_categorical(BinaryEnergy::kLow, kDefaultPreference);
  EXPECT_NEAR(homeostatic_reward(high, low, RewardScale(1.0)), std::log(0.05 / 0.95), 1e-12);
  EXPECT_NEAR(homeostatic_reward(high, low, RewardScale(1.0)), -2.944, 1e-3);
  EXPECT_NEAR(homeostatic_reward(low, high, RewardScale(1.0)), 2.944, 1e-3);
}

TEST(Reward, QuadraticExample) {
  // 0 -> -0.1 with beta 100: -100 * 0.01 = -1.
  EXPECT_NEAR(homeostatic_reward(drive_quadratic(0.0), drive_quadratic(-0.1), RewardScale(100.0)), -1.0, 1e-12);
}

TEST(Reward, TelescopesOverTrajectories) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double beta = 0.5 + 100.0 * std::abs(u(rng));
    const int len = 1 + static_cast<int>(rng() % 500);
    std::vector<Drive> d;
    for (int t = 0; t <= len; ++t) d.push_back(couple_drives(drive_quadratic(u(rng)), drive_quadratic(u(rng)),
                                                             EmpathyCondition::affective()));
    double sum = 0.0;
    for (int t = 0; t < len; ++t) sum += homeostatic_reward(d[t], d[t + 1], RewardScale(beta));
    EXPECT_NEAR(sum, beta * (d.front().value() - d.back().value()), 1e-9);
  }
}

TEST(Coupling, ConditionsMapToChannels) {
  EXPECT_EQ(EmpathyCondition::none().observe_partner, false);
  EXPECT_EQ(EmpathyCondition::none().coupling_w, 0.0);
  EXPECT_EQ(EmpathyCondition::cognitive().observe_partner, true);
  EXPECT_EQ(EmpathyCondition::cognitive().coupling_w, 0.0);
  EXPECT_EQ(EmpathyCondition::affective().observe_partner, false);
  EXPECT_EQ(EmpathyCondition::affective().coupling_w, 0.5);
  EXPECT_EQ(EmpathyCondition::full().observe_partner, true);
  EXPECT_EQ(EmpathyCondition::full().coupling_w, 0.5);
}

TEST(Coupling, AddsWeightedPartnerDrive) {
  const Drive self(0.2), partner(2.0);
  EXPECT_DOUBLE_EQ(couple_drives(self, partner, EmpathyCondition::none()).value(), 0.2);
  EXPECT_DOUBLE_EQ(couple_drives(self, partner, EmpathyCondition::cognitive()).value(), 0.2);
  EXPECT_DOUBLE_EQ(couple_drives(self, partner, EmpathyCondition::affective()).value(), 1.2);
  EXPECT_DOUBLE_EQ(couple_drives(self, partner, EmpathyCondition::full()).value(), 1.2);
}

TEST(Coupling, ParseIsCaseInsensitiveAndRoundTrips) {
  for (auto kind : {EmpathyKind::kNone, EmpathyKind::kCognitive, EmpathyKind::kAffective, EmpathyKind::kFull}) {
    const auto cond = EmpathyCondition::from_kind(kind);
    auto parsed = parse_condition(cond.name());
    ASSERT_TRUE(parsed.has_value());
    EXPECT_EQ(parsed->kind, kind);
  }
  EXPECT_EQ(parse_condition("AFFECTIVE")->kind, EmpathyKind::kAffective);
  EXPECT_FALSE(parse_condition("sympathy").has_value());
}

TEST(Encoding, HighIsOne) {
  EXPECT_EQ(encode(BinaryEnergy::kHigh), 1.0);
  EXPECT_EQ(encode(BinaryEnergy::kLow), 0.0);
}
