#include <gtest/gtest.h>

#include <cmath>

#include "homeo/grid.hpp"

using namespace homeo;

namespace {

// Fetches food when either agent dips below -0.05 and gives it to whoever is
// hungrier; keeps both energies near the setpoint indefinitely.
GridAction shuttle(const GridState& s) {
  if (s.has_food) {
    if (s.possessor_energy < s.partner_energy) return GridAction::kEat;
    return s.possessor_pos == 0 ? GridAction::kPass : GridAction::kLeft;
  }
  if (std::min(s.possessor_energy, s.partner_energy) < -0.05) {
    return s.possessor_pos == 4 ? GridAction::kGet : GridAction::kRight;
  }
  return GridAction::kLeft;
}

}  // namespace

TEST(Grid, ObservationLayout) {
  GridEnv env({}, EmpathyCondition::full());
  env.reset(0);
  env.set_state({3, true, -0.25, 0.5, 0});
  EXPECT_EQ(env.observe(), (Observation{0, 0, 0, 1, 0, 0, 1, -0.25, 0.5}));
  GridEnv blind({}, EmpathyCondition::affective());
  blind.reset(0);
  EXPECT_EQ(blind.observe(), (Observation{1, 0, 0, 0, 0, 1, 0, 0.0}));
  EXPECT_EQ(blind.observation_size(), 8);
}

TEST(Grid, IdleDriftIsLinearAndKillsAt334) {
  GridEnv env({}, EmpathyCondition::none());
  env.reset(0);
  int steps = 0;
  while (!env.finished()) {
    env.step(GridAction::kLeft);
    ++steps;
    EXPECT_NEAR(env.state().possessor_energy, -0.003 * steps, 1e-12);
    EXPECT_NEAR(env.state().partner_energy, -0.003 * steps, 1e-12);
  }
  EXPECT_EQ(steps, 334);
  EXPECT_TRUE(env.last_step().terminated);
}

TEST(Grid, GetOnlyAtFoodCell) {
  GridEnv env({}, EmpathyCondition::none());
  env.reset(0);
  for (int pos = 0; pos < 4; ++pos) {
    env.set_state({pos, false, 0.0, 0.0, 0});
    env.step(GridAction::kGet);
    EXPECT_FALSE(env.state().has_food) << pos;
  }
  env.set_state({4, false, 0.0, 0.0, 0});
  env.step(GridAction::kGet);
  EXPECT_TRUE(env.state().has_food);
}

TEST(Grid, PassOnlyAtPartnerCellWhileCarrying) {
  GridEnv env({}, EmpathyCondition::none());
  env.reset(0);
  env.set_state({1, true, 0.0, -0.5, 0});
  auto s = env.step(GridAction::kPass);
  EXPECT_TRUE(env.state().has_food);
  EXPECT_FALSE(s.info.partner_fed);
  env.set_state({0, true, 0.0, -0.5, 0});
  s = env.step(GridAction::kPass);
  EXPECT_FALSE(env.state().has_food);
  EXPECT_TRUE(s.info.partner_fed);
  EXPECT_DOUBLE_EQ(s.info.partner_energy_before, -0.5);
  EXPECT_NEAR(env.state().partner_energy, -0.5 + 0.1 - 0.003, 1e-12);
  env.set_state({0, false, 0.0, -0.5, 0});
  s = env.step(GridAction::kPass);
  EXPECT_FALSE(s.info.partner_fed);
}

TEST(Grid, EatConsumesCarriedFood) {
  GridEnv env({}, EmpathyCondition::none());
  env.reset(0);
  env.set_state({2, true, -0.2, 0.0, 0});
  auto s = env.step(GridAction::kEat);
  EXPECT_TRUE(s.info.possessor_ate);
  EXPECT_NEAR(env.state().possessor_energy, -0.2 + 0.097, 1e-12);
  s = env.step(GridAction::kEat);
  EXPECT_FALSE(s.info.possessor_ate);
}

TEST(Grid, WallsClamp) {
  GridEnv env({}, EmpathyCondition::none());
  env.reset(0);
  env.step(GridAction::kLeft);
  EXPECT_EQ(env.state().possessor_pos, 0);
  env.set_state({4, false, 0.0, 0.0, 0});
  env.step(GridAction::kRight);
  EXPECT_EQ(env.state().possessor_pos, 4);
}

TEST(Grid, RewardUsesBetaHundred) {
  GridEnv env({}, EmpathyCondition::none());
  env.reset(0);
  env.set_state({0, false, -0.1, 0.0, 0});
  const auto s = env.step(GridAction::kLeft);
  EXPECT_NEAR(s.reward, 100.0 * (0.01 - 0.103 * 0.103), 1e-12);
  GridEnv aff({}, EmpathyCondition::affective());
  aff.reset(0);
  aff.set_state({0, false, -0.1, -0.2, 0});
  const auto a = aff.step(GridAction::kLeft);
  EXPECT_NEAR(a.reward, 100.0 * ((0.01 + 0.5 * 0.04) - (0.103 * 0.103 + 0.5 * 0.203 * 0.203)), 1e-12);
}

TEST(Grid, OverfeedingAlsoTerminates) {
  GridEnv env({}, EmpathyCondition::none());
  env.reset(0);
  env.set_state({0, true, 0.95, 0.0, 0});
  EXPECT_TRUE(env.step(GridAction::kEat).terminated);
}

TEST(Grid, ScriptedShuttleSurvivesToTheCap) {
  GridEnv env({}, EmpathyCondition::none());
  env.reset(0);
  double lowest = 0.0;
  while (!env.finished()) {
    env.step(shuttle(env.state()));
    lowest = std::min({lowest, env.state().possessor_energy, env.state().partner_energy});
  }
  EXPECT_TRUE(env.last_step().truncated);
  EXPECT_EQ(env.elapsed_steps(), 2000);
  EXPECT_GT(lowest, -0.3);
}

TEST(Grid, GenericStepMatchesTyped) {
  GridEnv a({}, EmpathyCondition::full()), b({}, EmpathyCondition::full());
  a.reset(0);
  b.reset(0);
  for (int t = 0; t < 50; ++t) {
    const int act = (t * 7) % 5;
    const auto ra = a.step(std::span<const int>(&act, 1));
    const auto rb = b.step(static_cast<GridAction>(act));
    EXPECT_EQ(ra.observations[0], rb.observation);
    EXPECT_EQ(ra.rewards[0], rb.reward);
  }
}
