#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <map>
#include <set>

#include "homeo/oracle.hpp"

using namespace homeo;

namespace {

bool partner_low(const FoodShareState& s) { return s.partner_energy == BinaryEnergy::kLow; }

}  // namespace

TEST(Mdp, EnumeratesLiveStatesPlusFailure) {
  const auto mdp = build_mdp(EmpathyCondition::none());
  EXPECT_EQ(mdp.states.size(), 400u);
  EXPECT_EQ(mdp.state_count(), 401);
  EXPECT_EQ(mdp.failure_state, 400);
  for (int s = 0; s < mdp.state_count(); ++s)
    for (int a = 0; a < 2; ++a) {
      double total = 0.0;
      for (const auto& tr : mdp.transitions[s][a]) total += tr.prob;
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
  for (const auto& tr : mdp.transitions[mdp.failure_state][0]) {
    EXPECT_EQ(tr.next, mdp.failure_state);
    EXPECT_EQ(tr.reward, 0.0);
  }
  EXPECT_EQ(mdp.index_of({BinaryEnergy::kLow, BinaryEnergy::kHigh, 10, 0, 0}), mdp.failure_state);
}

TEST(Mdp, ReachableSetMatchesHandCount) {
  // Resets give the 4 zero-counter states; afterwards the action always
  // leaves one agent High, so only (H,H), (H,L1..9), (L1..9,H) follow: 22 live
  // states plus failure.
  const auto mdp = build_mdp(EmpathyCondition::affective());
  const auto reach = reachable_states(mdp);
  EXPECT_EQ(reach.size(), 23u);
  const std::set<int> reachable(reach.begin(), reach.end());
  EXPECT_TRUE(reachable.count(mdp.failure_state));

  // Every state a long random walk in the live environment visits is reachable.
  FoodShareEnv env({}, EmpathyCondition::affective());
  env.reset(5);
  std::mt19937_64 rng(6);
  std::set<int> visited;
  for (int e = 0; e < 3000; ++e) {
    if (e) env.reset();
    visited.insert(mdp.index_of(env.state()));
    while (!env.finished()) {
      env.step(rng() % 2 ? FoodShareAction::kPass : FoodShareAction::kEat);
      FoodShareState key = env.state();
      key.t = 0;
      visited.insert(mdp.index_of(key));
    }
  }
  for (int s : visited) EXPECT_TRUE(reachable.count(s)) << s;
  EXPECT_EQ(visited, reachable);
}

TEST(Mdp, TransitionsAgreeWithEnvironmentFrequencies) {
  const auto mdp = build_mdp(EmpathyCondition::full());
  FoodShareEnv env({}, EmpathyCondition::full());
  env.reset(8);
  const FoodShareState start{BinaryEnergy::kHigh, BinaryEnergy::kHigh, 0, 0, 0};
  const int n = 100000;
  for (auto action : {FoodShareAction::kEat, FoodShareAction::kPass}) {
    std::map<int, int> counts;
    double reward = 0.0;
    for (int i = 0; i < n; ++i) {
      env.set_state(start);
      const auto r = env.step(action);
      FoodShareState key = r.info.after;
      key.t = 0;
      ++counts[mdp.index_of(key)];
      reward += r.reward;
    }
    const int s = mdp.index_of(start);
    for (const auto& tr : mdp.transitions[s][static_cast<int>(action)]) {
      EXPECT_NEAR(counts[tr.next] / double(n), tr.prob, 0.01);
    }
    EXPECT_NEAR(reward / n, mdp.expected_reward[s][static_cast<int>(action)], 0.02);
  }
}

TEST(ValueIteration, SelfishConditionsAlwaysEat) {
  for (auto cond : {EmpathyCondition::none(), EmpathyCondition::cognitive()}) {
    const auto mdp = build_mdp(cond);
    const auto solved = value_iteration(mdp);
    for (std::size_t s = 0; s < mdp.states.size(); ++s) EXPECT_EQ(solved.action[s], FoodShareAction::kEat) << s;
  }
}

TEST(ValueIteration, AffectivePassesToLowPartner) {
  const auto mdp = build_mdp(EmpathyCondition::affective());
  const auto solved = value_iteration(mdp);
  int passes_low = 0;
  for (std::size_t s = 0; s < mdp.states.size(); ++s) {
    if (partner_low(mdp.states[s]) && solved.action[s] == FoodShareAction::kPass) ++passes_low;
  }
  EXPECT_GE(passes_low, 1);
  const int fresh = mdp.index_of({BinaryEnergy::kHigh, BinaryEnergy::kLow, 0, 1, 0});
  EXPECT_EQ(solved.action[fresh], FoodShareAction::kPass);
}

TEST(ValueIteration, SolvesQuickly) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto solved = value_iteration(build_mdp(EmpathyCondition::full()));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(secs, 1.0);
  EXPECT_LT(solved.residual, 1e-10);
}

TEST(ValueIteration, ResidualContractsByGamma) {
  const auto solved = value_iteration(build_mdp(EmpathyCondition::affective()), 0.9);
  ASSERT_GT(solved.residual_history.size(), 2u);
  for (std::size_t k = 1; k < solved.residual_history.size(); ++k) {
    EXPECT_LE(solved.residual_history[k], 0.9 * solved.residual_history[k - 1] + 1e-15);
  }
}

TEST(ValueIteration, SatisfiesBellmanOptimality) {
  const double gamma = 0.99;
  const auto mdp = build_mdp(EmpathyCondition::full());
  const auto solved = value_iteration(mdp, gamma);
  for (int s = 0; s < mdp.state_count(); ++s) {
    double best = -INFINITY;
    for (int a = 0; a < 2; ++a) {
      double q = 0.0;
      for (const auto& tr : mdp.transitions[s][a]) q += tr.prob * (tr.reward + gamma * solved.value[tr.next]);
      EXPECT_NEAR(q, solved.q[s][a], 1e-8);
      best = std::max(best, q);
    }
    EXPECT_NEAR(solved.value[s], best, 1e-8);
  }
}

TEST(ValueIteration, MyopicGreedyMatchesHandComputedRewards) {
  // gamma = 0 reduces to maximizing the expected one-step reward, which we
  // enumerate here directly from the decay probabilities.
  const double dh = -std::log(0.95), dl = -std::log(0.05), p = 0.1, w = 0.5;
  const auto mdp = build_mdp(EmpathyCondition::affective());
  const auto solved = value_iteration(mdp, 0.0);
  auto drive = [&](BinaryEnergy e) { return e == BinaryEnergy::kHigh ? dh : dl; };
  for (std::size_t s = 0; s < mdp.states.size(); ++s) {
    const auto& st = mdp.states[s];
    if (st.possessor_low_steps == 9 || st.partner_low_steps == 9) continue;  // failure transitions
    const double before = drive(st.possessor_energy) + w * drive(st.partner_energy);
    // EAT: possessor High; partner decays w.p. p if High.
    const double partner_low_after = st.partner_energy == BinaryEnergy::kLow ? 1.0 : p;
    const double eat = before - (dh + w * (partner_low_after * dl + (1 - partner_low_after) * dh));
    const double me_low_after = st.possessor_energy == BinaryEnergy::kLow ? 1.0 : p;
    const double pass = before - (me_low_after * dl + (1 - me_low_after) * dh + w * dh);
    EXPECT_NEAR(solved.q[s][0], eat, 1e-12);
    EXPECT_NEAR(solved.q[s][1], pass, 1e-12);
    EXPECT_EQ(solved.action[s], pass > eat ? FoodShareAction::kPass : FoodShareAction::kEat);
  }
}

TEST(Simulation, OptimalAffectivePolicyOutlivesSelfishOne) {
  const auto mdp = build_mdp(EmpathyCondition::affective());
  const auto solved = value_iteration(mdp);
  const auto optimal = simulate_policy(mdp, solved, 200, 3);
  const auto eat = simulate_policy(mdp, [](const FoodShareState&) { return FoodShareAction::kEat; }, 200, 3);
  EXPECT_NEAR(eat.mean_duration, 14.5, 1.5);
  EXPECT_EQ(eat.pass_rate, 0.0);
  EXPECT_GT(optimal.mean_duration, 1500.0);
  EXPECT_GT(optimal.pass_rate, 0.0);
}

TEST(Simulation, NoneOptimumIsAlwaysEat) {
  const auto mdp = build_mdp(EmpathyCondition::none());
  const auto solved = value_iteration(mdp);
  const auto a = simulate_policy(mdp, solved, 500, 9);
  const auto b = simulate_policy(mdp, [](const FoodShareState&) { return FoodShareAction::kEat; }, 500, 9);
  EXPECT_EQ(a.mean_duration, b.mean_duration);
  EXPECT_EQ(a.pass_rate, 0.0);
}

TEST(ValueIteration, RejectsBadGamma) {
  const auto mdp = build_mdp(EmpathyCondition::none());
  EXPECT_THROW(value_iteration(mdp, 1.0), std::invalid_argument);
}
