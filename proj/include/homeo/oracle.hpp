#pragma once

// Exact analysis of the food-sharing task as a finite discounted MDP over
// (energies, low-step counters). The step index is abstracted away.

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "homeo/foodshare.hpp"

namespace homeo {

struct Transition {
  int next = 0;
  double prob = 0.0;
  double reward = 0.0;
};

struct TabularMDP {
  FoodShareConfig config;
  EmpathyCondition condition;
  std::vector<FoodShareState> states;  // index < failure_state; t is always 0
  int failure_state = 0;               // absorbing, zero reward
  std::vector<std::array<std::vector<Transition>, 2>> transitions;
  std::vector<std::array<double, 2>> expected_reward;

  int state_count() const { return static_cast<int>(transitions.size()); }
  /// Index of a live state; counters at or beyond the limit map to failure.
  int index_of(const FoodShareState& s) const;
};

/// Enumerates 2 x 2 x L x L live states plus one absorbing failure state.
TabularMDP build_mdp(const EmpathyCondition& cond, const FoodShareConfig& config = {});

/// States reachable from the reset distribution (counters zero, any energies).
std::vector<int> reachable_states(const TabularMDP& mdp);

struct SolvedPolicy {
  std::vector<FoodShareAction> action;
  std::vector<double> value;
  std::vector<std::array<double, 2>> q;
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> residual_history;
};

/// Sup-norm Bellman iteration from V = 0. Greedy extraction prefers EAT on ties.
SolvedPolicy value_iteration(const TabularMDP& mdp, double gamma = 0.99, double tol = 1e-10,
                             int max_iterations = 1'000'000);

struct PolicyStats {
  int episodes = 0;
  double mean_duration = 0.0;
  double pass_rate = 0.0;
};

using StatePolicy = std::function<FoodShareAction(const FoodShareState&)>;

/// Monte Carlo rollouts of a fixed state-feedback policy in FoodShareEnv.
PolicyStats simulate_policy(const TabularMDP& mdp, const StatePolicy& policy, int n_episodes,
                            std::uint64_t seed);
PolicyStats simulate_policy(const TabularMDP& mdp, const SolvedPolicy& solved, int n_episodes,
                            std::uint64_t seed);

}  // namespace homeo
