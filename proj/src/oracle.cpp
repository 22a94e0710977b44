#include "homeo/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace homeo {

int TabularMDP::index_of(const FoodShareState& s) const {
  const int limit = config.low_step_limit;
  if (foodshare_failed(s, config)) return failure_state;
  if (s.possessor_low_steps < 0 || s.partner_low_steps < 0) {
    throw std::invalid_argument("negative low-step counter");
  }
  const int pe = s.possessor_energy == BinaryEnergy::kHigh ? 0 : 1;
  const int qe = s.partner_energy == BinaryEnergy::kHigh ? 0 : 1;
  return ((pe * 2 + qe) * limit + s.possessor_low_steps) * limit + s.partner_low_steps;
}

TabularMDP build_mdp(const EmpathyCondition& cond, const FoodShareConfig& config) {
  TabularMDP mdp;
  mdp.config = config;
  mdp.condition = cond;
  const int limit = config.low_step_limit;
  for (auto pe : {BinaryEnergy::kHigh, BinaryEnergy::kLow})
    for (auto qe : {BinaryEnergy::kHigh, BinaryEnergy::kLow})
      for (int pc = 0; pc < limit; ++pc)
        for (int qc = 0; qc < limit; ++qc) mdp.states.push_back({pe, qe, pc, qc, 0});
  mdp.failure_state = static_cast<int>(mdp.states.size());
  mdp.transitions.resize(mdp.states.size() + 1);
  mdp.expected_reward.assign(mdp.states.size() + 1, {0.0, 0.0});

  const double p = config.decay_prob;
  const RewardScale scale(config.beta);
  for (int i = 0; i < mdp.failure_state; ++i) {
    const auto& s = mdp.states[i];
    const Drive d_now = foodshare_drive(s, config, cond);
    for (int a = 0; a < 2; ++a) {
      auto& out = mdp.transitions[i][a];
      for (bool pd : {false, true}) {
        for (bool qd : {false, true}) {
          const double prob = (pd ? p : 1.0 - p) * (qd ? p : 1.0 - p);
          if (prob == 0.0) continue;
          FoodShareState next = foodshare_transition(s, static_cast<FoodShareAction>(a), pd, qd);
          const double r = homeostatic_reward(d_now, foodshare_drive(next, config, cond), scale);
          next.t = 0;
          const int j = mdp.index_of(next);
          auto it = std::find_if(out.begin(), out.end(), [&](const Transition& tr) {
            return tr.next == j && tr.reward == r;
          });
          if (it != out.end()) {
            it->prob += prob;
          } else {
            out.push_back({j, prob, r});
          }
          mdp.expected_reward[i][a] += prob * r;
        }
      }
    }
  }
  for (int a = 0; a < 2; ++a) mdp.transitions[mdp.failure_state][a] = {{mdp.failure_state, 1.0, 0.0}};
  return mdp;
}

std::vector<int> reachable_states(const TabularMDP& mdp) {
  std::vector<char> seen(mdp.state_count(), 0);
  std::deque<int> frontier;
  for (auto pe : {BinaryEnergy::kHigh, BinaryEnergy::kLow}) {
    for (auto qe : {BinaryEnergy::kHigh, BinaryEnergy::kLow}) {
      const int i = mdp.index_of({pe, qe, 0, 0, 0});
      seen[i] = 1;
      frontier.push_back(i);
    }
  }
  while (!frontier.empty()) {
    const int i = frontier.front();
    frontier.pop_front();
    for (const auto& outs : mdp.transitions[i]) {
      for (const auto& tr : outs) {
        if (tr.prob > 0.0 && !seen[tr.next]) {
          seen[tr.next] = 1;
          frontier.push_back(tr.next);
        }
      }
    }
  }
  std::vector<int> out;
  for (int i = 0; i < mdp.state_count(); ++i)
    if (seen[i]) out.push_back(i);
  return out;
}

SolvedPolicy value_iteration(const TabularMDP& mdp, double gamma, double tol, int max_iterations) {
  if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("gamma must lie in [0,1)");
  const int n = mdp.state_count();
  SolvedPolicy out;
  std::vector<double> v(n, 0.0), next(n, 0.0);
  out.q.assign(n, {0.0, 0.0});
  auto backup = [&](const std::vector<double>& values) {
    for (int i = 0; i < n; ++i) {
      for (int a = 0; a < 2; ++a) {
        double q = 0.0;
        for (const auto& tr : mdp.transitions[i][a]) q += tr.prob * (tr.reward + gamma * values[tr.next]);
        out.q[i][a] = q;
      }
    }
  };
  for (int it = 0; it < max_iterations; ++it) {
    backup(v);
    double residual = 0.0;
    for (int i = 0; i < n; ++i) {
      next[i] = std::max(out.q[i][0], out.q[i][1]);
      residual = std::max(residual, std::abs(next[i] - v[i]));
    }
    v.swap(next);
    out.iterations = it + 1;
    out.residual = residual;
    out.residual_history.push_back(residual);
    if (residual < tol) break;
  }
  backup(v);
  out.value = v;
  out.action.resize(n);
  for (int i = 0; i < n; ++i) {
    out.action[i] = out.q[i][1] > out.q[i][0] ? FoodShareAction::kPass : FoodShareAction::kEat;
  }
  return out;
}

PolicyStats simulate_policy(const TabularMDP& mdp, const StatePolicy& policy, int n_episodes,
                            std::uint64_t seed) {
  FoodShareEnv env(mdp.config, mdp.condition);
  env.reset(seed);
  PolicyStats stats;
  std::int64_t steps = 0, passes = 0;
  for (int e = 0; e < n_episodes; ++e) {
    if (e > 0) env.reset();
    while (!env.finished()) {
      const auto action = policy(env.state());
      if (action == FoodShareAction::kPass) ++passes;
      env.step(action);
      ++steps;
    }
    ++stats.episodes;
  }
  stats.mean_duration = n_episodes > 0 ? static_cast<double>(steps) / n_episodes : 0.0;
  stats.pass_rate = steps > 0 ? static_cast<double>(passes) / static_cast<double>(steps) : 0.0;
  return stats;
}

PolicyStats simulate_policy(const TabularMDP& mdp, const SolvedPolicy& solved, int n_episodes,
                            std::uint64_t seed) {
  return simulate_policy(
      mdp,
      [&](const FoodShareState& s) {
        FoodShareState key = s;
        key.t = 0;
        return solved.action[mdp.index_of(key)];
      },
      n_episodes, seed);
}

}  // namespace homeo
