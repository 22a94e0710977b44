#pragma once

// Two-agent binary-energy food-sharing environment. Only the Possessor acts;
// the Partner is fed exclusively through PASS.

#include "homeo/environment.hpp"

namespace homeo {

struct FoodShareConfig {
  double decay_prob = 0.1;
  int low_step_limit = 10;
  int max_steps = 2000;
  double beta = 1.0;
  PreferenceDist preference = kDefaultPreference;
};

enum class FoodShareAction { kEat = 0, kPass = 1 };

struct FoodShareState {
  BinaryEnergy possessor_energy = BinaryEnergy::kHigh;
  BinaryEnergy partner_energy = BinaryEnergy::kHigh;
  int possessor_low_steps = 0;
  int partner_low_steps = 0;
  int t = 0;

  friend bool operator==(const FoodShareState&, const FoodShareState&) = default;
};

struct FoodShareInfo {
  FoodShareState before;
  FoodShareState after;
  FoodShareAction action = FoodShareAction::kEat;
  bool partner_was_low = false;
  double possessor_drive = 0.0;  // after the step, uncoupled
  double partner_drive = 0.0;
};

struct FoodShareStep {
  Observation observation;
  double reward = 0.0;
  bool terminated = false;
  bool truncated = false;
  FoodShareInfo info;
};

/// Deterministic part of a transition, given the decay draws. Shared with the
/// tabular oracle so both follow the same ordering: decay, action, counters.
FoodShareState foodshare_transition(const FoodShareState& s, FoodShareAction action,
                                    bool possessor_decays, bool partner_decays);

/// Coupled drive of the Possessor in state s.
Drive foodshare_drive(const FoodShareState& s, const FoodShareConfig& config,
                      const EmpathyCondition& cond);

bool foodshare_failed(const FoodShareState& s, const FoodShareConfig& config);

class FoodShareEnv final : public Environment {
 public:
  FoodShareEnv(FoodShareConfig config, EmpathyCondition cond);

  std::string_view name() const override { return "foodshare"; }
  int agent_count() const override { return 1; }
  int observation_size() const override { return cond_.observe_partner ? 2 : 1; }
  int action_count() const override { return 2; }
  int max_steps() const override { return config_.max_steps; }

  std::vector<Observation> reset(std::uint64_t seed) override;
  std::vector<Observation> reset() override;
  StepResult step(std::span<const int> actions) override;
  FoodShareStep step(FoodShareAction action);

  int elapsed_steps() const override { return state_.t; }
  bool finished() const override { return finished_; }

  std::string trajectory_header() const override;
  std::string trajectory_row() const override;

  Observation observe() const;
  const FoodShareState& state() const { return state_; }
  /// Test hook: overwrite the live state.
  void set_state(const FoodShareState& s);
  const FoodShareConfig& config() const { return config_; }
  const FoodShareStep& last_step() const { return last_; }
  const EmpathyCondition& condition() const { return cond_; }

 private:
  FoodShareConfig config_;
  EmpathyCondition cond_;
  std::mt19937_64 rng_;
  FoodShareState state_;
  bool finished_ = false;
  FoodShareStep last_;
};

}  // namespace homeo
