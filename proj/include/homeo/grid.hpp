#pragma once

// Five-cell linear environment. The Partner is fixed next to cell 0; food is
// available at cell 4. Energies are continuous and drift toward starvation.

#include "homeo/environment.hpp"

namespace homeo {

struct GridConfig {
  int cells = 5;
  double drift = 0.003;
  double ingestion = 0.1;
  int max_steps = 2000;
  double beta = 100.0;
};

enum class GridAction { kLeft = 0, kRight = 1, kEat = 2, kGet = 3, kPass = 4 };

struct GridState {
  int possessor_pos = 0;
  bool has_food = false;
  double possessor_energy = 0.0;
  double partner_energy = 0.0;
  int t = 0;
};

struct GridInfo {
  GridAction action = GridAction::kLeft;
  bool possessor_ate = false;
  bool partner_fed = false;
  double partner_energy_before = 0.0;  // energy at the moment of ingestion when partner_fed
  double possessor_drive = 0.0;
  double partner_drive = 0.0;
};

struct GridStep {
  Observation observation;
  double reward = 0.0;
  bool terminated = false;
  bool truncated = false;
  GridInfo info;
};

class GridEnv final : public Environment {
 public:
  GridEnv(GridConfig config, EmpathyCondition cond);

  std::string_view name() const override { return "grid"; }
  int agent_count() const override { return 1; }
  int observation_size() const override { return config_.cells + 2 + 1 + (cond_.observe_partner ? 1 : 0); }
  int action_count() const override { return 5; }
  int max_steps() const override { return config_.max_steps; }

  std::vector<Observation> reset(std::uint64_t seed) override;
  std::vector<Observation> reset() override;
  StepResult step(std::span<const int> actions) override;
  GridStep step(GridAction action);

  int elapsed_steps() const override { return state_.t; }
  bool finished() const override { return finished_; }

  std::string trajectory_header() const override;
  std::string trajectory_row() const override;

  Observation observe() const;
  const GridState& state() const { return state_; }
  void set_state(const GridState& s);
  const GridConfig& config() const { return config_; }
  const GridStep& last_step() const { return last_; }

 private:
  Drive coupled_drive(const GridState& s) const;

  GridConfig config_;
  EmpathyCondition cond_;
  GridState state_;
  bool finished_ = false;
  GridStep last_;
};

}  // namespace homeo
