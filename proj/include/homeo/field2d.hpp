#pragma once

// Two symmetric mobile agents on the unit square. Agents carry, eat and pass
// food; low energy or an accident immobilizes an agent until it is fed.

#include <array>

#include "homeo/environment.hpp"

namespace homeo {

struct Field2DConfig {
  double step_size = 0.05;
  double interact_radius = 0.1;
  double drift = 0.001;
  double ingestion = 0.3;
  double immobile_threshold = -0.7;
  double accident_prob = 0.0005;
  int max_steps = 2000;
  double beta = 100.0;
};

enum class Field2DAction { kUp = 0, kDown = 1, kLeft = 2, kRight = 3, kGet = 4, kEat = 5, kPass = 6 };

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct Field2DAgent {
  Vec2 position;
  double energy = 0.0;
  bool has_food = false;
  bool movable = true;
};

struct Field2DState {
  std::array<Field2DAgent, 2> agents;
  Vec2 food_position;
  bool food_present = true;
  int t = 0;
};

struct Field2DInfo {
  std::array<Field2DAction, 2> actions{};
  std::array<bool, 2> ate{};
  std::array<bool, 2> got{};
  std::array<bool, 2> passed{};     // agent i handed food to the other agent
  std::array<bool, 2> accident{};
  std::array<bool, 2> was_movable{};
};

struct Field2DStep {
  std::array<Observation, 2> observations;
  std::array<double, 2> rewards{};
  bool terminated = false;
  bool truncated = false;
  Field2DInfo info;
};

class Field2DEnv final : public Environment {
 public:
  Field2DEnv(Field2DConfig config, EmpathyCondition cond);

  std::string_view name() const override { return "field2d"; }
  int agent_count() const override { return 2; }
  int observation_size() const override { return 9 + (cond_.observe_partner ? 1 : 0); }
  int action_count() const override { return 7; }
  int max_steps() const override { return config_.max_steps; }

  std::vector<Observation> reset(std::uint64_t seed) override;
  std::vector<Observation> reset() override;
  StepResult step(std::span<const int> actions) override;
  Field2DStep step(std::array<Field2DAction, 2> actions);

  int elapsed_steps() const override { return state_.t; }
  bool finished() const override { return finished_; }

  std::string trajectory_header() const override;
  std::string trajectory_row() const override;

  Observation observe(int agent) const;
  const Field2DState& state() const { return state_; }
  void set_state(const Field2DState& s);
  const Field2DConfig& config() const { return config_; }
  const Field2DStep& last_step() const { return last_; }

 private:
  Drive coupled_drive(const Field2DState& s, int agent) const;
  Vec2 uniform_point();

  Field2DConfig config_;
  EmpathyCondition cond_;
  std::mt19937_64 rng_;
  Field2DState state_;
  bool finished_ = false;
  Field2DStep last_;
};

}  // namespace homeo
