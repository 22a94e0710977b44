#include "homeo/grid.hpp"

#include <algorithm>
#include <sstream>

namespace homeo {

namespace {

constexpr const char* kActionNames[] = {"LEFT", "RIGHT", "EAT", "GET", "PASS"};

bool outside_viable(double e) { return e < -1.0 || e > 1.0; }

}  // namespace

GridEnv::GridEnv(GridConfig config, EmpathyCondition cond) : config_(config), cond_(cond) {
  if (config_.cells < 2 || config_.max_steps < 1) {
    throw std::invalid_argument("grid needs at least two cells and a positive step cap");
  }
  RewardScale check(config_.beta);
  (void)check;
}

// The grid is deterministic; the seed is accepted for interface uniformity.
std::vector<Observation> GridEnv::reset(std::uint64_t /*seed*/) { return reset(); }

std::vector<Observation> GridEnv::reset() {
  state_ = GridState{};
  finished_ = false;
  last_ = GridStep{};
  return {observe()};
}

void GridEnv::set_state(const GridState& s) {
  state_ = s;
  finished_ = false;
}

Observation GridEnv::observe() const {
  Observation obs(observation_size(), 0.0);
  obs[state_.possessor_pos] = 1.0;
  obs[config_.cells + (state_.has_food ? 1 : 0)] = 1.0;
  obs[config_.cells + 2] = state_.possessor_energy;
  if (cond_.observe_partner) obs[config_.cells + 3] = state_.partner_energy;
  return obs;
}

Drive GridEnv::coupled_drive(const GridState& s) const {
  return couple_drives(drive_quadratic(s.possessor_energy), drive_quadratic(s.partner_energy),
                       cond_);
}

GridStep GridEnv::step(GridAction action) {
  if (finished_) throw EpisodeFinished();
  const GridState before = state_;
  GridState& s = state_;
  const int last_cell = config_.cells - 1;
  GridStep out;
  out.info.action = action;

  double possessor_intake = 0.0;
  double partner_intake = 0.0;
  switch (action) {
    case GridAction::kLeft:
      s.possessor_pos = std::max(0, s.possessor_pos - 1);
      break;
    case GridAction::kRight:
      s.possessor_pos = std::min(last_cell, s.possessor_pos + 1);
      break;
    case GridAction::kGet:
      if (s.possessor_pos == last_cell && !s.has_food) s.has_food = true;
      break;
    case GridAction::kEat:
      if (s.has_food) {
        s.has_food = false;
        possessor_intake = config_.ingestion;
        out.info.possessor_ate = true;
      }
      break;
    case GridAction::kPass:
      if (s.possessor_pos == 0 && s.has_food) {
        s.has_food = false;
        partner_intake = config_.ingestion;
        out.info.partner_fed = true;
        out.info.partner_energy_before = before.partner_energy;
      }
      break;
  }
  s.possessor_energy = s.possessor_energy - config_.drift + possessor_intake;
  s.partner_energy = s.partner_energy - config_.drift + partner_intake;
  s.t += 1;

  out.reward = homeostatic_reward(coupled_drive(before), coupled_drive(s), RewardScale(config_.beta));
  out.terminated = outside_viable(s.possessor_energy) || outside_viable(s.partner_energy);
  out.truncated = !out.terminated && s.t >= config_.max_steps;
  out.observation = observe();
  out.info.possessor_drive = drive_quadratic(s.possessor_energy).value();
  out.info.partner_drive = drive_quadratic(s.partner_energy).value();
  finished_ = out.terminated || out.truncated;
  last_ = out;
  return out;
}

StepResult GridEnv::step(std::span<const int> actions) {
  if (actions.size() != 1 || actions[0] < 0 || actions[0] >= action_count()) {
    throw std::invalid_argument("grid expects one action in [0,5)");
  }
  auto s = step(static_cast<GridAction>(actions[0]));
  return StepResult{{std::move(s.observation)}, {s.reward}, s.terminated, s.truncated};
}

std::string GridEnv::trajectory_header() const {
  return "t,possessor_pos,has_food,possessor_energy,partner_energy,action,reward,done";
}

std::string GridEnv::trajectory_row() const {
  std::ostringstream os;
  os.precision(17);
  os << state_.t << ',' << state_.possessor_pos << ',' << (state_.has_food ? 1 : 0) << ','
     << state_.possessor_energy << ',' << state_.partner_energy << ','
     << kActionNames[static_cast<int>(last_.info.action)] << ',' << last_.reward << ','
     << (last_.terminated || last_.truncated ? 1 : 0);
  return os.str();
}

}  // namespace homeo
