#include "homeo/foodshare.hpp"

#include <sstream>

namespace homeo {

namespace {

int update_counter(BinaryEnergy e, int counter) { return e == BinaryEnergy::kLow ? counter + 1 : 0; }

}  // namespace

FoodShareState foodshare_transition(const FoodShareState& s, FoodShareAction action,
                                    bool possessor_decays, bool partner_decays) {
  FoodShareState next = s;
  if (possessor_decays && next.possessor_energy == BinaryEnergy::kHigh) {
    next.possessor_energy = BinaryEnergy::kLow;
  }
  if (partner_decays && next.partner_energy == BinaryEnergy::kHigh) {
    next.partner_energy = BinaryEnergy::kLow;
  }
  if (action == FoodShareAction::kEat) {
    next.possessor_energy = BinaryEnergy::kHigh;
  } else {
    next.partner_energy = BinaryEnergy::kHigh;
  }
  next.possessor_low_steps = update_counter(next.possessor_energy, s.possessor_low_steps);
  next.partner_low_steps = update_counter(next.partner_energy, s.partner_low_steps);
  next.t = s.t + 1;
  return next;
}

Drive foodshare_drive(const FoodShareState& s, const FoodShareConfig& config,
                      const EmpathyCondition& cond) {
  return couple_drives(drive_categorical(s.possessor_energy, config.preference),
                       drive_categorical(s.partner_energy, config.preference), cond);
}

bool foodshare_failed(const FoodShareState& s, const FoodShareConfig& config) {
  return s.possessor_low_steps >= config.low_step_limit ||
         s.partner_low_steps >= config.low_step_limit;
}

FoodShareEnv::FoodShareEnv(FoodShareConfig config, EmpathyCondition cond)
    : config_(config), cond_(cond), rng_(make_rng(0)) {
  if (config_.decay_prob < 0.0 || config_.decay_prob > 1.0) {
    throw std::invalid_argument("decay_prob must lie in [0,1]");
  }
  if (config_.low_step_limit < 1 || config_.max_steps < 1) {
    throw std::invalid_argument("low_step_limit and max_steps must be positive");
  }
  RewardScale check(config_.beta);
  (void)check;
}

std::vector<Observation> FoodShareEnv::reset(std::uint64_t seed) {
  rng_ = make_rng(seed);
  return reset();
}

std::vector<Observation> FoodShareEnv::reset() {
  std::bernoulli_distribution coin(0.5);
  state_ = FoodShareState{};
  state_.possessor_energy = coin(rng_) ? BinaryEnergy::kHigh : BinaryEnergy::kLow;
  state_.partner_energy = coin(rng_) ? BinaryEnergy::kHigh : BinaryEnergy::kLow;
  finished_ = false;
  last_ = FoodShareStep{};
  return {observe()};
}

void FoodShareEnv::set_state(const FoodShareState& s) {
  state_ = s;
  finished_ = false;
}

Observation FoodShareEnv::observe() const {
  Observation obs{encode(state_.possessor_energy)};
  if (cond_.observe_partner) obs.push_back(encode(state_.partner_energy));
  return obs;
}

FoodShareStep FoodShareEnv::step(FoodShareAction action) {
  if (finished_) throw EpisodeFinished();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // Both draws are always taken so the stream does not depend on the state.
  const bool possessor_decays = u(rng_) < config_.decay_prob;
  const bool partner_decays = u(rng_) < config_.decay_prob;

  const FoodShareState before = state_;
  state_ = foodshare_transition(before, action, possessor_decays, partner_decays);

  FoodShareStep out;
  out.reward = homeostatic_reward(foodshare_drive(before, config_, cond_),
                                  foodshare_drive(state_, config_, cond_),
                                  RewardScale(config_.beta));
  out.terminated = foodshare_failed(state_, config_);
  out.truncated = !out.terminated && state_.t >= config_.max_steps;
  out.observation = observe();
  out.info.before = before;
  out.info.after = state_;
  out.info.action = action;
  out.info.partner_was_low = before.partner_energy == BinaryEnergy::kLow;
  out.info.possessor_drive = drive_categorical(state_.possessor_energy, config_.preference).value();
  out.info.partner_drive = drive_categorical(state_.partner_energy, config_.preference).value();
  finished_ = out.terminated || out.truncated;
  last_ = out;
  return out;
}

StepResult FoodShareEnv::step(std::span<const int> actions) {
  if (actions.size() != 1 || actions[0] < 0 || actions[0] > 1) {
    throw std::invalid_argument("foodshare expects one action in {0,1}");
  }
  auto s = step(static_cast<FoodShareAction>(actions[0]));
  return StepResult{{std::move(s.observation)}, {s.reward}, s.terminated, s.truncated};
}

std::string FoodShareEnv::trajectory_header() const {
  return "t,possessor_energy,partner_energy,possessor_low_steps,partner_low_steps,action,reward,"
         "done";
}

std::string FoodShareEnv::trajectory_row() const {
  const auto& s = last_.info.after;
  std::ostringstream os;
  os.precision(17);
  os << s.t << ',' << encode(s.possessor_energy) << ',' << encode(s.partner_energy) << ','
     << s.possessor_low_steps << ',' << s.partner_low_steps << ','
     << (last_.info.action == FoodShareAction::kEat ? "EAT" : "PASS") << ',' << last_.reward << ','
     << (last_.terminated || last_.truncated ? 1 : 0);
  return os.str();
}

}  // namespace homeo
