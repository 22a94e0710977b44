#include "homeo/field2d.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace homeo {

namespace {

constexpr const char* kActionNames[] = {"UP", "DOWN", "LEFT", "RIGHT", "GET", "EAT", "PASS"};

double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

bool outside_viable(double e) { return e < -1.0 || e > 1.0; }

Vec2 displace(Vec2 p, Field2DAction a, double d) {
  switch (a) {
    case Field2DAction::kUp:
      p.y += d;
      break;
    case Field2DAction::kDown:
      p.y -= d;
      break;
    case Field2DAction::kLeft:
      p.x -= d;
      break;
    case Field2DAction::kRight:
      p.x += d;
      break;
    default:
      break;
  }
  p.x = std::clamp(p.x, 0.0, 1.0);
  p.y = std::clamp(p.y, 0.0, 1.0);
  return p;
}

}  // namespace

Field2DEnv::Field2DEnv(Field2DConfig config, EmpathyCondition cond)
    : config_(config), cond_(cond), rng_(make_rng(0)) {
  if (config_.step_size <= 0.0 || config_.interact_radius <= 0.0 || config_.max_steps < 1) {
    throw std::invalid_argument("field2d step size, radius and step cap must be positive");
  }
  if (config_.accident_prob < 0.0 || config_.accident_prob > 1.0) {
    throw std::invalid_argument("accident_prob must lie in [0,1]");
  }
  RewardScale check(config_.beta);
  (void)check;
}

Vec2 Field2DEnv::uniform_point() {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double x = u(rng_);
  const double y = u(rng_);
  return {x, y};
}

std::vector<Observation> Field2DEnv::reset(std::uint64_t seed) {
  rng_ = make_rng(seed);
  return reset();
}

std::vector<Observation> Field2DEnv::reset() {
  state_ = Field2DState{};
  for (auto& a : state_.agents) a.position = uniform_point();
  state_.food_position = uniform_point();
  state_.food_present = true;
  finished_ = false;
  last_ = Field2DStep{};
  return {observe(0), observe(1)};
}

void Field2DEnv::set_state(const Field2DState& s) {
  state_ = s;
  finished_ = false;
}

Observation Field2DEnv::observe(int agent) const {
  const auto& self = state_.agents.at(agent);
  const auto& other = state_.agents.at(1 - agent);
  Observation obs{self.position.x,
                  self.position.y,
                  state_.food_position.x,
                  state_.food_position.y,
                  self.has_food ? 0.0 : 1.0,
                  self.has_food ? 1.0 : 0.0,
                  self.movable ? 0.0 : 1.0,
                  self.movable ? 1.0 : 0.0,
                  self.energy};
  if (cond_.observe_partner) obs.push_back(other.energy);
  return obs;
}

Drive Field2DEnv::coupled_drive(const Field2DState& s, int agent) const {
  return couple_drives(drive_quadratic(s.agents[agent].energy),
                       drive_quadratic(s.agents[1 - agent].energy), cond_);
}

Field2DStep Field2DEnv::step(std::array<Field2DAction, 2> actions) {
  if (finished_) throw EpisodeFinished();
  const Field2DState before = state_;
  Field2DState& s = state_;
  Field2DStep out;
  out.info.actions = actions;
  std::array<double, 2> intake{};

  // Movement is simultaneous; only movable agents move.
  for (int i = 0; i < 2; ++i) {
    out.info.was_movable[i] = s.agents[i].movable;
    if (s.agents[i].movable) s.agents[i].position = displace(s.agents[i].position, actions[i], config_.step_size);
  }

  // GET: the closer eligible agent wins a contested pickup.
  int getter = -1;
  double best = config_.interact_radius;
  for (int i = 0; i < 2; ++i) {
    if (actions[i] != Field2DAction::kGet || s.agents[i].has_food || !s.food_present) continue;
    const double d = distance(s.agents[i].position, s.food_position);
    if (d <= config_.interact_radius && (getter < 0 || d < best)) {
      getter = i;
      best = d;
    }
  }
  if (getter >= 0) {
    s.agents[getter].has_food = true;
    s.food_present = false;
    out.info.got[getter] = true;
  }

  for (int i = 0; i < 2; ++i) {
    if (actions[i] == Field2DAction::kEat && s.agents[i].has_food) {
      s.agents[i].has_food = false;
      intake[i] = config_.ingestion;
      out.info.ate[i] = true;
    }
  }

  // PASS reads carrying flags after EAT so simultaneous passes never duplicate food.
  const std::array<bool, 2> carrying{s.agents[0].has_food, s.agents[1].has_food};
  const bool close = distance(s.agents[0].position, s.agents[1].position) <= config_.interact_radius;
  for (int i = 0; i < 2; ++i) {
    const int j = 1 - i;
    if (actions[i] == Field2DAction::kPass && close && carrying[i] && !carrying[j]) {
      s.agents[i].has_food = false;
      s.agents[j].has_food = true;
      out.info.passed[i] = true;
    }
  }

  for (int i = 0; i < 2; ++i) s.agents[i].energy = s.agents[i].energy - config_.drift + intake[i];

  for (auto& a : s.agents) {
    if (a.energy < config_.immobile_threshold) {
      a.movable = false;
    } else if (a.energy > config_.immobile_threshold) {
      a.movable = true;
    }
  }

  // Accidents only strike while both agents can move. Both draws are always
  // taken so the random stream does not depend on the state.
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::array<double, 2> draws{u(rng_), u(rng_)};
  if (s.agents[0].movable && s.agents[1].movable) {
    for (int i = 0; i < 2; ++i) {
      if (draws[i] < config_.accident_prob) {
        s.agents[i].energy = config_.immobile_threshold;
        s.agents[i].movable = false;
        out.info.accident[i] = true;
      }
    }
  }

  if (!s.food_present) {
    s.food_position = uniform_point();
    s.food_present = true;
  }
  s.t += 1;

  for (int i = 0; i < 2; ++i) {
    out.rewards[i] = homeostatic_reward(coupled_drive(before, i), coupled_drive(s, i),
                                        RewardScale(config_.beta));
    out.observations[i] = observe(i);
  }
  out.terminated = outside_viable(s.agents[0].energy) || outside_viable(s.agents[1].energy);
  out.truncated = !out.terminated && s.t >= config_.max_steps;
  finished_ = out.terminated || out.truncated;
  last_ = out;
  return out;
}

StepResult Field2DEnv::step(std::span<const int> actions) {
  if (actions.size() != 2) throw std::invalid_argument("field2d expects two actions");
  std::array<Field2DAction, 2> typed{};
  for (int i = 0; i < 2; ++i) {
    if (actions[i] < 0 || actions[i] >= action_count()) {
      throw std::invalid_argument("field2d action out of range");
    }
    typed[i] = static_cast<Field2DAction>(actions[i]);
  }
  auto s = step(typed);
  return StepResult{{std::move(s.observations[0]), std::move(s.observations[1])},
                    {s.rewards[0], s.rewards[1]},
                    s.terminated,
                    s.truncated};
}

std::string Field2DEnv::trajectory_header() const {
  return "t,x0,y0,energy0,has_food0,movable0,action0,reward0,x1,y1,energy1,has_food1,movable1,"
         "action1,reward1,food_x,food_y,passed0,passed1,ate0,ate1,accident0,accident1,done";
}

std::string Field2DEnv::trajectory_row() const {
  std::ostringstream os;
  os.precision(17);
  os << state_.t;
  for (int i = 0; i < 2; ++i) {
    const auto& a = state_.agents[i];
    os << ',' << a.position.x << ',' << a.position.y << ',' << a.energy << ',' << a.has_food << ','
       << a.movable << ',' << kActionNames[static_cast<int>(last_.info.actions[i])] << ','
       << last_.rewards[i];
  }
  const auto& f = last_.info;
  os << ',' << state_.food_position.x << ',' << state_.food_position.y << ',' << f.passed[0] << ','
     << f.passed[1] << ',' << f.ate[0] << ',' << f.ate[1] << ',' << f.accident[0] << ','
     << f.accident[1] << ',' << (last_.terminated || last_.truncated ? 1 : 0);
  return os.str();
}

}  // namespace homeo
