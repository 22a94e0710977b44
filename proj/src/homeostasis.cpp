#include "homeo/homeostasis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace homeo {

PreferenceDist::PreferenceDist(double p_high, double p_low) : p_high_(p_high), p_low_(p_low) {
  if (!(p_high > 0.0 && p_high < 1.0 && p_low > 0.0 && p_low < 1.0)) {
    throw std::invalid_argument("preference masses must lie in (0,1)");
  }
  if (std::abs(p_high + p_low - 1.0) > 1e-12) {
    throw std::invalid_argument("preference masses must sum to 1");
  }
}

Drive::Drive(double value) : value_(value) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument("drive must be finite and non-negative");
  }
}

RewardScale::RewardScale(double beta) : beta_(beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw std::invalid_argument("reward scale must be positive");
  }
}

EmpathyCondition EmpathyCondition::from_kind(EmpathyKind kind) {
  switch (kind) {
    case EmpathyKind::kNone:
      return none();
    case EmpathyKind::kCognitive:
      return cognitive();
    case EmpathyKind::kAffective:
      return affective();
    case EmpathyKind::kFull:
      return full();
  }
  throw std::invalid_argument("unknown empathy kind");
}

std::string_view EmpathyCondition::name() const { return to_string(kind); }

std::string_view to_string(EmpathyKind kind) {
  switch (kind) {
    case EmpathyKind::kNone:
      return "none";
    case EmpathyKind::kCognitive:
      return "cognitive";
    case EmpathyKind::kAffective:
      return "affective";
    case EmpathyKind::kFull:
      return "full";
  }
  return "?";
}

std::optional<EmpathyCondition> parse_condition(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (auto kind : {EmpathyKind::kNone, EmpathyKind::kCognitive, EmpathyKind::kAffective,
                    EmpathyKind::kFull}) {
    if (lower == to_string(kind)) return EmpathyCondition::from_kind(kind);
  }
  return std::nullopt;
}

Drive drive_categorical(BinaryEnergy state, const PreferenceDist& pref) {
  const double p = state == BinaryEnergy::kHigh ? pref.p_high() : pref.p_low();
  return Drive(-std::log(p));
}

Drive drive_quadratic(double energy) { return Drive(energy * energy); }

Drive couple_drives(Drive d_self, Drive d_partner, const EmpathyCondition& cond) {
  return Drive(d_self.value() + cond.coupling_w * d_partner.value());
}

double homeostatic_reward(Drive d_prev, Drive d_next, RewardScale scale) {
  return scale.beta() * (d_prev.value() - d_next.value());
}

}  // namespace homeo
