#pragma once

// Drive functions, empathy coupling and the drive-reduction reward shared by
// every environment and by the exact oracle.

#include <optional>
#include <string>
#include <string_view>

namespace homeo {

/// Desirability of the two binary energy labels.
class PreferenceDist {
 public:
  /// Throws std::invalid_argument unless both masses lie in (0,1) and sum to 1.
  PreferenceDist(double p_high, double p_low);

  double p_high() const { return p_high_; }
  double p_low() const { return p_low_; }

 private:
  double p_high_;
  double p_low_;
};

inline const PreferenceDist kDefaultPreference{0.95, 0.05};

enum class BinaryEnergy { kHigh, kLow };

/// Numeric encoding fed to networks: High = 1.0, Low = 0.0. Every observation
/// layout that exposes a binary energy goes through this function.
constexpr double encode(BinaryEnergy e) { return e == BinaryEnergy::kHigh ? 1.0 : 0.0; }

/// Non-negative deviation from the setpoint.
class Drive {
 public:
  constexpr Drive() = default;
  /// Throws std::invalid_argument for negative or non-finite values.
  explicit Drive(double value);

  double value() const { return value_; }

 private:
  double value_ = 0.0;
};

/// Reward scale beta, strictly positive.
class RewardScale {
 public:
  explicit RewardScale(double beta);
  double beta() const { return beta_; }

 private:
  double beta_;
};

enum class EmpathyKind { kNone, kCognitive, kAffective, kFull };

/// Which empathy channels are active. Cognitive empathy adds the partner's
/// energy to the observation; affective empathy adds w * D_partner to the
/// agent's own drive.
struct EmpathyCondition {
  EmpathyKind kind = EmpathyKind::kNone;
  bool observe_partner = false;
  double coupling_w = 0.0;

  static EmpathyCondition none() { return {EmpathyKind::kNone, false, 0.0}; }
  static EmpathyCondition cognitive() { return {EmpathyKind::kCognitive, true, 0.0}; }
  static EmpathyCondition affective() { return {EmpathyKind::kAffective, false, 0.5}; }
  static EmpathyCondition full() { return {EmpathyKind::kFull, true, 0.5}; }

  static EmpathyCondition from_kind(EmpathyKind kind);
  std::string_view name() const;
};

/// Accepts "none", "cognitive", "affective", "full" (case-insensitive).
std::optional<EmpathyCondition> parse_condition(std::string_view name);
std::string_view to_string(EmpathyKind kind);

/// -ln P*(state).
Drive drive_categorical(BinaryEnergy state, const PreferenceDist& pref);

/// Squared deviation from the zero setpoint.
Drive drive_quadratic(double energy);

/// d_self + w * d_partner.
Drive couple_drives(Drive d_self, Drive d_partner, const EmpathyCondition& cond);

/// beta * (d_prev - d_next).
double homeostatic_reward(Drive d_prev, Drive d_next, RewardScale scale);

}  // namespace homeo
