#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "homeo/homeostasis.hpp"

namespace homeo {

using Observation = std::vector<double>;

/// Outcome of one synchronous environment step. Observations and rewards are
/// indexed by acting agent.
struct StepResult {
  std::vector<Observation> observations;
  std::vector<double> rewards;
  bool terminated = false;  // an agent left its viable range
  bool truncated = false;   // step cap reached

  bool done() const { return terminated || truncated; }
};

/// Raised when step() is called on a finished episode.
class EpisodeFinished : public std::logic_error {
 public:
  EpisodeFinished() : std::logic_error("step() called on a finished episode; call reset() first") {}
};

/// Common surface used by rollout collection and evaluation. Each
/// implementation also exposes a typed step() with environment-specific info.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string_view name() const = 0;
  virtual int agent_count() const = 0;
  virtual int observation_size() const = 0;
  virtual int action_count() const = 0;
  virtual int max_steps() const = 0;

  /// Reseeds the environment's private random stream and starts an episode.
  virtual std::vector<Observation> reset(std::uint64_t seed) = 0;
  /// Starts a new episode continuing the current random stream.
  virtual std::vector<Observation> reset() = 0;
  virtual StepResult step(std::span<const int> actions) = 0;

  virtual int elapsed_steps() const = 0;
  virtual bool finished() const = 0;

  /// CSV export of transitions: header line and the row for the last step.
  virtual std::string trajectory_header() const = 0;
  virtual std::string trajectory_row() const = 0;
};

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0);

}  // namespace homeo
