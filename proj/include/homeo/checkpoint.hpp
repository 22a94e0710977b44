#pragma once

// Versioned binary checkpoint: network shape, raw parameters, the experiment
// config that produced them and its hash.

#include <filesystem>
#include <optional>
#include <string>

#include "homeo/config.hpp"
#include "homeo/network.hpp"

namespace homeo {

struct Checkpoint {
  ExperimentConfig config;
  EmpathyCondition condition;
  std::uint64_t seed = 0;
  std::int64_t timestep = 0;
  PolicyNetwork network{NetworkShape{}};
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);

/// Throws std::runtime_error on I/O failure, bad magic/version, a config hash
/// that does not match the embedded config, or (when given) a shape mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::optional<NetworkShape> expected = std::nullopt);

}  // namespace homeo
