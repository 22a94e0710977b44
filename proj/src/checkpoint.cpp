#include "homeo/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace homeo {

namespace {

constexpr std::array<char, 8> kMagic{'H', 'O', 'M', 'E', 'O', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void put_string(std::ofstream& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T get(std::ifstream& in, const std::filesystem::path& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("truncated checkpoint " + path.string());
  return v;
}

std::string get_string(std::ifstream& in, const std::filesystem::path& path) {
  const auto n = get<std::uint64_t>(in, path);
  if (n > (1ULL << 30)) throw std::runtime_error("corrupt string length in " + path.string());
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw std::runtime_error("truncated checkpoint " + path.string());
  return s;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put(out, kVersion);
  const auto& s = ckpt.network.shape();
  for (int d : {s.observation_size, s.encoder_size, s.recurrent_size, s.action_count}) {
    put<std::int32_t>(out, d);
  }
  put_string(out, ckpt.config.hash());
  // The output directory is not part of the experiment, so checkpoints stay
  // relocatable and byte-identical across output roots.
  auto stored = ckpt.config;
  stored.output_dir.clear();
  put_string(out, stored.to_json().dump());
  put_string(out, std::string(ckpt.condition.name()));
  put(out, ckpt.seed);
  put(out, ckpt.timestep);
  const auto& p = ckpt.network.parameters();
  put<std::uint64_t>(out, static_cast<std::uint64_t>(p.size()));
  out.write(reinterpret_cast<const char*>(p.data()), static_cast<std::streamsize>(p.size() * sizeof(double)));
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, std::optional<NetworkShape> expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw std::runtime_error(path.string() + " is not a checkpoint");
  if (get<std::uint32_t>(in, path) != kVersion) {
    throw std::runtime_error("unsupported checkpoint version in " + path.string());
  }
  NetworkShape shape;
  shape.observation_size = get<std::int32_t>(in, path);
  shape.encoder_size = get<std::int32_t>(in, path);
  shape.recurrent_size = get<std::int32_t>(in, path);
  shape.action_count = get<std::int32_t>(in, path);
  if (expected && !(*expected == shape)) {
    throw std::runtime_error("checkpoint " + path.string() + " has a different network shape");
  }
  const std::string hash = get_string(in, path);
  const std::string config_text = get_string(in, path);
  const std::string condition = get_string(in, path);

  Checkpoint ckpt;
  try {
    ckpt.config = ExperimentConfig::from_json(nlohmann::json::parse(config_text));
  } catch (const std::exception& e) {
    throw std::runtime_error("checkpoint " + path.string() + " carries an invalid config: " + e.what());
  }
  if (ckpt.config.hash() != hash) {
    throw std::runtime_error("checkpoint " + path.string() + " config hash mismatch");
  }
  auto cond = parse_condition(condition);
  if (!cond) throw std::runtime_error("checkpoint " + path.string() + " names unknown condition");
  ckpt.condition = *cond;
  if (!(ckpt.config.network_shape(ckpt.condition) == shape)) {
    throw std::runtime_error("checkpoint " + path.string() + " shape disagrees with its config");
  }
  ckpt.seed = get<std::uint64_t>(in, path);
  ckpt.timestep = get<std::int64_t>(in, path);
  const auto count = get<std::uint64_t>(in, path);
  if (count != shape.parameter_count()) {
    throw std::runtime_error("checkpoint " + path.string() + " parameter count mismatch");
  }
  ckpt.network = PolicyNetwork(shape);
  auto& p = ckpt.network.parameters();
  in.read(reinterpret_cast<char*>(p.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw std::runtime_error("truncated checkpoint " + path.string());
  return ckpt;
}

}  // namespace homeo
