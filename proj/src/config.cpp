#include "homeo/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace homeo {

using nlohmann::json;

std::string_view to_string(EnvironmentId id) {
  switch (id) {
    case EnvironmentId::kFoodShare:
      return "foodshare";
    case EnvironmentId::kGrid:
      return "grid";
    case EnvironmentId::kField2D:
      return "field2d";
  }
  return "?";
}

EnvironmentId parse_environment_id(std::string_view name) {
  if (name == "foodshare") return EnvironmentId::kFoodShare;
  if (name == "grid") return EnvironmentId::kGrid;
  if (name == "field2d") return EnvironmentId::kField2D;
  throw std::invalid_argument("unknown environment id '" + std::string(name) + "'");
}

std::unique_ptr<Environment> make_environment(const EnvironmentConfig& config,
                                              const EmpathyCondition& cond) {
  switch (config.id) {
    case EnvironmentId::kFoodShare:
      return std::make_unique<FoodShareEnv>(config.foodshare, cond);
    case EnvironmentId::kGrid:
      return std::make_unique<GridEnv>(config.grid, cond);
    case EnvironmentId::kField2D:
      return std::make_unique<Field2DEnv>(config.field2d, cond);
  }
  throw std::invalid_argument("unknown environment id");
}

void ExperimentConfig::validate() const {
  if (name.empty()) throw std::invalid_argument("experiment name must not be empty");
  if (conditions.empty()) throw std::invalid_argument("at least one empathy condition is required");
  if (encoder_size < 1 || recurrent_size < 1) throw std::invalid_argument("network sizes must be positive");
  if (n_seeds < 1) throw std::invalid_argument("n_seeds must be positive");
  if (eval.test_steps < 1 || eval.episodes < 0 || eval.histogram_bins < 1 ||
      eval.drive_window < 1) {
    throw std::invalid_argument("eval protocol values must be positive");
  }
  if (checkpoint_interval < 0) throw std::invalid_argument("checkpoint_interval must be >= 0");
  ppo.validate();
  for (const auto& cond : conditions) {
    auto env = make_environment(environment, cond);  // validates environment constants
    if (ppo.n_minibatches > ppo.n_workers * env->agent_count()) {
      throw std::invalid_argument("n_minibatches exceeds the number of rollout streams");
    }
  }
}

NetworkShape ExperimentConfig::network_shape(const EmpathyCondition& cond) const {
  auto env = make_environment(environment, cond);
  return {env->observation_size(), encoder_size, recurrent_size, env->action_count()};
}

json ExperimentConfig::to_json() const {
  json env;
  env["id"] = std::string(to_string(environment.id));
  switch (environment.id) {
    case EnvironmentId::kFoodShare: {
      const auto& c = environment.foodshare;
      env["decay_prob"] = c.decay_prob;
      env["low_step_limit"] = c.low_step_limit;
      env["max_steps"] = c.max_steps;
      env["beta"] = c.beta;
      env["p_high"] = c.preference.p_high();
      env["p_low"] = c.preference.p_low();
      break;
    }
    case EnvironmentId::kGrid: {
      const auto& c = environment.grid;
      env["cells"] = c.cells;
      env["drift"] = c.drift;
      env["ingestion"] = c.ingestion;
      env["max_steps"] = c.max_steps;
      env["beta"] = c.beta;
      break;
    }
    case EnvironmentId::kField2D: {
      const auto& c = environment.field2d;
      env["step_size"] = c.step_size;
      env["interact_radius"] = c.interact_radius;
      env["drift"] = c.drift;
      env["ingestion"] = c.ingestion;
      env["immobile_threshold"] = c.immobile_threshold;
      env["accident_prob"] = c.accident_prob;
      env["max_steps"] = c.max_steps;
      env["beta"] = c.beta;
      break;
    }
  }
  json conds = json::array();
  for (const auto& c : conditions) conds.push_back(std::string(c.name()));
  json p;
  p["learning_rate"] = ppo.learning_rate;
  p["n_workers"] = ppo.n_workers;
  p["rollout_steps"] = ppo.rollout_steps;
  p["gamma"] = ppo.gamma;
  p["gae_lambda"] = ppo.gae_lambda;
  p["n_minibatches"] = ppo.n_minibatches;
  p["update_epochs"] = ppo.update_epochs;
  p["normalize_advantage"] = ppo.normalize_advantage;
  p["clip_coef"] = ppo.clip_coef;
  p["clip_value_loss"] = ppo.clip_value_loss;
  p["entropy_coef"] = ppo.entropy_coef;
  p["value_coef"] = ppo.value_coef;
  p["max_grad_norm"] = ppo.max_grad_norm;
  p["total_timesteps"] = ppo.total_timesteps;
  return json{{"name", name},
              {"environment", env},
              {"conditions", conds},
              {"network", {{"encoder_size", encoder_size}, {"recurrent_size", recurrent_size}}},
              {"ppo", p},
              {"n_seeds", n_seeds},
              {"base_seed", base_seed},
              {"eval",
               {{"test_steps", eval.test_steps},
                {"episodes", eval.episodes},
                {"histogram_bins", eval.histogram_bins},
                {"drive_window", eval.drive_window}}},
              {"checkpoint_interval", checkpoint_interval},
              {"output_dir", output_dir}};
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  try {
    c.name = j.value("name", c.name);
    const json& env = j.at("environment");
    c.environment.id = parse_environment_id(env.at("id").get<std::string>());
    switch (c.environment.id) {
      case EnvironmentId::kFoodShare: {
        auto& f = c.environment.foodshare;
        f.decay_prob = env.value("decay_prob", f.decay_prob);
        f.low_step_limit = env.value("low_step_limit", f.low_step_limit);
        f.max_steps = env.value("max_steps", f.max_steps);
        f.beta = env.value("beta", f.beta);
        f.preference = PreferenceDist(env.value("p_high", f.preference.p_high()),
                                      env.value("p_low", f.preference.p_low()));
        break;
      }
      case EnvironmentId::kGrid: {
        auto& g = c.environment.grid;
        g.cells = env.value("cells", g.cells);
        g.drift = env.value("drift", g.drift);
        g.ingestion = env.value("ingestion", g.ingestion);
        g.max_steps = env.value("max_steps", g.max_steps);
        g.beta = env.value("beta", g.beta);
        break;
      }
      case EnvironmentId::kField2D: {
        auto& f = c.environment.field2d;
        f.step_size = env.value("step_size", f.step_size);
        f.interact_radius = env.value("interact_radius", f.interact_radius);
        f.drift = env.value("drift", f.drift);
        f.ingestion = env.value("ingestion", f.ingestion);
        f.immobile_threshold = env.value("immobile_threshold", f.immobile_threshold);
        f.accident_prob = env.value("accident_prob", f.accident_prob);
        f.max_steps = env.value("max_steps", f.max_steps);
        f.beta = env.value("beta", f.beta);
        break;
      }
    }
    c.conditions.clear();
    for (const auto& name : j.at("conditions")) {
      auto cond = parse_condition(name.get<std::string>());
      if (!cond) throw std::invalid_argument("unknown condition '" + name.get<std::string>() + "'");
      c.conditions.push_back(*cond);
    }
    if (j.contains("network")) {
      c.encoder_size = j["network"].value("encoder_size", c.encoder_size);
      c.recurrent_size = j["network"].value("recurrent_size", c.recurrent_size);
    }
    if (j.contains("ppo")) {
      const json& p = j["ppo"];
      auto& q = c.ppo;
      q.learning_rate = p.value("learning_rate", q.learning_rate);
      q.n_workers = p.value("n_workers", q.n_workers);
      q.rollout_steps = p.value("rollout_steps", q.rollout_steps);
      q.gamma = p.value("gamma", q.gamma);
      q.gae_lambda = p.value("gae_lambda", q.gae_lambda);
      q.n_minibatches = p.value("n_minibatches", q.n_minibatches);
      q.update_epochs = p.value("update_epochs", q.update_epochs);
      q.normalize_advantage = p.value("normalize_advantage", q.normalize_advantage);
      q.clip_coef = p.value("clip_coef", q.clip_coef);
      q.clip_value_loss = p.value("clip_value_loss", q.clip_value_loss);
      q.entropy_coef = p.value("entropy_coef", q.entropy_coef);
      q.value_coef = p.value("value_coef", q.value_coef);
      q.max_grad_norm = p.value("max_grad_norm", q.max_grad_norm);
      q.total_timesteps = p.value("total_timesteps", q.total_timesteps);
    }
    c.n_seeds = j.value("n_seeds", c.n_seeds);
    c.base_seed = j.value("base_seed", c.base_seed);
    if (j.contains("eval")) {
      c.eval.test_steps = j["eval"].value("test_steps", c.eval.test_steps);
      c.eval.episodes = j["eval"].value("episodes", c.eval.episodes);
      c.eval.histogram_bins = j["eval"].value("histogram_bins", c.eval.histogram_bins);
      c.eval.drive_window = j["eval"].value("drive_window", c.eval.drive_window);
    }
    c.checkpoint_interval = j.value("checkpoint_interval", c.checkpoint_interval);
    c.output_dir = j.value("output_dir", c.output_dir);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

std::string ExperimentConfig::hash() const {
  json j = to_json();
  j.erase("output_dir");  // where results go does not change what they are
  return fnv1a_hex(j.dump());
}

std::vector<std::string> ExperimentConfig::preset_names() {
  return {"foodshare", "grid", "field2d", "field2d-desk"};
}

ExperimentConfig ExperimentConfig::preset(std::string_view name) {
  ExperimentConfig c;
  c.conditions = {EmpathyCondition::none(), EmpathyCondition::cognitive(),
                  EmpathyCondition::affective(), EmpathyCondition::full()};
  if (name == "foodshare") {
    c.name = "foodshare";
    c.environment.id = EnvironmentId::kFoodShare;
    c.encoder_size = c.recurrent_size = 16;
    c.ppo.rollout_steps = 32;
    c.ppo.total_timesteps = 25'000;
    c.n_seeds = 5;
  } else if (name == "grid") {
    c.name = "grid";
    c.environment.id = EnvironmentId::kGrid;
    c.encoder_size = c.recurrent_size = 32;
    c.ppo.rollout_steps = 100;
    c.ppo.total_timesteps = 1'000'000;
    c.n_seeds = 5;
    c.eval.test_steps = 2000;
  } else if (name == "field2d" || name == "field2d-desk") {
    c.name = std::string(name);
    c.environment.id = EnvironmentId::kField2D;
    c.encoder_size = c.recurrent_size = 64;
    c.ppo.rollout_steps = 1024;
    c.ppo.n_minibatches = 2;
    c.ppo.entropy_coef = 0.0;
    c.ppo.value_coef = 0.3;
    c.ppo.total_timesteps = 20'000'000;
    c.n_seeds = 20;
    if (name == "field2d-desk") {
      c.ppo.total_timesteps = 2'000'000;
      c.n_seeds = 3;
      c.conditions = {EmpathyCondition::none(), EmpathyCondition::affective()};
    }
    c.eval.test_steps = 2000;
  } else {
    throw std::invalid_argument("unknown preset '" + std::string(name) + "'");
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return ExperimentConfig::from_json(j);
}

void save_config(const ExperimentConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config file " + path.string());
  out << config.to_json().dump(2) << '\n';
}

std::filesystem::path resolve_output_dir(const ExperimentConfig& config) {
  if (!config.output_dir.empty()) return config.output_dir;
  if (const char* root = std::getenv("HOMEO_OUTPUT_ROOT"); root != nullptr && *root != '\0') {
    return std::filesystem::path(root) / config.name;
  }
  return std::filesystem::path("runs") / config.name;
}

}  // namespace homeo
