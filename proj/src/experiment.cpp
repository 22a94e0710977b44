#include "homeo/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

#include "homeo/metrics.hpp"

namespace homeo {

namespace fs = std::filesystem;
using Eigen::MatrixXd;

namespace {

constexpr std::size_t kEpisodeWindow = 100;

const std::vector<std::string> kTrainHeader = {
    "iteration", "timestep", "episodes_completed", "mean_episode_duration", "policy_loss",
    "value_loss", "entropy", "clip_fraction", "approx_kl", "grad_norm"};

int histogram_bin(double energy, int bins) {
  const int b = static_cast<int>(std::floor((energy + 1.0) / 2.0 * bins));
  return std::clamp(b, 0, bins - 1);
}

MatrixXd stack(const std::vector<Observation>& obs) {
  MatrixXd m(static_cast<Eigen::Index>(obs.front().size()), static_cast<Eigen::Index>(obs.size()));
  for (std::size_t k = 0; k < obs.size(); ++k) {
    m.col(static_cast<Eigen::Index>(k)) =
        Eigen::Map<const Eigen::VectorXd>(obs[k].data(), static_cast<Eigen::Index>(obs[k].size()));
  }
  return m;
}

// Tracks hand-overs to immobile agents in the 2-D field and reports a rescue
// once the recipient eats and regains mobility.
class RescueTracker {
 public:
  void reset() { pending_ = {-1, -1}; }

  void observe(const Field2DState& before, const Field2DStep& step, const Field2DState& after,
               int episode, std::vector<RescueEvent>& out) {
    for (int i = 0; i < 2; ++i) {
      const int j = 1 - i;
      if (step.info.passed[i] && !before.agents[j].movable) pending_[j] = after.t;
    }
    for (int j = 0; j < 2; ++j) {
      if (pending_[j] < 0) continue;
      if (step.info.ate[j]) {
        if (!before.agents[j].movable && after.agents[j].movable) {
          out.push_back({episode, pending_[j], after.t, 1 - j, j});
        }
        pending_[j] = -1;
      } else if (!after.agents[j].has_food) {
        pending_[j] = -1;
      }
    }
  }

 private:
  std::array<int, 2> pending_{-1, -1};
};

}  // namespace

std::uint64_t seed_for(const ExperimentConfig& config, int seed_index) {
  return config.base_seed + static_cast<std::uint64_t>(seed_index);
}

SeedRun train_seed(const ExperimentConfig& config, const EmpathyCondition& cond, int seed_index,
                   const ProgressFn& progress, const CheckpointFn& checkpoint) {
  config.validate();
  SeedRun run;
  run.condition = cond;
  run.seed_index = seed_index;
  run.seed = seed_for(config, seed_index);

  auto init_rng = make_rng(run.seed, 2);
  run.network = PolicyNetwork::initialized(config.network_shape(cond), init_rng);

  std::vector<std::unique_ptr<Environment>> envs;
  for (int w = 0; w < config.ppo.n_workers; ++w) envs.push_back(make_environment(config.environment, cond));
  RolloutCollector collector(std::move(envs), run.seed);
  Adam optimizer(run.network.parameters().size(), config.ppo.learning_rate);
  auto update_rng = make_rng(run.seed, 3);

  std::deque<int> window;
  std::int64_t completed = 0;
  const auto iterations = config.ppo.iterations();
  for (std::int64_t it = 1; it <= iterations; ++it) {
    RolloutBatch batch = collector.collect(run.network, config.ppo.rollout_steps);
    compute_gae(batch, config.ppo.gamma, config.ppo.gae_lambda);
    TrainingRow row;
    row.stats = ppo_update(batch, run.network, optimizer, config.ppo, update_rng);
    for (const auto& ep : collector.drain_completed()) {
      window.push_back(ep.length);
      if (window.size() > kEpisodeWindow) window.pop_front();
      ++completed;
    }
    row.iteration = static_cast<int>(it);
    row.timestep = collector.total_env_steps();
    row.episodes_completed = completed;
    if (window.empty()) {
      row.mean_episode_duration = std::nan("");
    } else {
      double sum = 0.0;
      for (int len : window) sum += len;
      row.mean_episode_duration = sum / static_cast<double>(window.size());
    }
    run.rows.push_back(row);
    if (progress) progress(row);
    if (checkpoint && config.checkpoint_interval > 0 && it % config.checkpoint_interval == 0) {
      checkpoint(run.network, row);
    }
  }
  run.timesteps = collector.total_env_steps();
  return run;
}

EvalMetrics evaluate_policy(const ExperimentConfig& config, const EmpathyCondition& cond,
                            const PolicyNetwork& network, std::uint64_t seed) {
  auto env = make_environment(config.environment, cond);
  if (!(network.shape() == config.network_shape(cond))) {
    throw std::invalid_argument("network shape does not match the evaluation environment");
  }
  auto* foodshare = dynamic_cast<FoodShareEnv*>(env.get());
  auto* grid = dynamic_cast<GridEnv*>(env.get());
  auto* field = dynamic_cast<Field2DEnv*>(env.get());
  const int agents = env->agent_count();
  auto rng = make_rng(seed, 4);
  const int bins = config.eval.histogram_bins;

  EvalMetrics m;
  m.ingestion_histogram.assign(bins, 0);
  m.trajectory_header = env->trajectory_header();
  RescueTracker rescues;
  std::array<bool, 2> received{false, false};

  RecurrentState state = network.initial_state(agents);
  std::vector<int> actions(agents);
  auto act = [&](const std::vector<Observation>& obs) {
    auto out = network.forward(stack(obs), state);
    state = std::move(out.state);
    for (int k = 0; k < agents; ++k) actions[k] = sample_action(out.probs.col(k), rng).index;
  };
  auto field_step = [&](const Field2DState& before, int episode, bool record_ingestion) {
    const auto& st = field->last_step();
    const auto& after = field->state();
    rescues.observe(before, st, after, episode, m.rescues);
    for (int i = 0; i < 2; ++i) {
      if (st.info.passed[i]) received[1 - i] = true;
    }
    for (int j = 0; j < 2; ++j) {
      if (st.info.ate[j] && received[j]) {
        if (record_ingestion) {
          m.ingestion_energies.push_back(before.agents[j].energy);
          ++m.ingestion_histogram[histogram_bin(before.agents[j].energy, bins)];
        }
        received[j] = false;
      }
    }
  };

  // Episode durations.
  for (int e = 0; e < config.eval.episodes; ++e) {
    auto obs = e == 0 ? env->reset(seed * 7919ULL + 17ULL) : env->reset();
    state = network.initial_state(agents);
    rescues.reset();
    received = {false, false};
    while (!env->finished()) {
      act(obs);
      const Field2DState before = field ? field->state() : Field2DState{};
      auto result = env->step(actions);
      if (field) field_step(before, e, false);
      obs = std::move(result.observations);
    }
    m.durations.push_back(env->elapsed_steps());
  }
  m.episodes = static_cast<int>(m.durations.size());
  if (m.episodes > 0) {
    double sum = 0.0;
    for (int d : m.durations) sum += d;
    m.mean_episode_duration = sum / m.episodes;
  }

  // Behavioural test run.
  std::vector<double> possessor_drives, partner_drives;
  auto obs = env->reset(seed * 7919ULL + 31ULL);
  state = network.initial_state(agents);
  rescues.reset();
  received = {false, false};
  int episode = config.eval.episodes;
  const int pass_action = env->action_count() - 1;  // PASS is the last action everywhere
  for (int t = 0; t < config.eval.test_steps; ++t) {
    act(obs);
    const bool partner_low =
        foodshare && foodshare->state().partner_energy == BinaryEnergy::kLow;
    const Field2DState before = field ? field->state() : Field2DState{};
    auto result = env->step(actions);
    for (int k = 0; k < agents; ++k) {
      if (actions[k] == pass_action) {
        ++m.pass_count;
        if (partner_low) ++m.pass_when_partner_low;
      }
    }
    if (partner_low) ++m.partner_low_steps;
    if (t < config.eval.drive_window) {
      if (foodshare) {
        possessor_drives.push_back(foodshare->last_step().info.possessor_drive);
        partner_drives.push_back(foodshare->last_step().info.partner_drive);
      } else if (grid) {
        possessor_drives.push_back(grid->last_step().info.possessor_drive);
        partner_drives.push_back(grid->last_step().info.partner_drive);
      } else if (field) {
        possessor_drives.push_back(drive_quadratic(field->state().agents[0].energy).value());
        partner_drives.push_back(drive_quadratic(field->state().agents[1].energy).value());
      }
    }
    if (grid && grid->last_step().info.partner_fed) {
      const double e = grid->last_step().info.partner_energy_before;
      m.ingestion_energies.push_back(e);
      ++m.ingestion_histogram[histogram_bin(e, bins)];
    }
    if (field) field_step(before, episode, true);
    m.trajectory.push_back(env->trajectory_row());
    if (result.done()) {
      obs = env->reset();
      state = network.initial_state(agents);
      rescues.reset();
      received = {false, false};
      ++episode;
    } else {
      obs = std::move(result.observations);
    }
  }
  m.test_steps = config.eval.test_steps;
  m.pass_rate = static_cast<double>(m.pass_count) / (static_cast<double>(m.test_steps) * agents);
  m.partner_low_rate = static_cast<double>(m.partner_low_steps) / m.test_steps;
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  m.mean_possessor_drive = mean(possessor_drives);
  m.mean_partner_drive = mean(partner_drives);
  m.var_possessor_drive = sample_variance(possessor_drives);
  m.var_partner_drive = sample_variance(partner_drives);
  return m;
}

namespace {

std::vector<std::pair<std::string, std::string>> scalar_metrics(const EvalMetrics& m) {
  return {{"episodes", std::to_string(m.episodes)},
          {"mean_episode_duration", format_number(m.mean_episode_duration)},
          {"test_steps", std::to_string(m.test_steps)},
          {"pass_count", std::to_string(m.pass_count)},
          {"pass_rate", format_number(m.pass_rate)},
          {"pass_when_partner_low", std::to_string(m.pass_when_partner_low)},
          {"partner_low_steps", std::to_string(m.partner_low_steps)},
          {"partner_low_rate", format_number(m.partner_low_rate)},
          {"mean_possessor_drive", format_number(m.mean_possessor_drive)},
          {"mean_partner_drive", format_number(m.mean_partner_drive)},
          {"var_possessor_drive", format_number(m.var_possessor_drive)},
          {"var_partner_drive", format_number(m.var_partner_drive)},
          {"ingestions", std::to_string(m.ingestion_energies.size())},
          {"rescues", std::to_string(m.rescues.size())}};
}

}  // namespace

void write_eval_outputs(const EvalMetrics& m, const ExperimentConfig& config, const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<std::vector<std::string>> rows;
  for (auto& [k, v] : scalar_metrics(m)) rows.push_back({k, v});
  for (std::size_t e = 0; e < m.durations.size(); ++e) {
    rows.push_back({"duration_" + std::to_string(e), std::to_string(m.durations[e])});
  }
  write_csv(dir / "eval.csv", {"metric", "value"}, rows);

  std::vector<std::vector<std::string>> hist;
  const int bins = static_cast<int>(m.ingestion_histogram.size());
  for (int b = 0; b < bins; ++b) {
    const double lo = -1.0 + 2.0 * b / bins, hi = -1.0 + 2.0 * (b + 1) / bins;
    hist.push_back({format_number(lo), format_number(hi), std::to_string(m.ingestion_histogram[b])});
  }
  write_csv(dir / "histogram.csv", {"bin_low", "bin_high", "count"}, hist);

  {
    std::ofstream out(dir / "trajectory.csv");
    if (!out) throw std::runtime_error("cannot write " + (dir / "trajectory.csv").string());
    out << kCsvSchema << '\n' << m.trajectory_header << '\n';
    for (const auto& row : m.trajectory) out << row << '\n';
  }
  if (config.environment.id == EnvironmentId::kField2D) {
    std::vector<std::vector<std::string>> rows_r;
    for (const auto& r : m.rescues) {
      rows_r.push_back({std::to_string(r.episode), std::to_string(r.rescuer), std::to_string(r.rescued),
                        std::to_string(r.t_pass), std::to_string(r.t_recover)});
    }
    write_csv(dir / "rescues.csv", {"episode", "rescuer", "rescued", "t_pass", "t_recover"}, rows_r);
  }
}

EvalMetrics read_eval_metrics(const fs::path& eval_csv) {
  const auto table = read_csv(eval_csv);
  std::map<std::string, double> values;
  for (std::size_t r = 0; r < table.rows.size(); ++r) values[table.rows[r].at(0)] = table.number(r, "value");
  auto get = [&](const std::string& key) {
    auto it = values.find(key);
    if (it == values.end()) throw std::runtime_error(eval_csv.string() + " lacks metric '" + key + "'");
    return it->second;
  };
  EvalMetrics m;
  m.episodes = static_cast<int>(get("episodes"));
  m.mean_episode_duration = get("mean_episode_duration");
  m.test_steps = static_cast<int>(get("test_steps"));
  m.pass_count = static_cast<int>(get("pass_count"));
  m.pass_rate = get("pass_rate");
  m.pass_when_partner_low = static_cast<int>(get("pass_when_partner_low"));
  m.partner_low_steps = static_cast<int>(get("partner_low_steps"));
  m.partner_low_rate = get("partner_low_rate");
  m.mean_possessor_drive = get("mean_possessor_drive");
  m.mean_partner_drive = get("mean_partner_drive");
  m.var_possessor_drive = get("var_possessor_drive");
  m.var_partner_drive = get("var_partner_drive");
  m.rescues.resize(static_cast<std::size_t>(get("rescues")));
  for (int e = 0; e < m.episodes; ++e) m.durations.push_back(static_cast<int>(get("duration_" + std::to_string(e))));
  return m;
}

void write_training_csv(const std::vector<TrainingRow>& rows, const fs::path& path) {
  std::vector<std::vector<std::string>> out;
  for (const auto& r : rows) {
    out.push_back({std::to_string(r.iteration), std::to_string(r.timestep),
                   std::to_string(r.episodes_completed), format_number(r.mean_episode_duration),
                   format_number(r.stats.policy_loss), format_number(r.stats.value_loss),
                   format_number(r.stats.entropy), format_number(r.stats.clip_fraction),
                   format_number(r.stats.approx_kl), format_number(r.stats.grad_norm)});
  }
  write_csv(path, kTrainHeader, out);
}

void write_learning_curve(const fs::path& condition_dir) {
  std::vector<fs::path> seeds;
  for (const auto& entry : fs::directory_iterator(condition_dir)) {
    if (entry.is_directory() && entry.path().filename().string().rfind("seed_", 0) == 0 &&
        fs::exists(entry.path() / "train.csv")) {
      seeds.push_back(entry.path());
    }
  }
  if (seeds.empty()) throw std::runtime_error("no seed_*/train.csv under " + condition_dir.string());
  std::sort(seeds.begin(), seeds.end());
  std::vector<CsvTable> tables;
  std::size_t rows = 0;
  for (const auto& s : seeds) {
    tables.push_back(read_csv(s / "train.csv"));
    rows = std::max(rows, tables.back().rows.size());
  }
  std::vector<std::vector<std::string>> out;
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<double> values;
    double timestep = std::nan("");
    for (const auto& t : tables) {
      if (r >= t.rows.size()) continue;
      values.push_back(t.number(r, "mean_episode_duration"));
      timestep = t.number(r, "timestep");
    }
    const auto ci = mean_ci95(values);
    out.push_back({std::to_string(r + 1), format_number(timestep), std::to_string(ci.n),
                   format_number(ci.mean), format_number(ci.low), format_number(ci.high)});
  }
  write_csv(condition_dir / "learning_curve.csv",
            {"iteration", "timestep", "n", "mean_episode_duration", "ci95_low", "ci95_high"}, out);
}

std::vector<const TrainingSummary::Entry*> TrainingSummary::for_condition(EmpathyKind kind) const {
  std::vector<const Entry*> out;
  for (const auto& e : entries)
    if (e.condition.kind == kind) out.push_back(&e);
  return out;
}

TrainingSummary run_training(const ExperimentConfig& config, const TrainOptions& options) {
  config.validate();
  const int n_seeds = options.n_seeds.value_or(config.n_seeds);
  if (n_seeds < 1) throw std::invalid_argument("need at least one seed");
  TrainingSummary summary;
  summary.output_dir = resolve_output_dir(config);
  fs::create_directories(summary.output_dir);
  {
    auto portable = config;
    portable.output_dir.clear();
    save_config(portable, summary.output_dir / "config.json");
  }
  {
    std::ofstream h(summary.output_dir / "config.hash");
    h << config.hash() << '\n';
  }

  struct Task {
    EmpathyCondition cond;
    int seed_index;
  };
  std::vector<Task> tasks;
  for (const auto& cond : config.conditions)
    for (int k = 0; k < n_seeds; ++k) tasks.push_back({cond, k});
  summary.entries.resize(tasks.size());

  std::mutex log_mutex;
  auto log = [&](const std::string& line) {
    if (!options.log) return;
    std::lock_guard lock(log_mutex);
    *options.log << line << std::endl;
  };

  auto run_task = [&](std::size_t i) {
    const auto& task = tasks[i];
    const fs::path dir = summary.output_dir / std::string(task.cond.name()) /
                         ("seed_" + std::to_string(task.seed_index));
    fs::create_directories(dir);
    const std::uint64_t seed = seed_for(config, task.seed_index);
    auto save = [&](const PolicyNetwork& net, std::int64_t timestep, const fs::path& path) {
      Checkpoint ckpt;
      ckpt.config = config;
      ckpt.condition = task.cond;
      ckpt.seed = seed;
      ckpt.timestep = timestep;
      ckpt.network = net;
      save_checkpoint(ckpt, path);
    };
    const auto iterations = config.ppo.iterations();
    auto run = train_seed(
        config, task.cond, task.seed_index,
        [&](const TrainingRow& row) {
          if (row.iteration % std::max<std::int64_t>(1, iterations / 10) == 0 || row.iteration == iterations) {
            log(std::string(task.cond.name()) + " seed " + std::to_string(task.seed_index) + " step " +
                std::to_string(row.timestep) + " duration " + format_number(row.mean_episode_duration) +
                " entropy " + format_number(row.stats.entropy));
          }
        },
        [&](const PolicyNetwork& net, const TrainingRow& row) {
          save(net, row.timestep, dir / ("checkpoint_" + std::to_string(row.iteration) + ".bin"));
        });
    write_training_csv(run.rows, dir / "train.csv");
    save(run.network, run.timesteps, dir / "checkpoint.bin");
    auto& entry = summary.entries[i];
    entry.condition = task.cond;
    entry.seed_index = task.seed_index;
    entry.seed = seed;
    entry.timesteps = run.timesteps;
    if (options.evaluate) {
      entry.eval = evaluate_policy(config, task.cond, run.network, seed);
      write_eval_outputs(entry.eval, config, dir);
      log(std::string(task.cond.name()) + " seed " + std::to_string(task.seed_index) +
          " eval duration " + format_number(entry.eval.mean_episode_duration) + " pass_rate " +
          format_number(entry.eval.pass_rate));
    }
  };

  const int jobs = std::max(1, std::min<int>(options.jobs, static_cast<int>(tasks.size())));
  if (jobs == 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) run_task(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (int j = 0; j < jobs; ++j) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
          try {
            run_task(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  for (const auto& cond : config.conditions) write_learning_curve(summary.output_dir / std::string(cond.name()));
  if (options.evaluate) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& e : summary.entries) {
      std::vector<std::string> row{std::string(e.condition.name()), std::to_string(e.seed_index),
                                   std::to_string(e.seed), std::to_string(e.timesteps)};
      for (auto& [k, v] : scalar_metrics(e.eval)) row.push_back(v);
      rows.push_back(std::move(row));
    }
    std::vector<std::string> header{"condition", "seed_index", "seed", "timesteps"};
    for (auto& [k, v] : scalar_metrics(EvalMetrics{})) header.push_back(k);
    write_csv(summary.output_dir / "summary.csv", header, rows);
  }
  return summary;
}

EvalMetrics run_eval(const fs::path& checkpoint, std::optional<std::uint64_t> seed,
                     const std::optional<fs::path>& out_dir) {
  const auto ckpt = load_checkpoint(checkpoint);
  const auto shape = ckpt.config.network_shape(ckpt.condition);
  if (!(shape == ckpt.network.shape())) {
    throw std::runtime_error("checkpoint network does not fit its configured environment");
  }
  auto m = evaluate_policy(ckpt.config, ckpt.condition, ckpt.network, seed.value_or(ckpt.seed));
  if (out_dir) write_eval_outputs(m, ckpt.config, *out_dir);
  return m;
}

}  // namespace homeo
