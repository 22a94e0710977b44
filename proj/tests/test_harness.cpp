#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "homeo/experiment.hpp"
#include "homeo/metrics.hpp"
#include "homeo/plot.hpp"

using namespace homeo;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("homeo_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

ExperimentConfig tiny_foodshare(const fs::path& out) {
  auto c = ExperimentConfig::preset("foodshare");
  c.ppo.total_timesteps = 2048;
  c.n_seeds = 2;
  c.eval.episodes = 2;
  c.eval.test_steps = 200;
  c.output_dir = out.string();
  return c;
}

std::vector<fs::path> csv_files(const fs::path& root) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.path().extension() == ".csv") out.push_back(fs::relative(e.path(), root));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(Config, JsonRoundTripPreservesEverything) {
  for (const auto& name : ExperimentConfig::preset_names()) {
    const auto c = ExperimentConfig::preset(name);
    EXPECT_NO_THROW(c.validate()) << name;
    const auto back = ExperimentConfig::from_json(c.to_json());
    EXPECT_EQ(back.to_json(), c.to_json()) << name;
    EXPECT_EQ(back.hash(), c.hash());
  }
}

TEST(Config, FoodSharePresetMatchesPaperTable) {
  const auto c = ExperimentConfig::preset("foodshare");
  EXPECT_EQ(c.ppo.learning_rate, 1e-3);
  EXPECT_EQ(c.ppo.n_workers, 16);
  EXPECT_EQ(c.ppo.rollout_steps, 32);
  EXPECT_EQ(c.ppo.gamma, 0.99);
  EXPECT_EQ(c.ppo.gae_lambda, 0.95);
  EXPECT_EQ(c.ppo.n_minibatches, 4);
  EXPECT_EQ(c.ppo.update_epochs, 4);
  EXPECT_EQ(c.ppo.clip_coef, 0.1);
  EXPECT_EQ(c.ppo.entropy_coef, 0.01);
  EXPECT_EQ(c.ppo.value_coef, 0.5);
  EXPECT_EQ(c.ppo.max_grad_norm, 0.5);
  EXPECT_EQ(c.ppo.total_timesteps, 25000);
  EXPECT_EQ(c.conditions.size(), 4u);
  EXPECT_EQ(ExperimentConfig::preset("grid").ppo.total_timesteps, 1'000'000);
  EXPECT_EQ(ExperimentConfig::preset("field2d").ppo.total_timesteps, 20'000'000);
  EXPECT_EQ(ExperimentConfig::preset("field2d-desk").ppo.total_timesteps, 2'000'000);
  EXPECT_THROW(ExperimentConfig::preset("atari"), std::invalid_argument);
}

TEST(Config, HashTracksContentButNotOutputDir) {
  auto a = ExperimentConfig::preset("grid");
  auto b = a;
  b.output_dir = "/somewhere/else";
  EXPECT_EQ(a.hash(), b.hash());
  b.ppo.learning_rate = 2e-3;
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 16u);
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}

TEST(Config, RejectsInvalidFields) {
  auto j = ExperimentConfig::preset("foodshare").to_json();
  j["environment"]["id"] = "maze";
  EXPECT_THROW(ExperimentConfig::from_json(j), std::invalid_argument);
  auto c = ExperimentConfig::preset("foodshare");
  c.n_seeds = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = ExperimentConfig::preset("foodshare");
  c.conditions.clear();
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = ExperimentConfig::preset("foodshare");
  c.ppo.n_minibatches = 32;  // more minibatches than streams
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Config, FileRoundTripAndMissingFile) {
  const auto dir = scratch("config");
  const auto c = ExperimentConfig::preset("field2d-desk");
  save_config(c, dir / "c.json");
  EXPECT_EQ(load_config(dir / "c.json").hash(), c.hash());
  EXPECT_THROW(load_config(dir / "missing.json"), std::runtime_error);
}

TEST(Config, OutputRootFromEnvironment) {
  auto c = ExperimentConfig::preset("grid");
  ::setenv("HOMEO_OUTPUT_ROOT", "/tmp/homeo_root", 1);
  EXPECT_EQ(resolve_output_dir(c), fs::path("/tmp/homeo_root/grid"));
  ::unsetenv("HOMEO_OUTPUT_ROOT");
  EXPECT_EQ(resolve_output_dir(c), fs::path("runs/grid"));
  c.output_dir = "/x/y";
  EXPECT_EQ(resolve_output_dir(c), fs::path("/x/y"));
}

TEST(Checkpoint, RoundTripsAndRejectsCorruption) {
  const auto dir = scratch("ckpt");
  std::mt19937_64 rng(1);
  Checkpoint ck;
  ck.config = ExperimentConfig::preset("grid");
  ck.condition = EmpathyCondition::full();
  ck.seed = 77;
  ck.timestep = 1234;
  ck.network = PolicyNetwork::initialized(ck.config.network_shape(ck.condition), rng);
  save_checkpoint(ck, dir / "a.bin");
  const auto back = load_checkpoint(dir / "a.bin", ck.network.shape());
  EXPECT_EQ(back.network.parameters(), ck.network.parameters());
  EXPECT_EQ(back.seed, 77u);
  EXPECT_EQ(back.timestep, 1234);
  EXPECT_EQ(back.condition.kind, EmpathyKind::kFull);
  EXPECT_EQ(back.config.hash(), ck.config.hash());

  EXPECT_THROW(load_checkpoint(dir / "a.bin", NetworkShape{8, 32, 32, 5}), std::runtime_error);

  std::string bytes = slurp(dir / "a.bin");
  std::ofstream(dir / "truncated.bin", std::ios::binary) << bytes.substr(0, bytes.size() - 9);
  EXPECT_THROW(load_checkpoint(dir / "truncated.bin"), std::runtime_error);

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  std::ofstream(dir / "magic.bin", std::ios::binary) << bad_magic;
  EXPECT_THROW(load_checkpoint(dir / "magic.bin"), std::runtime_error);

  std::string bad_hash = bytes;
  bad_hash[36] = bad_hash[36] == '0' ? '1' : '0';  // first hex digit of the stored hash
  std::ofstream(dir / "hash.bin", std::ios::binary) << bad_hash;
  EXPECT_THROW(load_checkpoint(dir / "hash.bin"), std::runtime_error);

  EXPECT_THROW(load_checkpoint(dir / "none.bin"), std::runtime_error);
}

TEST(Metrics, StudentTIntervalMatchesTable) {
  const std::vector<double> v{1, 2, 3, 4, 5};
  const auto ci = mean_ci95(v);
  // t_{0.975, 4} = 2.7764451, s = sqrt(2.5).
  const double half = 2.7764451052 * std::sqrt(2.5) / std::sqrt(5.0);
  EXPECT_EQ(ci.n, 5);
  EXPECT_DOUBLE_EQ(ci.mean, 3.0);
  EXPECT_NEAR(ci.low, 3.0 - half, 1e-8);
  EXPECT_NEAR(ci.high, 3.0 + half, 1e-8);
  const std::vector<double> one{4.0, std::nan("")};
  const auto single = mean_ci95(one);
  EXPECT_EQ(single.n, 1);
  EXPECT_EQ(single.low, 4.0);
  EXPECT_EQ(single.high, 4.0);
  EXPECT_DOUBLE_EQ(sample_variance(v), 2.5);
}

TEST(Metrics, CsvRoundTripAndErrors) {
  const auto dir = scratch("csv");
  write_csv(dir / "a.csv", {"x", "y"}, {{"1", "0.5"}, {"2", "nan"}});
  EXPECT_EQ(slurp(dir / "a.csv").rfind(kCsvSchema, 0), 0u);
  const auto t = read_csv(dir / "a.csv");
  EXPECT_EQ(t.header, (std::vector<std::string>{"x", "y"}));
  EXPECT_EQ(t.number(0, "y"), 0.5);
  EXPECT_TRUE(std::isnan(t.number(1, "y")));
  EXPECT_THROW(t.column("z"), std::out_of_range);
  std::ofstream(dir / "ragged.csv") << "a,b\n1,2\n3\n";
  EXPECT_THROW(read_csv(dir / "ragged.csv"), std::runtime_error);
  std::ofstream(dir / "empty.csv") << "# only a comment\n";
  EXPECT_THROW(read_csv(dir / "empty.csv"), std::runtime_error);
  EXPECT_THROW(read_csv(dir / "missing.csv"), std::runtime_error);
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(std::nan("")), "nan");
}

TEST(Evaluation, UniformPolicyPassesAtChanceRate) {
  for (auto id : {EnvironmentId::kFoodShare, EnvironmentId::kGrid, EnvironmentId::kField2D}) {
    auto c = ExperimentConfig::preset("foodshare");
    c.environment.id = id;
    c.eval.episodes = 1;
    c.eval.test_steps = 1000;
    const auto cond = EmpathyCondition::none();
    const PolicyNetwork uniform(c.network_shape(cond));
    const auto m = evaluate_policy(c, cond, uniform, 5);
    const double chance = 1.0 / uniform.shape().action_count;
    EXPECT_NEAR(m.pass_rate, chance, 0.05) << to_string(id);
    EXPECT_EQ(m.test_steps, 1000);
  }
}

TEST(Training, FoodShareRunCoversTableStepCount) {
  auto c = ExperimentConfig::preset("foodshare");
  c.conditions = {EmpathyCondition::none()};
  const auto run = train_seed(c, c.conditions[0], 0);
  EXPECT_GE(run.timesteps, 25000);
  EXPECT_EQ(run.timesteps, 25088);
  EXPECT_EQ(run.rows.size(), 49u);
  EXPECT_EQ(run.rows.back().timestep, run.timesteps);
}

TEST(Training, IdenticalConfigReproducesCsvBitForBit) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  TrainOptions sequential;
  run_training(tiny_foodshare(a), sequential);
  TrainOptions parallel;
  parallel.jobs = 3;
  run_training(tiny_foodshare(b), parallel);
  const auto files = csv_files(a);
  ASSERT_EQ(files, csv_files(b));
  EXPECT_GE(files.size(), 8u * 4u);
  for (const auto& f : files) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  EXPECT_EQ(slurp(a / "none" / "seed_1" / "checkpoint.bin"), slurp(b / "none" / "seed_1" / "checkpoint.bin"));
  EXPECT_EQ(slurp(a / "config.json"), slurp(b / "config.json"));
}

TEST(Training, LearningCurveAggregatesSeeds) {
  const auto dir = scratch("curve");
  run_training(tiny_foodshare(dir));
  const auto curve = read_csv(dir / "affective" / "learning_curve.csv");
  const auto s0 = read_csv(dir / "affective" / "seed_0" / "train.csv");
  const auto s1 = read_csv(dir / "affective" / "seed_1" / "train.csv");
  ASSERT_EQ(curve.rows.size(), s0.rows.size());
  const auto last = curve.rows.size() - 1;
  const std::vector<double> v{s0.number(last, "mean_episode_duration"), s1.number(last, "mean_episode_duration")};
  const auto ci = mean_ci95(v);
  EXPECT_EQ(curve.number(last, "n"), ci.n);  // seeds without a finished episode are skipped
  EXPECT_NEAR(curve.number(last, "mean_episode_duration"), ci.mean, 1e-12);
  EXPECT_NEAR(curve.number(last, "ci95_low"), ci.low, 1e-9);
  const auto summary = read_csv(dir / "summary.csv");
  EXPECT_EQ(summary.rows.size(), 8u);
}

TEST(Eval, CheckpointReEvaluationMatchesTraining) {
  const auto dir = scratch("reeval");
  auto c = tiny_foodshare(dir);
  c.conditions = {EmpathyCondition::full()};
  c.n_seeds = 1;
  run_training(c);
  const auto seed_dir = dir / "full" / "seed_0";
  const auto m = run_eval(seed_dir / "checkpoint.bin", std::nullopt, dir / "again");
  EXPECT_EQ(slurp(seed_dir / "eval.csv"), slurp(dir / "again" / "eval.csv"));
  EXPECT_EQ(m.test_steps, 200);
}

TEST(Plots, RegenerationIsIdempotent) {
  const auto dir = scratch("plots");
  run_training(tiny_foodshare(dir));
  const auto first = emit_plots(dir);
  ASSERT_FALSE(first.empty());
  EXPECT_TRUE(fs::exists(dir / "learning_curve.svg"));
  EXPECT_TRUE(fs::exists(dir / "bars_pass_rate.svg"));
  std::vector<std::string> bytes;
  for (const auto& p : first) bytes.push_back(slurp(p));
  const auto second = emit_plots(dir);
  ASSERT_EQ(first, second);
  for (std::size_t i = 0; i < first.size(); ++i) EXPECT_EQ(slurp(second[i]), bytes[i]);
  const auto svg = slurp(dir / "learning_curve.svg");
  for (const char* label : {"none", "cognitive", "affective", "full"}) EXPECT_NE(svg.find(label), std::string::npos);
}

TEST(Plots, EmptyInputIsAnErrorAndWritesNothing) {
  const auto dir = scratch("plots_empty");
  fs::create_directories(dir / "none" / "seed_0");
  EXPECT_THROW(emit_plots(dir), std::runtime_error);
  EXPECT_FALSE(fs::exists(dir / "learning_curve.svg"));
  EXPECT_THROW(emit_plots(dir / "missing"), std::runtime_error);
}

TEST(Plots, MalformedCsvIsRejected) {
  const auto dir = scratch("plots_bad");
  fs::create_directories(dir / "none" / "seed_0");
  std::ofstream(dir / "none" / "seed_0" / "train.csv") << "iteration,timestep,mean_episode_duration\n1,2\n";
  EXPECT_THROW(emit_plots(dir), std::runtime_error);
  EXPECT_FALSE(fs::exists(dir / "learning_curve.svg"));
}
