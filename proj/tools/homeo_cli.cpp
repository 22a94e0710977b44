#include <cstdio>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>

#include "homeo/experiment.hpp"
#include "homeo/metrics.hpp"
#include "homeo/oracle.hpp"
#include "homeo/plot.hpp"

namespace {

using namespace homeo;

EmpathyCondition condition_arg(const std::string& name) {
  auto cond = parse_condition(name);
  if (!cond) throw std::invalid_argument("unknown condition '" + name + "'");
  return *cond;
}

int cmd_train(const std::string& config_path, const std::string& preset, std::optional<int> seeds, int jobs,
              const std::string& output, const std::vector<std::string>& conditions, bool quiet) {
  ExperimentConfig config = config_path.empty() ? ExperimentConfig::preset(preset) : load_config(config_path);
  if (!output.empty()) config.output_dir = output;
  if (!conditions.empty()) {
    config.conditions.clear();
    for (const auto& c : conditions) config.conditions.push_back(condition_arg(c));
  }
  TrainOptions options;
  options.n_seeds = seeds;
  options.jobs = jobs;
  options.log = quiet ? nullptr : &std::cerr;
  const auto summary = run_training(config, options);

  std::cout << "condition,n,mean_episode_duration,ci95_low,ci95_high,pass_rate\n";
  for (const auto& cond : config.conditions) {
    std::vector<double> durations, rates;
    for (const auto* e : summary.for_condition(cond.kind)) {
      durations.push_back(e->eval.mean_episode_duration);
      rates.push_back(e->eval.pass_rate);
    }
    const auto d = mean_ci95(durations);
    const auto r = mean_ci95(rates);
    std::cout << cond.name() << ',' << durations.size() << ',' << format_number(d.mean) << ','
              << format_number(d.low) << ',' << format_number(d.high) << ',' << format_number(r.mean) << '\n';
  }
  std::cerr << "outputs in " << summary.output_dir.string() << '\n';
  return 0;
}

int cmd_eval(const std::string& checkpoint, std::optional<std::uint64_t> seed, const std::string& output) {
  std::optional<std::filesystem::path> out;
  if (!output.empty()) out = output;
  const auto m = run_eval(checkpoint, seed, out);
  std::cout << "metric,value\n"
            << "episodes," << m.episodes << '\n'
            << "mean_episode_duration," << format_number(m.mean_episode_duration) << '\n'
            << "test_steps," << m.test_steps << '\n'
            << "pass_count," << m.pass_count << '\n'
            << "pass_rate," << format_number(m.pass_rate) << '\n'
            << "pass_when_partner_low," << m.pass_when_partner_low << '\n'
            << "partner_low_rate," << format_number(m.partner_low_rate) << '\n'
            << "mean_possessor_drive," << format_number(m.mean_possessor_drive) << '\n'
            << "mean_partner_drive," << format_number(m.mean_partner_drive) << '\n'
            << "var_partner_drive," << format_number(m.var_partner_drive) << '\n'
            << "rescues," << m.rescues.size() << '\n';
  return 0;
}

int cmd_oracle(const std::string& condition, double gamma) {
  const auto cond = condition_arg(condition);
  const auto mdp = build_mdp(cond);
  const auto solved = value_iteration(mdp, gamma);
  std::cout << "# condition " << cond.name() << " gamma " << format_number(gamma) << " iterations "
            << solved.iterations << " residual " << format_number(solved.residual) << '\n';
  std::cout << "state,possessor,partner,possessor_low_steps,partner_low_steps,action,value,q_eat,q_pass\n";
  int eat = 0, pass_partner_low = 0;
  for (std::size_t i = 0; i < mdp.states.size(); ++i) {
    const auto& s = mdp.states[i];
    const bool is_pass = solved.action[i] == FoodShareAction::kPass;
    eat += is_pass ? 0 : 1;
    if (is_pass && s.partner_energy == BinaryEnergy::kLow) ++pass_partner_low;
    std::cout << i << ',' << (s.possessor_energy == BinaryEnergy::kHigh ? "High" : "Low") << ','
              << (s.partner_energy == BinaryEnergy::kHigh ? "High" : "Low") << ',' << s.possessor_low_steps << ','
              << s.partner_low_steps << ',' << (is_pass ? "PASS" : "EAT") << ',' << format_number(solved.value[i])
              << ',' << format_number(solved.q[i][0]) << ',' << format_number(solved.q[i][1]) << '\n';
  }
  const int live = static_cast<int>(mdp.states.size());
  bool ok = true;
  std::string claim;
  if (cond.coupling_w == 0.0) {
    ok = eat == live;
    claim = "EAT optimal in " + std::to_string(eat) + "/" + std::to_string(live) + " states";
  } else {
    ok = pass_partner_low >= 1;
    claim = "PASS optimal in " + std::to_string(pass_partner_low) + " partner-Low states";
  }
  std::cout << (ok ? "PASS" : "FAIL") << ": " << claim << '\n';
  return ok ? 0 : 1;
}

int cmd_plot(const std::string& input, const std::string& output) {
  for (const auto& p : emit_plots(input, output)) std::cout << p.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Homeostatic multi-agent RL workbench"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "Train every condition of an experiment over N seeds");
  std::string config_path, preset = "foodshare", train_out;
  std::optional<int> seeds;
  int jobs = 1;
  bool quiet = false;
  std::vector<std::string> conditions;
  auto* config_opt = train->add_option("--config", config_path, "Experiment JSON file")->check(CLI::ExistingFile);
  train->add_option("--preset", preset, "Built-in preset when no --config is given")->excludes(config_opt);
  train->add_option("--seeds", seeds, "Number of seeds (overrides the config)")->check(CLI::PositiveNumber);
  train->add_option("--jobs", jobs, "Concurrent (condition, seed) tasks")->check(CLI::PositiveNumber);
  train->add_option("--output", train_out, "Output directory (overrides the config)");
  train->add_option("--condition", conditions, "Restrict to these conditions");
  train->add_flag("--quiet", quiet, "No progress log");

  auto* eval = app.add_subcommand("eval", "Evaluate a saved checkpoint");
  std::string checkpoint, eval_out;
  std::optional<std::uint64_t> eval_seed;
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("--seed", eval_seed, "Evaluation seed (default: the training seed)");
  eval->add_option("--output", eval_out, "Directory for eval.csv and trajectory files");

  auto* oracle = app.add_subcommand("oracle", "Solve the food-share MDP exactly");
  std::string condition = "none";
  double gamma = 0.99;
  oracle->add_option("--condition", condition, "None, Cognitive, Affective or Full")->required();
  oracle->add_option("--gamma", gamma, "Discount factor")->check(CLI::Range(0.0, 0.999999));

  auto* plot = app.add_subcommand("plot", "Render SVG figures from an experiment directory");
  std::string plot_in, plot_out;
  plot->add_option("--input", plot_in, "Experiment output directory")->required()->check(CLI::ExistingDirectory);
  plot->add_option("--output", plot_out, "Figure directory (default: the input)");

  auto* presets = app.add_subcommand("preset", "Print a built-in preset as JSON");
  std::string preset_name;
  presets->add_option("name", preset_name, "Preset name")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(config_path, preset, seeds, jobs, train_out, conditions, quiet);
    if (*eval) return cmd_eval(checkpoint, eval_seed, eval_out);
    if (*oracle) return cmd_oracle(condition, gamma);
    if (*plot) return cmd_plot(plot_in, plot_out);
    if (*presets) {
      std::cout << ExperimentConfig::preset(preset_name).to_json().dump(2) << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
