// Command-line front end for the experiment runner.

#include <algorithm>
#include <iostream>

#include "CLI11.hpp"
#include "idslab/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"idslab: GAN-augmented reinforcement-learning intrusion detection experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_file;
  std::vector<std::string> assignments;
  std::string output_dir;
  bool paper_scale = false;
  bool print_config = false;
  app.add_option("-c,--config", config_file, "JSON configuration file");
  app.add_option("--set", assignments, "Override a config key, e.g. --set ppo.total_timesteps=50000")
      ->take_all()
      ->allow_extra_args(false);
  std::size_t rows = 0;
  app.add_option("--rows", rows,
                 "Synthetic rows: N unconditional and N/10 per class conditional (overridden by --set)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--paper-scale", paper_scale, "Full-scale budgets (100 GAN epochs, 2M PPO steps, 200k rows)");
  app.add_option("-o,--output-dir", output_dir, "Artifact directory (overrides output_dir)");
  app.add_flag("--print-config", print_config, "Print the resolved configuration to stdout before running");

  std::vector<std::pair<CLI::App*, idslab::Stage>> commands;
  for (auto [stage, help] : std::initializer_list<std::pair<idslab::Stage, const char*>>{
           {idslab::Stage::preprocess, "Parse and encode the train/test files"},
           {idslab::Stage::gan_train, "Train the conditional WGAN on a stratified subset"},
           {idslab::Stage::gan_sample, "Write unconditional and per-class synthetic files"},
           {idslab::Stage::gan_eval, "Score synthetic files against held-out real rows"},
           {idslab::Stage::drl_train, "Train the PPO detector for the configured cell"},
           {idslab::Stage::drl_eval, "Evaluate the trained detector on the test set"},
           {idslab::Stage::baselines, "Train and evaluate the supervised baselines"},
           {idslab::Stage::report, "Aggregate results into CSV tables and a manifest"},
           {idslab::Stage::run_all, "Run every stage in order"}})
    commands.emplace_back(app.add_subcommand(std::string(idslab::to_string(stage)), help), stage);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (rows > 0) {
      const std::size_t per_class = std::max<std::size_t>(1, rows / 10);
      assignments.insert(assignments.begin(), {"unconditional_rows=" + std::to_string(rows),
                                               "conditional_rows_per_class=" + std::to_string(per_class)});
    }
    if (!output_dir.empty()) assignments.push_back("output_dir=" + nlohmann::json(output_dir).dump());
    auto cfg = idslab::resolve_config(config_file, paper_scale, assignments);
    if (print_config) std::cout << cfg.to_json().dump(2) << '\n';
    for (auto& [sub, stage] : commands)
      if (sub->parsed()) idslab::run_stage(stage, cfg);
  } catch (const std::exception& e) {
    std::cerr << "idslab: error: " << e.what() << '\n';
    return idslab::exit_code_for(e);
  }
  return 0;
}
