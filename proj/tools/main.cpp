#include "commands.hpp"

#include <iostream>

#include "CLI11.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Crystal particle dynamics fracture simulation and operator learning"};
  app.require_subcommand(1);
  std::string config;
  cpd::cli::CommandOptions options;
  std::string run_root;

  const std::map<std::string, std::string> help{
      {"mesh", "seed and triangulate the configured domain"},
      {"validate", "run the elastic benchmarks against their closed forms"},
      {"simulate", "run one quasi-static loading history"},
      {"generate", "simulate every sample of a case family"},
      {"train", "train a vanilla or fusion operator on a generated dataset"},
      {"evaluate", "score a checkpoint on the held-out samples"},
      {"report", "compare training and evaluation runs"}};
  for (const auto& name : cpd::cli::command_names()) {
    auto* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("config", config, "configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--run-root", run_root, "directory for run outputs (default: $CPD_RUN_ROOT or ./runs)");
    sub->add_flag("--force", options.force, "replace an existing run directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cpd::cli::kExitConfig;
  }
  options.run_root = run_root;
  const auto* chosen = app.get_subcommands().front();
  const auto outcome = cpd::cli::run_command(chosen->get_name(), config, options, std::cout, std::cerr);
  if (!outcome.run_dir.empty()) std::cout << "outputs in " << outcome.run_dir.string() << "\n";
  return outcome.exit_code;
}
