#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "bcdm/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Bayesian cognitive diagnosis models"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key = value run configuration")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--set", overrides, "override a configuration key (key=value)");
  };
  auto* fit = app.add_subcommand("fit", "estimate a model and write the result files");
  auto* simulate = app.add_subcommand("simulate", "draw a data set from a generating model");
  auto* pre = app.add_subcommand("preflight", "short run that reports convergence");
  for (auto* cmd : {fit, simulate, pre}) add_common(cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? bcdm::kExitOk : bcdm::kExitUsage;
  }

  try {
    const auto config = bcdm::load_run_config(config_path, overrides);
    if (fit->parsed()) return bcdm::run_fit(config, std::cerr).exit_code;
    if (simulate->parsed()) {
      bcdm::run_simulate(config, std::cerr);
      return bcdm::kExitOk;
    }
    const auto report = bcdm::preflight(config, std::cout);
    return report.converged ? bcdm::kExitOk : bcdm::kExitNotConverged;
  } catch (const std::exception& e) {
    std::cerr << "bcdm: " << e.what() << "\n";
    return bcdm::exit_code_for(e);
  }
}
