#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ionlattice/config.hpp"
#include "ionlattice/run.hpp"

// ionlattice <subcommand> --config <path> [--set key=value ...] --out <path>
int main(int argc, char** argv) {
  CLI::App app{"Trapped-ion chain in an optical lattice: batch experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_path = "out.csv";

  for (const std::string& name : ionlattice::cli::subcommands()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "configuration file");
    sub->add_option("--set", overrides, "override, key=value (section.key)");
    sub->add_option("--out", out_path, "output CSV path");
  }

  CLI11_PARSE(app, argc, argv);

  const std::string subcommand = app.get_subcommands().front()->get_name();
  try {
    ionlattice::ExperimentConfig cfg = ionlattice::resolve(config_path, overrides);
    return ionlattice::cli::run(subcommand, cfg, out_path);
  } catch (const ionlattice::ConfigError& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return ionlattice::cli::exit_config_error;
  }
}
