#include <CLI11.hpp>
#include <cstdint>
#include <optional>
#include <string>

#include "rzc/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"rzc - zero currents of random sections on discrete line bundles"};

  std::string config_path;
  app.add_option("--config", config_path, "experiment config file")->required();
  std::optional<std::uint64_t> seed;
  app.add_option("--seed", seed, "override master_seed");
  std::optional<int> workers;
  app.add_option("--workers", workers, "number of sampling workers");

  CLI11_PARSE(app, argc, argv);
  return rzc::run_experiment_cli(config_path, seed, workers);
}
