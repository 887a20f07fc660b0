#include <cstdint>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"

#include "config.hpp"
#include "experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"hdxgeo: spectral experiments on geometric complexes"};
  app.footer(hdxgeo::cli::help_text());

  std::string experiment;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> workers;

  app.add_option("experiment", experiment, "experiment name")->required();
  app.add_option("--config", config_path, "flat JSON config file");
  app.add_option("--seed", seed,
                 "master seed override (also HDXGEO_MASTER_SEED)");
  app.add_option("--out", out_dir, "output directory override");
  app.add_option("--workers", workers, "worker thread count override");

  CLI11_PARSE(app, argc, argv);

  try {
    hdxgeo::cli::ExperimentConfig cfg = hdxgeo::cli::resolve_config(
        experiment, config_path, seed, out_dir, workers);
    return hdxgeo::cli::run_experiment(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
