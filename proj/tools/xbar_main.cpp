// Command-line entry point: xbar <experiment> --config <file> [--seed N] [--out DIR]

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "xbar/config.hpp"
#include "xbar/errors.hpp"
#include "xbar/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Simulator for a wavelength-multiplexed microring crossbar"};
  std::string experiment;
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  app.add_option("experiment", experiment, "Experiment id")
      ->required()
      ->check(CLI::IsMember(xbar::experiment_ids()));
  app.add_option("--config", config_path, "YAML run configuration")->required()->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Override the seed in the config");
  auto* out_opt = app.add_option("--out", out_dir, "Override the output directory");
  CLI11_PARSE(app, argc, argv);

  try {
    std::ifstream f(config_path);
    if (!f) throw xbar::Error("cannot read " + config_path);
    std::stringstream ss;
    ss << f.rdbuf();
    const std::string text = ss.str();

    xbar::RunConfig config = xbar::parse_run_config(text);
    if (config.experiment != experiment) {
      std::cerr << "error: config " << config_path << " describes '" << config.experiment << "', not '" << experiment
                << "'\n";
      return 2;
    }
    if (*seed_opt) {
      config.seed = seed;
      config.training.seed = seed;
    }
    if (*out_opt) config.output_dir = out_dir;
    config.validate();

    const xbar::RunSummary summary = xbar::run_experiment(config, text);
    std::cout << "wrote " << summary.files.size() << " files to " << summary.directory.string() << '\n';
    for (const auto& [name, value] : summary.metrics) std::cout << "  " << name << " = " << value << '\n';
    return 0;
  } catch (const xbar::ValidationError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const xbar::ParseError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
