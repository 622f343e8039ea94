#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "xbar/config.hpp"

namespace xbar {

/// Files written and headline numbers of one run.
struct RunSummary {
  std::filesystem::path directory;
  std::vector<std::string> files;
  std::map<std::string, double> metrics;
};

/// Named permutation programs used for matrix measurements.
std::vector<std::pair<std::string, Matrix>> permutation_programs(std::size_t n);

/// Runs `config.experiment`, writing CSV results and manifest.json into
/// `config.output_dir`. `config_text` is echoed into the manifest and hashed.
RunSummary run_experiment(const RunConfig& config, const std::string& config_text = "");

}  // namespace xbar
