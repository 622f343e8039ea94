#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "xbar/crossbar.hpp"
#include "xbar/nn.hpp"
#include "xbar/noise.hpp"

namespace xbar {

enum class DevicePreset { experimental, simulation, ideal };

const char* to_string(DevicePreset p);

/// Preset plus optional overrides of individual device parameters.
struct DeviceConfig {
  DevicePreset preset = DevicePreset::experimental;
  std::optional<std::size_t> n;
  std::optional<double> q;  // loaded Q, simulation and ideal presets
  std::optional<TopologyVariant> topology;
  std::optional<double> mzi_extinction_db;
  std::optional<double> crossing_loss_db;
  std::optional<double> propagation_loss_db_per_cm;
  std::optional<double> fabrication_sigma_nm;
  std::optional<double> port_loss_db;
  std::optional<double> port_loss_sigma_db;
  std::optional<bool> omit_output_crossings;

  CrossbarSpec to_spec(std::uint64_t seed) const;
};

struct NoiseSettings {
  NoiseConfig noise{0.02, 7, true};
  int repeats = 4;
};

struct DataConfig {
  std::filesystem::path iris;       // empty selects default_iris_path()
  std::filesystem::path mnist_dir;  // empty selects default_mnist_dir()
  std::size_t mnist_train = 10000;
  std::size_t mnist_test = 1000;
};

struct SweepConfig {
  std::vector<std::size_t> sizes{2, 4, 9};
  std::vector<double> q_values{1.0e4, 1.0e5, 3.0e5};
  int trials = 100;
};

/// Everything one CLI invocation needs. Field names mirror the YAML keys.
struct RunConfig {
  std::string experiment;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "results";
  DeviceConfig device;
  NoiseSettings noise;
  TrainingConfig training;
  int runs = 4;                 // independent seeded trainings (iris-train)
  int pretrain_epochs = 500;    // computer training before iris-inference
  bool use_bias = false;        // electronic biases in the Iris MLP
  std::size_t hidden = 4;       // Iris hidden width
  bool conv_input_gradient = true;
  DataConfig data;
  SweepConfig sweep;

  void validate() const;
};

const std::vector<std::string>& experiment_ids();

/// Parses and validates a YAML run configuration. Unknown keys are rejected.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Stable 64-bit FNV-1a hash, used to fingerprint config files.
std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace xbar
