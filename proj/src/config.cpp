#include "xbar/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "xbar/errors.hpp"
#include "xbar/presets.hpp"

namespace xbar {

const char* to_string(DevicePreset p) {
  switch (p) {
    case DevicePreset::experimental: return "experimental";
    case DevicePreset::simulation: return "simulation";
    case DevicePreset::ideal: return "ideal";
  }
  return "unknown";
}

const std::vector<std::string>& experiment_ids() {
  static const std::vector<std::string> ids{"characterize-devices", "measure-matrix", "iris-inference",
                                            "iris-train",           "mnist-train",    "sweep-scaling"};
  return ids;
}

CrossbarSpec DeviceConfig::to_spec(std::uint64_t seed) const {
  CrossbarSpec spec;
  switch (preset) {
    case DevicePreset::experimental:
      if (q) throw ValidationError("device.q applies to the simulation and ideal presets only");
      if (n && *n != 4) throw ValidationError("the experimental preset is a 4x4 chip");
      spec = experimental_spec(seed);
      break;
    case DevicePreset::simulation: spec = simulation_spec(n.value_or(9), q.value_or(3.0e5), seed); break;
    case DevicePreset::ideal:
      spec = ideal_spec(n.value_or(4), seed);
      if (q) {
        const Couplings k = couplings_for_q(*q, spec.ring, kReferenceNm);
        spec.ring.self_coupling_t1 = k.t1;
        spec.ring.self_coupling_t2 = k.t2;
      }
      break;
  }
  if (topology) spec.variant = *topology;
  if (mzi_extinction_db) spec.mzi.extinction_ratio_db = *mzi_extinction_db;
  if (crossing_loss_db) spec.losses.crossing_loss_db = *crossing_loss_db;
  if (propagation_loss_db_per_cm) spec.losses.propagation_loss_db_per_cm = *propagation_loss_db_per_cm;
  if (fabrication_sigma_nm) spec.fabrication_sigma_nm = *fabrication_sigma_nm;
  if (port_loss_db) spec.port_loss_db = *port_loss_db;
  if (port_loss_sigma_db) spec.port_loss_sigma_db = *port_loss_sigma_db;
  if (omit_output_crossings) spec.losses.omit_output_crossings = *omit_output_crossings;
  return spec;
}

void RunConfig::validate() const {
  const auto& ids = experiment_ids();
  if (std::find(ids.begin(), ids.end(), experiment) == ids.end()) {
    throw ValidationError("unknown experiment '" + experiment + "'");
  }
  training.validate();
  noise.noise.validate();
  if (noise.repeats < 1) throw ValidationError("noise.repeats must be at least 1");
  if (runs < 1) throw ValidationError("runs must be at least 1");
  if (pretrain_epochs < 1) throw ValidationError("pretrain_epochs must be at least 1");
  if (hidden < 1) throw ValidationError("hidden must be at least 1");
  if (data.mnist_train < 1 || data.mnist_test < 1) throw ValidationError("MNIST counts must be positive");
  if (sweep.trials < 1 || sweep.sizes.empty() || sweep.q_values.empty()) {
    throw ValidationError("sweep needs sizes, q_values and at least one trial");
  }
  for (std::size_t s : sweep.sizes) {
    if (s < 1) throw ValidationError("sweep sizes must be positive");
  }
  for (double q : sweep.q_values) {
    if (!(q > 0.0)) throw ValidationError("sweep q_values must be positive");
  }
  if (output_dir.empty()) throw ValidationError("output_dir must not be empty");
  if (device.n && *device.n < 1) throw ValidationError("device.n must be positive");
  if (device.q && !(*device.q > 0.0)) throw ValidationError("device.q must be positive");
}

namespace {

std::string where(const YAML::Node& node) {
  const YAML::Mark m = node.Mark();
  return m.line >= 0 ? " (line " + std::to_string(m.line + 1) + ")" : "";
}

void check_keys(const YAML::Node& node, const std::string& section, const std::set<std::string>& allowed) {
  if (!node.IsMap()) throw ValidationError("'" + section + "' must be a mapping" + where(node));
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.count(key)) {
      throw ValidationError("unknown key '" + key + "' in " + section + where(kv.first));
    }
  }
}

template <typename T>
T get(const YAML::Node& node, const std::string& key) {
  try {
    return node[key].as<T>();
  } catch (const YAML::Exception&) {
    throw ValidationError("key '" + key + "' has an invalid value" + where(node[key]));
  }
}

template <typename T>
void read(const YAML::Node& node, const std::string& key, T& out) {
  if (node[key]) out = get<T>(node, key);
}

template <typename T>
void read(const YAML::Node& node, const std::string& key, std::optional<T>& out) {
  if (node[key]) out = get<T>(node, key);
}

// Experiment-specific defaults applied before the file's overrides.
void apply_defaults(RunConfig& c) {
  TrainingConfig& t = c.training;
  if (c.experiment == "mnist-train") {
    c.device.preset = DevicePreset::simulation;
    t.optimizer.kind = OptimizerKind::adam;
    t.optimizer.learning_rate = 1e-3;
    t.epochs = 10;
    t.batch_size = 32;
    t.loss = LossKind::cross_entropy;
    t.backend = BackendKind::photonic;
  } else if (c.experiment == "sweep-scaling") {
    c.device.preset = DevicePreset::simulation;
    c.noise.noise.enabled = false;
  } else if (c.experiment == "iris-train") {
    t.optimizer.kind = OptimizerKind::sgd;
    t.optimizer.learning_rate = 0.5;
    t.epochs = 100;
    t.batch_size = 1;
    t.loss = LossKind::mse;
    t.backend = BackendKind::lut;
  } else if (c.experiment == "iris-inference") {
    t.optimizer.kind = OptimizerKind::sgd;
    t.optimizer.learning_rate = 0.5;
    t.backend = BackendKind::photonic;
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ParseError(e.msg, static_cast<std::size_t>(e.mark.line + 1));
  }
  if (!root || !root.IsMap()) throw ValidationError("config must be a YAML mapping");
  check_keys(root, "config", {"experiment", "seed", "output_dir", "device", "noise", "training", "runs",
                              "pretrain_epochs", "use_bias", "hidden", "conv_input_gradient", "data", "sweep"});
  RunConfig c;
  if (!root["experiment"]) throw ValidationError("config is missing 'experiment'");
  c.experiment = get<std::string>(root, "experiment");
  apply_defaults(c);
  read(root, "seed", c.seed);
  if (root["output_dir"]) c.output_dir = get<std::string>(root, "output_dir");
  read(root, "runs", c.runs);
  read(root, "pretrain_epochs", c.pretrain_epochs);
  read(root, "use_bias", c.use_bias);
  read(root, "hidden", c.hidden);
  read(root, "conv_input_gradient", c.conv_input_gradient);

  if (const YAML::Node d = root["device"]) {
    check_keys(d, "device", {"preset", "n", "q", "topology", "mzi_extinction_db", "crossing_loss_db",
                             "propagation_loss_db_per_cm", "fabrication_sigma_nm", "port_loss_db",
                             "port_loss_sigma_db", "omit_output_crossings"});
    if (d["preset"]) {
      const std::string p = get<std::string>(d, "preset");
      if (p == "experimental") c.device.preset = DevicePreset::experimental;
      else if (p == "simulation") c.device.preset = DevicePreset::simulation;
      else if (p == "ideal") c.device.preset = DevicePreset::ideal;
      else throw ValidationError("unknown device preset '" + p + "'" + where(d["preset"]));
    }
    if (d["topology"]) {
      const std::string v = get<std::string>(d, "topology");
      if (v == "symmetric") c.device.topology = TopologyVariant::symmetric;
      else if (v == "legacy_asymmetric") c.device.topology = TopologyVariant::legacy_asymmetric;
      else throw ValidationError("unknown topology '" + v + "'" + where(d["topology"]));
    }
    read(d, "n", c.device.n);
    read(d, "q", c.device.q);
    read(d, "mzi_extinction_db", c.device.mzi_extinction_db);
    read(d, "crossing_loss_db", c.device.crossing_loss_db);
    read(d, "propagation_loss_db_per_cm", c.device.propagation_loss_db_per_cm);
    read(d, "fabrication_sigma_nm", c.device.fabrication_sigma_nm);
    read(d, "port_loss_db", c.device.port_loss_db);
    read(d, "port_loss_sigma_db", c.device.port_loss_sigma_db);
    read(d, "omit_output_crossings", c.device.omit_output_crossings);
  }
  if (const YAML::Node n = root["noise"]) {
    check_keys(n, "noise", {"enabled", "relative_sigma", "repeats", "seed"});
    read(n, "enabled", c.noise.noise.enabled);
    read(n, "relative_sigma", c.noise.noise.relative_sigma);
    read(n, "repeats", c.noise.repeats);
    read(n, "seed", c.noise.noise.seed);
  }
  if (const YAML::Node t = root["training"]) {
    check_keys(t, "training", {"optimizer", "learning_rate", "beta1", "beta2", "epsilon", "epochs", "batch_size",
                               "loss", "backend"});
    if (t["optimizer"]) c.training.optimizer.kind = optimizer_from_string(get<std::string>(t, "optimizer"));
    read(t, "learning_rate", c.training.optimizer.learning_rate);
    read(t, "beta1", c.training.optimizer.beta1);
    read(t, "beta2", c.training.optimizer.beta2);
    read(t, "epsilon", c.training.optimizer.epsilon);
    read(t, "epochs", c.training.epochs);
    read(t, "batch_size", c.training.batch_size);
    if (t["loss"]) c.training.loss = loss_from_string(get<std::string>(t, "loss"));
    if (t["backend"]) c.training.backend = backend_from_string(get<std::string>(t, "backend"));
  }
  if (const YAML::Node d = root["data"]) {
    check_keys(d, "data", {"iris", "mnist_dir", "mnist_train", "mnist_test"});
    if (d["iris"]) c.data.iris = get<std::string>(d, "iris");
    if (d["mnist_dir"]) c.data.mnist_dir = get<std::string>(d, "mnist_dir");
    read(d, "mnist_train", c.data.mnist_train);
    read(d, "mnist_test", c.data.mnist_test);
  }
  if (const YAML::Node s = root["sweep"]) {
    check_keys(s, "sweep", {"sizes", "q_values", "trials"});
    read(s, "sizes", c.sweep.sizes);
    read(s, "q_values", c.sweep.q_values);
    read(s, "trials", c.sweep.trials);
  }
  c.training.seed = c.seed;
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_run_config(ss.str());
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace xbar
