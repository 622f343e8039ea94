#include "xbar/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"
#include "xbar/backend.hpp"
#include "xbar/compiler.hpp"
#include "xbar/data_io.hpp"
#include "xbar/errors.hpp"
#include "xbar/nn.hpp"

#ifndef XBAR_VERSION
#define XBAR_VERSION "0.0.0"
#endif

namespace xbar {

namespace {

class Writer {
 public:
  Writer(std::filesystem::path dir, RunSummary& summary) : dir_(std::move(dir)), summary_(&summary) {}

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    const std::filesystem::path p = dir_ / name;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error("cannot write " + p.string());
    body(f);
    if (!f) throw Error("failed while writing " + p.string());
    summary_->files.push_back(name);
  }

 private:
  std::filesystem::path dir_;
  RunSummary* summary_;
};

std::shared_ptr<const Crossbar> make_crossbar(const RunConfig& c) {
  return std::make_shared<const Crossbar>(build_crossbar(c.device.to_spec(c.seed)));
}

std::unique_ptr<MvmBackend> make_backend(BackendKind kind, std::shared_ptr<const Crossbar> xb,
                                         const NoiseSettings& noise) {
  switch (kind) {
    case BackendKind::ideal: return std::make_unique<IdealBackend>();
    case BackendKind::photonic: {
      PhotonicOptions o;
      o.noise = noise.noise;
      o.repeats = noise.repeats;
      return std::make_unique<PhotonicBackend>(std::move(xb), o);
    }
    case BackendKind::lut: {
      // Measurement noise is frozen into the tables; lookups during training are exact fetches.
      LutBackendOptions o;
      o.build.noise = noise.noise;
      o.build.repeats = noise.repeats;
      return std::make_unique<LutBackend>(std::move(xb), o);
    }
  }
  throw ValidationError("unknown backend");
}

std::filesystem::path iris_path(const RunConfig& c) { return c.data.iris.empty() ? default_iris_path() : c.data.iris; }

void write_weights(Writer& w, const std::string& stem, const Matrix& m) {
  w.write(stem + ".csv", [&](std::ostream& o) { write_matrix_csv(o, m); });
  w.write(stem + "_encoding.csv", [&](std::ostream& o) { write_encoding_sidecar(o, encode_signed(m).encoding); });
}

double to_db(double v) { return 10.0 * std::log10(std::max(v, 1e-300)); }

// --- characterize-devices ---------------------------------------------------

void characterize_devices(const RunConfig& c, Writer& w, RunSummary& s) {
  const auto xb = make_crossbar(c);
  const std::size_t n = xb->n();
  w.write("mzi_fringes.csv", [&](std::ostream& o) {
    o << "bank,port,heater_mw,transmittance\n" << std::setprecision(12);
    for (Direction d : {Direction::forward, Direction::backward}) {
      for (std::size_t p = 0; p < n; ++p) {
        const auto& mzi = xb->mzis(d)[p];
        const int steps = 600;
        for (int i = 0; i <= steps; ++i) {
          const double power = mzi.shifter.max_power_mw * i / steps;
          o << to_string(d) << ',' << p << ',' << power << ',' << mzi_transmittance(mzi, power) << '\n';
        }
      }
    }
  });
  double fsr_sum = 0.0, q_sum = 0.0;
  w.write("ring_spectra.csv", [&](std::ostream& o) {
    o << "row,col,wavelength_nm,t_drop,t_through\n" << std::setprecision(12);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t col = 0; col < n; ++col) {
        const RingDevice& ring = xb->grid.at(r, col);
        const double centre = ring.natural_resonance_nm();
        const double fsr = fsr_of(ring, centre);
        for (const auto& pt : sweep_spectrum(ring, centre - 0.5 * fsr, centre + 0.5 * fsr, 2001)) {
          o << r << ',' << col << ',' << pt.wavelength_nm << ',' << pt.t_drop << ',' << pt.t_through << '\n';
        }
      }
    }
  });
  const RingProgrammer prog(*xb, 0.0);
  w.write("ring_summary.csv", [&](std::ostream& o) {
    o << "row,col,natural_resonance_nm,fsr_nm,q_measured,drop_extinction_db,aligned_heater_mw\n"
      << std::setprecision(12);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t col = 0; col < n; ++col) {
        const RingDevice& ring = xb->grid.at(r, col);
        const double fsr = fsr_of(ring, ring.natural_resonance_nm());
        const double q = measure_q(ring);
        fsr_sum += fsr;
        q_sum += q;
        o << r << ',' << col << ',' << ring.natural_resonance_nm() << ',' << fsr << ',' << q << ','
          << drop_extinction_db(ring) << ',' << prog.aligned_power(r, col) << '\n';
      }
    }
  });
  w.write("mzi_summary.csv", [&](std::ostream& o) {
    o << "bank,port,null_heater_mw,extinction_db\n" << std::setprecision(12);
    for (Direction d : {Direction::forward, Direction::backward}) {
      for (std::size_t p = 0; p < n; ++p) {
        const auto& mzi = xb->mzis(d)[p];
        o << to_string(d) << ',' << p << ',' << mzi_null_power(mzi) << ',' << mzi.extinction_ratio_db << '\n';
      }
    }
  });
  s.metrics["mean_fsr_nm"] = fsr_sum / static_cast<double>(n * n);
  s.metrics["mean_q"] = q_sum / static_cast<double>(n * n);
}

// --- measure-matrix ---------------------------------------------------------

void measure_matrix_experiment(const RunConfig& c, Writer& w, RunSummary& s) {
  const auto xb = make_crossbar(c);
  const std::size_t n = xb->n();
  CompileOptions opts;
  opts.scale = max_uniform_scale(*xb, opts);
  const double kf = calibrate_normalization(*xb, Direction::forward, opts);
  const double kb = calibrate_normalization(*xb, Direction::backward, opts);
  std::ostringstream summary;
  summary << "program,max_transpose_diff,worst_off_target_db_forward,worst_off_target_db_backward,clamped\n"
          << std::setprecision(12);
  double worst_diff = 0.0, worst_floor = -std::numeric_limits<double>::infinity();
  for (const auto& [name, program] : permutation_programs(n)) {
    const CompiledMatrix cm = compile_matrix(*xb, program, opts);
    const Matrix f = measure_matrix(*xb, cm.heater_settings, Direction::forward) / kf;
    const Matrix b = measure_matrix(*xb, cm.heater_settings, Direction::backward) / kb;
    w.write("forward_" + name + ".csv", [&](std::ostream& o) { write_matrix_csv(o, f); });
    w.write("backward_" + name + ".csv", [&](std::ostream& o) { write_matrix_csv(o, b); });
    const double diff = (f.transpose() - b).cwiseAbs().maxCoeff();
    double off_f = -std::numeric_limits<double>::infinity(), off_b = off_f;
    for (Eigen::Index i = 0; i < program.rows(); ++i) {
      for (Eigen::Index j = 0; j < program.cols(); ++j) {
        if (program(i, j) != 0.0) continue;
        off_f = std::max(off_f, to_db(f(i, j)));
        off_b = std::max(off_b, to_db(b(j, i)));
      }
    }
    summary << name << ',' << diff << ',' << off_f << ',' << off_b << ',' << cm.clamped_low + cm.clamped_high << '\n';
    worst_diff = std::max(worst_diff, diff);
    worst_floor = std::max({worst_floor, off_f, off_b});
  }
  w.write("summary.csv", [&](std::ostream& o) { o << summary.str(); });
  for (Direction d : {Direction::forward, Direction::backward}) {
    w.write(std::string("path_loss_") + to_string(d) + ".csv",
            [&](std::ostream& o) { write_matrix_csv(o, path_loss_report(xb->topology, d)); });
  }
  s.metrics["max_transpose_diff"] = worst_diff;
  s.metrics["worst_off_target_db"] = worst_floor;
}

// --- iris ---------------------------------------------------------------------

MlpModel iris_model(const RunConfig& c, std::uint64_t seed) {
  MlpModel m = MlpModel::initialize({4, c.hidden, 3}, seed);
  m.use_bias = c.use_bias;
  return m;
}

std::vector<int> predictions(MlpEngine& e, const LabeledSet& data) {
  std::vector<int> out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    Eigen::Index k = 0;
    mlp_forward(e, data.sample(i)).maxCoeff(&k);
    out.push_back(static_cast<int>(k));
  }
  return out;
}

void iris_inference(const RunConfig& c, Writer& w, RunSummary& s) {
  const IrisDataset data = load_iris(iris_path(c), c.seed);
  TrainingConfig pre = c.training;
  pre.backend = BackendKind::ideal;
  pre.epochs = c.pretrain_epochs;
  IdealBackend ideal;
  const MlpTrainResult trained = train_mlp(iris_model(c, c.seed), data.train, data.test, pre, ideal);

  const auto backend = make_backend(c.training.backend, make_crossbar(c), c.noise);
  MlpEngine on_ideal(trained.model, ideal);
  MlpEngine on_backend(trained.model, *backend);
  const std::vector<int> p_ideal = predictions(on_ideal, data.test);
  const std::vector<int> p_backend = predictions(on_backend, data.test);
  auto accuracy = [&](const std::vector<int>& p) {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < p.size(); ++i) ok += p[i] == data.test.labels[i];
    return static_cast<double>(ok) / static_cast<double>(p.size());
  };
  s.metrics["accuracy_ideal"] = accuracy(p_ideal);
  s.metrics["accuracy_backend"] = accuracy(p_backend);

  w.write("pretrain_cost.csv", [&](std::ostream& o) { write_history_csv(o, trained.cost_history, "cost", 0); });
  w.write("predictions.csv", [&](std::ostream& o) {
    o << "sample,label,pred_ideal,pred_" << to_string(c.training.backend) << '\n';
    for (std::size_t i = 0; i < p_ideal.size(); ++i) {
      o << data.test_index[i] << ',' << data.test.labels[i] << ',' << p_ideal[i] << ',' << p_backend[i] << '\n';
    }
  });
  w.write("accuracy.csv", [&](std::ostream& o) {
    o << std::setprecision(12) << "backend,accuracy\nideal," << s.metrics["accuracy_ideal"] << '\n'
      << to_string(c.training.backend) << ',' << s.metrics["accuracy_backend"] << '\n';
  });
  for (std::size_t l = 0; l < trained.model.layers(); ++l) {
    write_weights(w, "weights_layer" + std::to_string(l + 1), trained.model.weights[l]);
  }
}

void iris_train(const RunConfig& c, Writer& w, RunSummary& s) {
  const auto backend = make_backend(c.training.backend, make_crossbar(c), c.noise);
  IdealBackend ideal;
  std::ostringstream summary;
  summary << std::setprecision(12)
          << "run,seed,initial_cost,final_cost,trailing20_mean,accuracy_" << to_string(c.training.backend)
          << ",accuracy_computer\n";
  double mean_acc = 0.0, mean_computer = 0.0, worst_ratio = 0.0;
  for (int run = 0; run < c.runs; ++run) {
    TrainingConfig t = c.training;
    t.seed = c.seed + static_cast<std::uint64_t>(run);
    // One chip, but each run draws its own split so the mean does not hinge on a single partition.
    const IrisDataset data = load_iris(iris_path(c), t.seed);
    const MlpTrainResult r = train_mlp(iris_model(c, t.seed), data.train, data.test, t, *backend);
    MlpEngine computer(r.model, ideal);
    const double acc_computer = classification_accuracy(computer, data.test);
    const auto& h = r.cost_history;
    const std::size_t tail = std::min<std::size_t>(20, h.size() - 1);
    const double trailing = std::accumulate(h.end() - static_cast<long>(tail), h.end(), 0.0) / static_cast<double>(tail);
    summary << run + 1 << ',' << t.seed << ',' << h.front() << ',' << h.back() << ',' << trailing << ',' << r.accuracy
            << ',' << acc_computer << '\n';
    w.write("cost_history_run" + std::to_string(run + 1) + ".csv",
            [&](std::ostream& o) { write_history_csv(o, h, "cost", 0); });
    for (std::size_t l = 0; l < r.model.layers(); ++l) {
      write_weights(w, "run" + std::to_string(run + 1) + "_weights_layer" + std::to_string(l + 1), r.model.weights[l]);
    }
    mean_acc += r.accuracy / c.runs;
    mean_computer += acc_computer / c.runs;
    worst_ratio = std::max(worst_ratio, trailing / h.front());
  }
  w.write("summary.csv", [&](std::ostream& o) { o << summary.str(); });
  s.metrics["mean_accuracy"] = mean_acc;
  s.metrics["mean_accuracy_computer"] = mean_computer;
  s.metrics["worst_trailing_cost_ratio"] = worst_ratio;
}

// --- mnist ------------------------------------------------------------------

void mnist_train(const RunConfig& c, Writer& w, RunSummary& s) {
  const MnistSubset data =
      load_mnist(c.data.mnist_dir.empty() ? default_mnist_dir() : c.data.mnist_dir, c.data.mnist_train, c.data.mnist_test);
  const auto backend = make_backend(c.training.backend, make_crossbar(c), c.noise);
  CnnTrainOptions opts;
  opts.input_gradient = c.conv_input_gradient;
  const CnnTrainResult r = train_cnn(CnnModel::initialize(CnnShape{}, c.seed), data.train, data.test, c.training,
                                     *backend, opts);
  w.write("accuracy_history.csv", [&](std::ostream& o) { write_history_csv(o, r.accuracy_history, "accuracy"); });
  w.write("loss_history.csv", [&](std::ostream& o) { write_history_csv(o, r.loss_history, "loss"); });
  w.write("confusion.csv", [&](std::ostream& o) { write_confusion_csv(o, r.confusion); });
  write_weights(w, "kernels", r.model.kernels);
  s.metrics["accuracy"] = r.accuracy;
}

// --- sweep-scaling ------------------------------------------------------------

void sweep_scaling(const RunConfig& c, Writer& w, RunSummary& s) {
  w.write("path_loss.csv", [&](std::ostream& o) {
    o << "n,topology,direction,mean_db,variance_db2\n" << std::setprecision(12);
    for (std::size_t n : c.sweep.sizes) {
      for (TopologyVariant v : {TopologyVariant::symmetric, TopologyVariant::legacy_asymmetric}) {
        LossSpec losses;
        if (c.device.crossing_loss_db) losses.crossing_loss_db = *c.device.crossing_loss_db;
        const CrossbarTopology t = v == TopologyVariant::symmetric ? CrossbarTopology::symmetric(n, losses)
                                                                    : CrossbarTopology::legacy_asymmetric(n, losses);
        for (Direction d : {Direction::forward, Direction::backward}) {
          const Matrix m = path_loss_report(t, d);
          o << n << ',' << to_string(v) << ',' << to_string(d) << ',' << m.mean() << ',' << loss_variance(m)
            << '\n';
        }
      }
    }
  });
  std::ostringstream table;
  table << "n,q,trials,mean_rel_error,max_rel_error,clamped\n" << std::setprecision(12);
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t n : c.sweep.sizes) {
    for (double q : c.sweep.q_values) {
      DeviceConfig dc = c.device;
      dc.preset = DevicePreset::simulation;
      dc.n = n;
      dc.q = q;
      const Crossbar xb = build_crossbar(dc.to_spec(c.seed));
      CompileOptions opts;
      opts.scale = max_uniform_scale(xb, opts);
      const double kappa = calibrate_normalization(xb, Direction::forward, opts);
      double sum = 0.0, worst = 0.0;
      int clamped = 0;
      const auto ni = static_cast<Eigen::Index>(n);
      for (int t = 0; t < c.sweep.trials; ++t) {
        Matrix wm(ni, ni);
        Vector x(ni);
        for (Eigen::Index i = 0; i < ni; ++i) {
          for (Eigen::Index j = 0; j < ni; ++j) wm(i, j) = u(rng);
          x(i) = u(rng);
        }
        const CompiledMatrix cm = compile_matrix(xb, wm, opts);
        clamped += cm.clamped_low + cm.clamped_high;
        const ProgrammedCrossbar pc(xb, cm.heater_settings);
        const Vector y = pc.detect(x, Direction::forward) / kappa;
        const Vector ref = wm * x;
        const double err = (y - ref).norm() / ref.norm();
        sum += err;
        worst = std::max(worst, err);
      }
      table << n << ',' << q << ',' << c.sweep.trials << ',' << sum / c.sweep.trials << ',' << worst << ',' << clamped
            << '\n';
      std::ostringstream key;
      key << "max_rel_error_n" << n << "_q" << q;
      s.metrics[key.str()] = worst;
    }
  }
  w.write("mvm_error.csv", [&](std::ostream& o) { o << table.str(); });
}

}  // namespace

std::vector<std::pair<std::string, Matrix>> permutation_programs(std::size_t n) {
  const auto ni = static_cast<Eigen::Index>(n);
  std::vector<std::pair<std::string, Matrix>> out;
  auto from_perm = [&](const std::function<Eigen::Index(Eigen::Index)>& p) {
    Matrix m = Matrix::Zero(ni, ni);
    for (Eigen::Index j = 0; j < ni; ++j) m(p(j), j) = 1.0;
    return m;
  };
  out.emplace_back("identity", Matrix::Identity(ni, ni));
  out.emplace_back("anti_diagonal", from_perm([&](Eigen::Index j) { return ni - 1 - j; }));
  out.emplace_back("cyclic_shift", from_perm([&](Eigen::Index j) { return (j + 1) % ni; }));
  out.emplace_back("pair_swap", from_perm([&](Eigen::Index j) { return (j ^ 1) < ni ? (j ^ 1) : j; }));
  return out;
}

RunSummary run_experiment(const RunConfig& config, const std::string& config_text) {
  config.validate();
  RunSummary summary;
  summary.directory = config.output_dir;
  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec) throw Error("cannot create output directory " + config.output_dir.string() + ": " + ec.message());
  Writer w(config.output_dir, summary);

  const std::string& id = config.experiment;
  if (id == "characterize-devices") characterize_devices(config, w, summary);
  else if (id == "measure-matrix") measure_matrix_experiment(config, w, summary);
  else if (id == "iris-inference") iris_inference(config, w, summary);
  else if (id == "iris-train") iris_train(config, w, summary);
  else if (id == "mnist-train") mnist_train(config, w, summary);
  else if (id == "sweep-scaling") sweep_scaling(config, w, summary);
  else throw ValidationError("unknown experiment '" + id + "'");

  nlohmann::ordered_json manifest;
  manifest["experiment"] = id;
  manifest["seed"] = config.seed;
  std::ostringstream hash;
  hash << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(config_text);
  manifest["config_hash"] = hash.str();
  manifest["config"] = config_text;
  manifest["version"] = XBAR_VERSION;
  manifest["files"] = summary.files;
  manifest["metrics"] = summary.metrics;
  const std::filesystem::path mp = config.output_dir / "manifest.json";
  std::ofstream mf(mp);
  if (!mf) throw Error("cannot write " + mp.string());
  mf << manifest.dump(2) << '\n';
  summary.files.push_back("manifest.json");
  return summary;
}

}  // namespace xbar
