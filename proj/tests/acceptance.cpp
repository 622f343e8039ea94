// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails. Pass criterion numbers as arguments
// to run a subset.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "xbar/backend.hpp"
#include "xbar/compiler.hpp"
#include "xbar/config.hpp"
#include "xbar/experiments.hpp"
#include "xbar/nn.hpp"
#include "xbar/noise.hpp"
#include "xbar/presets.hpp"

using namespace xbar;
namespace fs = std::filesystem;

namespace tol {
constexpr double kTransposeMax = 1e-9;
constexpr double kTransposeSeconds = 10.0;
constexpr double kLegacyCrossingDb = 0.02;
constexpr double kPathLossSeconds = 1.0;
constexpr double kFloorLowDb = -20.0;
constexpr double kFloorHighDb = -12.0;
constexpr double kMvmRelError = 0.01;
constexpr double kMvmSeconds = 30.0;
constexpr double kIrisIdealMin = 0.95;
constexpr double kIrisPhotonicMin = 0.90;
constexpr double kIrisGapMax = 0.05;
constexpr double kIrisInferenceSeconds = 120.0;
constexpr double kLutTarget = 0.911;
constexpr double kLutBand = 0.04;
constexpr double kConvergedRatio = 0.5;
constexpr double kLutSeconds = 600.0;
constexpr double kMnistMin = 0.91;
constexpr double kMnistSeconds = 45.0 * 60.0;
constexpr double kGradRel = 1e-5;
constexpr double kFdStep = 1e-6;
constexpr double kGradSeconds = 30.0;
constexpr double kDecodeAbs = 1e-12;
constexpr double kDecodeSeconds = 5.0;
constexpr double kFsrNm = 4.4;
constexpr double kFsrBand = 0.05;
constexpr double kQTarget = 3.0e5;
constexpr double kQRel = 0.01;
constexpr double kPhysicsSeconds = 5.0;
constexpr double kNoiseRel = 0.10;
constexpr double kNoiseSeconds = 10.0;
}  // namespace tol

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

Matrix uniform_matrix(std::mt19937_64& g, Eigen::Index rows, Eigen::Index cols, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(g);
  return m;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

RunSummary run_shipped(const std::string& id, std::uint64_t seed, const std::string& tag) {
  const fs::path cfg = fs::path(XBAR_SOURCE_DIR) / "configs" / (id + ".yaml");
  const std::string text = read_file(cfg);
  RunConfig c = parse_run_config(text);
  c.seed = seed;
  c.training.seed = seed;
  c.output_dir = fs::temp_directory_path() / ("xbar_acceptance_" + tag);
  fs::remove_all(c.output_dir);
  return run_experiment(c, text);
}

Outcome transpose_consistency() {
  CrossbarSpec spec = experimental_spec(1);
  spec.mzi.extinction_ratio_db = std::numeric_limits<double>::infinity();
  spec.port_loss_db = 0.0;
  spec.port_loss_sigma_db = 0.0;
  spec.losses.omit_output_crossings = false;
  const Crossbar xb = build_crossbar(spec);
  std::mt19937_64 g(1);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const CompiledMatrix cm = compile_matrix(xb, uniform_matrix(g, 4, 4, 0.0, 1.0));
    const Matrix f = measure_matrix(xb, cm.heater_settings, Direction::forward);
    const Matrix b = measure_matrix(xb, cm.heater_settings, Direction::backward);
    worst = std::max(worst, (f.transpose() - b).cwiseAbs().maxCoeff());
  }
  return {worst < tol::kTransposeMax, "max |fwd^T - bwd| = " + fmt(worst) + " over 100 programs"};
}

Outcome path_loss_uniformity() {
  LossSpec l;
  l.crossing_loss_db = tol::kLegacyCrossingDb;
  double sym_var = 0.0, legacy_min_var = std::numeric_limits<double>::infinity();
  for (std::size_t n : {2u, 4u, 9u}) {
    for (Direction d : {Direction::forward, Direction::backward}) {
      const Matrix s = path_loss_report(CrossbarTopology::symmetric(n, l), d);
      const Matrix a = path_loss_report(CrossbarTopology::legacy_asymmetric(n, l), d);
      sym_var = std::max(sym_var, loss_variance(s));
      legacy_min_var = std::min(legacy_min_var, loss_variance(a));
    }
  }
  return {sym_var == 0.0 && legacy_min_var > 0.0,
          "symmetric variance " + fmt(sym_var) + ", smallest legacy variance " + fmt(legacy_min_var) + " dB^2"};
}

Outcome crosstalk_floor() {
  double worst = -std::numeric_limits<double>::infinity();
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Crossbar xb = build_crossbar(experimental_spec(seed));
    CompileOptions opts;
    opts.scale = max_uniform_scale(xb, opts);
    const double kf = calibrate_normalization(xb, Direction::forward, opts);
    const double kb = calibrate_normalization(xb, Direction::backward, opts);
    double chip = -std::numeric_limits<double>::infinity();
    for (const auto& [name, p] : permutation_programs(4)) {
      const CompiledMatrix cm = compile_matrix(xb, p, opts);
      const Matrix f = measure_matrix(xb, cm.heater_settings, Direction::forward) / kf;
      const Matrix b = measure_matrix(xb, cm.heater_settings, Direction::backward) / kb;
      for (Eigen::Index i = 0; i < 4; ++i) {
        for (Eigen::Index j = 0; j < 4; ++j) {
          if (p(i, j) != 0.0) continue;
          chip = std::max({chip, 10.0 * std::log10(f(i, j)), 10.0 * std::log10(b(j, i))});
        }
      }
    }
    worst = std::max(worst, chip);
    best = std::min(best, chip);
  }
  return {best >= tol::kFloorLowDb && worst <= tol::kFloorHighDb,
          "per-chip off-target floor between " + fmt(best) + " and " + fmt(worst) + " dB (5 chips)"};
}

Outcome mvm_fidelity() {
  const Crossbar xb = build_crossbar(simulation_spec(9, tol::kQTarget));
  CompileOptions opts;
  opts.scale = max_uniform_scale(xb, opts);
  const double k = calibrate_normalization(xb, Direction::forward, opts);
  std::mt19937_64 g(4);
  double worst = 0.0, sum = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const Matrix w = uniform_matrix(g, 9, 9, 0.0, 1.0);
    const Vector x = uniform_matrix(g, 9, 1, 0.0, 1.0).col(0);
    const CompiledMatrix cm = compile_matrix(xb, w, opts);
    const Vector y = ProgrammedCrossbar(xb, cm.heater_settings).detect(x, Direction::forward) / k;
    const double err = (y - w * x).norm() / (w * x).norm();
    worst = std::max(worst, err);
    sum += err;
  }
  return {worst < tol::kMvmRelError,
          "worst relative L2 error " + fmt(worst) + ", mean " + fmt(sum / 1000.0) + " over 1000 trials"};
}

Outcome iris_inference() {
  double ideal = 0.0, photonic = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const RunSummary s = run_shipped("iris-inference", seed, "iris_inference");
    ideal += s.metrics.at("accuracy_ideal") / 5.0;
    photonic += s.metrics.at("accuracy_backend") / 5.0;
  }
  const bool ok =
      ideal >= tol::kIrisIdealMin && photonic >= tol::kIrisPhotonicMin && ideal - photonic <= tol::kIrisGapMax;
  return {ok, "mean accuracy ideal " + fmt(100 * ideal) + "%, photonic " + fmt(100 * photonic) + "% (5 seeds)"};
}

Outcome lut_training() {
  const RunSummary s = run_shipped("iris-train", 1, "iris_train");
  const double acc = s.metrics.at("mean_accuracy");
  const double ratio = s.metrics.at("worst_trailing_cost_ratio");
  const bool ok = ratio <= tol::kConvergedRatio && std::abs(acc - tol::kLutTarget) <= tol::kLutBand + 1e-12;
  return {ok, "mean accuracy " + fmt(100 * acc) + "% over 4 runs, worst trailing-20 cost / initial " + fmt(ratio)};
}

Outcome mnist() {
  const RunSummary s = run_shipped("mnist-train", 1, "mnist");
  const double acc = s.metrics.at("accuracy");
  const bool confusion = fs::exists(s.directory / "confusion.csv");
  return {acc >= tol::kMnistMin && confusion,
          "accuracy after 10 epochs " + fmt(100 * acc) + "%" + (confusion ? ", confusion.csv written" : "")};
}

template <typename Param>
double fd_gap(Param& p, const Param& analytic, const std::function<double()>& loss) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double keep = p(i);
    p(i) = keep + tol::kFdStep;
    const double up = loss();
    p(i) = keep - tol::kFdStep;
    const double down = loss();
    p(i) = keep;
    const double num = (up - down) / (2.0 * tol::kFdStep);
    worst = std::max(worst, std::abs(analytic(i) - num) / std::max({std::abs(analytic(i)), std::abs(num), 1e-7}));
  }
  return worst;
}

Outcome gradient_check() {
  std::mt19937_64 g(8);
  IdealBackend ideal;
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    MlpModel m = MlpModel::initialize({4, 4, 3}, 50 + trial);
    for (auto& b : m.biases) b = uniform_matrix(g, b.size(), 1, -0.5, 0.5).col(0);
    MlpEngine e(m, ideal);
    const Vector x = uniform_matrix(g, 4, 1, 0.0, 1.0).col(0);
    const Vector t = one_hot(trial % 3, 3);
    const BackpropTrace tr = mlp_backprop(e, x, t, LossKind::mse);
    auto f = [&] {
      e.reprogram();
      return sample_loss(mlp_forward(e, x), t, LossKind::mse);
    };
    for (std::size_t l = 0; l < 2; ++l) {
      worst = std::max(worst, fd_gap(e.mutable_model().weights[l], tr.weight_gradients[l], f));
      worst = std::max(worst, fd_gap(e.mutable_model().biases[l], tr.bias_gradients[l], f));
    }
  }
  for (int trial = 0; trial < 3; ++trial) {
    CnnModel m = CnnModel::initialize(CnnShape{8, 3, 3, 2, 6, 4}, 60 + trial);
    m.conv_bias = uniform_matrix(g, m.conv_bias.size(), 1, 0.05, 0.2).col(0);
    m.b1 = uniform_matrix(g, m.b1.size(), 1, 0.05, 0.2).col(0);
    CnnEngine e(m, ideal);
    Vector image = uniform_matrix(g, 64, 1, 0.0, 1.0).col(0);
    const int label = trial % 4;
    const CnnGradients gr = cnn_backprop(e, image, one_hot(label, 4), LossKind::cross_entropy, true);
    auto f = [&] {
      e.reprogram();
      return -std::log(cnn_forward(e, image)(label));
    };
    CnnModel& mm = e.mutable_model();
    worst = std::max({worst, fd_gap(mm.kernels, gr.kernels, f), fd_gap(mm.conv_bias, gr.conv_bias, f),
                      fd_gap(mm.w1, gr.w1, f), fd_gap(mm.b1, gr.b1, f), fd_gap(mm.w2, gr.w2, f),
                      fd_gap(mm.b2, gr.b2, f), fd_gap(image, gr.image, f)});
  }
  return {worst < tol::kGradRel, "worst elementwise relative gap " + fmt(worst)};
}

Outcome encode_decode() {
  std::mt19937_64 g(9);
  std::uniform_int_distribution<int> dim(1, 9);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const int rows = dim(g), cols = dim(g);
    const Matrix w = uniform_matrix(g, rows, cols, -3.0, 3.0);
    const Vector x = uniform_matrix(g, cols, 1, -2.0, 2.0).col(0);
    const auto we = encode_signed(w);
    const auto xe = encode_input(x);
    const Vector y = decode_output(we.values * xe.values, we.encoding, xe.encoding, xe.values.sum(),
                                   static_cast<std::size_t>(cols), Vector(we.values * Vector::Ones(cols)));
    worst = std::max(worst, (y - w * x).cwiseAbs().maxCoeff());
  }
  return {worst < tol::kDecodeAbs, "worst absolute error " + fmt(worst) + " over 1000 signed MVMs"};
}

Outcome fsr_and_q() {
  const RingDevice ring = build_crossbar(simulation_spec(9, tol::kQTarget)).grid.at(0, 0);
  const double fsr = fsr_of(ring, kReferenceNm);
  const double q = measure_q(ring);
  const bool ok = std::abs(fsr - tol::kFsrNm) <= tol::kFsrBand && std::abs(q / tol::kQTarget - 1.0) < tol::kQRel;
  return {ok, "FSR " + fmt(fsr, 6) + " nm, scanned Q " + fmt(q, 6)};
}

Outcome noise_averaging() {
  const NoiseConfig cfg{0.02, 11, true};
  NoiseStream rng(cfg.seed);
  const Vector p = Vector::Ones(1);
  auto spread = [&](int k) {
    std::vector<double> v;
    for (int i = 0; i < 20000; ++i) v.push_back(time_average([&] { return perturb(p, cfg, rng); }, k)(0));
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / (v.size() - 1));
  };
  const double s1 = spread(1);
  double worst = 0.0;
  std::string detail;
  for (int k : {4, 16, 64}) {
    const double ratio = spread(k) * std::sqrt(static_cast<double>(k)) / s1;
    worst = std::max(worst, std::abs(ratio - 1.0));
    detail += "K=" + std::to_string(k) + ": " + fmt(ratio) + "  ";
  }
  return {worst <= tol::kNoiseRel, "std * sqrt(K) / std_1 -> " + detail};
}

struct Criterion {
  int id;
  const char* name;
  double seconds;
  Outcome (*run)();
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "transpose consistency", tol::kTransposeSeconds, transpose_consistency},
      {2, "path-loss uniformity", tol::kPathLossSeconds, path_loss_uniformity},
      {3, "crosstalk floor", 0.0, crosstalk_floor},
      {4, "MVM fidelity at n=9", tol::kMvmSeconds, mvm_fidelity},
      {5, "Iris inference", tol::kIrisInferenceSeconds, iris_inference},
      {6, "LUT-trained Iris", tol::kLutSeconds, lut_training},
      {7, "MNIST CNN", tol::kMnistSeconds, mnist},
      {8, "gradient check", tol::kGradSeconds, gradient_check},
      {9, "encode/decode exactness", tol::kDecodeSeconds, encode_decode},
      {10, "FSR/Q physics", tol::kPhysicsSeconds, fsr_and_q},
      {11, "noise averaging", tol::kNoiseSeconds, noise_averaging},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.seconds <= 0.0 || secs <= c.seconds;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    std::cout << (pass ? "PASS" : "FAIL") << "  " << std::setw(2) << c.id << "  " << c.name << ": " << o.detail
              << " [" << fmt(secs, 3) << " s" << (in_time ? "" : ", over the time limit") << "]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
