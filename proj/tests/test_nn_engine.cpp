#include <cmath>
#include <functional>
#include <random>

#include "doctest.h"
#include "xbar/backend.hpp"
#include "xbar/data_io.hpp"
#include "xbar/errors.hpp"
#include "xbar/nn.hpp"
#include "xbar/presets.hpp"

using namespace xbar;

namespace {

constexpr double kFdStep = 1e-6;
constexpr double kGradTol = 1e-5;

Vector uniform_vector(std::mt19937_64& g, Eigen::Index n, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = u(g);
  return v;
}

double relative_gap(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-7});
}

// Central differences of `loss` with respect to every entry of `param`.
template <typename Param>
double worst_fd_gap(Param& param, const Param& analytic, const std::function<double()>& loss) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < param.size(); ++i) {
    const double keep = param(i);
    param(i) = keep + kFdStep;
    const double up = loss();
    param(i) = keep - kFdStep;
    const double down = loss();
    param(i) = keep;
    worst = std::max(worst, relative_gap(analytic(i), (up - down) / (2.0 * kFdStep)));
  }
  return worst;
}

LabeledSet toy_set(std::mt19937_64& g, std::size_t count, std::size_t features, int classes) {
  LabeledSet s;
  s.features.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(features));
  std::uniform_int_distribution<int> label(0, classes - 1);
  for (std::size_t i = 0; i < count; ++i) {
    const int c = label(g);
    s.labels.push_back(c);
    Vector row = uniform_vector(g, static_cast<Eigen::Index>(features), 0.0, 0.3);
    row(c % static_cast<Eigen::Index>(features)) += 0.7;
    s.features.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return s;
}

}  // namespace

TEST_CASE("zero weights give sigmoid(0) everywhere") {
  IdealBackend ideal;
  MlpEngine e(MlpModel::zeros({4, 4, 3}), ideal);
  const Vector y = mlp_forward(e, Vector::Constant(4, 0.3));
  CHECK((y.array() - 0.5).abs().maxCoeff() == 0.0);
}

TEST_CASE("MLP gradients match central differences") {
  std::mt19937_64 g(1);
  IdealBackend ideal;
  for (LossKind loss : {LossKind::mse, LossKind::cross_entropy}) {
    for (int trial = 0; trial < 5; ++trial) {
      MlpModel m = MlpModel::initialize({4, 4, 3}, 10 + trial);
      for (auto& b : m.biases) b = uniform_vector(g, b.size(), -0.5, 0.5);
      MlpEngine e(m, ideal);
      const Vector x = uniform_vector(g, 4);
      const Vector t = one_hot(trial % 3, 3);
      const BackpropTrace tr = mlp_backprop(e, x, t, loss);
      auto f = [&] {
        e.reprogram();
        return sample_loss(mlp_forward(e, x), t, loss);
      };
      for (std::size_t l = 0; l < 2; ++l) {
        CHECK(worst_fd_gap(e.mutable_model().weights[l], tr.weight_gradients[l], f) < kGradTol);
        CHECK(worst_fd_gap(e.mutable_model().biases[l], tr.bias_gradients[l], f) < kGradTol);
      }
    }
  }
}

TEST_CASE("zero error signal leaves the weights alone") {
  IdealBackend ideal;
  MlpEngine e(MlpModel::initialize({4, 4, 3}, 3), ideal);
  const Vector x = Vector::Constant(4, 0.4);
  const Vector t = mlp_forward(e, x);
  const MlpModel before = e.model();
  Optimizer opt(OptimizerConfig{OptimizerKind::sgd, 0.5});
  const BackpropTrace tr = onchip_backprop_step(e, x, t, LossKind::mse, opt);
  for (std::size_t l = 0; l < 2; ++l) {
    CHECK(tr.weight_gradients[l].cwiseAbs().maxCoeff() == 0.0);
    CHECK((e.model().weights[l] - before.weights[l]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("one small SGD step lowers the sample loss") {
  std::mt19937_64 g(4);
  for (BackendKind kind : {BackendKind::ideal, BackendKind::photonic}) {
    auto xb = std::make_shared<const Crossbar>(build_crossbar(simulation_spec(4, 3.0e5)));
    std::unique_ptr<MvmBackend> backend;
    if (kind == BackendKind::ideal) backend = std::make_unique<IdealBackend>();
    else backend = std::make_unique<PhotonicBackend>(xb);
    MlpEngine e(MlpModel::initialize({4, 4, 3}, 8), *backend);
    const Vector x = uniform_vector(g, 4);
    const Vector t = one_hot(1, 3);
    const double before = sample_loss(mlp_forward(e, x), t, LossKind::mse);
    Optimizer opt(OptimizerConfig{OptimizerKind::sgd, 0.05});
    onchip_backprop_step(e, x, t, LossKind::mse, opt);
    CHECK(sample_loss(mlp_forward(e, x), t, LossKind::mse) < before);
  }
}

TEST_CASE("non-finite loss aborts training") {
  IdealBackend ideal;
  MlpEngine e(MlpModel::initialize({4, 4, 3}, 1), ideal);
  Vector target = one_hot(0, 3);
  target(1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(mlp_backprop(e, Vector::Constant(4, 0.5), target, LossKind::mse), TrainingError);
}

TEST_CASE("Adam requires a step before updating") {
  Optimizer opt(OptimizerConfig{OptimizerKind::adam, 1e-3});
  Matrix p = Matrix::Zero(2, 2);
  CHECK_THROWS_AS(opt.update(0, p, Matrix::Ones(2, 2)), ProtocolError);
  opt.next_step();
  opt.update(0, p, Matrix::Ones(2, 2));
  // The first bias-corrected Adam step has magnitude lr in every coordinate.
  CHECK((p.array() + 1e-3).abs().maxCoeff() < 1e-9);
}

TEST_CASE("photonic and ideal MLP outputs agree at experimental parameters") {
  auto xb = std::make_shared<const Crossbar>(build_crossbar(experimental_spec(1)));
  PhotonicBackend photonic(xb);
  IdealBackend ideal;
  std::mt19937_64 g(12);
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const MlpModel m = MlpModel::initialize({4, 4, 3}, 100 + trial);
    MlpEngine a(m, ideal), b(m, photonic);
    for (int s = 0; s < 20; ++s) {
      const Vector x = uniform_vector(g, 4);
      worst = std::max(worst, (mlp_forward(a, x) - mlp_forward(b, x)).cwiseAbs().maxCoeff());
    }
  }
  MESSAGE("worst photonic vs ideal output gap: " << worst);
  CHECK(worst < 0.02);
}

TEST_CASE("learning rate zero keeps the cost flat") {
  std::mt19937_64 g(5);
  const LabeledSet data = toy_set(g, 30, 4, 3);
  TrainingConfig cfg;
  cfg.optimizer.learning_rate = 0.0;
  cfg.epochs = 5;
  IdealBackend ideal;
  const MlpTrainResult r = train_mlp(MlpModel::initialize({4, 4, 3}, 2), data, data, cfg, ideal);
  REQUIRE(r.cost_history.size() == 6);
  for (double c : r.cost_history) CHECK(c == doctest::Approx(r.cost_history.front()).epsilon(1e-14));
}

TEST_CASE("training on a separable toy set converges") {
  std::mt19937_64 g(6);
  const LabeledSet data = toy_set(g, 60, 4, 3);
  TrainingConfig cfg;
  cfg.optimizer.learning_rate = 0.5;
  cfg.epochs = 60;
  IdealBackend ideal;
  const MlpTrainResult r = train_mlp(MlpModel::initialize({4, 4, 3}, 2), data, data, cfg, ideal);
  CHECK(r.cost_history.back() < 0.5 * r.cost_history.front());
  CHECK(r.accuracy > 0.9);
}

TEST_CASE("im2col convolution") {
  std::mt19937_64 g(7);
  const Vector image = uniform_vector(g, 28 * 28);
  IdealBackend ideal;

  SUBCASE("delta kernels pick out shifted pixels") {
    auto op = ideal.program(Matrix::Identity(9, 9));
    const Matrix maps = im2col_convolve(image, 28, 3, *op);
    for (int k = 0; k < 9; ++k) {
      const int di = k / 3, dj = k % 3;
      for (int i = 0; i < 26; ++i)
        for (int j = 0; j < 26; ++j) CHECK(maps(k, i * 26 + j) == image((i + di) * 28 + j + dj));
    }
  }
  SUBCASE("ideal backend equals direct convolution") {
    Matrix kernels(9, 9);
    for (int i = 0; i < 9; ++i) kernels.row(i) = uniform_vector(g, 9, -1.0, 1.0).transpose();
    auto op = ideal.program(kernels);
    CHECK((im2col_convolve(image, 28, 3, *op) - direct_convolve(image, 28, kernels, 3)).cwiseAbs().maxCoeff() <
          1e-12);
  }
  SUBCASE("photonic backend at Q = 3e5") {
    auto xb = std::make_shared<const Crossbar>(build_crossbar(simulation_spec(9, 3.0e5)));
    PhotonicBackend photonic(xb);
    Matrix kernels(9, 9);
    for (int i = 0; i < 9; ++i) kernels.row(i) = uniform_vector(g, 9, -1.0, 1.0).transpose();
    auto op = photonic.program(kernels);
    const Matrix got = im2col_convolve(image, 28, 3, *op);
    const Matrix want = direct_convolve(image, 28, kernels, 3);
    for (int k = 0; k < 9; ++k) CHECK((got.row(k) - want.row(k)).norm() / want.row(k).norm() < 0.01);
  }
}

TEST_CASE("CNN gradients match central differences") {
  const CnnShape shape{8, 3, 3, 2, 6, 4};
  std::mt19937_64 g(9);
  IdealBackend ideal;
  for (LossKind loss : {LossKind::cross_entropy, LossKind::mse}) {
    CnnModel m = CnnModel::initialize(shape, 21);
    m.conv_bias = uniform_vector(g, m.conv_bias.size(), 0.05, 0.2);
    m.b1 = uniform_vector(g, m.b1.size(), 0.05, 0.2);
    CnnEngine e(m, ideal);
    Vector image = uniform_vector(g, 64);
    const Vector t = one_hot(2, 4);
    const CnnGradients gr = cnn_backprop(e, image, t, loss, true);
    auto f = [&] {
      e.reprogram();
      const Vector y = cnn_forward(e, image);
      return loss == LossKind::mse ? 0.5 * (y - t).squaredNorm() : -std::log(y(2));
    };
    CnnModel& mm = e.mutable_model();
    CHECK(worst_fd_gap(mm.kernels, gr.kernels, f) < kGradTol);
    CHECK(worst_fd_gap(mm.conv_bias, gr.conv_bias, f) < kGradTol);
    CHECK(worst_fd_gap(mm.w1, gr.w1, f) < kGradTol);
    CHECK(worst_fd_gap(mm.b1, gr.b1, f) < kGradTol);
    CHECK(worst_fd_gap(mm.w2, gr.w2, f) < kGradTol);
    CHECK(worst_fd_gap(mm.b2, gr.b2, f) < kGradTol);
    CHECK(worst_fd_gap(image, gr.image, f) < kGradTol);
  }
}

TEST_CASE("confusion matrix rows count each class") {
  const CnnShape shape{8, 3, 3, 2, 6, 4};
  std::mt19937_64 g(10);
  const LabeledSet data = toy_set(g, 40, 64, 4);
  IdealBackend ideal;
  CnnEngine e(CnnModel::initialize(shape, 3), ideal);
  const Eigen::MatrixXi cm = confusion_matrix(e, data);
  for (int c = 0; c < 4; ++c) {
    CHECK(cm.row(c).sum() == std::count(data.labels.begin(), data.labels.end(), c));
  }
  CHECK(cm.sum() == 40);
}

TEST_CASE("short MNIST run: photonic tracks ideal") {
  const auto dir = default_mnist_dir();
  if (!std::filesystem::exists(dir / "train-images-idx3-ubyte")) {
    MESSAGE("MNIST files not found in " << dir << ", skipping");
    return;
  }
  const MnistSubset data = load_mnist(dir, 2000, 500);
  TrainingConfig cfg;
  cfg.optimizer = OptimizerConfig{OptimizerKind::adam, 1e-3};
  cfg.epochs = 2;
  cfg.batch_size = 32;
  cfg.loss = LossKind::cross_entropy;
  IdealBackend ideal;
  auto xb = std::make_shared<const Crossbar>(build_crossbar(simulation_spec(9, 3.0e5)));
  PhotonicBackend photonic(xb);
  const CnnModel init = CnnModel::initialize(CnnShape{}, 1);
  const CnnTrainResult a = train_cnn(init, data.train, data.test, cfg, ideal);
  const CnnTrainResult b = train_cnn(init, data.train, data.test, cfg, photonic);
  MESSAGE("ideal " << a.accuracy << ", photonic " << b.accuracy);
  CHECK(std::abs(a.accuracy - b.accuracy) <= 0.01 + 1e-12);
  for (int c = 0; c < 10; ++c) {
    CHECK(b.confusion.row(c).sum() == std::count(data.test.labels.begin(), data.test.labels.end(), c));
  }
}
