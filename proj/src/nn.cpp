#include "xbar/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "xbar/errors.hpp"

namespace xbar {

const char* to_string(LossKind kind) { return kind == LossKind::mse ? "mse" : "cross_entropy"; }

LossKind loss_from_string(const std::string& name) {
  if (name == "mse") return LossKind::mse;
  if (name == "cross_entropy" || name == "cross-entropy") return LossKind::cross_entropy;
  throw ValidationError("unknown loss '" + name + "' (expected mse or cross_entropy)");
}

const char* to_string(OptimizerKind kind) { return kind == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind optimizer_from_string(const std::string& name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  throw ValidationError("unknown optimizer '" + name + "' (expected sgd or adam)");
}

void TrainingConfig::validate() const {
  if (epochs < 1) throw ValidationError("epochs must be at least 1");
  if (batch_size < 1) throw ValidationError("batch size must be at least 1");
  if (!(optimizer.learning_rate >= 0.0) || !std::isfinite(optimizer.learning_rate)) {
    throw ValidationError("learning rate must be finite and non-negative");
  }
  if (optimizer.kind == OptimizerKind::adam &&
      !(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0 && optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0 &&
        optimizer.epsilon > 0.0)) {
    throw ValidationError("Adam needs 0 <= beta < 1 and epsilon > 0");
  }
}

Optimizer::Optimizer(OptimizerConfig config) : config_(config) {}

void Optimizer::update(std::size_t slot, Matrix& param, const Matrix& grad) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols()) {
    throw ShapeError("gradient shape does not match parameter shape");
  }
  const double lr = config_.learning_rate;
  if (config_.kind == OptimizerKind::sgd) {
    param -= lr * grad;
    return;
  }
  if (t_ < 1) throw ProtocolError("Adam update before next_step()");
  if (slot >= m_.size()) {
    m_.resize(slot + 1);
    v_.resize(slot + 1);
  }
  Matrix& m = m_[slot];
  Matrix& v = v_[slot];
  if (m.rows() != grad.rows() || m.cols() != grad.cols()) {
    m = Matrix::Zero(grad.rows(), grad.cols());
    v = Matrix::Zero(grad.rows(), grad.cols());
  }
  m = config_.beta1 * m + (1.0 - config_.beta1) * grad;
  v = config_.beta2 * v + (1.0 - config_.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + config_.epsilon);
}

void Optimizer::update(std::size_t slot, Vector& param, const Vector& grad) {
  Matrix p = param;
  update(slot, p, Matrix(grad));
  param = p.col(0);
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Vector sigmoid(const Vector& z) { return z.unaryExpr([](double v) { return sigmoid(v); }); }

Vector softmax(const Vector& z) {
  const Vector e = (z.array() - z.maxCoeff()).exp().matrix();
  return e / e.sum();
}

namespace {

Matrix glorot(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  const double r = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> u(-r, r);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = u(rng);
  }
  return m;
}

void check_finite_loss(double loss) {
  if (!std::isfinite(loss)) throw TrainingError("loss became non-finite; training aborted");
}

std::size_t argmax(const Vector& v) {
  Eigen::Index i = 0;
  v.maxCoeff(&i);
  return static_cast<std::size_t>(i);
}

}  // namespace

// ---------------------------------------------------------------------------

void MlpModel::validate() const {
  if (sizes.size() < 2) throw ValidationError("an MLP needs at least two layer sizes");
  if (weights.size() != sizes.size() - 1 || biases.size() != weights.size()) {
    throw ShapeError("MLP has the wrong number of weight matrices");
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != static_cast<Eigen::Index>(sizes[l + 1]) ||
        weights[l].cols() != static_cast<Eigen::Index>(sizes[l]) ||
        biases[l].size() != static_cast<Eigen::Index>(sizes[l + 1])) {
      throw ShapeError("layer " + std::to_string(l) + " shape does not match the layer sizes");
    }
    if (!use_bias && !biases[l].isZero(0.0)) throw ValidationError("bias-free model has non-zero biases");
  }
}

MlpModel MlpModel::initialize(std::vector<std::size_t> sizes, std::uint64_t seed) {
  MlpModel m = zeros(std::move(sizes));
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < m.weights.size(); ++l) m.weights[l] = glorot(m.sizes[l + 1], m.sizes[l], rng);
  return m;
}

MlpModel MlpModel::zeros(std::vector<std::size_t> sizes) {
  MlpModel m;
  m.sizes = std::move(sizes);
  if (m.sizes.size() < 2) throw ValidationError("an MLP needs at least two layer sizes");
  for (std::size_t l = 0; l + 1 < m.sizes.size(); ++l) {
    m.weights.push_back(Matrix::Zero(static_cast<Eigen::Index>(m.sizes[l + 1]), static_cast<Eigen::Index>(m.sizes[l])));
    m.biases.push_back(Vector::Zero(static_cast<Eigen::Index>(m.sizes[l + 1])));
  }
  return m;
}

MlpEngine::MlpEngine(MlpModel model, MvmBackend& backend) : model_(std::move(model)), backend_(&backend) {
  model_.validate();
  reprogram();
}

void MlpEngine::reprogram() {
  ops_.clear();
  for (const Matrix& w : model_.weights) ops_.push_back(backend_->program(w));
}

Vector mlp_forward(MlpEngine& engine, const Vector& x) {
  const MlpModel& m = engine.model();
  if (x.size() != static_cast<Eigen::Index>(m.sizes.front())) throw ShapeError("input has the wrong length");
  Vector a = x;
  for (std::size_t l = 0; l < m.layers(); ++l) a = sigmoid(engine.layer(l).forward(a) + m.biases[l]);
  return a;
}

double sample_loss(const Vector& output, const Vector& target, LossKind loss) {
  if (output.size() != target.size()) throw ShapeError("target has the wrong length");
  if (loss == LossKind::mse) return 0.5 * (output - target).squaredNorm();
  double l = 0.0;
  for (Eigen::Index i = 0; i < output.size(); ++i) {
    l -= target(i) * std::log(output(i)) + (1.0 - target(i)) * std::log(1.0 - output(i));
  }
  return l;
}

BackpropTrace mlp_backprop(MlpEngine& engine, const Vector& x, const Vector& target, LossKind loss) {
  const MlpModel& m = engine.model();
  const std::size_t layers = m.layers();
  if (x.size() != static_cast<Eigen::Index>(m.sizes.front())) throw ShapeError("input has the wrong length");
  if (target.size() != static_cast<Eigen::Index>(m.sizes.back())) throw ShapeError("target has the wrong length");

  BackpropTrace tr;
  tr.activations.push_back(x);
  for (std::size_t l = 0; l < layers; ++l) {
    tr.activations.push_back(sigmoid(engine.layer(l).forward(tr.activations.back()) + m.biases[l]));
  }
  const Vector& y = tr.activations.back();
  tr.loss = sample_loss(y, target, loss);
  check_finite_loss(tr.loss);

  tr.errors.resize(layers);
  tr.weight_gradients.resize(layers);
  tr.bias_gradients.resize(layers);
  Vector delta = y - target;
  if (loss == LossKind::mse) delta = delta.cwiseProduct(y.cwiseProduct(Vector::Ones(y.size()) - y));
  for (std::size_t l = layers; l-- > 0;) {
    tr.errors[l] = delta;
    tr.weight_gradients[l] = delta * tr.activations[l].transpose();
    tr.bias_gradients[l] = delta;
    if (l > 0) {
      const Vector& a = tr.activations[l];
      delta = engine.layer(l).backward(delta).cwiseProduct(a.cwiseProduct(Vector::Ones(a.size()) - a));
    }
  }
  return tr;
}

namespace {

void apply_mlp_update(MlpEngine& engine, const std::vector<Matrix>& gw, const std::vector<Vector>& gb,
                      Optimizer& optimizer) {
  MlpModel& m = engine.mutable_model();
  optimizer.next_step();
  for (std::size_t l = 0; l < m.layers(); ++l) {
    optimizer.update(2 * l, m.weights[l], gw[l]);
    if (m.use_bias) optimizer.update(2 * l + 1, m.biases[l], gb[l]);
  }
  engine.reprogram();
}

}  // namespace

BackpropTrace onchip_backprop_step(MlpEngine& engine, const Vector& x, const Vector& target, LossKind loss,
                                   Optimizer& optimizer) {
  BackpropTrace tr = mlp_backprop(engine, x, target, loss);
  apply_mlp_update(engine, tr.weight_gradients, tr.bias_gradients, optimizer);
  return tr;
}

double dataset_cost(MlpEngine& engine, const LabeledSet& data, LossKind loss) {
  const std::size_t classes = engine.model().sizes.back();
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    total += sample_loss(mlp_forward(engine, data.sample(i)), one_hot(data.labels[i], classes), loss);
  }
  return data.size() ? total / static_cast<double>(data.size()) : 0.0;
}

double classification_accuracy(MlpEngine& engine, const LabeledSet& data) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (argmax(mlp_forward(engine, data.sample(i))) == static_cast<std::size_t>(data.labels[i])) ++correct;
  }
  return data.size() ? static_cast<double>(correct) / static_cast<double>(data.size()) : 0.0;
}

MlpTrainResult train_mlp(MlpModel initial, const LabeledSet& train, const LabeledSet& test,
                         const TrainingConfig& config, MvmBackend& backend) {
  config.validate();
  if (train.size() == 0) throw ValidationError("training set is empty");
  MlpEngine engine(std::move(initial), backend);
  Optimizer optimizer(config.optimizer);
  const std::size_t classes = engine.model().sizes.back();
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  MlpTrainResult result;
  result.cost_history.push_back(dataset_cost(engine, train, config.loss));
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      std::vector<Matrix> gw;
      std::vector<Vector> gb;
      for (std::size_t i = start; i < stop; ++i) {
        const BackpropTrace tr =
            mlp_backprop(engine, train.sample(order[i]), one_hot(train.labels[order[i]], classes), config.loss);
        if (gw.empty()) {
          gw = tr.weight_gradients;
          gb = tr.bias_gradients;
        } else {
          for (std::size_t l = 0; l < gw.size(); ++l) {
            gw[l] += tr.weight_gradients[l];
            gb[l] += tr.bias_gradients[l];
          }
        }
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      for (std::size_t l = 0; l < gw.size(); ++l) {
        gw[l] *= inv;
        gb[l] *= inv;
      }
      apply_mlp_update(engine, gw, gb, optimizer);
    }
    const double cost = dataset_cost(engine, train, config.loss);
    check_finite_loss(cost);
    result.cost_history.push_back(cost);
    result.accuracy_history.push_back(classification_accuracy(engine, test));
  }
  result.accuracy = result.accuracy_history.back();
  result.model = engine.model();
  return result;
}

// ---------------------------------------------------------------------------

void CnnShape::validate() const {
  if (kernel_side < 1 || image_side < kernel_side) throw ValidationError("kernel larger than the image");
  if (pool < 1 || conv_side() < pool) throw ValidationError("pooling window larger than the feature map");
  if (kernels < 1 || hidden < 1 || classes < 2) throw ValidationError("CNN layer sizes must be positive");
}

void CnnModel::validate() const {
  shape.validate();
  const auto k = static_cast<Eigen::Index>(shape.kernels);
  const auto h = static_cast<Eigen::Index>(shape.hidden);
  const auto c = static_cast<Eigen::Index>(shape.classes);
  if (kernels.rows() != k || kernels.cols() != static_cast<Eigen::Index>(shape.patch_size()) ||
      conv_bias.size() != k || w1.rows() != h || w1.cols() != static_cast<Eigen::Index>(shape.flat_size()) ||
      b1.size() != h || w2.rows() != c || w2.cols() != h || b2.size() != c) {
    throw ShapeError("CNN parameters do not match the shape");
  }
}

CnnModel CnnModel::initialize(const CnnShape& shape, std::uint64_t seed) {
  shape.validate();
  std::mt19937_64 rng(seed);
  CnnModel m;
  m.shape = shape;
  m.kernels = glorot(shape.kernels, shape.patch_size(), rng);
  m.conv_bias = Vector::Zero(static_cast<Eigen::Index>(shape.kernels));
  m.w1 = glorot(shape.hidden, shape.flat_size(), rng);
  m.b1 = Vector::Zero(static_cast<Eigen::Index>(shape.hidden));
  m.w2 = glorot(shape.classes, shape.hidden, rng);
  m.b2 = Vector::Zero(static_cast<Eigen::Index>(shape.classes));
  return m;
}

Matrix im2col(const Vector& image, std::size_t image_side, std::size_t kernel_side) {
  if (image.size() != static_cast<Eigen::Index>(image_side * image_side)) {
    throw ShapeError("image has " + std::to_string(image.size()) + " pixels, expected " +
                     std::to_string(image_side * image_side));
  }
  const std::size_t out = image_side - kernel_side + 1;
  Matrix p(static_cast<Eigen::Index>(kernel_side * kernel_side), static_cast<Eigen::Index>(out * out));
  for (std::size_t i = 0; i < out; ++i) {
    for (std::size_t j = 0; j < out; ++j) {
      const auto col = static_cast<Eigen::Index>(i * out + j);
      for (std::size_t di = 0; di < kernel_side; ++di) {
        for (std::size_t dj = 0; dj < kernel_side; ++dj) {
          p(static_cast<Eigen::Index>(di * kernel_side + dj), col) =
              image(static_cast<Eigen::Index>((i + di) * image_side + j + dj));
        }
      }
    }
  }
  return p;
}

Matrix im2col_convolve(const Vector& image, std::size_t image_side, std::size_t kernel_side,
                       LayerOperator& kernel_op) {
  return kernel_op.forward_batch(im2col(image, image_side, kernel_side));
}

Matrix direct_convolve(const Vector& image, std::size_t image_side, const Matrix& kernels,
                       std::size_t kernel_side) {
  const std::size_t out = image_side - kernel_side + 1;
  Matrix maps = Matrix::Zero(kernels.rows(), static_cast<Eigen::Index>(out * out));
  for (Eigen::Index k = 0; k < kernels.rows(); ++k) {
    for (std::size_t i = 0; i < out; ++i) {
      for (std::size_t j = 0; j < out; ++j) {
        double acc = 0.0;
        for (std::size_t di = 0; di < kernel_side; ++di) {
          for (std::size_t dj = 0; dj < kernel_side; ++dj) {
            acc += kernels(k, static_cast<Eigen::Index>(di * kernel_side + dj)) *
                   image(static_cast<Eigen::Index>((i + di) * image_side + j + dj));
          }
        }
        maps(k, static_cast<Eigen::Index>(i * out + j)) = acc;
      }
    }
  }
  return maps;
}

CnnEngine::CnnEngine(CnnModel model, MvmBackend& backend) : model_(std::move(model)), backend_(&backend) {
  model_.validate();
  reprogram();
}

void CnnEngine::reprogram() { conv_ = backend_->program(model_.kernels); }

namespace {

struct CnnActivations {
  Matrix patches;
  Matrix conv;   // pre-activation, kernels x conv_side^2
  Vector flat;   // pooled features
  std::vector<Eigen::Index> winners;  // conv column of each pooled feature
  Vector z1;
  Vector hidden;
  Vector output;
};

CnnActivations cnn_run(CnnEngine& engine, const Vector& image) {
  const CnnModel& m = engine.model();
  const CnnShape& s = m.shape;
  CnnActivations a;
  a.patches = im2col(image, s.image_side, s.kernel_side);
  a.conv = engine.conv().forward_batch(a.patches);
  a.conv.colwise() += m.conv_bias;

  const std::size_t cs = s.conv_side(), ps = s.pooled_side();
  a.flat.resize(static_cast<Eigen::Index>(s.flat_size()));
  a.winners.resize(s.flat_size());
  for (std::size_t k = 0; k < s.kernels; ++k) {
    for (std::size_t pi = 0; pi < ps; ++pi) {
      for (std::size_t pj = 0; pj < ps; ++pj) {
        double best = -std::numeric_limits<double>::infinity();
        Eigen::Index where = 0;
        for (std::size_t di = 0; di < s.pool; ++di) {
          for (std::size_t dj = 0; dj < s.pool; ++dj) {
            const auto col = static_cast<Eigen::Index>((pi * s.pool + di) * cs + pj * s.pool + dj);
            const double v = std::max(0.0, a.conv(static_cast<Eigen::Index>(k), col));
            if (v > best) {
              best = v;
              where = col;
            }
          }
        }
        const std::size_t f = (k * ps + pi) * ps + pj;
        a.flat(static_cast<Eigen::Index>(f)) = best;
        a.winners[f] = where;
      }
    }
  }
  a.z1 = m.w1 * a.flat + m.b1;
  a.hidden = a.z1.cwiseMax(0.0);
  a.output = softmax(m.w2 * a.hidden + m.b2);
  return a;
}

double cnn_loss(const Vector& y, const Vector& t, LossKind loss) {
  if (loss == LossKind::mse) return 0.5 * (y - t).squaredNorm();
  double l = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (t(i) != 0.0) l -= t(i) * std::log(y(i));
  }
  return l;
}

}  // namespace

Vector cnn_forward(CnnEngine& engine, const Vector& image) { return cnn_run(engine, image).output; }

CnnGradients cnn_backprop(CnnEngine& engine, const Vector& image, const Vector& target, LossKind loss,
                          bool input_gradient) {
  const CnnModel& m = engine.model();
  const CnnShape& s = m.shape;
  if (target.size() != static_cast<Eigen::Index>(s.classes)) throw ShapeError("target has the wrong length");
  const CnnActivations a = cnn_run(engine, image);

  CnnGradients g;
  g.output = a.output;
  g.loss = cnn_loss(a.output, target, loss);
  check_finite_loss(g.loss);

  Vector dlogits = a.output - target;
  if (loss == LossKind::mse) {
    // Softmax Jacobian applied to dL/dy = y - t.
    const Vector gy = dlogits;
    dlogits = a.output.cwiseProduct((gy.array() - gy.dot(a.output)).matrix());
  }
  g.w2 = dlogits * a.hidden.transpose();
  g.b2 = dlogits;
  const Vector dh = (m.w2.transpose() * dlogits).cwiseProduct((a.z1.array() > 0.0).cast<double>().matrix());
  g.w1 = dh * a.flat.transpose();
  g.b1 = dh;
  const Vector dflat = m.w1.transpose() * dh;

  Matrix dconv = Matrix::Zero(a.conv.rows(), a.conv.cols());
  const std::size_t ps = s.pooled_side();
  for (std::size_t k = 0; k < s.kernels; ++k) {
    for (std::size_t p = 0; p < ps * ps; ++p) {
      const std::size_t f = k * ps * ps + p;
      const Eigen::Index col = a.winners[f];
      if (a.conv(static_cast<Eigen::Index>(k), col) > 0.0) {
        dconv(static_cast<Eigen::Index>(k), col) += dflat(static_cast<Eigen::Index>(f));
      }
    }
  }
  g.kernels = dconv * a.patches.transpose();
  g.conv_bias = dconv.rowwise().sum();

  if (input_gradient) {
    const Matrix dpatches = engine.conv().backward_batch(dconv);
    const std::size_t cs = s.conv_side(), ks = s.kernel_side;
    g.image = Vector::Zero(image.size());
    for (std::size_t i = 0; i < cs; ++i) {
      for (std::size_t j = 0; j < cs; ++j) {
        const auto col = static_cast<Eigen::Index>(i * cs + j);
        for (std::size_t di = 0; di < ks; ++di) {
          for (std::size_t dj = 0; dj < ks; ++dj) {
            g.image(static_cast<Eigen::Index>((i + di) * s.image_side + j + dj)) +=
                dpatches(static_cast<Eigen::Index>(di * ks + dj), col);
          }
        }
      }
    }
  }
  return g;
}

Eigen::MatrixXi confusion_matrix(CnnEngine& engine, const LabeledSet& data) {
  const auto classes = static_cast<Eigen::Index>(engine.model().shape.classes);
  Eigen::MatrixXi cm = Eigen::MatrixXi::Zero(classes, classes);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int label = data.labels[i];
    if (label < 0 || label >= classes) throw ValidationError("label outside the class range");
    cm(label, static_cast<Eigen::Index>(argmax(cnn_forward(engine, data.sample(i)))))++;
  }
  return cm;
}

CnnTrainResult train_cnn(CnnModel initial, const LabeledSet& train, const LabeledSet& test,
                         const TrainingConfig& config, MvmBackend& backend, const CnnTrainOptions& options) {
  config.validate();
  if (train.size() == 0) throw ValidationError("training set is empty");
  CnnEngine engine(std::move(initial), backend);
  Optimizer optimizer(config.optimizer);
  const std::size_t classes = engine.model().shape.classes;
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  CnnTrainResult result;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const CnnModel& m = engine.model();
      CnnGradients sum{Matrix::Zero(m.kernels.rows(), m.kernels.cols()), Vector::Zero(m.conv_bias.size()),
                       Matrix::Zero(m.w1.rows(), m.w1.cols()),           Vector::Zero(m.b1.size()),
                       Matrix::Zero(m.w2.rows(), m.w2.cols()),           Vector::Zero(m.b2.size()),
                       Vector(), 0.0, Vector()};
      for (std::size_t i = start; i < stop; ++i) {
        const std::size_t idx = order[i];
        const CnnGradients g = cnn_backprop(engine, train.sample(idx), one_hot(train.labels[idx], classes),
                                            config.loss, options.input_gradient);
        sum.kernels += g.kernels;
        sum.conv_bias += g.conv_bias;
        sum.w1 += g.w1;
        sum.b1 += g.b1;
        sum.w2 += g.w2;
        sum.b2 += g.b2;
        sum.loss += g.loss;
      }
      epoch_loss += sum.loss;
      const double inv = 1.0 / static_cast<double>(stop - start);
      CnnModel& mm = engine.mutable_model();
      optimizer.next_step();
      optimizer.update(0, mm.kernels, (sum.kernels * inv).eval());
      optimizer.update(1, mm.conv_bias, (sum.conv_bias * inv).eval());
      optimizer.update(2, mm.w1, (sum.w1 * inv).eval());
      optimizer.update(3, mm.b1, (sum.b1 * inv).eval());
      optimizer.update(4, mm.w2, (sum.w2 * inv).eval());
      optimizer.update(5, mm.b2, (sum.b2 * inv).eval());
      engine.reprogram();
    }
    result.loss_history.push_back(epoch_loss / static_cast<double>(train.size()));
    result.confusion = confusion_matrix(engine, test);
    result.accuracy = test.size() ? static_cast<double>(result.confusion.trace()) / static_cast<double>(test.size()) : 0.0;
    result.accuracy_history.push_back(result.accuracy);
    if (options.on_epoch) options.on_epoch(epoch + 1, result.loss_history.back(), result.accuracy);
  }
  result.model = engine.model();
  return result;
}

}  // namespace xbar
