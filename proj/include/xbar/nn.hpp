#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "xbar/backend.hpp"
#include "xbar/dataset.hpp"

namespace xbar {

enum class LossKind { mse, cross_entropy };
enum class OptimizerKind { sgd, adam };

const char* to_string(LossKind kind);
LossKind loss_from_string(const std::string& name);
const char* to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(const std::string& name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::sgd;
  double learning_rate = 0.1;  // alpha for Adam
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainingConfig {
  OptimizerConfig optimizer;
  int epochs = 100;
  std::size_t batch_size = 1;
  LossKind loss = LossKind::mse;
  BackendKind backend = BackendKind::ideal;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Stateful parameter update shared by all layers of one model. Parameters
/// are addressed by a stable slot index so Adam can keep its moments.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config);
  void update(std::size_t slot, Matrix& param, const Matrix& grad);
  void update(std::size_t slot, Vector& param, const Vector& grad);
  /// Advances the Adam time step; call once per optimizer step.
  void next_step() { ++t_; }
  const OptimizerConfig& config() const { return config_; }

 private:
  OptimizerConfig config_;
  long t_ = 0;
  std::vector<Matrix> m_, v_;
};

double sigmoid(double z);
Vector sigmoid(const Vector& z);
Vector softmax(const Vector& z);

// ---------------------------------------------------------------------------
// Multilayer perceptron

/// Fully connected network with sigmoid on every layer. Biases are added
/// electronically after each optical product.
struct MlpModel {
  std::vector<std::size_t> sizes{4, 4, 3};
  std::vector<Matrix> weights;  // weights[l] is sizes[l+1] x sizes[l]
  std::vector<Vector> biases;
  bool use_bias = true;  // false keeps every bias at zero during training

  void validate() const;
  std::size_t layers() const { return weights.size(); }
  /// Glorot-uniform weights, zero biases.
  static MlpModel initialize(std::vector<std::size_t> sizes, std::uint64_t seed);
  static MlpModel zeros(std::vector<std::size_t> sizes);
};

/// Per-layer activations (input first), error signals and gradients of one sample.
struct BackpropTrace {
  std::vector<Vector> activations;
  std::vector<Vector> errors;  // delta of each layer's pre-activation
  std::vector<Matrix> weight_gradients;
  std::vector<Vector> bias_gradients;
  double loss = 0.0;
};

/// Weight matrices programmed onto a backend; reprogram after every update.
class MlpEngine {
 public:
  MlpEngine(MlpModel model, MvmBackend& backend);

  const MlpModel& model() const { return model_; }
  MlpModel& mutable_model() { return model_; }
  MvmBackend& backend() { return *backend_; }
  /// Loads the current weights onto the backend.
  void reprogram();
  LayerOperator& layer(std::size_t l) { return *ops_.at(l); }

 private:
  MlpModel model_;
  MvmBackend* backend_;
  std::vector<std::unique_ptr<LayerOperator>> ops_;
};

Vector mlp_forward(MlpEngine& engine, const Vector& x);
/// Forward pass and backpropagation without touching the weights.
BackpropTrace mlp_backprop(MlpEngine& engine, const Vector& x, const Vector& target, LossKind loss);
/// Backpropagation with the error routed backward through the programmed
/// weights, followed by one optimizer step and reprogramming.
BackpropTrace onchip_backprop_step(MlpEngine& engine, const Vector& x, const Vector& target, LossKind loss,
                                   Optimizer& optimizer);

double sample_loss(const Vector& output, const Vector& target, LossKind loss);

struct MlpTrainResult {
  std::vector<double> cost_history;      // entry 0 is before training, then one per epoch
  std::vector<double> accuracy_history;  // test accuracy after each epoch
  double accuracy = 0.0;
  MlpModel model;
};

/// Mean loss over `data` evaluated through the engine.
double dataset_cost(MlpEngine& engine, const LabeledSet& data, LossKind loss);
double classification_accuracy(MlpEngine& engine, const LabeledSet& data);

MlpTrainResult train_mlp(MlpModel initial, const LabeledSet& train, const LabeledSet& test,
                         const TrainingConfig& config, MvmBackend& backend);

// ---------------------------------------------------------------------------
// Convolutional network

struct CnnShape {
  std::size_t image_side = 28;
  std::size_t kernel_side = 3;
  std::size_t kernels = 9;
  std::size_t pool = 2;
  std::size_t hidden = 100;
  std::size_t classes = 10;

  std::size_t patch_size() const { return kernel_side * kernel_side; }
  std::size_t conv_side() const { return image_side - kernel_side + 1; }
  std::size_t pooled_side() const { return conv_side() / pool; }
  std::size_t flat_size() const { return kernels * pooled_side() * pooled_side(); }
  void validate() const;
};

/// conv (kernel matrix, one flattened kernel per row) -> ReLU -> max-pool ->
/// flatten -> dense hidden (ReLU) -> dense output (softmax).
struct CnnModel {
  CnnShape shape;
  Matrix kernels;  // kernels x patch_size
  Vector conv_bias;
  Matrix w1;  // hidden x flat
  Vector b1;
  Matrix w2;  // classes x hidden
  Vector b2;

  void validate() const;
  static CnnModel initialize(const CnnShape& shape, std::uint64_t seed);
};

/// Patches of a square image as columns (patch_size x conv_side^2). Patch p
/// at (i, j) is column i * conv_side + j; element (di, dj) is row di * k + dj.
Matrix im2col(const Vector& image, std::size_t image_side, std::size_t kernel_side);

/// Feature maps (kernels x conv_side^2, row-major spatial) of one image using
/// one crossbar MVM per patch.
Matrix im2col_convolve(const Vector& image, std::size_t image_side, std::size_t kernel_side,
                       LayerOperator& kernel_op);

/// Reference nested-loop valid convolution (cross-correlation).
Matrix direct_convolve(const Vector& image, std::size_t image_side, const Matrix& kernels,
                       std::size_t kernel_side);

struct CnnGradients {
  Matrix kernels;
  Vector conv_bias;
  Matrix w1;
  Vector b1;
  Matrix w2;
  Vector b2;
  Vector image;  // input gradient, only when routed back through the crossbar
  double loss = 0.0;
  Vector output;
};

/// Loads the kernel matrix onto a backend; dense layers run electronically.
class CnnEngine {
 public:
  CnnEngine(CnnModel model, MvmBackend& backend);
  const CnnModel& model() const { return model_; }
  CnnModel& mutable_model() { return model_; }
  void reprogram();
  LayerOperator& conv() { return *conv_; }

 private:
  CnnModel model_;
  MvmBackend* backend_;
  std::unique_ptr<LayerOperator> conv_;
};

Vector cnn_forward(CnnEngine& engine, const Vector& image);
/// Gradients of one sample. With `input_gradient`, the conv error is also
/// sent backward through the crossbar to form the image gradient.
CnnGradients cnn_backprop(CnnEngine& engine, const Vector& image, const Vector& target, LossKind loss,
                          bool input_gradient = false);

struct CnnTrainResult {
  std::vector<double> loss_history;      // mean training loss per epoch
  std::vector<double> accuracy_history;  // test accuracy after each epoch
  Eigen::MatrixXi confusion;             // (true label, predicted label)
  double accuracy = 0.0;
  CnnModel model;
};

struct CnnTrainOptions {
  bool input_gradient = true;  // route conv errors backward through the crossbar
  std::function<void(int epoch, double loss, double accuracy)> on_epoch;
};

CnnTrainResult train_cnn(CnnModel initial, const LabeledSet& train, const LabeledSet& test,
                         const TrainingConfig& config, MvmBackend& backend, const CnnTrainOptions& options = {});

/// Confusion matrix and accuracy of the engine on `data`.
Eigen::MatrixXi confusion_matrix(CnnEngine& engine, const LabeledSet& data);

}  // namespace xbar
