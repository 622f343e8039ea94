#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "xbar/compiler.hpp"
#include "xbar/crossbar.hpp"
#include "xbar/lut.hpp"
#include "xbar/noise.hpp"

namespace xbar {

enum class BackendKind { ideal, photonic, lut };

const char* to_string(BackendKind kind);
BackendKind backend_from_string(const std::string& name);

/// A signed weight matrix W (outputs x inputs) loaded onto some hardware.
/// forward computes W x, backward computes W^T s.
class LayerOperator {
 public:
  virtual ~LayerOperator() = default;
  virtual Vector forward(const Vector& x) = 0;
  virtual Vector backward(const Vector& s) = 0;
  /// Column-wise forward over a batch; the default loops over columns.
  virtual Matrix forward_batch(const Matrix& xs);
  virtual Matrix backward_batch(const Matrix& ss);
};

class MvmBackend {
 public:
  virtual ~MvmBackend() = default;
  virtual std::unique_ptr<LayerOperator> program(const Matrix& weights) = 0;
  virtual BackendKind kind() const = 0;
  /// Largest weight matrix side the backend accepts (0 means unbounded).
  virtual std::size_t capacity() const { return 0; }
};

/// Exact dense products in double precision.
class IdealBackend final : public MvmBackend {
 public:
  std::unique_ptr<LayerOperator> program(const Matrix& weights) override;
  BackendKind kind() const override { return BackendKind::ideal; }
};

struct PhotonicOptions {
  NoiseConfig noise{0.0, 7, false};
  int repeats = 1;  // time-averaged detections per output
  CompileOptions compile;
};

/// Whole-vector passes through the simulated crossbar: affine encoding,
/// compilation with crosstalk compensation, transfer-matrix propagation,
/// detector noise and electronic decoding.
class PhotonicBackend final : public MvmBackend {
 public:
  PhotonicBackend(std::shared_ptr<const Crossbar> xb, PhotonicOptions options = {});

  std::unique_ptr<LayerOperator> program(const Matrix& weights) override;
  BackendKind kind() const override { return BackendKind::photonic; }
  std::size_t capacity() const override { return xb_->n(); }

  const Crossbar& crossbar() const { return *xb_; }
  double normalization(Direction d) const { return d == Direction::forward ? kappa_fwd_ : kappa_bwd_; }
  double element_scale() const { return scale_; }
  /// Detected powers divided by the direction's normalization, with noise and averaging applied.
  Vector measure(const ProgrammedCrossbar& pc, const Vector& x, Direction d);

 private:
  std::shared_ptr<const Crossbar> xb_;
  PhotonicOptions options_;
  double scale_ = 0.0;
  double kappa_fwd_ = 1.0;
  double kappa_bwd_ = 1.0;
  NoiseStream rng_;
};

struct LutBackendOptions {
  LutBuildOptions build;
  NoiseConfig noise{0.0, 11, false};
  int repeats = 1;
  bool compensate_asymmetry = true;
};

/// Element-wise products fetched from per-ring calibration tables, summed
/// electronically. Heaters are set by inverting the forward tables; backward
/// reads use the backward tables at the same ring heater power plus the
/// asymmetry bias.
class LutBackend final : public MvmBackend {
 public:
  LutBackend(std::shared_ptr<const Crossbar> xb, LutBackendOptions options = {});

  std::unique_ptr<LayerOperator> program(const Matrix& weights) override;
  BackendKind kind() const override { return BackendKind::lut; }
  std::size_t capacity() const override { return xb_->n(); }

  const CalibrationLUT& table(std::size_t r, std::size_t c, Direction d) const;
  const AsymmetryBias& bias(std::size_t r, std::size_t c) const { return biases_[r * xb_->n() + c]; }
  /// Product read from ring (r, c) with ring heater `mrr_mw` and input fraction `x`.
  double product(std::size_t r, std::size_t c, double x, double mrr_mw, Direction d);

 private:
  std::shared_ptr<const Crossbar> xb_;
  LutBackendOptions options_;
  std::vector<CalibrationLUT> forward_;
  std::vector<CalibrationLUT> backward_;
  std::vector<AsymmetryBias> biases_;
  NoiseStream rng_;
};

}  // namespace xbar
