#include "xbar/backend.hpp"

#include <string>

#include "xbar/errors.hpp"

namespace xbar {

const char* to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::ideal: return "ideal";
    case BackendKind::photonic: return "photonic";
    case BackendKind::lut: return "lut";
  }
  return "unknown";
}

BackendKind backend_from_string(const std::string& name) {
  if (name == "ideal") return BackendKind::ideal;
  if (name == "photonic") return BackendKind::photonic;
  if (name == "lut") return BackendKind::lut;
  throw ValidationError("unknown backend '" + name + "' (expected ideal, photonic or lut)");
}

Matrix LayerOperator::forward_batch(const Matrix& xs) {
  Matrix out;
  for (Eigen::Index j = 0; j < xs.cols(); ++j) {
    const Vector y = forward(xs.col(j));
    if (j == 0) out.resize(y.size(), xs.cols());
    out.col(j) = y;
  }
  return out;
}

Matrix LayerOperator::backward_batch(const Matrix& ss) {
  Matrix out;
  for (Eigen::Index j = 0; j < ss.cols(); ++j) {
    const Vector y = backward(ss.col(j));
    if (j == 0) out.resize(y.size(), ss.cols());
    out.col(j) = y;
  }
  return out;
}

namespace {

void check_length(const Vector& v, Eigen::Index expected, const char* what) {
  if (v.size() != expected) {
    throw ShapeError(std::string(what) + " has length " + std::to_string(v.size()) + ", expected " +
                     std::to_string(expected));
  }
}

class IdealOperator final : public LayerOperator {
 public:
  explicit IdealOperator(Matrix w) : w_(std::move(w)) {}
  Vector forward(const Vector& x) override {
    check_length(x, w_.cols(), "input");
    return w_ * x;
  }
  Vector backward(const Vector& s) override {
    check_length(s, w_.rows(), "error signal");
    return w_.transpose() * s;
  }
  Matrix forward_batch(const Matrix& xs) override { return w_ * xs; }
  Matrix backward_batch(const Matrix& ss) override { return w_.transpose() * ss; }

 private:
  Matrix w_;
};

void check_fits(const Matrix& w, std::size_t n) {
  if (w.rows() > static_cast<Eigen::Index>(n) || w.cols() > static_cast<Eigen::Index>(n)) {
    throw ShapeError("weight matrix " + std::to_string(w.rows()) + "x" + std::to_string(w.cols()) +
                     " does not fit a " + std::to_string(n) + "x" + std::to_string(n) + " crossbar");
  }
}

Vector pad(const Vector& v, std::size_t n) {
  Vector p = Vector::Zero(static_cast<Eigen::Index>(n));
  p.head(v.size()) = v;
  return p;
}

// Shared decode logic: `pass` runs one encoded analog pass of `in` real inputs
// and returns the first `out` outputs.
template <typename Pass>
Vector encoded_product(const Vector& v, const AffineEncoding& matrix_enc, Eigen::Index out,
                       std::optional<Vector>& ones_cache, Pass&& pass) {
  const Encoded<Vector> xe = encode_input(v);
  const Vector y_prime = pass(xe.values).head(out);
  if (xe.encoding.offset != 0.0 && !ones_cache) {
    ones_cache = pass(Vector::Ones(v.size())).head(out);
  }
  return decode_output(y_prime, matrix_enc, xe.encoding, xe.values.sum(),
                       static_cast<std::size_t>(v.size()), ones_cache);
}

class PhotonicOperator final : public LayerOperator {
 public:
  PhotonicOperator(PhotonicBackend& backend, const Matrix& w, const CompileOptions& options)
      : backend_(&backend), rows_(w.rows()), cols_(w.cols()) {
    const Encoded<Matrix> enc = encode_signed(w);
    encoding_ = enc.encoding;
    CompileOptions opts = options;
    opts.scale = backend.element_scale();
    const CompiledMatrix compiled = compile_matrix(backend.crossbar(), enc.values, opts);
    programmed_.emplace(backend.crossbar(), compiled.heater_settings);
  }

  Vector forward(const Vector& x) override {
    check_length(x, cols_, "input");
    return encoded_product(x, encoding_, rows_, ones_forward_, [&](const Vector& xp) {
      return backend_->measure(*programmed_, pad(xp, backend_->crossbar().n()), Direction::forward);
    });
  }

  Vector backward(const Vector& s) override {
    check_length(s, rows_, "error signal");
    return encoded_product(s, encoding_, cols_, ones_backward_, [&](const Vector& sp) {
      return backend_->measure(*programmed_, pad(sp, backend_->crossbar().n()), Direction::backward);
    });
  }

 private:
  PhotonicBackend* backend_;
  Eigen::Index rows_, cols_;
  AffineEncoding encoding_;
  std::optional<ProgrammedCrossbar> programmed_;
  std::optional<Vector> ones_forward_, ones_backward_;
};

}  // namespace

std::unique_ptr<LayerOperator> IdealBackend::program(const Matrix& weights) {
  if (!weights.allFinite()) throw EncodingError("weights must be finite");
  return std::make_unique<IdealOperator>(weights);
}

PhotonicBackend::PhotonicBackend(std::shared_ptr<const Crossbar> xb, PhotonicOptions options)
    : xb_(std::move(xb)), options_(options), rng_(options.noise.seed, 0x9e37) {
  options_.noise.validate();
  if (options_.repeats < 1) throw RangeError("repeats must be at least 1");
  scale_ = options_.compile.scale > 0.0 ? options_.compile.scale : max_uniform_scale(*xb_, options_.compile);
  CompileOptions calib = options_.compile;
  calib.scale = scale_;
  kappa_fwd_ = calibrate_normalization(*xb_, Direction::forward, calib);
  kappa_bwd_ = calibrate_normalization(*xb_, Direction::backward, calib);
}

std::unique_ptr<LayerOperator> PhotonicBackend::program(const Matrix& weights) {
  check_fits(weights, xb_->n());
  return std::make_unique<PhotonicOperator>(*this, weights, options_.compile);
}

Vector PhotonicBackend::measure(const ProgrammedCrossbar& pc, const Vector& x, Direction d) {
  const Vector clean = pc.detect(x, d) / normalization(d);
  if (!options_.noise.active()) return clean;
  return time_average([&] { return perturb(clean, options_.noise, rng_); }, options_.repeats);
}

// ---------------------------------------------------------------------------

namespace {

class LutOperator final : public LayerOperator {
 public:
  LutOperator(LutBackend& backend, const Matrix& w, std::size_t n)
      : backend_(&backend), rows_(w.rows()), cols_(w.cols()) {
    const Encoded<Matrix> enc = encode_signed(w);
    encoding_ = enc.encoding;
    // Ring (r, c) carries element (c, r); r runs over inputs, c over outputs.
    heaters_ = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (Eigen::Index r = 0; r < cols_; ++r) {
      for (Eigen::Index c = 0; c < rows_; ++c) {
        const auto& lut = backend.table(static_cast<std::size_t>(r), static_cast<std::size_t>(c), Direction::forward);
        heaters_(r, c) = invert_mrr_axis(lut, enc.values(c, r)).power;
      }
    }
  }

  Vector forward(const Vector& x) override {
    check_length(x, cols_, "input");
    return encoded_product(x, encoding_, rows_, ones_forward_, [&](const Vector& xp) {
      Vector y = Vector::Zero(rows_);
      for (Eigen::Index c = 0; c < rows_; ++c) {
        for (Eigen::Index r = 0; r < cols_; ++r) {
          y(c) += backend_->product(static_cast<std::size_t>(r), static_cast<std::size_t>(c), xp(r),
                                    heaters_(r, c), Direction::forward);
        }
      }
      return y;
    });
  }

  Vector backward(const Vector& s) override {
    check_length(s, rows_, "error signal");
    return encoded_product(s, encoding_, cols_, ones_backward_, [&](const Vector& sp) {
      Vector y = Vector::Zero(cols_);
      for (Eigen::Index r = 0; r < cols_; ++r) {
        for (Eigen::Index c = 0; c < rows_; ++c) {
          y(r) += backend_->product(static_cast<std::size_t>(r), static_cast<std::size_t>(c), sp(c),
                                    heaters_(r, c), Direction::backward);
        }
      }
      return y;
    });
  }

 private:
  LutBackend* backend_;
  Eigen::Index rows_, cols_;
  AffineEncoding encoding_;
  Matrix heaters_;
  std::optional<Vector> ones_forward_, ones_backward_;
};

}  // namespace

LutBackend::LutBackend(std::shared_ptr<const Crossbar> xb, LutBackendOptions options)
    : xb_(std::move(xb)), options_(options), rng_(options.noise.seed, 0x7f4a) {
  options_.noise.validate();
  if (options_.repeats < 1) throw RangeError("repeats must be at least 1");
  const std::size_t n = xb_->n();
  const HeaterSettings dark = RingProgrammer(*xb_, 0.0).dark_settings();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      forward_.push_back(build_lut(*xb_, r, c, default_lut_window(*xb_, r, c, Direction::forward),
                                   Direction::forward, dark, options_.build));
      backward_.push_back(build_lut(*xb_, r, c, default_lut_window(*xb_, r, c, Direction::backward),
                                    Direction::backward, dark, options_.build));
      biases_.push_back(options_.compensate_asymmetry ? compensate_asymmetry(forward_.back(), backward_.back())
                                                      : AsymmetryBias{});
    }
  }
}

const CalibrationLUT& LutBackend::table(std::size_t r, std::size_t c, Direction d) const {
  const std::size_t i = r * xb_->n() + c;
  return d == Direction::forward ? forward_.at(i) : backward_.at(i);
}

double LutBackend::product(std::size_t r, std::size_t c, double x, double mrr_mw, Direction d) {
  const CalibrationLUT& lut = table(r, c, d);
  const double full_scale = table(r, c, Direction::forward).full_scale();
  const double mzi = invert_mzi_axis(lut, x).power;
  const AsymmetryBias& b = bias(r, c);
  const double clean = lut.lookup(mzi, mrr_mw) / full_scale + (d == Direction::forward ? b.forward : b.backward);
  if (!options_.noise.active()) return clean;
  Vector v(1);
  v(0) = clean;
  return time_average([&] { return perturb(v, options_.noise, rng_); }, options_.repeats)(0);
}

std::unique_ptr<LayerOperator> LutBackend::program(const Matrix& weights) {
  check_fits(weights, xb_->n());
  return std::make_unique<LutOperator>(*this, weights, xb_->n());
}

}  // namespace xbar
