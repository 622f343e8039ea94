#include "xbar/compiler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "xbar/errors.hpp"

namespace xbar {

namespace {

template <typename T>
Encoded<T> min_max(const T& values, EncodingAxis axis) {
  if (values.size() == 0) return {values, {1.0, 0.0, axis}};
  if (!values.allFinite()) throw EncodingError("cannot encode non-finite values");
  const double lo = values.minCoeff();
  const double hi = values.maxCoeff();
  if (hi == lo) {
    // Degenerate: everything lives in the offset.
    T zero = T::Zero(values.rows(), values.cols());
    return {zero, {1.0, lo, axis}};
  }
  const double scale = hi - lo;
  T encoded = ((values.array() - lo) / scale).matrix();
  return {encoded, {scale, lo, axis}};
}

// Half the smallest circular gap between channels on the FSR circle.
double default_dark_detuning(const Crossbar& xb) {
  const auto& ch = xb.channels.channels;
  const double fsr = fsr_of(xb.grid.rings.front(), xb.channels.reference);
  double gap = fsr - (ch.back() - ch.front());
  for (std::size_t i = 1; i < ch.size(); ++i) gap = std::min(gap, ch[i] - ch[i - 1]);
  return 0.5 * gap;
}

// Midpoint of the widest circular gap between channels: the wavelength
// farthest from every channel, where rings programmed to zero are parked.
double park_wavelength(const Crossbar& xb) {
  const auto& ch = xb.channels.channels;
  const double fsr = fsr_of(xb.grid.rings.front(), xb.channels.reference);
  double best_gap = fsr - (ch.back() - ch.front());
  double park = ch.back() + 0.5 * best_gap;
  for (std::size_t i = 1; i < ch.size(); ++i) {
    if (ch[i] - ch[i - 1] > best_gap + 1e-12) {
      best_gap = ch[i] - ch[i - 1];
      park = 0.5 * (ch[i] + ch[i - 1]);
    }
  }
  return park;
}

double through_at(const Crossbar& xb, std::size_t r, std::size_t c, std::size_t k, double heater) {
  return ring_drop_through(xb.grid.at(r, c), xb.channels.channels[k], heater).through;
}

struct PassResult {
  int low = 0;
  int high = 0;
};

// One row-by-row programming sweep. Updates `heaters` in place.
PassResult program_pass(const Crossbar& xb, const RingProgrammer& prog, const Matrix& w,
                        double scale, const Matrix& leak, HeaterSettings& heaters) {
  const std::size_t n = xb.n();
  PassResult res;
  for (std::size_t r = 0; r < n; ++r) {
    double remaining = 1.0;
    for (std::size_t c = 0; c < n; ++c) {
      double gain = xb.path_gain(r, c, Direction::forward);
      for (std::size_t below = r + 1; below < n; ++below) {
        gain *= through_at(xb, below, c, r, heaters(static_cast<Eigen::Index>(below), static_cast<Eigen::Index>(c)));
      }
      const auto ci = static_cast<Eigen::Index>(c);
      const auto ri = static_cast<Eigen::Index>(r);
      const double want = scale * w(ci, ri) - leak(ci, ri);
      const double drop = want / (remaining * gain);
      const double floor = prog.drop_at(r, c, prog.dark_detuning());
      if (w(ci, ri) > 0.0 && drop < floor) ++res.low;
      if (drop > prog.drop_at(r, c, 0.0) * (1.0 + 1e-12)) ++res.high;
      // Targets closer to zero than to the analog floor are parked fully dark.
      heaters(ri, ci) = drop < 0.5 * floor ? prog.dark_power(r, c)
                                           : prog.heater_for_detuning(r, c, prog.detuning_for_drop(r, c, drop));
      remaining *= through_at(xb, r, c, r, heaters(ri, ci));
    }
  }
  return res;
}

// Forward transfer restricted to each ring's own channel.
Matrix signal_matrix(const Crossbar& xb, const HeaterSettings& heaters) {
  const std::size_t n = xb.n();
  const ResponseTable t(xb, heaters);
  Matrix s = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < n; ++r) {
    double remaining = 1.0;
    for (std::size_t c = 0; c < n; ++c) {
      double dropped = remaining * t.drop(r, c, r);
      remaining *= t.through(r, c, r);
      for (std::size_t below = r + 1; below < n; ++below) dropped *= t.through(below, c, r);
      s(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r)) =
          dropped * xb.path_gain(r, c, Direction::forward);
    }
  }
  return s;
}

}  // namespace

Encoded<Matrix> encode_signed(const Matrix& m) { return min_max(m, EncodingAxis::matrix); }

Encoded<Vector> encode_signed(const Vector& v) { return min_max(v, EncodingAxis::vector); }

Encoded<Vector> encode_input(const Vector& v) {
  if (v.size() > 0 && v.allFinite() && v.minCoeff() >= 0.0 && v.maxCoeff() <= 1.0) {
    return {v, {1.0, 0.0, EncodingAxis::vector}};
  }
  return encode_signed(v);
}

Vector decode_output(const Vector& y_prime, const AffineEncoding& matrix_enc,
                     const AffineEncoding& vector_enc, double sum_x_prime, std::size_t n,
                     const std::optional<Vector>& ones_pass) {
  const double sm = matrix_enc.scale, mm = matrix_enc.offset;
  const double sx = vector_enc.scale, mx = vector_enc.offset;
  Vector y = (sm * sx) * y_prime;
  if (mx != 0.0) {
    if (!ones_pass) throw ProtocolError("vector offset is non-zero but no all-ones pass was supplied");
    if (ones_pass->size() != y_prime.size()) throw ShapeError("all-ones pass has the wrong length");
    y += (sm * mx) * *ones_pass;
  }
  y.array() += mm * sx * sum_x_prime + mm * mx * static_cast<double>(n);
  return y;
}

double align_resonance(const RingDevice& ring, double target_nm) {
  const double fsr = fsr_of(ring, target_nm);
  double shift = std::fmod(target_nm - ring.natural_resonance_nm(), fsr);
  if (shift < 0.0) shift += fsr;
  if (fsr - shift < 1e-9) shift = 0.0;
  const double power = shift / ring.resonance_shift_per_mw;
  if (power > ring.shifter.max_power_mw) {
    throw InfeasibleError("aligning to " + std::to_string(target_nm) + " nm needs " +
                          std::to_string(power) + " mW (max " +
                          std::to_string(ring.shifter.max_power_mw) + ")");
  }
  return power;
}

RingProgrammer::RingProgrammer(const Crossbar& xb, double dark_detuning_nm)
    : xb_(&xb), dark_(dark_detuning_nm > 0.0 ? dark_detuning_nm : default_dark_detuning(xb)) {
  const auto n = static_cast<Eigen::Index>(xb.n());
  const double park = park_wavelength(xb);
  aligned_.resize(n, n);
  parked_.resize(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      const auto ru = static_cast<std::size_t>(r), cu = static_cast<std::size_t>(c);
      aligned_(r, c) = align_resonance(xb.grid.at(ru, cu), xb.channels.channels[ru]);
      try {
        parked_(r, c) = align_resonance(xb.grid.at(ru, cu), park);
      } catch (const InfeasibleError&) {
        parked_(r, c) = heater_for_detuning(ru, cu, dark_);
      }
    }
  }
}

double RingProgrammer::aligned_power(std::size_t r, std::size_t c) const {
  return aligned_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

double RingProgrammer::heater_for_detuning(std::size_t r, std::size_t c, double detuning_nm) const {
  const auto& ring = xb_->grid.at(r, c);
  const double aligned = aligned_power(r, c);
  const double delta = std::abs(detuning_nm) / ring.resonance_shift_per_mw;
  // Prefer the blue side (less power); use the red side when the heater
  // cannot go that low.
  const double blue_limit = dark_ / ring.resonance_shift_per_mw;
  const double power = aligned >= blue_limit ? aligned - delta : aligned + delta;
  if (power > ring.shifter.max_power_mw) {
    throw InfeasibleError("ring (" + std::to_string(r) + ", " + std::to_string(c) +
                          ") cannot be detuned within its heater range");
  }
  return power;
}

double RingProgrammer::dark_power(std::size_t r, std::size_t c) const {
  return parked_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

double RingProgrammer::drop_at(std::size_t r, std::size_t c, double detuning_nm) const {
  return ring_response_at_detuning(xb_->grid.at(r, c), xb_->channels.channels[r], detuning_nm).drop;
}

double RingProgrammer::detuning_for_drop(std::size_t r, std::size_t c, double drop) const {
  if (drop >= drop_at(r, c, 0.0)) return 0.0;
  if (drop <= drop_at(r, c, dark_)) return dark_;
  const auto& ring = xb_->grid.at(r, c);
  const double t1 = ring.self_coupling_t1, t2 = ring.self_coupling_t2, a = ring.round_trip_amplitude;
  const double x = t1 * t2 * a;
  const double peak_numerator =
      std::pow(10.0, -ring.drop_excess_loss_db / 10.0) * (1.0 - t1 * t1) * (1.0 - t2 * t2) * a;
  // Invert drop = N / ((1 - x)^2 + 4x sin^2(phi/2)) for the half angle.
  const double sin2 = (peak_numerator / drop - (1.0 - x) * (1.0 - x)) / (4.0 * x);
  const double half = std::asin(std::sqrt(std::clamp(sin2, 0.0, 1.0)));
  const double lambda = xb_->channels.channels[r];
  return std::min(dark_, 2.0 * half * fsr_of(ring, lambda) / (2.0 * kPi));
}

HeaterSettings RingProgrammer::dark_settings() const {
  const auto n = static_cast<Eigen::Index>(xb_->n());
  HeaterSettings h(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      h(r, c) = dark_power(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
    }
  }
  return h;
}

PeakEqualization equalize_peak_power(const Crossbar& xb) {
  const std::size_t n = xb.n();
  const RingProgrammer prog(xb, 0.0);
  const HeaterSettings dark = prog.dark_settings();
  PeakEqualization eq;
  eq.max_power.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      HeaterSettings h = dark;
      h(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = prog.aligned_power(r, c);
      eq.max_power(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          signal_matrix(xb, h)(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r));
    }
  }
  eq.target = eq.max_power.minCoeff();
  eq.scaling = (eq.target / eq.max_power.array()).matrix();
  return eq;
}

double max_uniform_scale(const Crossbar& xb, const CompileOptions& options) {
  const std::size_t n = xb.n();
  const RingProgrammer prog(xb, options.dark_detuning_nm);
  const auto ni = static_cast<Eigen::Index>(n);
  const Matrix ones = Matrix::Ones(ni, ni);
  const Matrix no_leak = Matrix::Zero(ni, ni);
  double hi = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      hi = std::min(hi, prog.drop_at(r, c, 0.0) * xb.path_gain(r, c, Direction::forward));
    }
  }
  double lo = 0.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    HeaterSettings h = prog.dark_settings();
    // Two sweeps so the column throughputs reflect the programmed rows below.
    program_pass(xb, prog, ones, mid, no_leak, h);
    const PassResult res = program_pass(xb, prog, ones, mid, no_leak, h);
    (res.high == 0 ? lo : hi) = mid;
  }
  return 0.97 * lo;
}

CompiledMatrix compile_matrix(const Crossbar& xb, const Matrix& target, const CompileOptions& options) {
  const auto n = static_cast<Eigen::Index>(xb.n());
  if (target.rows() > n || target.cols() > n) {
    throw ShapeError("target matrix " + std::to_string(target.rows()) + "x" +
                     std::to_string(target.cols()) + " does not fit the crossbar");
  }
  if (target.size() > 0 && (!target.allFinite() || target.minCoeff() < 0.0 || target.maxCoeff() > 1.0)) {
    throw EncodingError("transmittance targets must lie in [0, 1]");
  }
  Matrix w = Matrix::Zero(n, n);
  w.topLeftCorner(target.rows(), target.cols()) = target;

  const RingProgrammer prog(xb, options.dark_detuning_nm);
  CompiledMatrix out;
  out.transmittances = w;
  out.scale = options.scale > 0.0 ? options.scale : max_uniform_scale(xb, options);
  out.heater_settings = prog.dark_settings();
  Matrix leak = Matrix::Zero(n, n);
  const int passes = std::max(1, options.passes);
  for (int pass = 0; pass < passes; ++pass) {
    const PassResult res = program_pass(xb, prog, w, out.scale, leak, out.heater_settings);
    out.clamped_low = res.low;
    out.clamped_high = res.high;
    leak = transfer_matrix(xb, out.heater_settings, Direction::forward) -
           signal_matrix(xb, out.heater_settings);
  }
  return out;
}

double calibrate_normalization(const Crossbar& xb, Direction direction, const CompileOptions& options) {
  const auto n = static_cast<Eigen::Index>(xb.n());
  const CompiledMatrix identity = compile_matrix(xb, Matrix::Identity(n, n), options);
  return measure_matrix(xb, identity.heater_settings, direction).diagonal().mean();
}

void write_encoding_sidecar(std::ostream& out, const AffineEncoding& enc) {
  const auto old = out.precision(17);
  out << "scale,offset\n" << enc.scale << ',' << enc.offset << '\n';
  out.precision(old);
}

}  // namespace xbar
