#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>

#include "xbar/crossbar.hpp"

namespace xbar {

enum class EncodingAxis { matrix, vector };

/// Min-max map of signed values onto [0, 1]: value = scale * encoded + offset.
struct AffineEncoding {
  double scale = 1.0;
  double offset = 0.0;
  EncodingAxis axis = EncodingAxis::matrix;

  bool is_identity() const { return scale == 1.0 && offset == 0.0; }
};

template <typename T>
struct Encoded {
  T values;
  AffineEncoding encoding;
};

Encoded<Matrix> encode_signed(const Matrix& m);
Encoded<Vector> encode_signed(const Vector& v);

/// Inputs already in [0, 1] pass through unchanged; anything else is min-max encoded.
Encoded<Vector> encode_input(const Vector& v);

/// Signed result of the MVM from the encoded result y' = W' x'.
///
/// `n` is the number of real input elements and `sum_x_prime` their encoded sum.
/// `ones_pass` is W' applied to an all-ones input over those same elements; it
/// is required whenever the vector offset is non-zero.
Vector decode_output(const Vector& y_prime, const AffineEncoding& matrix_enc,
                     const AffineEncoding& vector_enc, double sum_x_prime, std::size_t n,
                     const std::optional<Vector>& ones_pass = std::nullopt);

/// Smallest heater power that puts the ring's resonance on `target_nm`.
/// Throws InfeasibleError when the shift needs more than the heater's maximum.
double align_resonance(const RingDevice& ring, double target_nm);

struct PeakEqualization {
  Matrix max_power;  // (row, column): element power with only this ring on resonance
  double target = 0.0;  // minimum of the maxima
  Matrix scaling;       // target / max_power, all <= 1
};

/// Per-ring maximum coupled power and the common level every ring can reach.
PeakEqualization equalize_peak_power(const Crossbar& xb);

struct CompileOptions {
  // Largest detuning used for analog values; 0 selects half the smallest
  // channel gap. Zero elements are parked in the widest gap instead.
  double dark_detuning_nm = 0.0;
  int passes = 4;
  // Element gain: programmed element (c, r) targets scale * w(c, r) in detected
  // power per launched channel power. 0 selects max_uniform_scale.
  double scale = 0.0;
};

/// Ring heater state for a non-negative target matrix.
struct CompiledMatrix {
  Matrix transmittances;  // forward-indexed (column, row), in [0, 1]
  AffineEncoding encoding;
  HeaterSettings heater_settings;
  double scale = 0.0;
  int clamped_low = 0;   // elements below the dark floor after crosstalk compensation
  int clamped_high = 0;  // elements above what the ring can couple
};

/// Per-ring programming helper exposing the alignment and the dark state.
class RingProgrammer {
 public:
  RingProgrammer(const Crossbar& xb, double dark_detuning_nm);

  double aligned_power(std::size_t r, std::size_t c) const;
  /// Heater power for a detuning of `detuning_nm` away from the ring's channel.
  double heater_for_detuning(std::size_t r, std::size_t c, double detuning_nm) const;
  /// Heater power parking the ring in the middle of the widest channel gap.
  double dark_power(std::size_t r, std::size_t c) const;
  double dark_detuning() const { return dark_; }
  /// Drop transmittance at the ring's own channel for a detuning.
  double drop_at(std::size_t r, std::size_t c, double detuning_nm) const;
  /// Detuning in [0, dark] realising drop transmittance `drop` (clamped).
  double detuning_for_drop(std::size_t r, std::size_t c, double drop) const;
  /// All rings parked at their dark state.
  HeaterSettings dark_settings() const;

 private:
  const Crossbar* xb_;
  double dark_;
  Matrix aligned_;
  Matrix parked_;
};

/// Largest element gain for which an all-ones matrix is programmable.
double max_uniform_scale(const Crossbar& xb, const CompileOptions& options = {});

/// Programs `target` (forward-indexed, entries in [0, 1], at most n x n;
/// smaller matrices occupy the top-left corner) with crosstalk compensation.
CompiledMatrix compile_matrix(const Crossbar& xb, const Matrix& target,
                              const CompileOptions& options = {});

/// Detected power of a unit element: mean diagonal of the measured matrix of
/// the identity program at the given scale.
double calibrate_normalization(const Crossbar& xb, Direction direction,
                               const CompileOptions& options = {});

void write_encoding_sidecar(std::ostream& out, const AffineEncoding& enc);

}  // namespace xbar
