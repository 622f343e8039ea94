#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "xbar/crossbar.hpp"
#include "xbar/noise.hpp"

namespace xbar {

/// Detected output power on a (MZI heater, MRR heater) grid for one ring.
struct CalibrationLUT {
  std::vector<double> mzi_powers;  // strictly increasing, mW
  std::vector<double> mrr_powers;  // strictly increasing, mW
  Matrix output_power;             // (mzi index, mrr index)
  Direction direction = Direction::forward;

  void validate() const;
  /// Bilinear interpolation; heater powers are clamped to the grid.
  double lookup(double mzi_mw, double mrr_mw) const;
  /// Output at the top corner of both windows, the full-scale product 1 x 1.
  double full_scale() const;
};

using PowerRange = std::pair<double, double>;

struct LutWindow {
  PowerRange mzi{3.3, 19.7};
  PowerRange mrr{22.1, 27.8};
};

/// Windows that sweep ring (r, c) and the MZI feeding it over the same spans
/// as the characterised chip: the MZI from its null upward by 16.4 mW and the
/// ring across the last 5.7 mW before it lands on its channel.
LutWindow default_lut_window(const Crossbar& xb, std::size_t r, std::size_t c, Direction direction);

struct LutBuildOptions {
  std::size_t mzi_steps = 64;
  std::size_t mrr_steps = 64;
  NoiseConfig noise{0.0, 1, false};
  int repeats = 1;  // time-averaged samples per grid point
};

/// Simulates the single-wavelength characterisation of ring (r, c): only the
/// port feeding it is lit, only at channel r, with every other ring taken from
/// `background` (usually parked dark).
CalibrationLUT build_lut(const Crossbar& xb, std::size_t r, std::size_t c, const LutWindow& window,
                         Direction direction, const HeaterSettings& background,
                         const LutBuildOptions& options = {});

/// Heater power along one axis realising a normalised target on the other
/// axis' top line. Searches the rising branch from low power upward.
struct AxisInverse {
  double power = 0.0;
  bool clamped = false;
};
AxisInverse invert_mzi_axis(const CalibrationLUT& lut, double fraction);
AxisInverse invert_mrr_axis(const CalibrationLUT& lut, double fraction);

struct LutProduct {
  double value = 0.0;
  bool clamped = false;
};

/// x * w estimated by programming both heaters from the table and reading it
/// back, divided by `normalization` (defaults to the table's own full scale).
LutProduct lut_multiply(const CalibrationLUT& lut, double x, double w, double normalization = 0.0);

/// Constant additive terms that bring the weaker direction up to the stronger.
struct AsymmetryBias {
  double forward = 0.0;
  double backward = 0.0;
};

/// Least-squares constant offset between the two tables, both normalised by
/// the forward full scale. Tables must share their grid.
AsymmetryBias compensate_asymmetry(const CalibrationLUT& forward, const CalibrationLUT& backward);

void write_lut_csv(std::ostream& out, const CalibrationLUT& lut);
CalibrationLUT read_lut_csv(std::istream& in, Direction direction);

/// Binary layout: eight little-endian doubles (magic, version, mzi count,
/// mrr count, mzi first, mzi last, mrr first, mrr last) followed by the
/// output grid in row-major order (mzi major). Requires uniform axes.
void write_lut_binary(std::ostream& out, const CalibrationLUT& lut);
CalibrationLUT read_lut_binary(std::istream& in, Direction direction);

inline constexpr double kLutMagic = 5002580.0;  // "LUT" as an integer
inline constexpr double kLutVersion = 1.0;

}  // namespace xbar
