#include "xbar/lut.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

#include "xbar/compiler.hpp"
#include "xbar/errors.hpp"

namespace xbar {

namespace {

constexpr double kMziSpanMw = 19.7 - 3.3;
constexpr double kMrrSpanMw = 27.8 - 22.1;

std::vector<double> linspace(PowerRange range, std::size_t steps) {
  if (steps < 2) throw RangeError("LUT axes need at least two points");
  std::vector<double> v(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    v[i] = range.first + (range.second - range.first) * static_cast<double>(i) /
                             static_cast<double>(steps - 1);
  }
  return v;
}

// Segment index i with axis[i] <= x <= axis[i + 1], x clamped to the axis.
std::pair<std::size_t, double> locate(const std::vector<double>& axis, double x) {
  x = std::clamp(x, axis.front(), axis.back());
  auto it = std::upper_bound(axis.begin(), axis.end(), x);
  std::size_t i = it == axis.begin() ? 0 : static_cast<std::size_t>(it - axis.begin()) - 1;
  i = std::min(i, axis.size() - 2);
  const double frac = (x - axis[i]) / (axis[i + 1] - axis[i]);
  return {i, frac};
}

AxisInverse invert_line(const std::vector<double>& axis, const std::vector<double>& values, double target) {
  if (target <= values.front()) return {axis.front(), target < values.front()};
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    const double lo = values[i], hi = values[i + 1];
    if (lo <= target && target <= hi) {
      const double frac = hi > lo ? (target - lo) / (hi - lo) : 0.0;
      return {axis[i] + frac * (axis[i + 1] - axis[i]), false};
    }
  }
  const auto best = std::max_element(values.begin(), values.end()) - values.begin();
  return {axis[static_cast<std::size_t>(best)], true};
}

void put_double(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  std::array<char, 8> bytes;
  for (int i = 0; i < 8; ++i) bytes[static_cast<std::size_t>(i)] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(bytes.data(), 8);
}

double get_double(std::istream& in) {
  std::array<unsigned char, 8> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), 8)) throw FormatError("truncated binary LUT");
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | bytes[static_cast<std::size_t>(i)];
  double v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

bool uniform(const std::vector<double>& axis) {
  const double step = (axis.back() - axis.front()) / static_cast<double>(axis.size() - 1);
  for (std::size_t i = 0; i < axis.size(); ++i) {
    const double expected = axis.front() + step * static_cast<double>(i);
    if (std::abs(axis[i] - expected) > 1e-9 * std::max(1.0, std::abs(expected))) return false;
  }
  return true;
}

}  // namespace

void CalibrationLUT::validate() const {
  auto increasing = [](const std::vector<double>& a) {
    return a.size() >= 2 && std::adjacent_find(a.begin(), a.end(), std::greater_equal<>()) == a.end();
  };
  if (!increasing(mzi_powers) || !increasing(mrr_powers)) {
    throw ValidationError("LUT axes must be strictly increasing with at least two points");
  }
  if (output_power.rows() != static_cast<Eigen::Index>(mzi_powers.size()) ||
      output_power.cols() != static_cast<Eigen::Index>(mrr_powers.size())) {
    throw ShapeError("LUT grid does not match its axes");
  }
  if ((output_power.array() < 0.0).any()) throw ValidationError("LUT powers must be non-negative");
}

double CalibrationLUT::lookup(double mzi_mw, double mrr_mw) const {
  const auto [i, fi] = locate(mzi_powers, mzi_mw);
  const auto [j, fj] = locate(mrr_powers, mrr_mw);
  const auto ii = static_cast<Eigen::Index>(i);
  const auto jj = static_cast<Eigen::Index>(j);
  return (1.0 - fi) * (1.0 - fj) * output_power(ii, jj) + fi * (1.0 - fj) * output_power(ii + 1, jj) +
         (1.0 - fi) * fj * output_power(ii, jj + 1) + fi * fj * output_power(ii + 1, jj + 1);
}

double CalibrationLUT::full_scale() const {
  return output_power(output_power.rows() - 1, output_power.cols() - 1);
}

LutWindow default_lut_window(const Crossbar& xb, std::size_t r, std::size_t c, Direction direction) {
  const auto& mzi = xb.mzis(direction)[direction == Direction::forward ? r : c];
  const auto& ring = xb.grid.at(r, c);
  const double null = mzi_null_power(mzi);
  double aligned = align_resonance(ring, xb.channels.channels[r]);
  if (aligned < kMrrSpanMw) {
    // Approach the channel from the blue on the next resonance order.
    aligned += fsr_of(ring, xb.channels.channels[r]) / ring.resonance_shift_per_mw;
  }
  return {{null, null + kMziSpanMw}, {aligned - kMrrSpanMw, aligned}};
}

CalibrationLUT build_lut(const Crossbar& xb, std::size_t r, std::size_t c, const LutWindow& window,
                         Direction direction, const HeaterSettings& background,
                         const LutBuildOptions& options) {
  check_heaters(xb, background);
  const std::size_t n = xb.n();
  if (r >= n || c >= n) throw ShapeError("LUT ring index outside the crossbar");
  CalibrationLUT lut;
  lut.direction = direction;
  lut.mzi_powers = linspace(window.mzi, options.mzi_steps);
  lut.mrr_powers = linspace(window.mrr, options.mrr_steps);
  lut.output_power.resize(static_cast<Eigen::Index>(options.mzi_steps),
                          static_cast<Eigen::Index>(options.mrr_steps));

  const std::size_t in_port = direction == Direction::forward ? r : c;
  const std::size_t out_port = direction == Direction::forward ? c : r;
  const auto& mzi = xb.mzis(direction)[in_port];
  NoiseStream rng(options.noise.seed, (r * n + c) * 2 + (direction == Direction::forward ? 0 : 1));

  HeaterSettings heaters = background;
  for (std::size_t j = 0; j < lut.mrr_powers.size(); ++j) {
    heaters(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = lut.mrr_powers[j];
    OpticalField field = OpticalField::zeros(n, xb.channels.size());
    field.power(static_cast<Eigen::Index>(in_port), static_cast<Eigen::Index>(r)) = xb.laser_power_mw;
    const double unit = propagate(field, xb, heaters, direction).power.row(static_cast<Eigen::Index>(out_port)).sum();
    for (std::size_t i = 0; i < lut.mzi_powers.size(); ++i) {
      const double clean = unit * mzi_transmittance(mzi, lut.mzi_powers[i]);
      Vector sample(1);
      sample(0) = clean;
      const Vector avg = time_average([&] { return perturb(sample, options.noise, rng); },
                                      std::max(1, options.repeats));
      lut.output_power(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = avg(0);
    }
  }
  return lut;
}

AxisInverse invert_mzi_axis(const CalibrationLUT& lut, double fraction) {
  const auto top = static_cast<Eigen::Index>(lut.mrr_powers.size() - 1);
  std::vector<double> line(lut.mzi_powers.size());
  for (std::size_t i = 0; i < line.size(); ++i) line[i] = lut.output_power(static_cast<Eigen::Index>(i), top);
  return invert_line(lut.mzi_powers, line, fraction * lut.full_scale());
}

AxisInverse invert_mrr_axis(const CalibrationLUT& lut, double fraction) {
  const auto top = static_cast<Eigen::Index>(lut.mzi_powers.size() - 1);
  std::vector<double> line(lut.mrr_powers.size());
  for (std::size_t j = 0; j < line.size(); ++j) line[j] = lut.output_power(top, static_cast<Eigen::Index>(j));
  return invert_line(lut.mrr_powers, line, fraction * lut.full_scale());
}

LutProduct lut_multiply(const CalibrationLUT& lut, double x, double w, double normalization) {
  const AxisInverse px = invert_mzi_axis(lut, x);
  const AxisInverse pw = invert_mrr_axis(lut, w);
  const double norm = normalization > 0.0 ? normalization : lut.full_scale();
  return {lut.lookup(px.power, pw.power) / norm, px.clamped || pw.clamped};
}

AsymmetryBias compensate_asymmetry(const CalibrationLUT& forward, const CalibrationLUT& backward) {
  if (forward.output_power.rows() != backward.output_power.rows() ||
      forward.output_power.cols() != backward.output_power.cols()) {
    throw ShapeError("forward and backward LUTs must share a grid");
  }
  const double norm = forward.full_scale();
  const double gap = ((forward.output_power - backward.output_power) / norm).mean();
  AsymmetryBias bias;
  if (gap > 0.0) {
    bias.backward = gap;
  } else {
    bias.forward = -gap;
  }
  return bias;
}

void write_lut_csv(std::ostream& out, const CalibrationLUT& lut) {
  const auto old = out.precision(17);
  out << "mzi_mw,mrr_mw,power\n";
  for (std::size_t i = 0; i < lut.mzi_powers.size(); ++i) {
    for (std::size_t j = 0; j < lut.mrr_powers.size(); ++j) {
      out << lut.mzi_powers[i] << ',' << lut.mrr_powers[j] << ','
          << lut.output_power(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) << '\n';
    }
  }
  out.precision(old);
}

CalibrationLUT read_lut_csv(std::istream& in, Direction direction) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line.rfind("mzi_mw,mrr_mw,power", 0) != 0) {
    throw ParseError("expected header mzi_mw,mrr_mw,power", line_no);
  }
  std::vector<std::array<double, 3>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::array<double, 3> v{};
    std::istringstream ss(line);
    for (int k = 0; k < 3; ++k) {
      std::string cell;
      if (!std::getline(ss, cell, ',')) throw ParseError("expected three columns", line_no);
      try {
        std::size_t used = 0;
        v[static_cast<std::size_t>(k)] = std::stod(cell, &used);
        if (used != cell.size()) throw ParseError("bad number '" + cell + "'", line_no);
      } catch (const std::logic_error&) {
        throw ParseError("bad number '" + cell + "'", line_no);
      }
    }
    rows.push_back(v);
  }
  CalibrationLUT lut;
  lut.direction = direction;
  for (const auto& r : rows) {
    if (lut.mzi_powers.empty() || r[0] != lut.mzi_powers.back()) lut.mzi_powers.push_back(r[0]);
  }
  for (const auto& r : rows) {
    if (r[0] != rows.front()[0]) break;
    lut.mrr_powers.push_back(r[1]);
  }
  const std::size_t ni = lut.mzi_powers.size(), nj = lut.mrr_powers.size();
  if (ni * nj != rows.size()) throw FormatError("LUT CSV does not form a complete grid");
  lut.output_power.resize(static_cast<Eigen::Index>(ni), static_cast<Eigen::Index>(nj));
  for (std::size_t i = 0; i < ni; ++i) {
    for (std::size_t j = 0; j < nj; ++j) {
      const auto& r = rows[i * nj + j];
      if (r[0] != lut.mzi_powers[i] || r[1] != lut.mrr_powers[j]) {
        throw FormatError("LUT CSV rows are not in mzi-major grid order");
      }
      lut.output_power(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r[2];
    }
  }
  lut.validate();
  return lut;
}

void write_lut_binary(std::ostream& out, const CalibrationLUT& lut) {
  lut.validate();
  if (!uniform(lut.mzi_powers) || !uniform(lut.mrr_powers)) {
    throw FormatError("binary LUT layout requires uniform axes");
  }
  for (double v : {kLutMagic, kLutVersion, static_cast<double>(lut.mzi_powers.size()),
                   static_cast<double>(lut.mrr_powers.size()), lut.mzi_powers.front(),
                   lut.mzi_powers.back(), lut.mrr_powers.front(), lut.mrr_powers.back()}) {
    put_double(out, v);
  }
  for (Eigen::Index i = 0; i < lut.output_power.rows(); ++i) {
    for (Eigen::Index j = 0; j < lut.output_power.cols(); ++j) put_double(out, lut.output_power(i, j));
  }
}

CalibrationLUT read_lut_binary(std::istream& in, Direction direction) {
  std::array<double, 8> header{};
  for (auto& h : header) h = get_double(in);
  if (header[0] != kLutMagic) throw FormatError("not a binary LUT (bad magic)");
  if (header[1] != kLutVersion) throw FormatError("unsupported binary LUT version");
  const double ni = header[2], nj = header[3];
  if (!(ni >= 2 && nj >= 2) || ni != std::floor(ni) || nj != std::floor(nj) || ni > 1e7 || nj > 1e7) {
    throw FormatError("bad binary LUT dimensions");
  }
  CalibrationLUT lut;
  lut.direction = direction;
  lut.mzi_powers = linspace({header[4], header[5]}, static_cast<std::size_t>(ni));
  lut.mrr_powers = linspace({header[6], header[7]}, static_cast<std::size_t>(nj));
  lut.output_power.resize(static_cast<Eigen::Index>(ni), static_cast<Eigen::Index>(nj));
  for (Eigen::Index i = 0; i < lut.output_power.rows(); ++i) {
    for (Eigen::Index j = 0; j < lut.output_power.cols(); ++j) lut.output_power(i, j) = get_double(in);
  }
  lut.validate();
  return lut;
}

}  // namespace xbar
