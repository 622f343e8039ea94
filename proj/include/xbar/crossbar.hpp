#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "xbar/device_models.hpp"

namespace xbar {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Direction { forward, backward };
enum class TopologyVariant { symmetric, legacy_asymmetric };

const char* to_string(Direction d);
const char* to_string(TopologyVariant v);

struct LossSpec {
  double crossing_loss_db = 0.02;
  double propagation_loss_db_per_cm = 1.3;
  double segment_length_um = 150.0;
  // The fabricated 4x4 chip leaves out the two balancing crossings on the
  // forward outputs; they only add a uniform loss there.
  bool omit_output_crossings = false;
};

/// Crossing and length bookkeeping for every (row, column) optical path.
///
/// Forward light enters row r, drops at ring (r, c) and leaves column c.
/// Backward light enters column c, drops at ring (r, c) and leaves row r.
/// Both are stored row-major as [r * n + c].
struct CrossbarTopology {
  std::size_t n = 0;
  TopologyVariant variant = TopologyVariant::symmetric;
  LossSpec losses;
  std::vector<int> forward_crossings;
  std::vector<int> backward_crossings;
  std::vector<int> forward_segments;
  std::vector<int> backward_segments;

  int crossings(std::size_t r, std::size_t c, Direction d) const;
  int segments(std::size_t r, std::size_t c, Direction d) const;
  double path_loss_db(std::size_t r, std::size_t c, Direction d) const;
  double path_transmission(std::size_t r, std::size_t c, Direction d) const;

  static CrossbarTopology symmetric(std::size_t n, const LossSpec& losses);
  static CrossbarTopology legacy_asymmetric(std::size_t n, const LossSpec& losses);
};

/// n x n rings; ring (r, c) is tuned to channel r and realises element (c, r)
/// of the forward matrix.
struct RingGrid {
  std::size_t n = 0;
  std::vector<RingDevice> rings;

  RingDevice& at(std::size_t r, std::size_t c) { return rings[r * n + c]; }
  const RingDevice& at(std::size_t r, std::size_t c) const { return rings[r * n + c]; }
};

/// Heater power of every ring in mW, indexed (row, column).
using HeaterSettings = Matrix;

/// Incoherent optical power per port (rows) and channel (columns), in mW.
struct OpticalField {
  Matrix power;

  static OpticalField zeros(std::size_t ports, std::size_t channels) {
    return {Matrix::Zero(static_cast<Eigen::Index>(ports), static_cast<Eigen::Index>(channels))};
  }
  double total() const { return power.sum(); }
};

/// Everything needed to build a crossbar with perturbed devices.
struct CrossbarSpec {
  std::size_t n = 4;
  TopologyVariant variant = TopologyVariant::symmetric;
  LossSpec losses;
  WavelengthGrid channels = WavelengthGrid::experimental();
  RingDevice ring;  // couplings, loss and heater of every ring
  MziDevice mzi;
  // Natural resonance of ring (r, c) sits this far blue of channel r before
  // fabrication detuning, so alignment needs bias / shift mW of heating.
  double ring_bias_nm = 0.0;
  double fabrication_sigma_nm = 0.0;
  bool random_mzi_phases = false;
  // Per-port coupling loss: mean and spread (dB), sampled independently for
  // forward-in, forward-out, backward-in and backward-out ports.
  double port_loss_db = 0.0;
  double port_loss_sigma_db = 0.0;
  double laser_power_mw = 1.0;  // per channel, launched into every input port
  std::uint64_t seed = 1;
};

struct PortLosses {
  std::vector<double> forward_in_db, forward_out_db, backward_in_db, backward_out_db;

  double input(std::size_t port, Direction d) const;
  double output(std::size_t port, Direction d) const;
};

/// A fabricated crossbar: topology, rings, the two MZI banks and the channel plan.
struct Crossbar {
  CrossbarTopology topology;
  RingGrid grid;
  WavelengthGrid channels;
  std::vector<MziDevice> forward_mzis;
  std::vector<MziDevice> backward_mzis;
  PortLosses ports;
  double laser_power_mw = 1.0;

  std::size_t n() const { return topology.n; }
  const std::vector<MziDevice>& mzis(Direction d) const {
    return d == Direction::forward ? forward_mzis : backward_mzis;
  }
  /// Total loss from input port to output port for ring (r, c), linear.
  double path_gain(std::size_t r, std::size_t c, Direction d) const;
};

Crossbar build_symmetric(const CrossbarSpec& spec);
Crossbar build_legacy_asymmetric(const CrossbarSpec& spec);
/// Dispatches on spec.variant.
Crossbar build_crossbar(const CrossbarSpec& spec);

/// Drop / through response of every ring at every channel for one heater state.
class ResponseTable {
 public:
  ResponseTable(const Crossbar& xb, const HeaterSettings& heaters);

  double drop(std::size_t r, std::size_t c, std::size_t k) const { return drop_[index(r, c, k)]; }
  double through(std::size_t r, std::size_t c, std::size_t k) const {
    return through_[index(r, c, k)];
  }

 private:
  std::size_t index(std::size_t r, std::size_t c, std::size_t k) const {
    return (r * n_ + c) * channels_ + k;
  }
  std::size_t n_;
  std::size_t channels_;
  std::vector<double> drop_;
  std::vector<double> through_;
};

void check_heaters(const Crossbar& xb, const HeaterSettings& heaters);

/// Stage-by-stage incoherent propagation of `field` (defined on the input
/// ports of `direction`) to the output ports of the same direction.
OpticalField propagate(const OpticalField& field, const Crossbar& xb,
                       const HeaterSettings& heaters, Direction direction);
OpticalField propagate(const OpticalField& field, const Crossbar& xb,
                       const ResponseTable& responses, Direction direction);

/// Output power per unit MZI output power: out = T * in, where every input
/// port carries its launched channels at equal power. Forward T is indexed
/// (column, row), backward T is indexed (row, column).
Matrix transfer_matrix(const Crossbar& xb, const HeaterSettings& heaters, Direction direction);
Matrix transfer_matrix(const Crossbar& xb, const ResponseTable& responses, Direction direction);

/// MZI output powers (per channel) encoding `x` in [0, 1]^n on one bank.
Vector encode_inputs(const Crossbar& xb, const Vector& x, Direction direction);

/// W x (forward) or W^T sigma (backward) for non-negative inputs, divided by
/// `normalization`. Throws EncodingError on inputs outside [0, 1].
Vector forward_mvm(const Crossbar& xb, const HeaterSettings& heaters, const Vector& x,
                   double normalization = 1.0);
Vector backward_mvm(const Crossbar& xb, const HeaterSettings& heaters, const Vector& sigma,
                    double normalization = 1.0);

/// Heater state plus the cached transfer matrices of both directions.
class ProgrammedCrossbar {
 public:
  ProgrammedCrossbar(const Crossbar& xb, HeaterSettings heaters);

  const Crossbar& crossbar() const { return *xb_; }
  const HeaterSettings& heaters() const { return heaters_; }
  const Matrix& transfer(Direction d) const { return d == Direction::forward ? forward_ : backward_; }

  /// Raw detected power per output port for inputs in [0, 1].
  Vector detect(const Vector& x, Direction d) const;

 private:
  const Crossbar* xb_;
  HeaterSettings heaters_;
  Matrix forward_;
  Matrix backward_;
};

/// Per-path dB from crossings and propagation, indexed (row, column).
Matrix path_loss_report(const CrossbarTopology& topology, Direction direction);

/// Population variance of the entries, shifted by the first entry so that
/// identical values give exactly zero.
double loss_variance(const Matrix& losses_db);

/// Probes one input port at a time: that MZI at maximum transmittance, the
/// others at their null. Column p holds the detected outputs for probe p, so
/// the result is directly comparable with transfer_matrix.
Matrix measure_matrix(const Crossbar& xb, const HeaterSettings& heaters, Direction direction);

void write_matrix_csv(std::ostream& out, const Matrix& m);

}  // namespace xbar
