#include "xbar/crossbar.hpp"

#include <cmath>
#include <ostream>
#include <random>
#include <string>

#include "xbar/errors.hpp"

namespace xbar {

namespace {

double db_to_linear(double db) { return std::pow(10.0, -db / 10.0); }

std::size_t index(std::size_t r, std::size_t c, std::size_t n) { return r * n + c; }

Crossbar build_with(const CrossbarSpec& spec, CrossbarTopology topology) {
  spec.ring.validate();
  spec.mzi.validate();
  const std::size_t n = spec.n;
  if (spec.channels.size() != n) {
    throw ValidationError("channel plan has " + std::to_string(spec.channels.size()) +
                          " wavelengths for a " + std::to_string(n) + "x" + std::to_string(n) +
                          " crossbar");
  }
  spec.channels.validate(fsr_of(spec.ring, spec.channels.reference));

  Crossbar xb;
  xb.topology = std::move(topology);
  xb.channels = spec.channels;
  xb.laser_power_mw = spec.laser_power_mw;

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> fab(0.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  std::normal_distribution<double> port(0.0, 1.0);

  xb.grid.n = n;
  xb.grid.rings.reserve(n * n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      RingDevice ring = spec.ring;
      ring.effective_index_at_ref =
          effective_index_for_resonance(spec.ring, spec.channels.channels[r] - spec.ring_bias_nm);
      ring.fabrication_detuning_nm = spec.fabrication_sigma_nm * fab(rng);
      xb.grid.rings.push_back(ring);
    }
  }
  for (auto* bank : {&xb.forward_mzis, &xb.backward_mzis}) {
    for (std::size_t i = 0; i < n; ++i) {
      MziDevice mzi = spec.mzi;
      if (spec.random_mzi_phases) mzi.shifter.initial_phase = phase(rng);
      bank->push_back(mzi);
    }
  }
  for (auto* losses : {&xb.ports.forward_in_db, &xb.ports.forward_out_db, &xb.ports.backward_in_db,
                       &xb.ports.backward_out_db}) {
    for (std::size_t i = 0; i < n; ++i) {
      losses->push_back(std::max(0.0, spec.port_loss_db + spec.port_loss_sigma_db * port(rng)));
    }
  }
  return xb;
}

}  // namespace

const char* to_string(Direction d) { return d == Direction::forward ? "forward" : "backward"; }

const char* to_string(TopologyVariant v) {
  return v == TopologyVariant::symmetric ? "symmetric" : "legacy_asymmetric";
}

int CrossbarTopology::crossings(std::size_t r, std::size_t c, Direction d) const {
  return d == Direction::forward ? forward_crossings[index(r, c, n)]
                                 : backward_crossings[index(r, c, n)];
}

int CrossbarTopology::segments(std::size_t r, std::size_t c, Direction d) const {
  return d == Direction::forward ? forward_segments[index(r, c, n)]
                                 : backward_segments[index(r, c, n)];
}

double CrossbarTopology::path_loss_db(std::size_t r, std::size_t c, Direction d) const {
  const double length_cm = segments(r, c, d) * losses.segment_length_um * 1e-4;
  return crossings(r, c, d) * losses.crossing_loss_db + length_cm * losses.propagation_loss_db_per_cm;
}

double CrossbarTopology::path_transmission(std::size_t r, std::size_t c, Direction d) const {
  return db_to_linear(path_loss_db(r, c, d));
}

CrossbarTopology CrossbarTopology::symmetric(std::size_t n, const LossSpec& losses) {
  if (n == 0) throw ValidationError("crossbar size must be at least 1");
  CrossbarTopology t;
  t.n = n;
  t.variant = TopologyVariant::symmetric;
  t.losses = losses;
  const int full = static_cast<int>(2 * n);
  t.forward_crossings.assign(n * n, losses.omit_output_crossings ? full - 2 : full);
  t.backward_crossings.assign(n * n, full);
  t.forward_segments.assign(n * n, static_cast<int>(n + 1));
  t.backward_segments.assign(n * n, static_cast<int>(n + 1));
  return t;
}

CrossbarTopology CrossbarTopology::legacy_asymmetric(std::size_t n, const LossSpec& losses) {
  if (n == 0) throw ValidationError("crossbar size must be at least 1");
  CrossbarTopology t;
  t.n = n;
  t.variant = TopologyVariant::legacy_asymmetric;
  t.losses = losses;
  const int m = static_cast<int>(n);
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < m; ++c) {
      // Row r crosses the c column guides before its ring, then the column
      // crosses the rows below it. Backward light crosses the remaining
      // columns and the rows above, plus two more when it turns back under
      // the diagonal.
      t.forward_crossings.push_back(c + (m - 1 - r));
      t.backward_crossings.push_back((m - 1 - c) + r + (r >= c ? 2 : 0));
      const int length = (c + 1) + (m - r);
      t.forward_segments.push_back(length);
      t.backward_segments.push_back(length);
    }
  }
  return t;
}

double PortLosses::input(std::size_t port, Direction d) const {
  return d == Direction::forward ? forward_in_db[port] : backward_in_db[port];
}

double PortLosses::output(std::size_t port, Direction d) const {
  return d == Direction::forward ? forward_out_db[port] : backward_out_db[port];
}

double Crossbar::path_gain(std::size_t r, std::size_t c, Direction d) const {
  const std::size_t in = d == Direction::forward ? r : c;
  const std::size_t out = d == Direction::forward ? c : r;
  return topology.path_transmission(r, c, d) *
         db_to_linear(ports.input(in, d) + ports.output(out, d));
}

Crossbar build_symmetric(const CrossbarSpec& spec) {
  return build_with(spec, CrossbarTopology::symmetric(spec.n, spec.losses));
}

Crossbar build_legacy_asymmetric(const CrossbarSpec& spec) {
  return build_with(spec, CrossbarTopology::legacy_asymmetric(spec.n, spec.losses));
}

Crossbar build_crossbar(const CrossbarSpec& spec) {
  return spec.variant == TopologyVariant::symmetric ? build_symmetric(spec)
                                                    : build_legacy_asymmetric(spec);
}

void check_heaters(const Crossbar& xb, const HeaterSettings& heaters) {
  const auto n = static_cast<Eigen::Index>(xb.n());
  if (heaters.rows() != n || heaters.cols() != n) {
    throw ShapeError("heater settings are " + std::to_string(heaters.rows()) + "x" +
                     std::to_string(heaters.cols()) + ", crossbar is " + std::to_string(n) + "x" +
                     std::to_string(n));
  }
}

ResponseTable::ResponseTable(const Crossbar& xb, const HeaterSettings& heaters)
    : n_(xb.n()), channels_(xb.channels.size()) {
  check_heaters(xb, heaters);
  drop_.resize(n_ * n_ * channels_);
  through_.resize(drop_.size());
  for (std::size_t r = 0; r < n_; ++r) {
    for (std::size_t c = 0; c < n_; ++c) {
      const auto& ring = xb.grid.at(r, c);
      const double resonance = ring.resonance_nm(heaters(static_cast<Eigen::Index>(r),
                                                         static_cast<Eigen::Index>(c)));
      for (std::size_t k = 0; k < channels_; ++k) {
        const double lambda = xb.channels.channels[k];
        const auto t = ring_response_at_detuning(ring, lambda, lambda - resonance);
        drop_[index(r, c, k)] = t.drop;
        through_[index(r, c, k)] = t.through;
      }
    }
  }
}

OpticalField propagate(const OpticalField& field, const Crossbar& xb,
                       const HeaterSettings& heaters, Direction direction) {
  return propagate(field, xb, ResponseTable(xb, heaters), direction);
}

OpticalField propagate(const OpticalField& field, const Crossbar& xb,
                       const ResponseTable& responses, Direction direction) {
  const std::size_t n = xb.n();
  const std::size_t channels = xb.channels.size();
  if (static_cast<std::size_t>(field.power.rows()) != n ||
      static_cast<std::size_t>(field.power.cols()) != channels) {
    throw ShapeError("optical field must be ports x channels");
  }
  if ((field.power.array() < 0.0).any()) throw EncodingError("optical power must be non-negative");

  OpticalField out = OpticalField::zeros(n, channels);
  for (std::size_t in = 0; in < n; ++in) {
    for (std::size_t k = 0; k < channels; ++k) {
      double running = field.power(static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(k));
      if (running == 0.0) continue;
      if (direction == Direction::forward) {
        const std::size_t r = in;
        // Along row r, each ring drops part of the channel into its column.
        for (std::size_t c = 0; c < n; ++c) {
          double dropped = running * responses.drop(r, c, k);
          running *= responses.through(r, c, k);
          for (std::size_t below = r + 1; below < n; ++below) {
            dropped *= responses.through(below, c, k);
          }
          out.power(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)) +=
              dropped * xb.path_gain(r, c, direction);
        }
      } else {
        const std::size_t c = in;
        // Up column c from the last row, each ring drops into its row.
        for (std::size_t step = 0; step < n; ++step) {
          const std::size_t r = n - 1 - step;
          double dropped = running * responses.drop(r, c, k);
          running *= responses.through(r, c, k);
          for (std::size_t left = c; left-- > 0;) {
            dropped *= responses.through(r, left, k);
          }
          out.power(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) +=
              dropped * xb.path_gain(r, c, direction);
        }
      }
    }
  }
  return out;
}

Matrix transfer_matrix(const Crossbar& xb, const HeaterSettings& heaters, Direction direction) {
  return transfer_matrix(xb, ResponseTable(xb, heaters), direction);
}

Matrix transfer_matrix(const Crossbar& xb, const ResponseTable& responses, Direction direction) {
  const std::size_t n = xb.n();
  const auto channels = xb.channels.size();
  Matrix t(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t in = 0; in < n; ++in) {
    OpticalField probe = OpticalField::zeros(n, channels);
    probe.power.row(static_cast<Eigen::Index>(in)).setOnes();
    const OpticalField out = propagate(probe, xb, responses, direction);
    t.col(static_cast<Eigen::Index>(in)) = out.power.rowwise().sum();
  }
  return t;
}

Vector encode_inputs(const Crossbar& xb, const Vector& x, Direction direction) {
  const auto n = static_cast<Eigen::Index>(xb.n());
  if (x.size() != n) throw ShapeError("input vector length does not match crossbar size");
  const auto& bank = xb.mzis(direction);
  Vector p(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = x(i);
    if (!(v >= 0.0 && v <= 1.0)) {
      throw EncodingError("input element " + std::to_string(i) + " = " + std::to_string(v) +
                          " is outside [0, 1]; encode signed values first");
    }
    const auto& mzi = bank[static_cast<std::size_t>(i)];
    p(i) = xb.laser_power_mw * mzi_transmittance(mzi, mzi_power_for(mzi, v));
  }
  return p;
}

namespace {

Vector run_mvm(const Crossbar& xb, const HeaterSettings& heaters, const Vector& x,
               Direction direction, double normalization) {
  const Vector p = encode_inputs(xb, x, direction);
  OpticalField field = OpticalField::zeros(xb.n(), xb.channels.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) field.power.row(i).setConstant(p(i));
  const OpticalField out = propagate(field, xb, heaters, direction);
  return out.power.rowwise().sum() / normalization;
}

}  // namespace

Vector forward_mvm(const Crossbar& xb, const HeaterSettings& heaters, const Vector& x,
                   double normalization) {
  return run_mvm(xb, heaters, x, Direction::forward, normalization);
}

Vector backward_mvm(const Crossbar& xb, const HeaterSettings& heaters, const Vector& sigma,
                    double normalization) {
  return run_mvm(xb, heaters, sigma, Direction::backward, normalization);
}

ProgrammedCrossbar::ProgrammedCrossbar(const Crossbar& xb, HeaterSettings heaters)
    : xb_(&xb), heaters_(std::move(heaters)) {
  const ResponseTable responses(xb, heaters_);
  forward_ = transfer_matrix(xb, responses, Direction::forward);
  backward_ = transfer_matrix(xb, responses, Direction::backward);
}

Vector ProgrammedCrossbar::detect(const Vector& x, Direction d) const {
  return transfer(d) * encode_inputs(*xb_, x, d);
}

Matrix path_loss_report(const CrossbarTopology& topology, Direction direction) {
  const auto n = static_cast<Eigen::Index>(topology.n);
  Matrix m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      m(r, c) = topology.path_loss_db(static_cast<std::size_t>(r), static_cast<std::size_t>(c), direction);
    }
  }
  return m;
}

double loss_variance(const Matrix& losses_db) {
  if (losses_db.size() == 0) return 0.0;
  const Eigen::ArrayXXd d = losses_db.array() - losses_db(0, 0);
  const double count = static_cast<double>(d.size());
  const double sum = d.sum();
  return std::max(0.0, (d.square().sum() - sum * sum / count) / count);
}

Matrix measure_matrix(const Crossbar& xb, const HeaterSettings& heaters, Direction direction) {
  const std::size_t n = xb.n();
  const ResponseTable responses(xb, heaters);
  const auto& bank = xb.mzis(direction);
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t probe = 0; probe < n; ++probe) {
    OpticalField field = OpticalField::zeros(n, xb.channels.size());
    for (std::size_t i = 0; i < n; ++i) {
      const auto& mzi = bank[i];
      const double setting = i == probe ? mzi_power_for(mzi, 1.0) : mzi_null_power(mzi);
      field.power.row(static_cast<Eigen::Index>(i))
          .setConstant(xb.laser_power_mw * mzi_transmittance(mzi, setting));
    }
    m.col(static_cast<Eigen::Index>(probe)) =
        propagate(field, xb, responses, direction).power.rowwise().sum();
  }
  return m;
}

void write_matrix_csv(std::ostream& out, const Matrix& m) {
  const auto old = out.precision(17);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << m(r, c);
    out << '\n';
  }
  out.precision(old);
}

}  // namespace xbar
