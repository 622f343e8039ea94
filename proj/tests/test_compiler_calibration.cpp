#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "doctest.h"
#include "xbar/backend.hpp"
#include "xbar/compiler.hpp"
#include "xbar/errors.hpp"
#include "xbar/lut.hpp"
#include "xbar/presets.hpp"

using namespace xbar;

namespace {

Matrix signed_matrix(std::mt19937_64& g, Eigen::Index rows, Eigen::Index cols, double span = 2.0) {
  std::uniform_real_distribution<double> u(-span, span);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(g);
  return m;
}

// Ideal MVM of the encoded operands followed by decoding.
Vector encoded_mvm(const Matrix& w, const Vector& x) {
  const auto we = encode_signed(w);
  const auto xe = encode_input(x);
  const Vector y_prime = we.values * xe.values;
  const Vector ones = we.values * Vector::Ones(x.size());
  return decode_output(y_prime, we.encoding, xe.encoding, xe.values.sum(), static_cast<std::size_t>(x.size()), ones);
}

CrossbarSpec reciprocal_spec() {
  CrossbarSpec s = experimental_spec(2);
  s.mzi.extinction_ratio_db = std::numeric_limits<double>::infinity();
  s.port_loss_db = 0.0;
  s.port_loss_sigma_db = 0.0;
  s.losses.omit_output_crossings = false;
  s.random_mzi_phases = false;
  return s;
}

}  // namespace

TEST_CASE("encode_signed special cases") {
  Matrix unit(2, 2);
  unit << 0.0, 0.3, 1.0, 0.7;
  const auto e = encode_signed(unit);
  CHECK(e.encoding.is_identity());
  CHECK((e.values - unit).cwiseAbs().maxCoeff() == 0.0);

  Matrix two(1, 2);
  two << -1.0, 1.0;
  const auto t = encode_signed(two);
  CHECK(t.values(0, 0) == 0.0);
  CHECK(t.values(0, 1) == 1.0);
  CHECK(t.encoding.scale == 2.0);
  CHECK(t.encoding.offset == -1.0);

  const auto flat = encode_signed(Matrix(Matrix::Constant(2, 3, -0.4)));
  CHECK(flat.values.allFinite());
  CHECK(flat.values.minCoeff() >= 0.0);
  CHECK(flat.values.maxCoeff() <= 1.0);
  CHECK((flat.encoding.scale * flat.values.array() + flat.encoding.offset - (-0.4)).abs().maxCoeff() < 1e-15);
}

TEST_CASE("decode_output with identity encodings is a pass-through") {
  const Vector y = Vector::LinSpaced(5, 0.0, 1.0);
  const AffineEncoding id;
  CHECK((decode_output(y, id, id, 2.0, 5) - y).norm() == 0.0);
}

TEST_CASE("signed matrix, non-negative vector") {
  std::mt19937_64 g(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 1000; ++t) {
    const Matrix w = signed_matrix(g, 4, 4);
    Vector x(4);
    for (int i = 0; i < 4; ++i) x(i) = u(g);
    const auto we = encode_signed(w);
    const Vector y = decode_output(we.values * x, we.encoding, AffineEncoding{}, x.sum(), 4);
    CHECK((y - w * x).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("fully signed MVM needs the all-ones pass") {
  std::mt19937_64 g(2);
  for (int t = 0; t < 1000; ++t) {
    const Matrix w = signed_matrix(g, 3, 5);
    const Vector x = signed_matrix(g, 5, 1, 3.0).col(0);
    CHECK((encoded_mvm(w, x) - w * x).cwiseAbs().maxCoeff() < 1e-12);
  }
  Vector x(2);
  x << -1.0, 1.0;
  const auto xe = encode_signed(x);
  CHECK_THROWS_AS(decode_output(Vector::Zero(2), AffineEncoding{}, xe.encoding, 1.0, 2), ProtocolError);
}

TEST_CASE("align_resonance") {
  RingDevice r = base_ring();
  CHECK(align_resonance(r, r.natural_resonance_nm()) == doctest::Approx(0.0).epsilon(1e-9));

  r.fabrication_detuning_nm = 0.2;
  const double target = 1550.6;
  const double p = align_resonance(r, target);
  const Couplings k = couplings_for_q(3.0e5, r, kReferenceNm);
  r.self_coupling_t1 = k.t1;
  r.self_coupling_t2 = k.t2;
  const auto curve = sweep_spectrum(r, target - 0.02, target + 0.02, 4001, p);
  CHECK(std::abs(measure_peak_wavelength(curve) - target) < 1e-3);

  RingDevice weak = base_ring();
  weak.shifter.max_power_mw = 1.0;
  CHECK_THROWS_AS(align_resonance(weak, weak.natural_resonance_nm() + 1.0), InfeasibleError);
}

TEST_CASE("peak power equalization") {
  SUBCASE("identical rings") {
    const Crossbar xb = build_crossbar(ideal_spec(4));
    const PeakEqualization eq = equalize_peak_power(xb);
    CHECK((eq.scaling.array() - 1.0).abs().maxCoeff() < 1e-6);
  }
  SUBCASE("a lossy ring binds") {
    Crossbar xb = build_crossbar(ideal_spec(4));
    xb.grid.at(1, 2).drop_excess_loss_db = 1.0;
    const PeakEqualization eq = equalize_peak_power(xb);
    CHECK(eq.scaling(1, 2) == doctest::Approx(1.0));
    CHECK(eq.target == doctest::Approx(eq.max_power(1, 2)));
    CHECK(eq.scaling(0, 0) == doctest::Approx(std::pow(10.0, -0.1)).epsilon(1e-6));
  }
  SUBCASE("random losses") {
    Crossbar xb = build_crossbar(simulation_spec(4, 3.0e5));
    std::mt19937_64 g(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& ring : xb.grid.rings) ring.drop_excess_loss_db = u(g);
    const PeakEqualization eq = equalize_peak_power(xb);
    const Matrix equalized = eq.max_power.cwiseProduct(eq.scaling);
    CHECK((equalized.array() / eq.target - 1.0).abs().maxCoeff() < 1e-6);
    CHECK(eq.scaling.maxCoeff() <= 1.0);
  }
}

TEST_CASE("compiled matrices report clamping") {
  const Crossbar xb = build_crossbar(simulation_spec(4, 3.0e5));
  const CompiledMatrix cm = compile_matrix(xb, Matrix::Constant(4, 4, 0.5));
  CHECK(cm.clamped_low == 0);
  CHECK(cm.clamped_high == 0);
  CHECK(cm.heater_settings.rows() == 4);
  CHECK_THROWS(compile_matrix(xb, Matrix::Constant(4, 4, 1.5)));
  CHECK_THROWS(compile_matrix(xb, Matrix::Constant(5, 5, 0.5)));
}

TEST_CASE("smaller matrices sit in the top-left corner") {
  const Crossbar xb = build_crossbar(ideal_spec(4));
  CompileOptions opts;
  opts.scale = max_uniform_scale(xb, opts);
  const double k = calibrate_normalization(xb, Direction::forward, opts);
  Matrix w(2, 3);
  w << 0.2, 0.4, 0.6, 0.8, 1.0, 0.1;
  const CompiledMatrix cm = compile_matrix(xb, w, opts);
  const Matrix m = measure_matrix(xb, cm.heater_settings, Direction::forward) / k;
  CHECK((m.topLeftCorner(2, 3) - w).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(m.bottomRows(2).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("LUT corners match direct simulation") {
  const Crossbar xb = build_crossbar(experimental_spec(1));
  const HeaterSettings dark = RingProgrammer(xb, 0.0).dark_settings();
  const std::size_t r = 1, c = 2;
  const LutWindow win = default_lut_window(xb, r, c, Direction::forward);
  LutBuildOptions opts;
  opts.mzi_steps = 8;
  opts.mrr_steps = 8;
  const CalibrationLUT lut = build_lut(xb, r, c, win, Direction::forward, dark, opts);
  for (double mzi : {win.mzi.first, win.mzi.second}) {
    for (double mrr : {win.mrr.first, win.mrr.second}) {
      HeaterSettings h = dark;
      h(1, 2) = mrr;
      OpticalField f = OpticalField::zeros(4, 4);
      f.power(1, 1) = xb.laser_power_mw;
      const double direct =
          propagate(f, xb, h, Direction::forward).power.row(2).sum() * mzi_transmittance(xb.forward_mzis[1], mzi);
      CHECK(lut.lookup(mzi, mrr) == doctest::Approx(direct).epsilon(1e-12));
    }
  }
  CHECK(win.mzi.second - win.mzi.first == doctest::Approx(16.4));
  CHECK(win.mrr.second - win.mrr.first == doctest::Approx(5.7));
}

TEST_CASE("LUT directions in the reciprocal model") {
  Crossbar xb = build_crossbar(reciprocal_spec());
  const HeaterSettings dark = RingProgrammer(xb, 0.0).dark_settings();
  const LutWindow win = default_lut_window(xb, 2, 3, Direction::forward);
  const CalibrationLUT f = build_lut(xb, 2, 3, win, Direction::forward, dark);
  const CalibrationLUT b = build_lut(xb, 2, 3, win, Direction::backward, dark);
  CHECK((f.output_power - b.output_power).cwiseAbs().maxCoeff() < 1e-9 * f.full_scale());

  xb.ports.backward_in_db[3] += 0.5;
  const CalibrationLUT lossy = build_lut(xb, 2, 3, win, Direction::backward, dark);
  CHECK((lossy.output_power - std::pow(10.0, -0.05) * f.output_power).cwiseAbs().maxCoeff() < 1e-9 * f.full_scale());
}

TEST_CASE("LUT products") {
  const Crossbar xb = build_crossbar(experimental_spec(1));
  const HeaterSettings dark = RingProgrammer(xb, 0.0).dark_settings();
  const CalibrationLUT lut =
      build_lut(xb, 0, 1, default_lut_window(xb, 0, 1, Direction::forward), Direction::forward, dark);
  CHECK(lut_multiply(lut, 1.0, 1.0).value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(lut_multiply(lut, 0.0, 0.7).value) < 0.01);
  CHECK(std::abs(lut_multiply(lut, 0.7, 0.0).value) < 0.01);

  std::mt19937_64 g(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const double x = u(g), w = u(g);
    worst = std::max(worst, std::abs(lut_multiply(lut, x, w).value - x * w));
  }
  CHECK(worst < 0.02);
}

TEST_CASE("asymmetry compensation") {
  const Crossbar xb = build_crossbar(experimental_spec(1));
  const HeaterSettings dark = RingProgrammer(xb, 0.0).dark_settings();
  const CalibrationLUT f =
      build_lut(xb, 3, 0, default_lut_window(xb, 3, 0, Direction::forward), Direction::forward, dark);

  const AsymmetryBias same = compensate_asymmetry(f, f);
  CHECK(same.forward == 0.0);
  CHECK(same.backward == 0.0);

  CalibrationLUT lower = f;
  lower.output_power.array() -= 0.1 * f.full_scale();
  const AsymmetryBias gap = compensate_asymmetry(f, lower);
  CHECK(gap.backward == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(gap.forward == 0.0);

  const CalibrationLUT b =
      build_lut(xb, 3, 0, default_lut_window(xb, 3, 0, Direction::backward), Direction::backward, dark);
  const AsymmetryBias real = compensate_asymmetry(f, b);
  const double fs = f.full_scale();
  // The bias is the least-squares constant, so the mean squared gap cannot grow.
  const double before = ((f.output_power - b.output_power) / fs).array().square().mean();
  const double after =
      ((f.output_power / fs).array() + real.forward - (b.output_power / fs).array() - real.backward).square().mean();
  CHECK(after <= before + 1e-15);
  CHECK(real.forward * real.backward == 0.0);
}

TEST_CASE("LUT CSV and binary round trips") {
  const Crossbar xb = build_crossbar(experimental_spec(1));
  const HeaterSettings dark = RingProgrammer(xb, 0.0).dark_settings();
  LutBuildOptions o;
  o.mzi_steps = 5;
  o.mrr_steps = 7;
  const CalibrationLUT lut =
      build_lut(xb, 0, 0, default_lut_window(xb, 0, 0, Direction::forward), Direction::forward, dark, o);

  std::stringstream csv;
  write_lut_csv(csv, lut);
  const CalibrationLUT back = read_lut_csv(csv, Direction::forward);
  CHECK(back.mzi_powers == lut.mzi_powers);
  CHECK(back.mrr_powers == lut.mrr_powers);
  CHECK((back.output_power - lut.output_power).cwiseAbs().maxCoeff() == 0.0);

  std::stringstream bin(std::ios::in | std::ios::out | std::ios::binary);
  write_lut_binary(bin, lut);
  const CalibrationLUT bb = read_lut_binary(bin, Direction::forward);
  CHECK((bb.output_power - lut.output_power).cwiseAbs().maxCoeff() == 0.0);
  CHECK(bb.mrr_powers.back() == lut.mrr_powers.back());

  std::istringstream bad("mzi_mw,mrr_mw,power\n1,2,x\n");
  CHECK_THROWS_AS(read_lut_csv(bad, Direction::forward), ParseError);
  std::istringstream partial("mzi_mw,mrr_mw,power\n1,2,3\n1,3,4\n2,2,5\n");
  CHECK_THROWS_AS(read_lut_csv(partial, Direction::forward), FormatError);
  std::istringstream junk(std::string(64, '\0'));
  CHECK_THROWS_AS(read_lut_binary(junk, Direction::forward), FormatError);
}

TEST_CASE("photonic backend decodes signed products") {
  auto xb = std::make_shared<const Crossbar>(build_crossbar(simulation_spec(4, 3.0e5)));
  PhotonicBackend backend(xb);
  IdealBackend ideal;
  std::mt19937_64 g(8);
  const Matrix w = signed_matrix(g, 3, 4);
  auto op = backend.program(w);
  auto ref = ideal.program(w);
  for (int t = 0; t < 20; ++t) {
    const Vector x = signed_matrix(g, 4, 1).col(0);
    const Vector e = ref->forward(x);
    CHECK((op->forward(x) - e).norm() / e.norm() < 0.02);
    const Vector s = signed_matrix(g, 3, 1).col(0);
    const Vector eb = ref->backward(s);
    CHECK((op->backward(s) - eb).norm() / eb.norm() < 0.02);
  }
}

TEST_CASE("encoding sidecar") {
  std::ostringstream out;
  write_encoding_sidecar(out, AffineEncoding{2.0, -1.0, EncodingAxis::matrix});
  CHECK(out.str().find("scale") != std::string::npos);
  CHECK(out.str().find("-1") != std::string::npos);
}
