#include "xbar/device_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <boost/math/tools/roots.hpp>

#include "xbar/errors.hpp"

namespace xbar {

namespace {

double db_to_linear(double db) { return std::pow(10.0, -db / 10.0); }

double wrap_two_pi(double phase) {
  double w = std::fmod(phase, 2.0 * kPi);
  if (w < 0.0) w += 2.0 * kPi;
  return w;
}

// Half-width (radians of round-trip phase) of the drop resonance at half maximum,
// for the product x = t1 t2 a. Negative when the response never falls to half.
double half_width_phase(double x) {
  // acos(1 - (1-x)^2 / 2x) written as a half angle so it stays accurate as x -> 1.
  const double s = (1.0 - x) / (2.0 * std::sqrt(x));
  if (s > 1.0) return -1.0;
  return 2.0 * std::asin(s);
}

double q_from_product(double x, double fsr, double wavelength) {
  const double hw = half_width_phase(x);
  if (hw <= 0.0) return hw < 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return wavelength / (fsr * hw / kPi);
}

}  // namespace

void PhaseShifter::validate() const {
  if (!(power_per_pi_mw > 0.0)) throw ValidationError("power_per_pi must be positive");
  if (!(max_power_mw >= 0.0)) throw ValidationError("max_power must be non-negative");
}

double thermo_phase(const PhaseShifter& shifter, double power_mw) {
  if (!(power_mw >= 0.0) || power_mw > shifter.max_power_mw) {
    throw RangeError("heater power " + std::to_string(power_mw) + " mW outside [0, " +
                     std::to_string(shifter.max_power_mw) + "]");
  }
  return shifter.initial_phase + kPi * power_mw / shifter.power_per_pi_mw;
}

double MziDevice::floor() const {
  if (std::isinf(extinction_ratio_db)) return 0.0;
  return db_to_linear(extinction_ratio_db);
}

double MziDevice::peak() const { return db_to_linear(excess_loss_db); }

void MziDevice::validate() const {
  shifter.validate();
  if (!(extinction_ratio_db > 0.0)) throw ValidationError("MZI extinction ratio must be positive");
  if (excess_loss_db < 0.0) throw ValidationError("MZI excess loss must be non-negative");
}

double mzi_transmittance(const MziDevice& dev, double power_mw) {
  const double dphi = thermo_phase(dev.shifter, power_mw);
  const double s = std::sin(0.5 * dphi);
  return dev.peak() * std::max(s * s, dev.floor());
}

double mzi_null_power(const MziDevice& dev) {
  return dev.shifter.power_per_pi_mw / kPi * wrap_two_pi(-dev.shifter.initial_phase);
}

double mzi_power_for(const MziDevice& dev, double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw EncodingError("MZI target must lie in [0, 1]");
  const double dphi = 2.0 * std::asin(std::sqrt(x));
  const double p = mzi_null_power(dev) + dev.shifter.power_per_pi_mw / kPi * dphi;
  if (p > dev.shifter.max_power_mw) {
    throw RangeError("MZI setting needs " + std::to_string(p) + " mW");
  }
  return p;
}

double RingDevice::circumference_nm() const { return 2.0 * kPi * radius_um * 1000.0; }

double RingDevice::natural_resonance_nm() const {
  const double optical = effective_index_at_ref * circumference_nm() / reference_nm;
  const double frac = optical - std::round(optical);
  return reference_nm + frac * fsr_of(*this, reference_nm) + fabrication_detuning_nm;
}

double RingDevice::resonance_nm(double heater_mw) const {
  if (!(heater_mw >= 0.0) || heater_mw > shifter.max_power_mw) {
    throw RangeError("ring heater power " + std::to_string(heater_mw) + " mW outside [0, " +
                     std::to_string(shifter.max_power_mw) + "]");
  }
  return natural_resonance_nm() + resonance_shift_per_mw * heater_mw;
}

void RingDevice::validate() const {
  shifter.validate();
  if (!(radius_um > 0.0)) throw ValidationError("ring radius must be positive");
  if (!(group_index > 0.0)) throw ValidationError("group index must be positive");
  auto in_unit = [](double v) { return v > 0.0 && v < 1.0; };
  if (!in_unit(self_coupling_t1) || !in_unit(self_coupling_t2)) {
    throw ValidationError("self-coupling coefficients must lie in (0, 1)");
  }
  if (!(round_trip_amplitude > 0.0 && round_trip_amplitude <= 1.0)) {
    throw ValidationError("round-trip amplitude must lie in (0, 1]");
  }
  if (drop_excess_loss_db < 0.0) throw ValidationError("drop excess loss must be non-negative");
}

PortTransmission ring_response_at_detuning(const RingDevice& dev, double wavelength_nm,
                                           double detuning_nm) {
  const double phi = 2.0 * kPi * detuning_nm / fsr_of(dev, wavelength_nm);
  const double t1 = dev.self_coupling_t1;
  const double t2 = dev.self_coupling_t2;
  const double a = dev.round_trip_amplitude;
  const double x = t1 * t2 * a;
  // Squared-sine form avoids cancellation when x is close to 1.
  const double s = std::sin(0.5 * phi);
  const double swing = 4.0 * x * s * s;
  const double denom = (1.0 - x) * (1.0 - x) + swing;
  const double mismatch = t1 - t2 * a;
  PortTransmission out;
  out.drop = db_to_linear(dev.drop_excess_loss_db) * (1.0 - t1 * t1) * (1.0 - t2 * t2) * a / denom;
  out.through = (mismatch * mismatch + swing) / denom;
  return out;
}

PortTransmission ring_drop_through(const RingDevice& dev, double wavelength_nm,
                                   double heater_mw) {
  return ring_response_at_detuning(dev, wavelength_nm,
                                   wavelength_nm - dev.resonance_nm(heater_mw));
}

double fsr_of(const RingDevice& dev, double wavelength_nm) {
  return wavelength_nm * wavelength_nm / (dev.group_index * dev.circumference_nm());
}

double group_index_for_fsr(double fsr_nm, double radius_um, double wavelength_nm) {
  return wavelength_nm * wavelength_nm / (fsr_nm * 2.0 * kPi * radius_um * 1000.0);
}

double round_trip_amplitude_for_loss(double loss_db_per_cm, double radius_um) {
  const double length_cm = 2.0 * kPi * radius_um * 1e-4;
  return std::pow(10.0, -loss_db_per_cm * length_cm / 20.0);
}

double effective_index_for_resonance(const RingDevice& dev, double target_nm) {
  const double length = dev.circumference_nm();
  const double order = std::round(dev.effective_index_at_ref * length / dev.reference_nm);
  const double frac = (target_nm - dev.reference_nm) / fsr_of(dev, dev.reference_nm);
  return (order + frac) * dev.reference_nm / length;
}

double loaded_q(const RingDevice& dev, double wavelength_nm) {
  const double x = dev.self_coupling_t1 * dev.self_coupling_t2 * dev.round_trip_amplitude;
  return q_from_product(x, fsr_of(dev, wavelength_nm), wavelength_nm);
}

double drop_extinction_db(const RingDevice& dev) {
  const double x = dev.self_coupling_t1 * dev.self_coupling_t2 * dev.round_trip_amplitude;
  return 20.0 * std::log10((1.0 + x) / (1.0 - x));
}

Couplings couplings_for_q(double target_q, const RingDevice& geometry, double wavelength_nm) {
  if (!(target_q > 0.0)) throw InfeasibleError("target Q must be positive");
  const double a = geometry.round_trip_amplitude;
  const double fsr = fsr_of(geometry, wavelength_nm);
  const double limit = q_from_product(a, fsr, wavelength_nm);
  if (!(target_q < limit)) {
    throw InfeasibleError("target Q " + std::to_string(target_q) +
                          " exceeds loss-limited Q " + std::to_string(limit));
  }
  const double lo = 3.0 - 2.0 * std::sqrt(2.0) + 1e-12;
  if (q_from_product(lo, fsr, wavelength_nm) > target_q) {
    throw InfeasibleError("target Q too low for a resolvable resonance");
  }
  auto f = [&](double x) { return std::log(q_from_product(x, fsr, wavelength_nm) / target_q); };
  boost::uintmax_t iters = 200;
  // A lossless ring has infinite Q at x = a, so bracket just below it.
  const double hi = a * (1.0 - 1e-14);
  auto [x0, x1] = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(50), iters);
  const double x = 0.5 * (x0 + x1);
  const double t = std::sqrt(x / a);
  return {t, t};
}

Couplings couplings_for_extinction(double extinction_db, const RingDevice& geometry) {
  const double r = std::pow(10.0, extinction_db / 20.0);
  const double x = (r - 1.0) / (r + 1.0);
  if (x >= geometry.round_trip_amplitude) {
    throw InfeasibleError("drop extinction unreachable with the configured round-trip loss");
  }
  const double t = std::sqrt(x / geometry.round_trip_amplitude);
  return {t, t};
}

std::vector<SpectrumPoint> sweep_spectrum(const RingDevice& dev, double start_nm,
                                          double stop_nm, std::size_t steps,
                                          double heater_mw) {
  if (steps < 2) throw RangeError("a spectrum sweep needs at least two samples");
  const double resonance = dev.resonance_nm(heater_mw);
  std::vector<SpectrumPoint> curve(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const double lambda =
        start_nm + (stop_nm - start_nm) * static_cast<double>(i) / static_cast<double>(steps - 1);
    const auto t = ring_response_at_detuning(dev, lambda, lambda - resonance);
    curve[i] = {lambda, t.drop, t.through};
  }
  return curve;
}

double measure_peak_wavelength(const std::vector<SpectrumPoint>& curve) {
  if (curve.size() < 3) throw RangeError("spectrum too short");
  auto it = std::max_element(curve.begin(), curve.end(),
                             [](const auto& l, const auto& r) { return l.t_drop < r.t_drop; });
  const auto i = static_cast<std::size_t>(it - curve.begin());
  if (i == 0 || i + 1 == curve.size()) return it->wavelength_nm;
  const double y0 = curve[i - 1].t_drop, y1 = curve[i].t_drop, y2 = curve[i + 1].t_drop;
  const double denom = y0 - 2.0 * y1 + y2;
  const double h = curve[i + 1].wavelength_nm - curve[i].wavelength_nm;
  if (denom == 0.0) return curve[i].wavelength_nm;
  return curve[i].wavelength_nm + 0.5 * h * (y0 - y2) / denom;
}

double measure_fwhm(const std::vector<SpectrumPoint>& curve) {
  if (curve.size() < 3) throw RangeError("spectrum too short");
  auto it = std::max_element(curve.begin(), curve.end(),
                             [](const auto& l, const auto& r) { return l.t_drop < r.t_drop; });
  const auto peak = static_cast<std::size_t>(it - curve.begin());
  const double half = 0.5 * it->t_drop;
  auto crossing = [&](std::size_t inside, std::size_t outside) {
    const auto& p = curve[inside];
    const auto& q = curve[outside];
    return p.wavelength_nm +
           (half - p.t_drop) * (q.wavelength_nm - p.wavelength_nm) / (q.t_drop - p.t_drop);
  };
  std::size_t l = peak;
  while (l > 0 && curve[l - 1].t_drop >= half) --l;
  std::size_t r = peak;
  while (r + 1 < curve.size() && curve[r + 1].t_drop >= half) ++r;
  if (l == 0 || r + 1 == curve.size()) throw RangeError("scan window does not contain the half maximum");
  return crossing(r, r + 1) - crossing(l, l - 1);
}

double measure_q(const RingDevice& dev, double heater_mw) {
  const double center = dev.resonance_nm(heater_mw);
  const double fwhm_guess = center / loaded_q(dev, center);
  const double half_window = std::min(8.0 * fwhm_guess, 0.45 * fsr_of(dev, center));
  const auto curve = sweep_spectrum(dev, center - half_window, center + half_window, 40001, heater_mw);
  return measure_peak_wavelength(curve) / measure_fwhm(curve);
}

void write_spectrum_csv(std::ostream& out, const std::vector<SpectrumPoint>& curve) {
  const auto old = out.precision(17);
  out << "wavelength_nm,t_drop,t_through\n";
  for (const auto& p : curve) out << p.wavelength_nm << ',' << p.t_drop << ',' << p.t_through << '\n';
  out.precision(old);
}

double WavelengthGrid::spacing() const {
  if (channels.size() < 2) return 0.0;
  return (channels.back() - channels.front()) / static_cast<double>(channels.size() - 1);
}

void WavelengthGrid::validate(double fsr_nm) const {
  if (channels.empty()) throw ValidationError("wavelength grid is empty");
  for (std::size_t i = 1; i < channels.size(); ++i) {
    if (!(channels[i] > channels[i - 1])) throw ValidationError("channels must be strictly increasing");
  }
  if (channels.back() - channels.front() >= fsr_nm) {
    throw ValidationError("channels must fit within one FSR");
  }
}

WavelengthGrid WavelengthGrid::evenly_in_fsr(std::size_t n, double fsr_nm, double center_nm) {
  WavelengthGrid g;
  g.reference = center_nm;
  const double step = fsr_nm / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    g.channels.push_back(center_nm + (static_cast<double>(k) - 0.5 * static_cast<double>(n - 1)) * step);
  }
  return g;
}

WavelengthGrid WavelengthGrid::experimental() {
  return {{1549.00, 1549.75, 1550.50, 1551.25}, 1550.0};
}

}  // namespace xbar
