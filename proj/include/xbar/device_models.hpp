#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

namespace xbar {

inline constexpr double kPi = 3.14159265358979323846;

/// Thermo-optic heater: phase grows linearly with electrical power.
struct PhaseShifter {
  double power_per_pi_mw = 19.3;
  double initial_phase = 0.0;  // radians, phase at zero power
  double max_power_mw = 60.0;

  void validate() const;
};

/// Phase of the shifter at `power_mw`. Throws RangeError outside [0, max_power].
double thermo_phase(const PhaseShifter& shifter, double power_mw);

/// Two-arm interferometer used as an amplitude modulator.
///
/// Transmittance is sin^2 of half the arm phase difference, clipped from below
/// at the extinction floor and scaled by the excess loss.
struct MziDevice {
  PhaseShifter shifter;
  double extinction_ratio_db = 51.0;  // +inf gives an ideal null
  double excess_loss_db = 0.0;

  /// Minimum normalized transmittance 10^(-ER/10).
  double floor() const;
  /// Maximum transmittance 10^(-excess/10).
  double peak() const;
  void validate() const;
};

double mzi_transmittance(const MziDevice& dev, double power_mw);

/// Smallest non-negative heater power giving a zero phase difference (the null).
double mzi_null_power(const MziDevice& dev);

/// Smallest heater power at or above the null whose normalized transmittance
/// sin^2(dphi/2) equals `x` in [0, 1]; this is the rising branch of the fringe.
double mzi_power_for(const MziDevice& dev, double x);

/// Add-drop microring with two bus couplers and a heater.
struct RingDevice {
  double radius_um = 20.0;
  double group_index = 4.345;
  double effective_index_at_ref = 2.4;
  double reference_nm = 1550.0;
  double self_coupling_t1 = 0.999;
  double self_coupling_t2 = 0.999;
  double round_trip_amplitude = 1.0;
  PhaseShifter shifter;
  double resonance_shift_per_mw = 0.114;
  double drop_excess_loss_db = 0.0;
  double fabrication_detuning_nm = 0.0;

  double circumference_nm() const;
  /// Resonance closest to the reference wavelength with the heater off.
  double natural_resonance_nm() const;
  /// Resonance after heating; red-shifts linearly with power.
  double resonance_nm(double heater_mw) const;
  void validate() const;
};

struct PortTransmission {
  double drop = 0.0;
  double through = 0.0;
};

/// Drop and through power transmittances at `wavelength_nm`.
PortTransmission ring_drop_through(const RingDevice& dev, double wavelength_nm,
                                   double heater_mw);

/// Same transfer evaluated from the detuning (wavelength minus resonance).
/// Used by the propagation core to avoid recomputing resonance positions.
PortTransmission ring_response_at_detuning(const RingDevice& dev,
                                           double wavelength_nm,
                                           double detuning_nm);

double fsr_of(const RingDevice& dev, double wavelength_nm);

/// n_g such that lambda^2 / (n_g * 2 pi R) equals `fsr_nm`.
double group_index_for_fsr(double fsr_nm, double radius_um, double wavelength_nm);

/// Field round-trip amplitude for a waveguide loss in dB/cm.
double round_trip_amplitude_for_loss(double loss_db_per_cm, double radius_um);

/// Effective index that places the natural resonance at `target_nm`
/// (ignoring fabrication detuning).
double effective_index_for_resonance(const RingDevice& dev, double target_nm);

/// Loaded quality factor from the exact half-maximum width of the drop response.
double loaded_q(const RingDevice& dev, double wavelength_nm);

/// Drop-port extinction: peak over anti-resonant transmittance, in dB.
double drop_extinction_db(const RingDevice& dev);

struct Couplings {
  double t1 = 0.0;
  double t2 = 0.0;
};

/// Symmetric self-couplings giving loaded Q `target_q` at `wavelength_nm`.
/// Throws InfeasibleError when the round-trip loss caps Q below the target.
Couplings couplings_for_q(double target_q, const RingDevice& geometry,
                          double wavelength_nm);

/// Symmetric self-couplings giving a drop extinction of `extinction_db`.
Couplings couplings_for_extinction(double extinction_db, const RingDevice& geometry);

struct SpectrumPoint {
  double wavelength_nm = 0.0;
  double t_drop = 0.0;
  double t_through = 0.0;
};

std::vector<SpectrumPoint> sweep_spectrum(const RingDevice& dev, double start_nm,
                                          double stop_nm, std::size_t steps,
                                          double heater_mw = 0.0);

/// Wavelength of the largest drop sample refined by a parabola through its neighbours.
double measure_peak_wavelength(const std::vector<SpectrumPoint>& curve);

/// Full width at half maximum of the strongest drop peak, by linear
/// interpolation of the half-maximum crossings.
double measure_fwhm(const std::vector<SpectrumPoint>& curve);

/// Scans a window around the resonance and returns peak / FWHM.
double measure_q(const RingDevice& dev, double heater_mw = 0.0);

void write_spectrum_csv(std::ostream& out, const std::vector<SpectrumPoint>& curve);

/// Laser channel plan.
struct WavelengthGrid {
  std::vector<double> channels;
  double reference = 1550.0;

  std::size_t size() const { return channels.size(); }
  double spacing() const;
  /// Strictly increasing and spanning less than one FSR.
  void validate(double fsr_nm) const;

  /// `n` channels evenly spread over one FSR, centred on `center_nm`.
  static WavelengthGrid evenly_in_fsr(std::size_t n, double fsr_nm, double center_nm);
  /// The four-channel plan of the fabricated chip (0.75 nm spacing from 1549 nm).
  static WavelengthGrid experimental();
};

}  // namespace xbar
