#include "xbar/presets.hpp"

#include <limits>

namespace xbar {

namespace {

constexpr double kExperimentalRingExtinctionDb = 30.0;
constexpr double kExperimentalMziExtinctionDb = 37.6;
constexpr double kExperimentalFabSigmaNm = 0.1;
constexpr double kExperimentalPortLossDb = 2.9;
constexpr double kExperimentalPortLossSigmaDb = 0.3;
constexpr double kExperimentalAlignedPowerMw = 27.8;
constexpr double kSimulationAlignedPowerMw = 10.0;

}  // namespace

RingDevice base_ring() {
  RingDevice ring;
  ring.radius_um = kRingRadiusUm;
  ring.reference_nm = kReferenceNm;
  ring.group_index = group_index_for_fsr(kTargetFsrNm, kRingRadiusUm, kReferenceNm);
  ring.round_trip_amplitude = round_trip_amplitude_for_loss(kWaveguideLossDbPerCm, kRingRadiusUm);
  ring.resonance_shift_per_mw = kTargetFsrNm / (2.0 * ring.shifter.power_per_pi_mw);
  return ring;
}

CrossbarSpec experimental_spec(std::uint64_t seed) {
  CrossbarSpec spec;
  spec.n = 4;
  spec.variant = TopologyVariant::symmetric;
  spec.losses.omit_output_crossings = true;
  spec.channels = WavelengthGrid::experimental();
  spec.ring = base_ring();
  const Couplings k = couplings_for_extinction(kExperimentalRingExtinctionDb, spec.ring);
  spec.ring.self_coupling_t1 = k.t1;
  spec.ring.self_coupling_t2 = k.t2;
  spec.mzi.extinction_ratio_db = kExperimentalMziExtinctionDb;
  spec.ring_bias_nm = kExperimentalAlignedPowerMw * spec.ring.resonance_shift_per_mw;
  spec.fabrication_sigma_nm = kExperimentalFabSigmaNm;
  spec.random_mzi_phases = true;
  spec.port_loss_db = kExperimentalPortLossDb;
  spec.port_loss_sigma_db = kExperimentalPortLossSigmaDb;
  spec.seed = seed;
  return spec;
}

CrossbarSpec simulation_spec(std::size_t n, double q, std::uint64_t seed) {
  CrossbarSpec spec;
  spec.n = n;
  spec.variant = TopologyVariant::symmetric;
  spec.ring = base_ring();
  const Couplings k = couplings_for_q(q, spec.ring, kReferenceNm);
  spec.ring.self_coupling_t1 = k.t1;
  spec.ring.self_coupling_t2 = k.t2;
  spec.channels = WavelengthGrid::evenly_in_fsr(n, fsr_of(spec.ring, kReferenceNm), kReferenceNm);
  spec.ring_bias_nm = kSimulationAlignedPowerMw * spec.ring.resonance_shift_per_mw;
  spec.seed = seed;
  return spec;
}

CrossbarSpec ideal_spec(std::size_t n, std::uint64_t seed) {
  CrossbarSpec spec;
  spec.n = n;
  spec.variant = TopologyVariant::symmetric;
  spec.losses.crossing_loss_db = 0.0;
  spec.losses.propagation_loss_db_per_cm = 0.0;
  spec.ring = base_ring();
  spec.ring.round_trip_amplitude = 1.0;
  const Couplings k = couplings_for_q(1.0e9, spec.ring, kReferenceNm);
  spec.ring.self_coupling_t1 = k.t1;
  spec.ring.self_coupling_t2 = k.t2;
  spec.mzi.extinction_ratio_db = std::numeric_limits<double>::infinity();
  spec.channels = WavelengthGrid::evenly_in_fsr(n, fsr_of(spec.ring, kReferenceNm), kReferenceNm);
  spec.ring_bias_nm = kSimulationAlignedPowerMw * spec.ring.resonance_shift_per_mw;
  spec.seed = seed;
  return spec;
}

}  // namespace xbar
