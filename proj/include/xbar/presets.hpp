#pragma once

#include <cstddef>
#include <cstdint>

#include "xbar/crossbar.hpp"

namespace xbar {

inline constexpr double kReferenceNm = 1550.0;
inline constexpr double kTargetFsrNm = 4.4;
inline constexpr double kRingRadiusUm = 20.0;
inline constexpr double kWaveguideLossDbPerCm = 1.3;

/// Ring geometry shared by every preset: 20 um radius, 4.4 nm FSR at 1550 nm,
/// 1.3 dB/cm waveguide loss and a heater that shifts half an FSR per P_pi.
RingDevice base_ring();

/// The fabricated 4x4 chip: 0.75 nm channel spacing, 30 dB ring extinction,
/// 37.6 dB worst-case MZI extinction, random MZI bias phases, fabrication
/// spread of the resonances and lossy fibre ports.
CrossbarSpec experimental_spec(std::uint64_t seed = 1);

/// Larger simulated array: `n` channels spread evenly over one FSR, rings with
/// loaded Q `q`, lossless ports and no fabrication spread.
CrossbarSpec simulation_spec(std::size_t n = 9, double q = 3.0e5, std::uint64_t seed = 1);

/// Near-ideal devices: lossless rings of very high Q, perfect MZI nulls and no
/// waveguide or port loss.
CrossbarSpec ideal_spec(std::size_t n = 4, std::uint64_t seed = 1);

}  // namespace xbar
