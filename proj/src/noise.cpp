#include "xbar/noise.hpp"

#include <algorithm>

#include "xbar/errors.hpp"

namespace xbar {

void NoiseConfig::validate() const {
  if (!(relative_sigma >= 0.0)) throw ValidationError("noise relative_sigma must be non-negative");
}

NoiseStream::NoiseStream(std::uint64_t seed, std::uint64_t stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32)};
  engine_.seed(seq);
}

Eigen::VectorXd perturb(const Eigen::VectorXd& powers, const NoiseConfig& cfg, NoiseStream& rng) {
  if ((powers.array() < 0.0).any()) throw EncodingError("optical power must be non-negative");
  if (!cfg.active()) return powers;
  Eigen::VectorXd out(powers.size());
  for (Eigen::Index i = 0; i < powers.size(); ++i) {
    out(i) = powers(i) * std::max(0.0, 1.0 + cfg.relative_sigma * rng.gaussian());
  }
  return out;
}

Eigen::VectorXd time_average(const std::function<Eigen::VectorXd()>& measure, int repeats) {
  if (repeats < 1) throw RangeError("time averaging needs at least one repeat");
  // Running mean: identical samples reproduce the sample bit for bit.
  Eigen::VectorXd mean = measure();
  for (int k = 2; k <= repeats; ++k) mean += (measure() - mean) / static_cast<double>(k);
  return mean;
}

}  // namespace xbar
