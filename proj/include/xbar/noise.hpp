#pragma once

#include <cstdint>
#include <functional>
#include <random>

#include <Eigen/Dense>

namespace xbar {

/// Multiplicative Gaussian fluctuation of detected powers.
struct NoiseConfig {
  double relative_sigma = 0.02;
  std::uint64_t seed = 7;
  bool enabled = true;

  void validate() const;
  bool active() const { return enabled && relative_sigma > 0.0; }
};

/// Independent random stream. Streams derived from one seed with different
/// stream ids do not overlap in practice: both values feed a seed_seq.
class NoiseStream {
 public:
  explicit NoiseStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  double gaussian() { return normal_(engine_); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Each power times max(0, 1 + eps), eps ~ N(0, sigma^2). Identity when inactive.
Eigen::VectorXd perturb(const Eigen::VectorXd& powers, const NoiseConfig& cfg, NoiseStream& rng);

/// Mean of `repeats` calls of `measure`.
Eigen::VectorXd time_average(const std::function<Eigen::VectorXd()>& measure, int repeats);

}  // namespace xbar
