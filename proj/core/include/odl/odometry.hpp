#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "odl/pose.hpp"

namespace odl {

/// Placeholder magnitudes at 4 Hz; x, y and yaw drift as Gaussian random
/// walks (per-step increments), z gets i.i.d. zero-mean noise.
struct OdomNoiseParams {
  double sigma_x = 0.01;     ///< m per sqrt(step)
  double sigma_y = 0.01;     ///< m per sqrt(step)
  double sigma_yaw = 0.002;  ///< rad per sqrt(step)
  double sigma_z = 0.02;     ///< m, stationary
  std::uint64_t seed = 0;

  /// Throws ConfigError on negative or non-finite sigmas.
  void validate() const;
};

/// Noisy world-frame estimates of `truth`. The first sample gets zero random
/// walk error. Throws ConfigError on an empty sequence.
std::vector<Pose4> simulate_odometry(std::span<const Pose4> truth, const OdomNoiseParams& params);

/// compose(invert(estimates[i]), estimates[j]). Throws ContractViolation on a
/// bad index.
Pose4 relative_odometry(std::span<const Pose4> estimates, std::size_t i, std::size_t j);

}  // namespace odl
