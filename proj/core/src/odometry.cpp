#include "odl/odometry.hpp"

#include <cmath>
#include <random>
#include <string>

#include "odl/error.hpp"

namespace odl {

void OdomNoiseParams::validate() const {
  for (double s : {sigma_x, sigma_y, sigma_yaw, sigma_z}) {
    if (!std::isfinite(s) || s < 0.0) throw ConfigError("odometry noise sigmas must be finite and >= 0");
  }
}

std::vector<Pose4> simulate_odometry(std::span<const Pose4> truth, const OdomNoiseParams& params) {
  params.validate();
  if (truth.empty()) throw ConfigError("odometry simulation needs at least one pose");
  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<Pose4> out;
  out.reserve(truth.size());
  double ex = 0.0, ey = 0.0, eyaw = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    // Draw all four every step so each stream stays aligned when a sigma is 0.
    const double nx = unit(rng), ny = unit(rng), nyaw = unit(rng), nz = unit(rng);
    if (k > 0) {
      ex += params.sigma_x * nx;
      ey += params.sigma_y * ny;
      eyaw += params.sigma_yaw * nyaw;
    }
    const Pose4& t = truth[k];
    Pose4 e = t;
    if (ex != 0.0) e.x += ex;
    if (ey != 0.0) e.y += ey;
    if (params.sigma_z != 0.0) e.z += params.sigma_z * nz;
    if (eyaw != 0.0) e.yaw = wrap_angle(t.yaw + eyaw);
    out.push_back(e);
  }
  return out;
}

Pose4 relative_odometry(std::span<const Pose4> estimates, std::size_t i, std::size_t j) {
  if (i >= estimates.size() || j >= estimates.size()) {
    throw ContractViolation("relative_odometry: index out of range (" + std::to_string(i) + ", " + std::to_string(j) +
                            " of " + std::to_string(estimates.size()) + ")");
  }
  return compose(invert(estimates[i]), estimates[j]);
}

}  // namespace odl
