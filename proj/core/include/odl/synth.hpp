#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "odl/dataset.hpp"
#include "odl/odometry.hpp"

namespace odl {

/// Appearance and camera model of one synthetic environment. Intensities are
/// in [0, 1].
struct DomainSpec {
  std::string name = "A";
  double background_level = 0.25;
  double background_gradient = 0.10;  ///< top-to-bottom ramp amplitude
  double texture_amplitude = 0.08;
  double texture_scale_px = 24.0;  ///< blob wavelength
  std::uint64_t texture_seed = 1;
  double subject_level = 0.75;
  double mark_level = 0.30;       ///< face mark when fully facing the camera
  double subject_half_width_m = 0.18;
  double subject_half_height_m = 0.32;
  double subject_variation = 0.0;  ///< per-subject intensity spread
  double focal_px = 110.0;
  double cx = (kImageWidth - 1) / 2.0;
  double cy = (kImageHeight - 1) / 2.0;
  double noise_sigma = 0.02;
  double vignette = 0.0;

  static DomainSpec domain_a();
  static DomainSpec domain_b();

  /// Throws ConfigError, e.g. when the subject would project below one
  /// pixel at `max_range_m`.
  void validate(double max_range_m) const;
};

/// Bounds of the relative subject pose (subject in the drone frame).
struct PoseRange {
  double x_min = 1.0, x_max = 3.2;
  double bearing_max = 0.5;  ///< |y / x|
  double z_max = 0.4;        ///< |z|
};

struct SynthConfig {
  DomainSpec a = DomainSpec::domain_a();
  DomainSpec b = DomainSpec::domain_b();
  PoseRange range;
  int pretrain_samples = 5000;  ///< domain A, independent poses
  int subjects = 3;             ///< domain B flights, one per subject
  double flight_seconds = 300.0;
  double still_min_s = 10.0, still_max_s = 20.0;
  double move_min_s = 4.0, move_max_s = 8.0;
  double walk_speed_min = 0.4, walk_speed_max = 0.8;  ///< m/s
  double relative_time_constant_s = 25.0;
  double yaw_step_sigma = 0.08;  ///< rad per step for the relative yaw
  OdomNoiseParams odometry;      ///< cached as odometry columns in domain B

  void validate() const;
};

struct SynthData {
  Sequence domain_a;
  std::vector<Sequence> domain_b;  ///< one per subject
};

/// Renders the subject at `relative` (subject in the drone frame). The face
/// mark sits at the subject's heading side, so its horizontal offset follows
/// sin(yaw) and its darkness follows how much the subject faces the camera.
/// `variant` selects the per-subject appearance. Pure given `rng` state.
GrayImage render_frame(const DomainSpec& domain, const Pose4& relative, int variant, std::mt19937_64& rng);

/// Deterministic given seed. Poses with x <= 0.1 m are redrawn.
SynthData synth_generate(const SynthConfig& config, std::uint64_t seed);

}  // namespace odl
