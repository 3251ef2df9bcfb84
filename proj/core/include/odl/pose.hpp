#pragma once

#include <array>
#include <iosfwd>

namespace odl {

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

/// Relative pose with 3D translation and a rotation about the gravity axis.
/// Poses of this form are closed under composition, so the whole loss chain
/// stays exact without a full SE(3) representation.
struct Pose4 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double yaw = 0.0;

  static Pose4 identity() { return {}; }

  std::array<double, 4> as_array() const { return {x, y, z, yaw}; }
  static Pose4 from_array(const std::array<double, 4>& v) { return {v[0], v[1], v[2], wrap_angle(v[3])}; }

  bool is_finite() const;

  friend bool operator==(const Pose4&, const Pose4&) = default;
};

std::ostream& operator<<(std::ostream& os, const Pose4& p);

/// Pose of b's child frame expressed in a's parent frame.
Pose4 compose(const Pose4& a, const Pose4& b);

Pose4 invert(const Pose4& a);

/// L1 distance between 4DOF vectors; the yaw term is measured on the circle.
double delta(const Pose4& a, const Pose4& b);

/// Component-wise difference a - b with the yaw difference wrapped.
std::array<double, 4> residual(const Pose4& a, const Pose4& b);

/// Row-major 4x4 Jacobian over (x, y, z, yaw).
using Jacobian4 = std::array<std::array<double, 4>, 4>;

struct ComposeJacobians {
  Jacobian4 wrt_a;
  Jacobian4 wrt_b;
};

/// d compose(a, b) / d a and d compose(a, b) / d b.
ComposeJacobians compose_jacobians(const Pose4& a, const Pose4& b);

/// d invert(a) / d a.
Jacobian4 invert_jacobian(const Pose4& a);

/// Mirror across the camera's x-z plane: y and yaw change sign.
/// This is a group automorphism, so it commutes with compose and invert.
Pose4 mirror_y(const Pose4& p);

}  // namespace odl
