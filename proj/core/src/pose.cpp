#include "odl/pose.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

namespace odl {

double wrap_angle(double a) {
  constexpr double pi = std::numbers::pi;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (a > -pi && a <= pi) return a;
  double r = std::fmod(a + pi, two_pi);
  if (r <= 0.0) r += two_pi;
  return r - pi;
}

bool Pose4::is_finite() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(z) && std::isfinite(yaw);
}

std::ostream& operator<<(std::ostream& os, const Pose4& p) {
  return os << "(" << p.x << ", " << p.y << ", " << p.z << ", " << p.yaw << ")";
}

Pose4 compose(const Pose4& a, const Pose4& b) {
  const double c = std::cos(a.yaw);
  const double s = std::sin(a.yaw);
  return {a.x + c * b.x - s * b.y, a.y + s * b.x + c * b.y, a.z + b.z, wrap_angle(a.yaw + b.yaw)};
}

Pose4 invert(const Pose4& a) {
  const double c = std::cos(a.yaw);
  const double s = std::sin(a.yaw);
  // R(-yaw) * (-t)
  return {-(c * a.x + s * a.y), -(-s * a.x + c * a.y), -a.z, wrap_angle(-a.yaw)};
}

std::array<double, 4> residual(const Pose4& a, const Pose4& b) {
  return {a.x - b.x, a.y - b.y, a.z - b.z, wrap_angle(a.yaw - b.yaw)};
}

double delta(const Pose4& a, const Pose4& b) {
  const auto r = residual(a, b);
  return std::abs(r[0]) + std::abs(r[1]) + std::abs(r[2]) + std::abs(r[3]);
}

ComposeJacobians compose_jacobians(const Pose4& a, const Pose4& b) {
  const double c = std::cos(a.yaw);
  const double s = std::sin(a.yaw);
  ComposeJacobians j{};
  j.wrt_a[0] = {1, 0, 0, -s * b.x - c * b.y};
  j.wrt_a[1] = {0, 1, 0, c * b.x - s * b.y};
  j.wrt_a[2] = {0, 0, 1, 0};
  j.wrt_a[3] = {0, 0, 0, 1};
  j.wrt_b[0] = {c, -s, 0, 0};
  j.wrt_b[1] = {s, c, 0, 0};
  j.wrt_b[2] = {0, 0, 1, 0};
  j.wrt_b[3] = {0, 0, 0, 1};
  return j;
}

Jacobian4 invert_jacobian(const Pose4& a) {
  const double c = std::cos(a.yaw);
  const double s = std::sin(a.yaw);
  Jacobian4 j{};
  j[0] = {-c, -s, 0, s * a.x - c * a.y};
  j[1] = {s, -c, 0, c * a.x + s * a.y};
  j[2] = {0, 0, -1, 0};
  j[3] = {0, 0, 0, -1};
  return j;
}

Pose4 mirror_y(const Pose4& p) { return {p.x, -p.y, p.z, wrap_angle(-p.yaw)}; }

}  // namespace odl
