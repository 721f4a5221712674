#include "proc3d/math.hpp"

#include <algorithm>

namespace proc3d {

Mat3 rotation_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r.m = {1, 0, 0, 0, c, -s, 0, s, c};
  return r;
}

Mat3 rotation_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r.m = {c, 0, s, 0, 1, 0, -s, 0, c};
  return r;
}

Mat3 rotation_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r.m = {c, -s, 0, s, c, 0, 0, 0, 1};
  return r;
}

Mat3 euler_to_matrix(const Vec3& angles) {
  return rotation_z(angles.z) * rotation_y(angles.y) * rotation_x(angles.x);
}

Vec3 matrix_to_euler(const Mat3& r) {
  // R(2,0) = -sin(ry); R(2,1) = cos(ry) sin(rx); R(2,2) = cos(ry) cos(rx)
  // R(1,0) = cos(ry) sin(rz); R(0,0) = cos(ry) cos(rz)
  const double s = std::clamp(-r(2, 0), -1.0, 1.0);
  const double cy = std::hypot(r(0, 0), r(1, 0));
  if (cy > 1e-12) {
    return {std::atan2(r(2, 1), r(2, 2)), std::atan2(s, cy), std::atan2(r(1, 0), r(0, 0))};
  }
  // Gimbal lock: only rz - rx (or rz + rx) is determined; pin rx to zero.
  const double ry = s > 0 ? M_PI / 2 : -M_PI / 2;
  return {0.0, ry, std::atan2(-r(0, 1), r(1, 1))};
}

}  // namespace proc3d
