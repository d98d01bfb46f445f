#pragma once

// Quaternion and rotation-matrix algebra shared by the simulator and both
// filters. Scalar-first quaternions, body-to-world rotation matrices.

#include <Eigen/Dense>
#include <cmath>

#include "dekf/errors.hpp"

namespace dekf {

using Vec3 = Eigen::Vector3d;
using RotMat3 = Eigen::Matrix3d;

struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Quaternion() = default;
  Quaternion(double qw, double qx, double qy, double qz)
      : w(qw), x(qx), y(qy), z(qz) {}

  static Quaternion identity() { return {1.0, 0.0, 0.0, 0.0}; }

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

  Eigen::Vector4d as_vec() const { return {w, x, y, z}; }
  static Quaternion from_vec(const Eigen::Vector4d& v) {
    return {v(0), v(1), v(2), v(3)};
  }
};

// Hamilton product q1 * q2.
inline Quaternion quat_multiply(const Quaternion& a, const Quaternion& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

// Scale to unit norm. The canonical representative has q_w >= 0.
inline Quaternion quat_normalize(const Quaternion& q) {
  const double n = q.norm();
  if (n <= 1e-12) {
    throw DegenerateQuaternionError("quat_normalize: near-zero norm");
  }
  double s = 1.0 / n;
  if (q.w < 0.0) s = -s;
  return {q.w * s, q.x * s, q.y * s, q.z * s};
}

// One Euler step of qdot = 1/2 q (x) [0, omega], renormalized.
inline Quaternion quat_integrate(const Quaternion& q, const Vec3& omega_body,
                                 double dt) {
  const Quaternion rate = quat_multiply(q, {0.0, omega_body.x(), omega_body.y(), omega_body.z()});
  Quaternion out{q.w + 0.5 * rate.w * dt, q.x + 0.5 * rate.x * dt,
                 q.y + 0.5 * rate.y * dt, q.z + 0.5 * rate.z * dt};
  return quat_normalize(out);
}

// Body-to-world rotation matrix of a unit quaternion.
inline RotMat3 quat_to_rotmat(const Quaternion& q_in) {
  Quaternion q = q_in;
  if (std::abs(q.norm() - 1.0) > 1e-6) {
    q = quat_normalize(q);
  }
  RotMat3 R;
  R << 1 - 2 * (q.y * q.y + q.z * q.z), 2 * (q.x * q.y - q.w * q.z),
      2 * (q.x * q.z + q.w * q.y),
      2 * (q.x * q.y + q.w * q.z), 1 - 2 * (q.x * q.x + q.z * q.z),
      2 * (q.y * q.z - q.w * q.x),
      2 * (q.x * q.z - q.w * q.y), 2 * (q.y * q.z + q.w * q.x),
      1 - 2 * (q.x * q.x + q.y * q.y);
  return R;
}

// Axis-angle exponential, used by sensor synthesis and test oracles.
inline Quaternion quat_from_axis_angle(const Vec3& axis_angle) {
  const double theta = axis_angle.norm();
  if (theta < 1e-14) {
    return Quaternion::identity();
  }
  const Vec3 axis = axis_angle / theta;
  const double s = std::sin(0.5 * theta);
  return {std::cos(0.5 * theta), axis.x() * s, axis.y() * s, axis.z() * s};
}

// Roll and pitch from the body-to-world rotation (Z-Y-X convention).
inline double roll_of(const RotMat3& R) { return std::atan2(R(2, 1), R(2, 2)); }
inline double pitch_of(const RotMat3& R) { return std::asin(-R(2, 0)); }
inline double yaw_of(const RotMat3& R) { return std::atan2(R(1, 0), R(0, 0)); }

inline double roll_of(const Quaternion& q) { return roll_of(quat_to_rotmat(q)); }
inline double pitch_of(const Quaternion& q) { return pitch_of(quat_to_rotmat(q)); }
inline double yaw_of(const Quaternion& q) { return yaw_of(quat_to_rotmat(q)); }

}  // namespace dekf
