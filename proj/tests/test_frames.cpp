#include <cmath>
#include <random>

#include "dekf/frames.hpp"
#include "doctest.h"

using namespace dekf;

namespace {

Quaternion random_unit_quat(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Quaternion q{n(rng), n(rng), n(rng), n(rng)};
  return quat_normalize(q);
}

double quat_dist(const Quaternion& a, const Quaternion& b) {
  // Distance up to the double cover.
  const double d1 = std::hypot(std::hypot(a.w - b.w, a.x - b.x),
                               std::hypot(a.y - b.y, a.z - b.z));
  const double d2 = std::hypot(std::hypot(a.w + b.w, a.x + b.x),
                               std::hypot(a.y + b.y, a.z + b.z));
  return std::min(d1, d2);
}

}  // namespace

TEST_CASE("quat_multiply matches independent Hamilton product") {
  // Oracle: component formula written out separately from the implementation.
  std::mt19937_64 rng(7);
  for (int k = 0; k < 50; ++k) {
    const Quaternion a = random_unit_quat(rng);
    const Quaternion b = random_unit_quat(rng);
    const Quaternion c = quat_multiply(a, b);
    const double w = a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z;
    const double x = a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y;
    const double y = a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x;
    const double z = a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w;
    CHECK(c.w == doctest::Approx(w).epsilon(1e-12));
    CHECK(c.x == doctest::Approx(x).epsilon(1e-12));
    CHECK(c.y == doctest::Approx(y).epsilon(1e-12));
    CHECK(c.z == doctest::Approx(z).epsilon(1e-12));
  }
}

TEST_CASE("quat_normalize produces unit norm with canonical sign") {
  const Quaternion q = quat_normalize(Quaternion{-2.0, 1.0, -3.0, 0.5});
  const double n = std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
  CHECK(n == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(q.w >= 0.0);
  CHECK_THROWS_AS(quat_normalize(Quaternion{0, 0, 0, 0}),
                  DegenerateQuaternionError);
}

TEST_CASE("quat_to_rotmat is a proper rotation and matches axis-angle") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    const Quaternion q = random_unit_quat(rng);
    const RotMat3 R = quat_to_rotmat(q);
    CHECK((R * R.transpose() - RotMat3::Identity()).norm() < 1e-12);
    CHECK(R.determinant() == doctest::Approx(1.0).epsilon(1e-12));
  }
  // Rodrigues oracle: rotate a vector by axis-angle directly.
  for (int k = 0; k < 50; ++k) {
    Vec3 aa{n(rng), n(rng), n(rng)};
    aa *= 0.8;
    const double th = aa.norm();
    const Vec3 axis = th > 0 ? Vec3(aa / th) : Vec3{1, 0, 0};
    const Vec3 v{n(rng), n(rng), n(rng)};
    const Vec3 rodrigues = v * std::cos(th) + axis.cross(v) * std::sin(th) +
                           axis * axis.dot(v) * (1.0 - std::cos(th));
    const Vec3 got = quat_to_rotmat(quat_from_axis_angle(aa)) * v;
    CHECK((got - rodrigues).norm() < 1e-12);
  }
}

TEST_CASE("Euler angles roundtrip through Z-Y-X composition") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> ang(-1.2, 1.2);
  for (int k = 0; k < 100; ++k) {
    const double roll = ang(rng), pitch = ang(rng), yaw = ang(rng);
    const Quaternion q = quat_multiply(
        quat_multiply(quat_from_axis_angle(Vec3{0, 0, yaw}),
                      quat_from_axis_angle(Vec3{0, pitch, 0})),
        quat_from_axis_angle(Vec3{roll, 0, 0}));
    CHECK(roll_of(q) == doctest::Approx(roll).epsilon(1e-10));
    CHECK(pitch_of(q) == doctest::Approx(pitch).epsilon(1e-10));
    CHECK(yaw_of(q) == doctest::Approx(yaw).epsilon(1e-10));
  }
}

TEST_CASE("quat_integrate converges to exact constant-rate rotation") {
  // Oracle: constant body rate omega for time T is an axis-angle rotation of
  // omega*T applied on the right. Euler integration error should shrink
  // linearly with dt.
  const Vec3 omega{0.3, -0.7, 0.5};
  const double T = 1.0;
  const Quaternion q0 =
      quat_normalize(Quaternion{0.9, 0.1, -0.2, 0.3});
  const Quaternion exact =
      quat_multiply(q0, quat_from_axis_angle(omega * T));

  auto integrate = [&](int steps) {
    Quaternion q = q0;
    const double dt = T / steps;
    for (int i = 0; i < steps; ++i) q = quat_integrate(q, omega, dt);
    return q;
  };
  const double e1 = quat_dist(integrate(1000), exact);
  const double e2 = quat_dist(integrate(10000), exact);
  CHECK(e1 < 1e-3);
  CHECK(e2 < e1 / 5.0);  // ~first-order convergence
}
