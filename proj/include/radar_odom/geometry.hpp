// Copyright 2026 The radar_odom Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * \file geometry.hpp
 * \brief SO(3) / SE(3) value types and their exponential and logarithm maps.
 *
 * Conventions
 * -----------
 * Rotation:  unit quaternion (w, x, y, z), canonicalized so that w >= 0.
 * Pose:      T = [R t; 0 1], mapping points from the body frame to the parent
 *            frame, p_parent = R * p_body + t.
 * Twist:     xi = (v, omega), linear part first. se3_exp(xi) couples the two
 *            through the left Jacobian V(omega): t = V(omega) * v.
 */
#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <stdexcept>

namespace radar_odom {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat4 = Eigen::Matrix4d;

/// Below this angle the exp/log maps switch to their Taylor expansions.
inline constexpr double kSmallAngle = 1e-8;

inline Mat3 skew(const Vec3 &v) {
  Mat3 m;
  // clang-format off
  m <<     0, -v.z(),  v.y(),
       v.z(),      0, -v.x(),
      -v.y(),  v.x(),      0;
  // clang-format on
  return m;
}

class Rotation {
 public:
  Rotation() : q_(1.0, 0.0, 0.0, 0.0) {}

  /// Normalizes and canonicalizes q. Throws on a zero or non-finite input.
  explicit Rotation(const Eigen::Quaterniond &q) : q_(q) { canonicalize(); }

  Rotation(double w, double x, double y, double z)
      : Rotation(Eigen::Quaterniond(w, x, y, z)) {}

  static Rotation from_matrix(const Mat3 &m) {
    return Rotation(Eigen::Quaterniond(m));
  }

  static Rotation identity() { return Rotation(); }

  const Eigen::Quaterniond &quaternion() const { return q_; }
  double w() const { return q_.w(); }
  double x() const { return q_.x(); }
  double y() const { return q_.y(); }
  double z() const { return q_.z(); }

  Mat3 matrix() const { return q_.toRotationMatrix(); }

  Rotation inverse() const { return Rotation(q_.conjugate()); }

  Rotation operator*(const Rotation &other) const {
    return Rotation(q_ * other.q_);
  }

  Vec3 operator*(const Vec3 &v) const { return q_ * v; }

  /// Exact comparison of the canonical representation.
  bool operator==(const Rotation &other) const {
    return q_.coeffs() == other.q_.coeffs();
  }

 private:
  void canonicalize() {
    const double n = q_.norm();
    if (!std::isfinite(n) || n == 0.0)
      throw std::invalid_argument("Rotation: quaternion must be finite and non-zero");
    q_.coeffs() /= n;
    bool flip = q_.w() < 0.0;
    if (q_.w() == 0.0) {
      // 180 degree rotations: make the first non-zero vector component positive
      if (q_.x() != 0.0)
        flip = q_.x() < 0.0;
      else if (q_.y() != 0.0)
        flip = q_.y() < 0.0;
      else
        flip = q_.z() < 0.0;
    }
    if (flip) q_.coeffs() = -q_.coeffs();
    // fold -0.0 into +0.0 so equal rotations compare bit-equal
    q_.coeffs().array() += 0.0;
  }

  Eigen::Quaterniond q_;
};

struct Twist {
  Vec3 linear = Vec3::Zero();
  Vec3 angular = Vec3::Zero();

  Twist() = default;
  Twist(const Vec3 &lin, const Vec3 &ang) : linear(lin), angular(ang) {}
  explicit Twist(const Vec6 &xi) : linear(xi.head<3>()), angular(xi.tail<3>()) {}

  Vec6 vector() const {
    Vec6 xi;
    xi << linear, angular;
    return xi;
  }
  double norm() const { return vector().norm(); }
};

class Pose {
 public:
  Pose() : translation_(Vec3::Zero()) {}
  Pose(const Rotation &r, const Vec3 &t) : rotation_(r), translation_(t) {}
  explicit Pose(const Vec3 &t) : translation_(t) {}

  static Pose identity() { return Pose(); }
  static Pose from_matrix(const Mat4 &m) {
    return Pose(Rotation::from_matrix(m.topLeftCorner<3, 3>()), m.topRightCorner<3, 1>());
  }

  const Rotation &rotation() const { return rotation_; }
  const Vec3 &translation() const { return translation_; }

  Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rotation_.matrix();
    m.topRightCorner<3, 1>() = translation_;
    return m;
  }

  Pose inverse() const {
    const Rotation r_inv = rotation_.inverse();
    return Pose(r_inv, -(r_inv * translation_));
  }

  Pose operator*(const Pose &other) const {
    return Pose(rotation_ * other.rotation_, rotation_ * other.translation_ + translation_);
  }

  Vec3 operator*(const Vec3 &p) const { return rotation_ * p + translation_; }

 private:
  Rotation rotation_;
  Vec3 translation_;
};

inline Rotation so3_exp(const Vec3 &omega) {
  if (!omega.allFinite()) throw std::invalid_argument("so3_exp: non-finite rotation vector");
  const double theta = omega.norm();
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    const Vec3 v = omega * (0.5 - t2 / 48.0);
    return Rotation(1.0 - t2 / 8.0, v.x(), v.y(), v.z());
  }
  const double half = 0.5 * theta;
  const Vec3 v = omega * (std::sin(half) / theta);
  return Rotation(std::cos(half), v.x(), v.y(), v.z());
}

/// Rotation vector with angle in [0, pi].
inline Vec3 so3_log(const Rotation &r) {
  const Eigen::Quaterniond &q = r.quaternion();
  const Vec3 v = q.vec();
  const double n = v.norm();
  if (n < kSmallAngle) {
    // w ~ 1 here; first-order term of 2 atan(n / w) / n
    return v * (2.0 / q.w());
  }
  const double angle = 2.0 * std::atan2(n, q.w());
  return v * (angle / n);
}

/// Left Jacobian of SO(3), the V matrix of the SE(3) exponential.
inline Mat3 so3_left_jacobian(const Vec3 &omega) {
  const double theta = omega.norm();
  const Mat3 k = skew(omega);
  if (theta < kSmallAngle) return Mat3::Identity() + 0.5 * k + (1.0 / 6.0) * k * k;
  const double t2 = theta * theta;
  return Mat3::Identity() + ((1.0 - std::cos(theta)) / t2) * k +
         ((theta - std::sin(theta)) / (t2 * theta)) * k * k;
}

inline Mat3 so3_left_jacobian_inverse(const Vec3 &omega) {
  const double theta = omega.norm();
  const Mat3 k = skew(omega);
  if (theta < kSmallAngle) return Mat3::Identity() - 0.5 * k + (1.0 / 12.0) * k * k;
  const double half = 0.5 * theta;
  const double coeff = (1.0 - half * std::cos(half) / std::sin(half)) / (theta * theta);
  return Mat3::Identity() - 0.5 * k + coeff * k * k;
}

inline Pose se3_compose(const Pose &a, const Pose &b) { return a * b; }
inline Pose se3_inverse(const Pose &t) { return t.inverse(); }

inline Pose se3_exp(const Twist &xi) {
  return Pose(so3_exp(xi.angular), so3_left_jacobian(xi.angular) * xi.linear);
}

inline Twist se3_log(const Pose &t) {
  const Vec3 omega = so3_log(t.rotation());
  return Twist(so3_left_jacobian_inverse(omega) * t.translation(), omega);
}

/// Rotation angle of r in [0, pi].
inline double rotation_angle(const Rotation &r) { return so3_log(r).norm(); }

/// Slerp on the rotation, linear on the translation. alpha in [0, 1].
inline Pose interpolate_pose(const Pose &t0, const Pose &t1, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("interpolate_pose: alpha must lie in [0, 1]");
  if (alpha == 0.0) return t0;
  if (alpha == 1.0) return t1;
  const Vec3 delta = so3_log(t0.rotation().inverse() * t1.rotation());
  const Rotation r = t0.rotation() * so3_exp(alpha * delta);
  return Pose(r, (1.0 - alpha) * t0.translation() + alpha * t1.translation());
}

}  // namespace radar_odom
