/*
 * Copyright 2026 The viosfm Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <optional>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "viosfm/types.h"

namespace viosfm {

// Rotation angle closer to pi than this is treated as a singular point of
// the logarithm map.
constexpr double kLogSingularityTol = 1e-6;

// 3D rotation stored as a unit quaternion with canonical sign (w >= 0), so
// that equal rotations compare equal componentwise.
class Rotation {
 public:
  Rotation() : q_(Eigen::Quaterniond::Identity()) {}
  // Normalizes and canonicalizes the given quaternion.
  explicit Rotation(const Eigen::Quaterniond& q);
  Rotation(double w, double x, double y, double z)
      : Rotation(Eigen::Quaterniond(w, x, y, z)) {}

  static Rotation Identity() { return Rotation(); }
  static Rotation FromMatrix(const Eigen::Matrix3d& R);
  // Exponential map of an axis-angle vector (radians).
  static Rotation Exp(const Eigen::Vector3d& omega);

  // Axis-angle logarithm. Empty if the rotation angle is within
  // kLogSingularityTol of pi.
  std::optional<Eigen::Vector3d> TryLog() const;
  // Same as TryLog() but throws std::domain_error on the singular case.
  Eigen::Vector3d Log() const;

  const Eigen::Quaterniond& quaternion() const { return q_; }
  Eigen::Matrix3d Matrix() const { return q_.toRotationMatrix(); }
  // Rotation angle in [0, pi].
  double Angle() const;

  Rotation Inverse() const;
  Rotation operator*(const Rotation& rhs) const;
  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const { return q_ * p; }

 private:
  Eigen::Quaterniond q_;
};

// se(3) tangent element, split into translational (rho) and rotational
// (omega, radians) parts. Stacked order in vectors and Jacobians is
// [rho; omega].
struct Tangent6 {
  Eigen::Vector3d rho = Eigen::Vector3d::Zero();
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();

  Tangent6() = default;
  Tangent6(const Eigen::Vector3d& rho_in, const Eigen::Vector3d& omega_in)
      : rho(rho_in), omega(omega_in) {}

  static Tangent6 FromVector(const Vector6d& v) {
    return Tangent6(v.head<3>(), v.tail<3>());
  }
  Vector6d Vector() const {
    Vector6d v;
    v << rho, omega;
    return v;
  }
  double Norm() const { return Vector().norm(); }
};

// Coordinate frame an absolute pose is expressed in. Relative transforms
// carry kUnspecified.
enum class FrameTag : uint8_t {
  kUnspecified = 0,
  kWorld,
  kVioLocal,
  kBatchLocal,
};

// Rigid transform. For a camera, this is the camera pose in the tagged
// frame, i.e. it maps camera-frame points into that frame:
//   p_frame = rotation * p_cam + translation.
struct Pose {
  Rotation rotation;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  FrameTag frame_tag = FrameTag::kUnspecified;

  Pose() = default;
  Pose(const Rotation& r, const Eigen::Vector3d& t,
       FrameTag tag = FrameTag::kUnspecified)
      : rotation(r), translation(t), frame_tag(tag) {}

  static Pose Identity() { return Pose(); }
  static Pose Exp(const Tangent6& xi);

  Pose Inverse() const;
  Eigen::Matrix4d Matrix() const;
  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const {
    return rotation * p + translation;
  }

  // SE(3) logarithm (translation recovered through the left SO(3)
  // Jacobian). Empty on the near-pi singularity.
  std::optional<Tangent6> TryLog() const;
  Tangent6 Log() const;

  // Adjoint in [rho; omega] order: Exp(Adjoint() * xi) = *this * Exp(xi)
  // * Inverse().
  Matrix6d Adjoint() const;
};

// Applies b then a. The frame tag of a is propagated.
Pose Compose(const Pose& a, const Pose& b);
inline Pose operator*(const Pose& a, const Pose& b) { return Compose(a, b); }

// Pose of camera j expressed in camera i's frame; both inputs must live in
// a common frame. Compose(p_i, RelativePose(p_i, p_j)) == p_j.
Pose RelativePose(const Pose& p_i, const Pose& p_j);

Eigen::Matrix3d Skew(const Eigen::Vector3d& v);

// Left Jacobian of SO(3) and its inverse.
Eigen::Matrix3d So3LeftJacobian(const Eigen::Vector3d& omega);
Eigen::Matrix3d So3LeftJacobianInverse(const Eigen::Vector3d& omega);

// Inverse right Jacobian of SE(3) at xi:
//   Log(Exp(xi) * Exp(delta)) ~= xi + Se3RightJacobianInverse(xi) * delta.
Matrix6d Se3RightJacobianInverse(const Tangent6& xi);

}  // namespace viosfm
