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

#include "viosfm/geometry/pose.h"

#include <cmath>
#include <stdexcept>

namespace viosfm {
namespace {

constexpr double kTaylorTol = 1e-4;

// (1 - cos(t)) / t^2 with Taylor fallback.
double OneMinusCosOverSq(double t) {
  if (t < kTaylorTol) {
    const double t2 = t * t;
    return 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
  }
  return (1.0 - std::cos(t)) / (t * t);
}

// (t - sin(t)) / t^3 with Taylor fallback.
double TMinusSinOverCube(double t) {
  if (t < kTaylorTol) {
    const double t2 = t * t;
    return 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0;
  }
  return (t - std::sin(t)) / (t * t * t);
}

// Coefficient of the omega^2 term of the inverse left SO(3) Jacobian,
// written with half-angle identities to avoid cancellation near pi:
//   1/t^2 - (1 + cos t) / (2 t sin t) = 1/t^2 - cot(t/2) / (2 t).
double So3InvJacCoeff(double t) {
  if (t < kTaylorTol) {
    const double t2 = t * t;
    return 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  }
  const double half = 0.5 * t;
  return 1.0 / (t * t) - std::cos(half) / (2.0 * t * std::sin(half));
}

// Barfoot's Q matrix: the off-diagonal block of the left SE(3) Jacobian.
Eigen::Matrix3d Se3JacobianQ(const Eigen::Vector3d& rho,
                             const Eigen::Vector3d& omega) {
  const double t = omega.norm();
  const Eigen::Matrix3d P = Skew(rho);
  const Eigen::Matrix3d W = Skew(omega);

  double a2, a3, a5;
  if (t < kTaylorTol) {
    const double t2 = t * t;
    a2 = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0;
    a3 = -1.0 / 24.0 + t2 / 720.0 - t2 * t2 / 40320.0;
    a5 = -1.0 / 120.0 + t2 / 5040.0 - t2 * t2 / 362880.0;
  } else {
    const double t2 = t * t;
    const double t4 = t2 * t2;
    const double s = std::sin(t);
    const double c = std::cos(t);
    a2 = (t - s) / (t2 * t);
    a3 = (1.0 - 0.5 * t2 - c) / t4;
    a5 = (t - s - t2 * t / 6.0) / (t4 * t);
  }

  const Eigen::Matrix3d WP = W * P;
  const Eigen::Matrix3d PW = P * W;
  const Eigen::Matrix3d WPW = WP * W;
  return 0.5 * P + a2 * (WP + PW + WPW) -
         a3 * (W * WP + PW * W - 3.0 * WPW) -
         0.5 * (a3 - 3.0 * a5) * (WPW * W + W * WPW);
}

Matrix6d Se3LeftJacobianInverse(const Tangent6& xi) {
  const Eigen::Matrix3d A = So3LeftJacobianInverse(xi.omega);
  const Eigen::Matrix3d Q = Se3JacobianQ(xi.rho, xi.omega);
  Matrix6d J = Matrix6d::Zero();
  J.topLeftCorner<3, 3>() = A;
  J.bottomRightCorner<3, 3>() = A;
  J.topRightCorner<3, 3>() = -A * Q * A;
  return J;
}

}  // namespace

Rotation::Rotation(const Eigen::Quaterniond& q) : q_(q.normalized()) {
  if (q_.w() < 0.0) {
    q_.coeffs() = -q_.coeffs();
  }
}

Rotation Rotation::FromMatrix(const Eigen::Matrix3d& R) {
  return Rotation(Eigen::Quaterniond(R));
}

Rotation Rotation::Exp(const Eigen::Vector3d& omega) {
  const double angle = omega.norm();
  double imag_scale;  // sin(angle/2) / angle
  if (angle < kTaylorTol) {
    const double a2 = angle * angle;
    imag_scale = 0.5 - a2 / 48.0 + a2 * a2 / 3840.0;
  } else {
    imag_scale = std::sin(0.5 * angle) / angle;
  }
  const Eigen::Vector3d v = imag_scale * omega;
  return Rotation(Eigen::Quaterniond(std::cos(0.5 * angle), v.x(), v.y(),
                                     v.z()));
}

double Rotation::Angle() const {
  // w >= 0 by construction, hence angle in [0, pi].
  return 2.0 * std::atan2(q_.vec().norm(), q_.w());
}

std::optional<Eigen::Vector3d> Rotation::TryLog() const {
  const double vec_norm = q_.vec().norm();
  const double angle = 2.0 * std::atan2(vec_norm, q_.w());
  if (std::abs(angle - M_PI) < kLogSingularityTol) {
    return std::nullopt;
  }
  double scale;  // angle / sin(angle/2)
  if (angle < kTaylorTol) {
    const double a2 = angle * angle;
    scale = 2.0 + a2 / 12.0;
  } else {
    scale = angle / vec_norm;
  }
  return scale * q_.vec();
}

Eigen::Vector3d Rotation::Log() const {
  auto log = TryLog();
  if (!log) {
    throw std::domain_error("Rotation::Log: angle within tolerance of pi");
  }
  return *log;
}

Rotation Rotation::Inverse() const { return Rotation(q_.conjugate()); }

Rotation Rotation::operator*(const Rotation& rhs) const {
  return Rotation(q_ * rhs.q_);
}

Pose Pose::Exp(const Tangent6& xi) {
  return Pose(Rotation::Exp(xi.omega), So3LeftJacobian(xi.omega) * xi.rho);
}

Pose Pose::Inverse() const {
  const Rotation r_inv = rotation.Inverse();
  return Pose(r_inv, -(r_inv * translation), frame_tag);
}

Eigen::Matrix4d Pose::Matrix() const {
  Eigen::Matrix4d T = Eigen::Matrix4d::Identity();
  T.topLeftCorner<3, 3>() = rotation.Matrix();
  T.topRightCorner<3, 1>() = translation;
  return T;
}

std::optional<Tangent6> Pose::TryLog() const {
  auto omega = rotation.TryLog();
  if (!omega) {
    return std::nullopt;
  }
  return Tangent6(So3LeftJacobianInverse(*omega) * translation, *omega);
}

Tangent6 Pose::Log() const {
  auto log = TryLog();
  if (!log) {
    throw std::domain_error("Pose::Log: rotation angle within tolerance of pi");
  }
  return *log;
}

Matrix6d Pose::Adjoint() const {
  const Eigen::Matrix3d R = rotation.Matrix();
  Matrix6d adj = Matrix6d::Zero();
  adj.topLeftCorner<3, 3>() = R;
  adj.bottomRightCorner<3, 3>() = R;
  adj.topRightCorner<3, 3>() = Skew(translation) * R;
  return adj;
}

Pose Compose(const Pose& a, const Pose& b) {
  return Pose(a.rotation * b.rotation, a.rotation * b.translation +
                                           a.translation,
              a.frame_tag);
}

Pose RelativePose(const Pose& p_i, const Pose& p_j) {
  Pose rel = Compose(p_i.Inverse(), p_j);
  rel.frame_tag = FrameTag::kUnspecified;
  return rel;
}

Eigen::Matrix3d Skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d S;
  S << 0.0, -v.z(), v.y(),  //
      v.z(), 0.0, -v.x(),   //
      -v.y(), v.x(), 0.0;
  return S;
}

Eigen::Matrix3d So3LeftJacobian(const Eigen::Vector3d& omega) {
  const double t = omega.norm();
  const Eigen::Matrix3d W = Skew(omega);
  return Eigen::Matrix3d::Identity() + OneMinusCosOverSq(t) * W +
         TMinusSinOverCube(t) * W * W;
}

Eigen::Matrix3d So3LeftJacobianInverse(const Eigen::Vector3d& omega) {
  const double t = omega.norm();
  const Eigen::Matrix3d W = Skew(omega);
  return Eigen::Matrix3d::Identity() - 0.5 * W + So3InvJacCoeff(t) * W * W;
}

Matrix6d Se3RightJacobianInverse(const Tangent6& xi) {
  return Se3LeftJacobianInverse(Tangent6(-xi.rho, -xi.omega));
}

}  // namespace viosfm
