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

#include "viosfm/ba/residuals.h"

#include <cmath>

namespace viosfm {

double AdaptiveWeight(int correspondence_count, const BaConfig& cfg) {
  return cfg.alpha * std::exp(-cfg.beta * correspondence_count);
}

double CauchyLoss(double squared_norm, double scale) {
  const double c2 = scale * scale;
  return c2 * std::log1p(squared_norm / c2);
}

double CauchyLossDerivative(double squared_norm, double scale) {
  const double c2 = scale * scale;
  return 1.0 / (1.0 + squared_norm / c2);
}

std::optional<Eigen::Vector2d> VisualResidual(const Pose& p,
                                              const Eigen::Vector3d& X,
                                              const Intrinsics& K,
                                              const Eigen::Vector2d& z) {
  const auto projected = Project(p, X, K);
  if (!projected) return std::nullopt;
  return z - *projected;
}

std::optional<VisualJacobians> VisualResidualJacobians(
    const Pose& p, const Eigen::Vector3d& X, const Intrinsics& K,
    const Eigen::Vector2d& z) {
  const Eigen::Matrix3d R = p.rotation.Matrix();
  const Eigen::Vector3d Xc = R.transpose() * (X - p.translation);
  if (Xc.z() <= 0.0) return std::nullopt;

  const double x = Xc.x();
  const double y = Xc.y();
  const double inv_z = 1.0 / Xc.z();

  VisualJacobians out;
  out.residual = z - Eigen::Vector2d(K.fx * x * inv_z + K.cx,
                                     K.fy * y * inv_z + K.cy);

  Eigen::Matrix<double, 2, 3> dpi_dXc;
  dpi_dXc << K.fx * inv_z, 0.0, -K.fx * x * inv_z * inv_z,
      0.0, K.fy * inv_z, -K.fy * y * inv_z * inv_z;

  // Right-multiplicative increment: dXc/drho = -I, dXc/domega = [Xc]x.
  out.j_pose.leftCols<3>() = dpi_dXc;
  out.j_pose.rightCols<3>() = -dpi_dXc * Skew(Xc);
  out.j_point = -dpi_dXc * R.transpose();
  out.j_intrinsics << -x * inv_z, 0.0, -1.0, 0.0,
      0.0, -y * inv_z, 0.0, -1.0;
  return out;
}

std::optional<Tangent6> RelativeResidual(const Pose& p_i, const Pose& p_j,
                                         const Pose& prior) {
  const Pose difference = Compose(prior.Inverse(), RelativePose(p_i, p_j));
  return difference.TryLog();
}

std::optional<RelativeJacobians> RelativeResidualJacobians(const Pose& p_i,
                                                           const Pose& p_j,
                                                           const Pose& prior) {
  const auto r = RelativeResidual(p_i, p_j, prior);
  if (!r) return std::nullopt;

  RelativeJacobians out;
  out.residual = r->Vector();
  const Matrix6d jr_inv = Se3RightJacobianInverse(*r);
  out.j_pose_j = jr_inv;
  out.j_pose_i = -jr_inv * RelativePose(p_j, p_i).Adjoint();
  return out;
}

}  // namespace viosfm
