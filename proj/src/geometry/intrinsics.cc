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

#include "viosfm/geometry/intrinsics.h"

namespace viosfm {

Eigen::Matrix3d Intrinsics::Matrix() const {
  Eigen::Matrix3d K = Eigen::Matrix3d::Identity();
  K(0, 0) = fx;
  K(1, 1) = fy;
  K(0, 2) = cx;
  K(1, 2) = cy;
  return K;
}

Eigen::Matrix3d Intrinsics::InverseMatrix() const {
  Eigen::Matrix3d K_inv = Eigen::Matrix3d::Identity();
  K_inv(0, 0) = 1.0 / fx;
  K_inv(1, 1) = 1.0 / fy;
  K_inv(0, 2) = -cx / fx;
  K_inv(1, 2) = -cy / fy;
  return K_inv;
}

std::optional<Eigen::Vector2d> Project(const Pose& pose,
                                       const Eigen::Vector3d& point,
                                       const Intrinsics& K) {
  const Eigen::Vector3d p_cam = pose.Inverse() * point;
  if (p_cam.z() <= 0.0) {
    return std::nullopt;
  }
  return K.CameraToPixel(p_cam);
}

double PointDepth(const Pose& pose, const Eigen::Vector3d& point) {
  return (pose.Inverse() * point).z();
}

}  // namespace viosfm
