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

#include "viosfm/geometry/pose.h"

namespace viosfm {

// Pinhole camera without distortion.
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  Intrinsics() = default;
  Intrinsics(double fx_in, double fy_in, double cx_in, double cy_in)
      : fx(fx_in), fy(fy_in), cx(cx_in), cy(cy_in) {}

  Eigen::Matrix3d Matrix() const;
  Eigen::Matrix3d InverseMatrix() const;

  Eigen::Vector2d CameraToPixel(const Eigen::Vector3d& p_cam) const {
    return {fx * p_cam.x() / p_cam.z() + cx, fy * p_cam.y() / p_cam.z() + cy};
  }
  // Unit-depth ray direction in the camera frame.
  Eigen::Vector3d PixelToRay(const Eigen::Vector2d& px) const {
    return {(px.x() - cx) / fx, (px.y() - cy) / fy, 1.0};
  }
};

// Pinhole projection of a world point through the camera with the given
// world pose. Empty if the point is at or behind the camera plane.
std::optional<Eigen::Vector2d> Project(const Pose& pose,
                                       const Eigen::Vector3d& point,
                                       const Intrinsics& K);

// Depth of a world point in the camera frame of the given pose.
double PointDepth(const Pose& pose, const Eigen::Vector3d& point);

}  // namespace viosfm
