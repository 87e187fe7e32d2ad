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

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "viosfm/geometry/intrinsics.h"
#include "viosfm/geometry/pose.h"

namespace viosfm {

enum class TriangulationStatus {
  kSuccess = 0,
  kLowParallax,
  kDegenerate,
};

struct TriangulationResult {
  TriangulationStatus status = TriangulationStatus::kDegenerate;
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  // Max pairwise angle (degrees) between the rays from the camera centers
  // to the triangulated point.
  double max_angle_deg = 0.0;

  bool ok() const { return status == TriangulationStatus::kSuccess; }
};

// One pixel observation of a scene point: world pose of the camera plus
// the observed pixel.
using PixelObservation = std::pair<Pose, Eigen::Vector2d>;

// Multi-view DLT over the K-normalized observations, conditioned by
// working in unit-focal camera coordinates. The linear estimate is left to
// bundle adjustment for refinement. Fails with kLowParallax when the max
// pairwise triangulation angle is below min_angle_deg.
TriangulationResult Triangulate(const std::vector<PixelObservation>& obs,
                                const Intrinsics& K, double min_angle_deg);

// Max pairwise angle (degrees) at the point between the given camera
// centers.
double MaxTriangulationAngleDeg(const std::vector<Eigen::Vector3d>& centers,
                                const Eigen::Vector3d& point);

}  // namespace viosfm
