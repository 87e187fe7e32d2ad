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
#include <vector>

#include <Eigen/Core>

#include "viosfm/geometry/pose.h"

namespace viosfm {

// Similarity transform x -> scale * R * x + t.
struct SimilarityTransform {
  double scale = 1.0;
  Rotation rotation;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Vector3d Apply(const Eigen::Vector3d& x) const {
    return scale * (rotation.Matrix() * x) + translation;
  }
};

// Closed-form least-squares similarity (or rigid, if with_scale is false)
// alignment mapping src onto dst: argmin sum ||dst_i - (s R src_i + t)||^2.
// Returns nullopt when the point sets are too small (< 3) or degenerate
// (rank-deficient covariance with ambiguous rotation).
std::optional<SimilarityTransform> UmeyamaAlign(
    const std::vector<Eigen::Vector3d>& src,
    const std::vector<Eigen::Vector3d>& dst, bool with_scale);

}  // namespace viosfm
