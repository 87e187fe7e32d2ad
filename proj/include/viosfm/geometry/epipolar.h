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

#include "viosfm/geometry/intrinsics.h"
#include "viosfm/geometry/pose.h"

namespace viosfm {

// Fundamental matrix induced by known intrinsics and a relative pose prior.
// rel is the pose of the first camera expressed in the second camera's
// frame, so that x_b^T * F * x_a = 0 for true correspondences (x_a, x_b).
// F has rank 2 by construction. Empty if the relative translation is below
// 1e-9 (pure rotation, no epipolar geometry).
std::optional<Eigen::Matrix3d> FundamentalFromPrior(const Intrinsics& K,
                                                    const Pose& rel);

// Perpendicular pixel distance of x_b to the epipolar line F * x_a.
// Returns +inf if the line direction degenerates.
double EpipolarError(const Eigen::Matrix3d& F, const Eigen::Vector2d& x_a,
                     const Eigen::Vector2d& x_b);

// Max of the two one-sided epipolar errors.
double SymmetricEpipolarError(const Eigen::Matrix3d& F,
                              const Eigen::Vector2d& x_a,
                              const Eigen::Vector2d& x_b);

// Normalized (Hartley) eight-point solve of x_b^T * F * x_a = 0 over all
// given correspondences in a least-squares sense, with the rank-2
// constraint enforced. Empty if fewer than 8 points or the system is
// degenerate.
std::optional<Eigen::Matrix3d> EightPointFundamental(
    const std::vector<Eigen::Vector2d>& points_a,
    const std::vector<Eigen::Vector2d>& points_b);

}  // namespace viosfm
