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

#include "viosfm/geometry/intrinsics.h"
#include "viosfm/geometry/pose.h"
#include "viosfm/types.h"

namespace viosfm {

struct BaConfig {
  double alpha = 1e3;
  double beta = 0.003;
  double cauchy_scale = 1.0;  // pixels
  int max_iterations = 100;
  double function_tolerance = 1e-8;
  double parameter_tolerance = 1e-10;
  bool optimize_intrinsics = false;
};

// Weight of one relative-pose term given the verified correspondence
// count between the two frames: alpha * exp(-beta * count). Few shared
// correspondences mean a weak visual link, so the prior weighs more.
double AdaptiveWeight(int correspondence_count, const BaConfig& cfg);

// Cauchy loss rho(s) = c^2 log(1 + s/c^2) on the squared residual norm s,
// and its derivative. rho' scales residual and Jacobian by sqrt(rho') in
// the solver (first-order robustification).
double CauchyLoss(double squared_norm, double scale);
double CauchyLossDerivative(double squared_norm, double scale);

// Reprojection residual z - project(p, X, K). Empty when X lies behind
// the camera.
std::optional<Eigen::Vector2d> VisualResidual(const Pose& p,
                                              const Eigen::Vector3d& X,
                                              const Intrinsics& K,
                                              const Eigen::Vector2d& z);

// Residual plus analytic Jacobians. Pose Jacobians are with respect to a
// right-multiplicative tangent increment p * Exp(xi), xi = [rho; omega].
// Intrinsics Jacobian columns are ordered (fx, fy, cx, cy).
struct VisualJacobians {
  Eigen::Vector2d residual;
  Eigen::Matrix<double, 2, 6> j_pose;
  Eigen::Matrix<double, 2, 3> j_point;
  Eigen::Matrix<double, 2, 4> j_intrinsics;
};
std::optional<VisualJacobians> VisualResidualJacobians(
    const Pose& p, const Eigen::Vector3d& X, const Intrinsics& K,
    const Eigen::Vector2d& z);

// Relative-motion residual Log(inverse(prior) * relative_pose(p_i, p_j)),
// zero iff the estimated relative pose equals the prior. Empty when the
// difference rotation is within the log singularity band at pi.
std::optional<Tangent6> RelativeResidual(const Pose& p_i, const Pose& p_j,
                                         const Pose& prior);

struct RelativeJacobians {
  Vector6d residual;
  Matrix6d j_pose_i;
  Matrix6d j_pose_j;
};
std::optional<RelativeJacobians> RelativeResidualJacobians(const Pose& p_i,
                                                           const Pose& p_j,
                                                           const Pose& prior);

}  // namespace viosfm
