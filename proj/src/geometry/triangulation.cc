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

#include "viosfm/geometry/triangulation.h"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace viosfm {

namespace {
constexpr double kRadToDeg = 180.0 / M_PI;
}  // namespace

double MaxTriangulationAngleDeg(const std::vector<Eigen::Vector3d>& centers,
                                const Eigen::Vector3d& point) {
  double max_angle = 0.0;
  for (size_t i = 0; i < centers.size(); ++i) {
    const Eigen::Vector3d ray_i = centers[i] - point;
    const double norm_i = ray_i.norm();
    if (norm_i < 1e-12) continue;
    for (size_t j = i + 1; j < centers.size(); ++j) {
      const Eigen::Vector3d ray_j = centers[j] - point;
      const double norm_j = ray_j.norm();
      if (norm_j < 1e-12) continue;
      const double cos_angle =
          std::clamp(ray_i.dot(ray_j) / (norm_i * norm_j), -1.0, 1.0);
      max_angle = std::max(max_angle, std::acos(cos_angle));
    }
  }
  return max_angle * kRadToDeg;
}

TriangulationResult Triangulate(const std::vector<PixelObservation>& obs,
                                const Intrinsics& K, double min_angle_deg) {
  TriangulationResult result;
  if (obs.size() < 2) {
    result.status = TriangulationStatus::kDegenerate;
    return result;
  }

  // Each observation contributes two rows of the DLT system built from
  // cam_from_world projection rows in unit-focal coordinates.
  Eigen::MatrixXd A(2 * obs.size(), 4);
  for (size_t i = 0; i < obs.size(); ++i) {
    const Pose cam_from_world = obs[i].first.Inverse();
    Eigen::Matrix<double, 3, 4> P;
    P.leftCols<3>() = cam_from_world.rotation.Matrix();
    P.col(3) = cam_from_world.translation;
    const Eigen::Vector3d ray = K.PixelToRay(obs[i].second);
    A.row(2 * i + 0) = ray.x() * P.row(2) - P.row(0);
    A.row(2 * i + 1) = ray.y() * P.row(2) - P.row(1);
  }

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const Eigen::Vector4d h = svd.matrixV().col(3);
  if (std::abs(h(3)) < 1e-12 * h.head<3>().norm()) {
    result.status = TriangulationStatus::kDegenerate;
    return result;
  }
  result.point = h.head<3>() / h(3);
  if (!result.point.allFinite()) {
    result.status = TriangulationStatus::kDegenerate;
    return result;
  }

  std::vector<Eigen::Vector3d> centers;
  centers.reserve(obs.size());
  for (const PixelObservation& o : obs) {
    centers.push_back(o.first.translation);
  }
  result.max_angle_deg = MaxTriangulationAngleDeg(centers, result.point);
  result.status = result.max_angle_deg < min_angle_deg
                      ? TriangulationStatus::kLowParallax
                      : TriangulationStatus::kSuccess;
  return result;
}

}  // namespace viosfm
