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

#include "viosfm/geometry/epipolar.h"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace viosfm {
namespace {

// Similarity transform moving the centroid to the origin and the mean
// distance to sqrt(2), as a 3x3 homogeneous matrix.
Eigen::Matrix3d HartleyNormalization(
    const std::vector<Eigen::Vector2d>& points) {
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& p : points) {
    centroid += p;
  }
  centroid /= static_cast<double>(points.size());

  double mean_dist = 0.0;
  for (const auto& p : points) {
    mean_dist += (p - centroid).norm();
  }
  mean_dist /= static_cast<double>(points.size());
  const double scale = mean_dist > 1e-12 ? std::sqrt(2.0) / mean_dist : 1.0;

  Eigen::Matrix3d T = Eigen::Matrix3d::Identity();
  T(0, 0) = scale;
  T(1, 1) = scale;
  T(0, 2) = -scale * centroid.x();
  T(1, 2) = -scale * centroid.y();
  return T;
}

}  // namespace

std::optional<Eigen::Matrix3d> FundamentalFromPrior(const Intrinsics& K,
                                                    const Pose& rel) {
  if (rel.translation.norm() < 1e-9) {
    return std::nullopt;
  }
  const Eigen::Matrix3d K_inv = K.InverseMatrix();
  return K_inv.transpose() * Skew(rel.translation) * rel.rotation.Matrix() *
         K_inv;
}

double EpipolarError(const Eigen::Matrix3d& F, const Eigen::Vector2d& x_a,
                     const Eigen::Vector2d& x_b) {
  const Eigen::Vector3d line = F * x_a.homogeneous();
  const double dir_norm = line.head<2>().norm();
  if (dir_norm < 1e-15) {
    return std::numeric_limits<double>::infinity();
  }
  return std::abs(line.dot(x_b.homogeneous())) / dir_norm;
}

double SymmetricEpipolarError(const Eigen::Matrix3d& F,
                              const Eigen::Vector2d& x_a,
                              const Eigen::Vector2d& x_b) {
  return std::max(EpipolarError(F, x_a, x_b),
                  EpipolarError(F.transpose(), x_b, x_a));
}

std::optional<Eigen::Matrix3d> EightPointFundamental(
    const std::vector<Eigen::Vector2d>& points_a,
    const std::vector<Eigen::Vector2d>& points_b) {
  const size_t n = points_a.size();
  if (n < 8 || points_b.size() != n) {
    return std::nullopt;
  }

  const Eigen::Matrix3d T_a = HartleyNormalization(points_a);
  const Eigen::Matrix3d T_b = HartleyNormalization(points_b);

  Eigen::MatrixXd A(n, 9);
  for (size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d a = T_a * points_a[i].homogeneous();
    const Eigen::Vector3d b = T_b * points_b[i].homogeneous();
    A.row(i) << b.x() * a.x(), b.x() * a.y(), b.x(),  //
        b.y() * a.x(), b.y() * a.y(), b.y(),          //
        a.x(), a.y(), 1.0;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  if (svd.rank() < 8) {
    return std::nullopt;
  }
  const Eigen::Matrix<double, 9, 1> f = svd.matrixV().col(8);
  Eigen::Matrix3d F_norm;
  F_norm << f(0), f(1), f(2), f(3), f(4), f(5), f(6), f(7), f(8);

  // Rank-2 projection.
  Eigen::JacobiSVD<Eigen::Matrix3d> svd_f(
      F_norm, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d sv = svd_f.singularValues();
  sv.z() = 0.0;
  F_norm = svd_f.matrixU() * sv.asDiagonal() * svd_f.matrixV().transpose();

  Eigen::Matrix3d F = T_b.transpose() * F_norm * T_a;
  const double norm = F.norm();
  if (!std::isfinite(norm) || norm < 1e-15) {
    return std::nullopt;
  }
  return Eigen::Matrix3d(F / norm);
}

}  // namespace viosfm
