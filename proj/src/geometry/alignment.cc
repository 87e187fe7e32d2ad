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

#include "viosfm/geometry/alignment.h"

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace viosfm {

std::optional<SimilarityTransform> UmeyamaAlign(
    const std::vector<Eigen::Vector3d>& src,
    const std::vector<Eigen::Vector3d>& dst, bool with_scale) {
  if (src.size() != dst.size() || src.size() < 3) return std::nullopt;
  const double n = static_cast<double>(src.size());

  Eigen::Vector3d mean_src = Eigen::Vector3d::Zero();
  Eigen::Vector3d mean_dst = Eigen::Vector3d::Zero();
  for (size_t i = 0; i < src.size(); ++i) {
    mean_src += src[i];
    mean_dst += dst[i];
  }
  mean_src /= n;
  mean_dst /= n;

  double src_variance = 0.0;
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
  for (size_t i = 0; i < src.size(); ++i) {
    const Eigen::Vector3d ds = src[i] - mean_src;
    const Eigen::Vector3d dd = dst[i] - mean_dst;
    src_variance += ds.squaredNorm();
    covariance += dd * ds.transpose();
  }
  src_variance /= n;
  covariance /= n;
  if (src_variance < 1e-18) return std::nullopt;

  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      covariance, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d d = svd.singularValues();
  // Collinear or coincident points leave the rotation about the dominant
  // axis unconstrained.
  if (d(1) < 1e-12 * (d(0) + 1e-300)) return std::nullopt;

  Eigen::Vector3d s = Eigen::Vector3d::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) {
    s(2) = -1.0;
  }

  SimilarityTransform transform;
  const Eigen::Matrix3d R =
      svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
  transform.rotation = Rotation::FromMatrix(R);
  transform.scale = with_scale ? d.dot(s) / src_variance : 1.0;
  transform.translation = mean_dst - transform.scale * (R * mean_src);
  return transform;
}

}  // namespace viosfm
