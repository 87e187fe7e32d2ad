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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "viosfm/geometry/epipolar.h"
#include "viosfm/geometry/intrinsics.h"
#include "viosfm/geometry/pose.h"

namespace viosfm {
namespace {

const Intrinsics kUnitK{1.0, 1.0, 0.0, 0.0};
const Intrinsics kVgaK{500.0, 500.0, 320.0, 240.0};

struct SyntheticPair {
  Pose world_from_a;
  Pose world_from_b;
  std::vector<Eigen::Vector2d> pixels_a;
  std::vector<Eigen::Vector2d> pixels_b;
};

// Two converging cameras observing a small point cloud, noise free.
SyntheticPair MakeSyntheticPair(uint32_t seed, const Intrinsics& K,
                                int num_points) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> spread(-1.0, 1.0);

  SyntheticPair pair;
  pair.world_from_a = Pose::Identity();
  pair.world_from_b.rotation = Rotation::Exp(Eigen::Vector3d(0.02, -0.1, 0.03));
  pair.world_from_b.translation = Eigen::Vector3d(0.8, 0.1, -0.05);

  while (static_cast<int>(pair.pixels_a.size()) < num_points) {
    const Eigen::Vector3d point(2.0 * spread(rng), 2.0 * spread(rng),
                                6.0 + 2.0 * spread(rng));
    const auto in_a = Project(pair.world_from_a, point, K);
    const auto in_b = Project(pair.world_from_b, point, K);
    if (!in_a || !in_b) continue;
    pair.pixels_a.push_back(*in_a);
    pair.pixels_b.push_back(*in_b);
  }
  return pair;
}

TEST_CASE("fundamental from prior reduces to the translation skew") {
  Pose rel = Pose::Identity();
  rel.translation = Eigen::Vector3d(1.0, 0.0, 0.0);
  const auto F = FundamentalFromPrior(kUnitK, rel);
  REQUIRE(F.has_value());
  Eigen::Matrix3d expected;
  expected << 0, 0, 0, 0, 0, -1, 0, 1, 0;
  CHECK((*F - expected).norm() < 1e-12);
}

TEST_CASE("fundamental from prior has rank 2") {
  std::mt19937 rng(41);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Pose rel;
    rel.rotation = Rotation::Exp(
        Eigen::Vector3d(dist(rng), dist(rng), dist(rng)));
    rel.translation = Eigen::Vector3d(dist(rng), dist(rng), dist(rng));
    if (rel.translation.norm() < 1e-3) continue;
    const auto F = FundamentalFromPrior(kVgaK, rel);
    REQUIRE(F.has_value());
    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(*F);
    const Eigen::Vector3d s = svd.singularValues();
    CHECK(s(1) > 1e-9 * s(0));
    CHECK(s(2) < 1e-9 * s(0));
  }
}

TEST_CASE("fundamental from prior rejects pure rotation") {
  Pose rel;
  rel.rotation = Rotation::Exp(Eigen::Vector3d(0.0, 0.3, 0.0));
  rel.translation = Eigen::Vector3d::Zero();
  CHECK_FALSE(FundamentalFromPrior(kVgaK, rel).has_value());
}

TEST_CASE("epipolar error against the explicit line-distance formula") {
  Eigen::Matrix3d F = Skew(Eigen::Vector3d(1.0, 0.0, 0.0));

  CHECK(EpipolarError(F, Eigen::Vector2d(0, 0), Eigen::Vector2d(0, 0)) ==
        doctest::Approx(0.0));
  // Line for (0,0) is y = 0; the distance of (3,5) to it is 5.
  CHECK(EpipolarError(F, Eigen::Vector2d(0, 0), Eigen::Vector2d(3, 5)) ==
        doctest::Approx(5.0));

  std::mt19937 rng(43);
  std::uniform_real_distribution<double> dist(-10.0, 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::Matrix3d rand_f;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) rand_f(r, c) = dist(rng);
    const Eigen::Vector2d x_a(dist(rng), dist(rng));
    const Eigen::Vector2d x_b(dist(rng), dist(rng));
    const Eigen::Vector3d line = rand_f * x_a.homogeneous();
    const double denom = std::hypot(line(0), line(1));
    if (denom < 1e-12) continue;
    const double oracle =
        std::abs(line(0) * x_b(0) + line(1) * x_b(1) + line(2)) / denom;
    CHECK(EpipolarError(rand_f, x_a, x_b) == doctest::Approx(oracle));
  }
}

TEST_CASE("epipolar error returns infinity for a degenerate line") {
  // F maps every point to a line with zero direction part.
  Eigen::Matrix3d F = Eigen::Matrix3d::Zero();
  F(2, 2) = 1.0;
  CHECK(std::isinf(
      EpipolarError(F, Eigen::Vector2d(1, 2), Eigen::Vector2d(3, 4))));
}

TEST_CASE("noise-free correspondences satisfy the prior fundamental") {
  const SyntheticPair pair = MakeSyntheticPair(47, kVgaK, 60);
  const Pose rel = RelativePose(pair.world_from_b, pair.world_from_a);
  const auto F = FundamentalFromPrior(kVgaK, rel);
  REQUIRE(F.has_value());
  for (size_t i = 0; i < pair.pixels_a.size(); ++i) {
    REQUIRE(EpipolarError(*F, pair.pixels_a[i], pair.pixels_b[i]) < 1e-6);
    REQUIRE(SymmetricEpipolarError(*F, pair.pixels_a[i], pair.pixels_b[i]) <
            1e-6);
  }
}

TEST_CASE("symmetric error is the max of the two one-sided errors") {
  const SyntheticPair pair = MakeSyntheticPair(53, kVgaK, 10);
  const Pose rel = RelativePose(pair.world_from_b, pair.world_from_a);
  const auto F = FundamentalFromPrior(kVgaK, rel);
  REQUIRE(F.has_value());
  const Eigen::Matrix3d Ft = F->transpose();
  std::mt19937 rng(59);
  std::uniform_real_distribution<double> jitter(-8.0, 8.0);
  for (size_t i = 0; i < pair.pixels_a.size(); ++i) {
    const Eigen::Vector2d noisy_b =
        pair.pixels_b[i] + Eigen::Vector2d(jitter(rng), jitter(rng));
    const double fwd = EpipolarError(*F, pair.pixels_a[i], noisy_b);
    const double bwd = EpipolarError(Ft, noisy_b, pair.pixels_a[i]);
    CHECK(SymmetricEpipolarError(*F, pair.pixels_a[i], noisy_b) ==
          doctest::Approx(std::max(fwd, bwd)));
  }
}

TEST_CASE("eight point solver recovers the fundamental matrix") {
  const SyntheticPair pair = MakeSyntheticPair(61, kVgaK, 24);
  const auto F = EightPointFundamental(pair.pixels_a, pair.pixels_b);
  REQUIRE(F.has_value());
  for (size_t i = 0; i < pair.pixels_a.size(); ++i) {
    REQUIRE(SymmetricEpipolarError(*F, pair.pixels_a[i], pair.pixels_b[i]) <
            1e-6);
  }

  // Same matrix as the prior route, up to scale and global sign.
  const Pose rel = RelativePose(pair.world_from_b, pair.world_from_a);
  const Eigen::Matrix3d prior_f =
      FundamentalFromPrior(kVgaK, rel)->normalized();
  Eigen::Matrix3d solved = F->normalized();
  if (solved(2, 1) * prior_f(2, 1) < 0.0) solved = -solved;
  CHECK((solved - prior_f).norm() < 1e-6);
}

TEST_CASE("eight point solver needs eight matches and non-degenerate input") {
  const SyntheticPair pair = MakeSyntheticPair(67, kVgaK, 7);
  CHECK_FALSE(EightPointFundamental(pair.pixels_a, pair.pixels_b).has_value());

  // All points identical: rank collapse.
  std::vector<Eigen::Vector2d> same_a(10, Eigen::Vector2d(100.0, 100.0));
  std::vector<Eigen::Vector2d> same_b(10, Eigen::Vector2d(150.0, 120.0));
  CHECK_FALSE(EightPointFundamental(same_a, same_b).has_value());
}

}  // namespace
}  // namespace viosfm
