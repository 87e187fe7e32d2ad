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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "viosfm/geometry/epipolar.h"
#include "viosfm/sim/simulation.h"
#include "viosfm/verification/verification.h"

using namespace viosfm;

namespace {

ScenarioConfig SmallCorridor(uint64_t seed) {
  ScenarioConfig cfg;
  cfg.world = WorldKind::kCorridorLoop;
  cfg.num_frames = 60;
  cfg.num_points = 400;
  cfg.sigma_px = 0.0;
  cfg.temporal_match_window = 10;
  cfg.covisible_partners = 6;
  cfg.max_view_distance = 8.0;
  cfg.seed = seed;
  return cfg;
}

double RotationDistance(const Rotation& a, const Rotation& b) {
  return (a.Inverse() * b).Log().norm();
}

}  // namespace

TEST_CASE("generation is a pure function of the config") {
  ScenarioConfig cfg = SmallCorridor(99);
  cfg.sigma_px = 0.7;
  cfg.outlier_fraction = 0.2;
  const SimulatedData a = Generate(cfg);
  const SimulatedData b = Generate(cfg);

  CHECK(a.dataset.frames == b.dataset.frames);
  CHECK(a.gt_points.size() == b.gt_points.size());
  for (size_t i = 0; i < a.gt_points.size(); ++i)
    CHECK(a.gt_points[i] == b.gt_points[i]);
  REQUIRE(a.dataset.matches.size() == b.dataset.matches.size());
  for (const auto& [pair, set] : a.dataset.matches)
    CHECK(b.dataset.matches.at(pair).matches == set.matches);
  for (const frame_t f : a.dataset.frames) {
    CHECK(a.dataset.features.Points(f) == b.dataset.features.Points(f));
    CHECK(a.dataset.vio.At(f).translation == b.dataset.vio.At(f).translation);
    CHECK(a.gt_poses.at(f).translation == b.gt_poses.at(f).translation);
  }
  CHECK(a.doppelganger_pairs == b.doppelganger_pairs);
  CHECK(a.gt_inlier_masks == b.gt_inlier_masks);
}

TEST_CASE("noise-free matches satisfy the ground-truth epipolar constraint") {
  const SimulatedData data = Generate(SmallCorridor(3));
  REQUIRE(!data.dataset.matches.empty());

  int checked = 0;
  for (const auto& [pair, set] : data.dataset.matches) {
    const Pose rel =
        RelativePose(data.gt_poses.at(pair.second), data.gt_poses.at(pair.first));
    const auto F = FundamentalFromPrior(data.dataset.intrinsics, rel);
    if (!F) continue;
    REQUIRE(set.IsOneToOne());
    const auto& mask = data.gt_inlier_masks.at(pair);
    REQUIRE(mask.size() == set.matches.size());
    for (size_t i = 0; i < set.matches.size(); ++i) {
      if (!mask[i]) continue;
      const Eigen::Vector2d& xa =
          data.dataset.features.Point(pair.first, set.matches[i].first);
      const Eigen::Vector2d& xb =
          data.dataset.features.Point(pair.second, set.matches[i].second);
      CHECK(SymmetricEpipolarError(*F, xa, xb) < 1e-6);
      ++checked;
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("outlier matches pair features that break the epipolar constraint") {
  ScenarioConfig cfg = SmallCorridor(17);
  cfg.outlier_fraction = 0.3;
  const SimulatedData data = Generate(cfg);

  int false_entries = 0;
  int false_far = 0;
  for (const auto& [pair, set] : data.dataset.matches) {
    const Pose rel =
        RelativePose(data.gt_poses.at(pair.second), data.gt_poses.at(pair.first));
    const auto F = FundamentalFromPrior(data.dataset.intrinsics, rel);
    if (!F) continue;
    const auto& mask = data.gt_inlier_masks.at(pair);
    for (size_t i = 0; i < set.matches.size(); ++i) {
      if (mask[i]) continue;
      ++false_entries;
      const Eigen::Vector2d& xa =
          data.dataset.features.Point(pair.first, set.matches[i].first);
      const Eigen::Vector2d& xb =
          data.dataset.features.Point(pair.second, set.matches[i].second);
      if (SymmetricEpipolarError(*F, xa, xb) > 2.0) ++false_far;
    }
  }
  // Mislabeled pairs land on the correct epipolar line only by accident.
  CHECK(false_entries > 500);
  CHECK(false_far > false_entries / 2);
}

TEST_CASE("duplicated corridor injects self-consistent doppelganger pairs") {
  ScenarioConfig cfg;
  cfg.world = WorldKind::kDuplicatedCorridor;
  cfg.num_frames = 80;
  cfg.num_points = 500;
  cfg.sigma_px = 0.4;
  cfg.temporal_match_window = 10;
  cfg.covisible_partners = 6;
  cfg.max_view_distance = 8.0;
  cfg.seed = 5;
  const SimulatedData data = Generate(cfg);

  REQUIRE(!data.doppelganger_pairs.empty());
  PairingConfig pcfg;
  int accepted = 0;
  for (const FramePair& pair : data.doppelganger_pairs) {
    REQUIRE(data.dataset.matches.count(pair) == 1);
    const MatchSet& set = data.dataset.matches.at(pair);
    const auto& mask = data.gt_inlier_masks.at(pair);
    REQUIRE(mask.size() == set.matches.size());
    CHECK(std::none_of(mask.begin(), mask.end(), [](bool b) { return b; }));

    if (set.matches.size() < 30) continue;
    const auto [F, verdict] =
        RansacFundamental(set, data.dataset.features, pcfg, 7);
    if (verdict.accepted() &&
        verdict.SurvivingMatches() >
            static_cast<int>(0.9 * set.matches.size())) {
      ++accepted;
    }
  }
  // The trap: wrong associations that a geometry-only check calls clean.
  CHECK(accepted >= 1);
}

TEST_CASE("vio with zero noise reproduces the ground truth") {
  const SimulatedData data = Generate(SmallCorridor(21));
  const VioSequence vio = SimulateVio(data.gt_poses, 0.0, 0.0, 77);
  for (const auto& [frame, gt] : data.gt_poses) {
    const Pose& est = vio.At(frame);
    CHECK(est.frame_tag == FrameTag::kVioLocal);
    CHECK((est.translation - gt.translation).norm() < 1e-12);
    CHECK(RotationDistance(est.rotation, gt.rotation) < 1e-12);
  }
  CHECK_THROWS_AS(SimulateVio({}, 0.1, 0.1, 1), std::invalid_argument);
}

TEST_CASE("translation-only vio drift follows the random-walk envelope") {
  const int kFrames = 500;
  const double kSigmaT = 0.005;
  std::map<frame_t, Pose> gt;
  for (int f = 0; f < kFrames; ++f) {
    const double th = 4.0 * std::numbers::pi * f / kFrames;
    gt[f] = Pose(Rotation::Exp({0.0, 0.0, th}),
                 {4.0 * std::cos(th), 4.0 * std::sin(th), 1.0},
                 FrameTag::kWorld);
  }

  std::vector<double> drift;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    const VioSequence vio = SimulateVio(gt, 0.0, kSigmaT, seed);
    drift.push_back(
        (vio.At(kFrames - 1).translation - gt.at(kFrames - 1).translation)
            .norm());
    // Rotations stay exact when only translation noise is injected.
    CHECK(RotationDistance(vio.At(kFrames - 1).rotation,
                           gt.at(kFrames - 1).rotation) < 1e-12);
  }
  std::nth_element(drift.begin(), drift.begin() + 50, drift.end());
  // Envelope sqrt(N) * sigma = 0.112 m; the median sits near it.
  CHECK(drift[50] > 0.05);
  CHECK(drift[50] < 0.35);
}

TEST_CASE("per-frame vio noise is zero-mean with the configured scale") {
  const int kFrames = 10001;
  std::map<frame_t, Pose> gt;
  for (int f = 0; f < kFrames; ++f) {
    const double th = 0.002 * f;
    gt[f] = Pose(Rotation::Exp({0.3 * std::sin(th), th, 0.0}),
                 {std::cos(th), 2.0 * th, std::sin(3.0 * th)},
                 FrameTag::kWorld);
  }
  const double sigma_rot_deg = 0.2;
  const double sigma_trans = 0.005;
  const double axis_rot = sigma_rot_deg * std::numbers::pi / 180.0 / std::sqrt(3.0);
  const double axis_trans = sigma_trans / std::sqrt(3.0);
  const VioSequence vio = SimulateVio(gt, sigma_rot_deg, sigma_trans, 20260815);

  Eigen::Matrix<double, 6, 1> mean = Eigen::Matrix<double, 6, 1>::Zero();
  Eigen::Matrix<double, 6, 1> sq = Eigen::Matrix<double, 6, 1>::Zero();
  const int n = kFrames - 1;
  for (int f = 0; f + 1 < kFrames; ++f) {
    const Pose gt_rel = RelativePose(gt.at(f), gt.at(f + 1));
    const Pose vio_rel = vio.RelativeBetween(f, f + 1);
    Eigen::Matrix<double, 6, 1> z;
    z.head<3>() =
        (gt_rel.rotation.Inverse() * vio_rel.rotation).Log() / axis_rot;
    z.tail<3>() = (vio_rel.translation - gt_rel.translation) / axis_trans;
    mean += z;
    sq += z.cwiseProduct(z);
  }
  mean /= n;
  sq /= n;

  // Under the noise model each standardized axis is iid standard normal:
  // n * ||mean||^2 is chi-square with 6 dof (95th percentile 12.592) and
  // the per-axis second moment concentrates at 1.
  CHECK(n * mean.squaredNorm() < 12.592);
  for (int i = 0; i < 6; ++i) {
    CHECK(sq[i] > 0.9);
    CHECK(sq[i] < 1.1);
  }
}

TEST_CASE("ate evaluation aligns away the allowed gauge freedom") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::map<frame_t, Pose> gt;
  for (int f = 0; f < 300; ++f) {
    gt[f] = Pose(Rotation::Identity(),
                 {gauss(rng), gauss(rng), gauss(rng)}, FrameTag::kWorld);
  }

  const auto self = EvaluateAte(gt, gt, false);
  REQUIRE(self.has_value());
  CHECK(self->rmse < 1e-12);
  CHECK(self->median < 1e-12);
  CHECK(self->per_frame.size() == gt.size());

  const Rotation R = Rotation::Exp({0.4, -1.1, 0.7});
  const Eigen::Vector3d t(3.0, -2.0, 11.0);
  std::map<frame_t, Pose> rigid, scaled;
  for (const auto& [f, pose] : gt) {
    rigid[f] = Pose(R * pose.rotation, R.Matrix() * pose.translation + t,
                    FrameTag::kWorld);
    scaled[f] = Pose(R * pose.rotation,
                     2.3 * (R.Matrix() * pose.translation) + t,
                     FrameTag::kWorld);
  }
  CHECK(EvaluateAte(rigid, gt, false)->rmse < 1e-9);
  CHECK(EvaluateAte(scaled, gt, true)->rmse < 1e-9);
  // A rigid fit cannot undo scale; the residual reflects it.
  CHECK(EvaluateAte(scaled, gt, false)->rmse > 0.5);

  const double sigma = 0.01;
  std::map<frame_t, Pose> noisy = gt;
  for (auto& [f, pose] : noisy)
    pose.translation += sigma * Eigen::Vector3d(gauss(rng), gauss(rng),
                                                gauss(rng));
  const double expected = sigma * std::sqrt(3.0);
  const double got = EvaluateAte(noisy, gt, false)->rmse;
  CHECK(got > 0.9 * expected);
  CHECK(got < 1.1 * expected);

  CHECK(!EvaluateAte({}, gt, false).has_value());
  std::map<frame_t, Pose> two = {{0, gt.at(0)}, {1, gt.at(1)}};
  CHECK(!EvaluateAte(two, gt, false).has_value());
}

TEST_CASE("features sit on ground-truth projections up to clamped noise") {
  ScenarioConfig cfg = SmallCorridor(31);
  cfg.num_frames = 30;
  cfg.num_points = 150;

  for (const double sigma : {0.0, 0.8}) {
    cfg.sigma_px = sigma;
    const SimulatedData data = Generate(cfg);
    const double bound = sigma == 0.0 ? 1e-12 : 4.0 * sigma * std::sqrt(2.0);
    for (const frame_t f : data.dataset.frames) {
      for (const Eigen::Vector2d& feat : data.dataset.features.Points(f)) {
        double best = std::numeric_limits<double>::infinity();
        for (const Eigen::Vector3d& pt : data.gt_points) {
          const auto px = Project(data.gt_poses.at(f), pt,
                                  data.dataset.intrinsics);
          if (px) best = std::min(best, (*px - feat).norm());
        }
        CHECK(best <= bound + 1e-12);
      }
    }
  }
}

TEST_CASE("texture gaps cap correspondences through affected frames") {
  ScenarioConfig cfg = SmallCorridor(41);
  cfg.sigma_px = 0.5;
  cfg.texture_gaps = {{30, 39}};
  const SimulatedData data = Generate(cfg);

  const auto in_gap = [](frame_t f) { return f >= 30 && f <= 39; };
  int capped_pairs = 0;
  int rich_outside = 0;
  for (const auto& [pair, set] : data.dataset.matches) {
    if (in_gap(pair.first) || in_gap(pair.second)) {
      CHECK(set.matches.size() <= 5);
      ++capped_pairs;
    } else if (set.matches.size() > 5) {
      ++rich_outside;
    }
  }
  CHECK(capped_pairs > 0);
  CHECK(rich_outside > 0);
}

TEST_CASE("infeasible visibility fails loudly") {
  ScenarioConfig cfg = SmallCorridor(51);
  cfg.num_points = 1;
  CHECK_THROWS_WITH_AS(Generate(cfg), doctest::Contains("observes no points"),
                       std::runtime_error);
}

TEST_CASE("config validation names the offending field") {
  const auto expect = [](ScenarioConfig cfg, const char* message) {
    CHECK_THROWS_WITH_AS(Generate(cfg), doctest::Contains(message),
                         std::invalid_argument);
  };
  ScenarioConfig base = SmallCorridor(1);

  ScenarioConfig cfg = base;
  cfg.num_frames = 0;
  expect(cfg, "num_frames must be >= 1");
  cfg = base;
  cfg.num_points = 0;
  expect(cfg, "num_points must be >= 1");
  cfg = base;
  cfg.sigma_px = -0.1;
  expect(cfg, "sigma_px must be >= 0");
  cfg = base;
  cfg.outlier_fraction = 1.0;
  expect(cfg, "outlier_fraction must be in [0, 1)");
  cfg = base;
  cfg.vio_sigma_rot_deg = -1.0;
  expect(cfg, "vio noise sigmas must be >= 0");
  cfg = base;
  cfg.max_view_distance = 0.0;
  expect(cfg, "max_view_distance must be > 0");
  cfg = base;
  cfg.temporal_match_window = -1;
  expect(cfg, "match emission counts must be >= 0");
  cfg = base;
  cfg.texture_gaps = {{10, 5}};
  expect(cfg, "texture gap range is reversed");
}
