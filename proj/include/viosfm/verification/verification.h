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

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "viosfm/geometry/intrinsics.h"
#include "viosfm/geometry/pose.h"
#include "viosfm/matching/feature_table.h"
#include "viosfm/matching/retrieval.h"
#include "viosfm/sfm/scene.h"
#include "viosfm/types.h"

namespace viosfm {

struct PairingConfig {
  int n1_temporal = 40;
  int n2_retrieval = 30;
  double t_ee = 20.0;             // pixels
  double max_outlier_ratio = 0.5;
  double ransac_threshold = 2.0;  // pixels
  int ransac_max_iters = 2000;
  int min_inliers = 15;
};

enum class PairStatus {
  // Screening passed or was skipped; the RANSAC stage has not run yet.
  kPending = 0,
  kRejectedByVio,
  kRejectedByRansac,
  kAccepted,
};

struct PairVerdict {
  PairStatus status = PairStatus::kPending;
  // Set iff the VIO screening stage actually ran.
  std::optional<double> ee_outlier_ratio;
  std::vector<bool> inlier_mask;
  int ransac_inlier_count = 0;

  bool accepted() const { return status == PairStatus::kAccepted; }
  int SurvivingMatches() const {
    int n = 0;
    for (const bool b : inlier_mask) n += b ? 1 : 0;
    return n;
  }
};

enum class VerificationMode {
  kTwoStep = 0,
  // Ablation: skip the VIO screening stage entirely.
  kRansacOnly,
};

// Per frame: union of its n1 nearest temporal successors and top-n2
// retrieval results, deduplicated, each pair emitted once (first < second).
std::vector<FramePair> GenerateCandidates(const std::vector<frame_t>& frames,
                                          const RetrievalProvider& retrieval,
                                          const PairingConfig& cfg);

// Epipolar-error screening against the VIO prior. prior_rel is the pose of
// frame_a expressed in frame_b's camera frame. A degenerate prior (pure
// rotation) skips screening and leaves the verdict pending for RANSAC.
PairVerdict VioScreen(const MatchSet& pair, const FeatureTable& features,
                      const Pose& prior_rel, const Intrinsics& K,
                      const PairingConfig& cfg);

// Normalized 8-point solver inside RANSAC with adaptive iteration count;
// inliers by symmetric epipolar distance, best model refit on its inliers.
std::pair<Eigen::Matrix3d, PairVerdict> RansacFundamental(
    const MatchSet& pair, const FeatureTable& features,
    const PairingConfig& cfg, uint64_t seed);

// Two-step verification over all candidates. Final inlier_mask is the
// intersection of matches surviving both stages. RANSAC seeds derive
// deterministically from `seed` and the frame ids.
std::map<FramePair, PairVerdict> VerifyPairs(
    const std::vector<FramePair>& candidates,
    const std::map<FramePair, MatchSet>& matchsets,
    const FeatureTable& features, const VioSequence& vio, const Intrinsics& K,
    const PairingConfig& cfg, uint64_t seed,
    VerificationMode mode = VerificationMode::kTwoStep);

}  // namespace viosfm
