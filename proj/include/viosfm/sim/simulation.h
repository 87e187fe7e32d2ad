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

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "viosfm/sfm/pipeline.h"
#include "viosfm/sfm/scene.h"
#include "viosfm/types.h"

namespace viosfm {

// Synthetic world layouts. The duplicated corridor contains two congruent
// point layouts 20 m apart vertically, visited one after the other, with
// visually self-consistent but geometrically wrong matches injected
// between twin frames.
enum class WorldKind {
  kBoxCloud,
  kCorridorLoop,
  kDuplicatedCorridor,
};

// Round-trip names used in config files: "box-cloud", "corridor-loop",
// "duplicated-corridor".
std::string WorldKindName(WorldKind world);
std::optional<WorldKind> ParseWorldKind(const std::string& name);

// Inclusive frame range in which feature coverage collapses. Any pair
// with at least one endpoint inside a gap keeps at most 5 matches.
struct TextureGap {
  frame_t first = 0;
  frame_t last = 0;
};

struct ScenarioConfig {
  WorldKind world = WorldKind::kBoxCloud;
  int num_frames = 120;
  int num_points = 1200;
  // Feature pixel noise, truncated at 4 sigma so ground-truth matches
  // stay within the documented 5 sigma reprojection band.
  double sigma_px = 0.5;
  // Fraction of each pair's matches that are wrong, in [0, 1).
  double outlier_fraction = 0.0;
  // Per-frame VIO noise. Defaults give terminal drift comparable to a
  // real visual-inertial odometry run at room scale.
  double vio_sigma_rot_deg = 0.2;
  double vio_sigma_trans = 0.005;
  std::vector<TextureGap> texture_gaps;
  // Match emission policy: all pairs within the temporal window plus the
  // most covisible non-temporal partners of every frame.
  int temporal_match_window = 45;
  int covisible_partners = 35;
  // Points farther than this from the camera center are not observed.
  double max_view_distance = 12.0;
  uint64_t seed = 0;
};

// A generated dataset: the pipeline inputs plus the ground truth needed
// to score verification and reconstruction against it.
struct SimulatedData {
  Dataset dataset;
  std::map<frame_t, Pose> gt_poses;
  std::vector<Eigen::Vector3d> gt_points;
  // Aligned with dataset.matches: true entries are correct
  // correspondences, false entries are injected outliers or
  // doppelganger matches.
  std::map<FramePair, std::vector<bool>> gt_inlier_masks;
  // Pairs whose matches connect the two congruent layouts. Always a
  // subset of the keys of dataset.matches.
  std::set<FramePair> doppelganger_pairs;
  ScenarioConfig config;
};

// Builds the world, trajectory, feature tables, match sets, and VIO
// track for the given scenario. Deterministic for a fixed seed. Throws
// std::invalid_argument on malformed config values and std::runtime_error
// naming the frame if some frame observes zero points.
SimulatedData Generate(const ScenarioConfig& cfg);

// Perturbs each consecutive ground-truth relative pose with independent
// zero-mean Gaussian rotation (axis-angle, sigma_rot_deg in degrees) and
// translation (sigma_trans in meters) noise, then re-integrates from the
// first pose. Throws std::invalid_argument if gt_poses is empty.
VioSequence SimulateVio(const std::map<frame_t, Pose>& gt_poses,
                        double sigma_rot_deg, double sigma_trans,
                        uint64_t seed);

struct AteResult {
  double rmse = 0.0;
  double median = 0.0;
  std::map<frame_t, double> per_frame;
};

// Absolute trajectory error of the estimated positions against the
// reference after closed-form alignment over the common frames (rigid,
// or similarity when with_scale is set). Empty if fewer than 3 common
// frames exist or the alignment is degenerate.
std::optional<AteResult> EvaluateAte(const std::map<frame_t, Pose>& estimated,
                                     const std::map<frame_t, Pose>& reference,
                                     bool with_scale);

}  // namespace viosfm
