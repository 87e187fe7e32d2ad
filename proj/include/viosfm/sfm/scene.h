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
#include <vector>

#include <Eigen/Core>

#include "viosfm/geometry/intrinsics.h"
#include "viosfm/geometry/pose.h"
#include "viosfm/types.h"

namespace viosfm {

// Per-frame absolute VIO poses, ordered by frame id. Chaining the
// per-frame relatives between two frames telescopes to the relative of
// the absolute poses, so the accessor computes the latter directly.
class VioSequence {
 public:
  VioSequence() = default;
  explicit VioSequence(std::map<frame_t, Pose> poses)
      : poses_(std::move(poses)) {}

  void Set(frame_t frame, const Pose& pose) { poses_[frame] = pose; }
  bool Has(frame_t frame) const { return poses_.count(frame) > 0; }
  const Pose& At(frame_t frame) const { return poses_.at(frame); }
  size_t size() const { return poses_.size(); }
  const std::map<frame_t, Pose>& poses() const { return poses_; }

  // Pose of `target` expressed in `base`'s camera frame.
  Pose RelativeBetween(frame_t base, frame_t target) const {
    return RelativePose(poses_.at(base), poses_.at(target));
  }

 private:
  std::map<frame_t, Pose> poses_;
};

struct TrackObservation {
  frame_t frame_id = kInvalidFrame;
  feature_t feature_idx = -1;
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
};

// One scene point with its pixel observations; at most one observation
// per frame.
struct Track {
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  std::vector<TrackObservation> observations;
};

// The growing model. Shared pinhole intrinsics across all frames.
struct Reconstruction {
  std::map<frame_t, Pose> poses;
  std::map<track_t, Track> tracks;
  Intrinsics intrinsics;
  int registered_batches = 0;

  bool IsRegistered(frame_t frame) const { return poses.count(frame) > 0; }
  size_t NumObservations() const {
    size_t n = 0;
    for (const auto& [id, track] : tracks) n += track.observations.size();
    return n;
  }
};

struct BatchConfig {
  int batch_size_k = 50;
  double max_reproj_error = 4.0;  // pixels
  double min_tri_angle = 1.5;     // degrees
};

}  // namespace viosfm
