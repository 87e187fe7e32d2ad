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
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "viosfm/types.h"

namespace viosfm {

// Per-frame 2D feature locations in pixels, indexed by feature index.
class FeatureTable {
 public:
  void SetFrame(frame_t frame, std::vector<Eigen::Vector2d> points) {
    frames_[frame] = std::move(points);
  }

  bool HasFrame(frame_t frame) const { return frames_.count(frame) > 0; }

  const std::vector<Eigen::Vector2d>& Points(frame_t frame) const {
    return frames_.at(frame);
  }

  const Eigen::Vector2d& Point(frame_t frame, feature_t feature) const {
    return frames_.at(frame).at(static_cast<size_t>(feature));
  }

  const std::map<frame_t, std::vector<Eigen::Vector2d>>& frames() const {
    return frames_;
  }

 private:
  std::map<frame_t, std::vector<Eigen::Vector2d>> frames_;
};

// Tentative correspondences between two frames. One-to-one: no feature
// index may repeat on either side.
struct MatchSet {
  frame_t frame_a = kInvalidFrame;
  frame_t frame_b = kInvalidFrame;
  std::vector<std::pair<feature_t, feature_t>> matches;

  bool IsOneToOne() const {
    std::set<feature_t> seen_a, seen_b;
    for (const auto& [ia, ib] : matches) {
      if (!seen_a.insert(ia).second || !seen_b.insert(ib).second) return false;
    }
    return true;
  }
};

}  // namespace viosfm
