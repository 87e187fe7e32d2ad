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
#include <utility>

#include <Eigen/Core>

namespace viosfm {

using frame_t = int32_t;
using track_t = int32_t;
using feature_t = int32_t;

constexpr frame_t kInvalidFrame = -1;
constexpr track_t kInvalidTrack = -1;

// Unordered image pair, stored with first < second.
using FramePair = std::pair<frame_t, frame_t>;

inline FramePair MakeFramePair(frame_t a, frame_t b) {
  return a < b ? FramePair(a, b) : FramePair(b, a);
}

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

}  // namespace viosfm
