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

#include "viosfm/matching/feature_table.h"
#include "viosfm/types.h"

namespace viosfm {

// Image-retrieval stand-in: ranked visually-similar frames for a query.
// Providers may return fewer than max_results.
class RetrievalProvider {
 public:
  virtual ~RetrievalProvider() = default;
  virtual std::vector<frame_t> Query(frame_t frame, int max_results) const = 0;
};

// Retrieval backed by precomputed ranked lists. The simulation harness
// uses this for both its ground-truth covisibility oracle and the
// deliberately confusing doppelganger-first provider.
class RankedRetrieval : public RetrievalProvider {
 public:
  explicit RankedRetrieval(std::map<frame_t, std::vector<frame_t>> ranked)
      : ranked_(std::move(ranked)) {}

  std::vector<frame_t> Query(frame_t frame, int max_results) const override;

 private:
  std::map<frame_t, std::vector<frame_t>> ranked_;
};

// Retrieval ranked by tentative match count, built from the match sets
// themselves. This is what the pipeline uses when no external retrieval
// is available: frames sharing many tentative matches rank first, so
// both loop-closure pairs and high-overlap doppelganger pairs surface.
RankedRetrieval MakeMatchCountRetrieval(
    const std::map<FramePair, MatchSet>& matchsets);

}  // namespace viosfm
