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

#include "viosfm/matching/retrieval.h"

#include <algorithm>

namespace viosfm {

std::vector<frame_t> RankedRetrieval::Query(frame_t frame,
                                            int max_results) const {
  const auto it = ranked_.find(frame);
  if (it == ranked_.end() || max_results <= 0) return {};
  const auto& list = it->second;
  const size_t n = std::min<size_t>(list.size(), max_results);
  return std::vector<frame_t>(list.begin(), list.begin() + n);
}

RankedRetrieval MakeMatchCountRetrieval(
    const std::map<FramePair, MatchSet>& matchsets) {
  std::map<frame_t, std::vector<std::pair<int, frame_t>>> scored;
  for (const auto& [pair, set] : matchsets) {
    if (set.matches.empty()) continue;
    const int count = static_cast<int>(set.matches.size());
    scored[pair.first].emplace_back(count, pair.second);
    scored[pair.second].emplace_back(count, pair.first);
  }

  std::map<frame_t, std::vector<frame_t>> ranked;
  for (auto& [frame, partners] : scored) {
    // Descending count; frame id breaks ties deterministically.
    std::sort(partners.begin(), partners.end(),
              [](const auto& lhs, const auto& rhs) {
                if (lhs.first != rhs.first) return lhs.first > rhs.first;
                return lhs.second < rhs.second;
              });
    auto& list = ranked[frame];
    list.reserve(partners.size());
    for (const auto& [count, partner] : partners) list.push_back(partner);
  }
  return RankedRetrieval(std::move(ranked));
}

}  // namespace viosfm
