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

#include "viosfm/sfm/pipeline.h"

#include <algorithm>
#include <chrono>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "viosfm/geometry/triangulation.h"

namespace viosfm {
namespace {

using Node = std::pair<frame_t, feature_t>;

// Union-find over (frame, feature) nodes with per-component bookkeeping.
// Merges are refused rather than split after the fact: a refused edge
// leaves both components intact, which is what keeps one observation per
// frame per track an invariant instead of a repair pass.
class TrackForest {
 public:
  void MakeSet(const Node& node) {
    if (parent_.count(node)) return;
    parent_[node] = node;
    Component comp;
    comp.members.push_back(node);
    comp.frame_features[node.first] = node.second;
    comps_.emplace(node, std::move(comp));
  }

  Node Find(Node node) {
    while (parent_[node] != node) {
      parent_[node] = parent_[parent_[node]];
      node = parent_[node];
    }
    return node;
  }

  // False if the edge would collide two features in one frame or fuse two
  // components that both already carry model tracks.
  bool Union(const Node& a, const Node& b) {
    Node ra = Find(a);
    Node rb = Find(b);
    if (ra == rb) return true;

    Component& ca = comps_.at(ra);
    Component& cb = comps_.at(rb);
    if (ca.track != kInvalidTrack && cb.track != kInvalidTrack) return false;

    const Component& small = ca.members.size() <= cb.members.size() ? ca : cb;
    const Component& large = ca.members.size() <= cb.members.size() ? cb : ca;
    for (const auto& [frame, feature] : small.frame_features) {
      const auto it = large.frame_features.find(frame);
      if (it != large.frame_features.end() && it->second != feature) {
        return false;
      }
    }

    Node small_root = ca.members.size() <= cb.members.size() ? ra : rb;
    Node large_root = ca.members.size() <= cb.members.size() ? rb : ra;
    Component& cs = comps_.at(small_root);
    Component& cl = comps_.at(large_root);
    parent_[small_root] = large_root;
    cl.members.insert(cl.members.end(), cs.members.begin(), cs.members.end());
    cl.frame_features.insert(cs.frame_features.begin(),
                             cs.frame_features.end());
    if (cs.track != kInvalidTrack) cl.track = cs.track;
    comps_.erase(small_root);
    return true;
  }

  void AttachTrack(const Node& node, track_t track) {
    comps_.at(Find(node)).track = track;
  }

  struct Component {
    std::vector<Node> members;
    std::map<frame_t, feature_t> frame_features;
    track_t track = kInvalidTrack;
  };

  const std::map<Node, Component>& components() const { return comps_; }

 private:
  std::map<Node, Node> parent_;
  std::map<Node, Component> comps_;
};

}  // namespace

void RegisterBatch(Reconstruction& model,
                   const std::vector<frame_t>& batch_frames,
                   const VioSequence& vio) {
  if (batch_frames.empty()) return;
  for (size_t i = 1; i < batch_frames.size(); ++i) {
    if (batch_frames[i] <= batch_frames[i - 1]) {
      throw std::invalid_argument("batch frames not strictly increasing");
    }
  }

  const bool first_batch = model.poses.empty();
  frame_t prev = first_batch ? batch_frames.front()
                             : model.poses.rbegin()->first;
  if (!first_batch && batch_frames.front() <= prev) {
    throw std::invalid_argument("batch does not extend the registered range");
  }

  if (!first_batch && !vio.Has(prev)) {
    std::ostringstream msg;
    msg << "no VIO pose for anchor frame " << prev;
    throw std::runtime_error(msg.str());
  }
  for (const frame_t f : batch_frames) {
    if (!vio.Has(f)) {
      std::ostringstream msg;
      msg << "no VIO pose for frame " << f;
      throw std::runtime_error(msg.str());
    }
  }

  size_t start = 0;
  if (first_batch) {
    model.poses[batch_frames.front()] = Pose::Identity();
    start = 1;
  }
  for (size_t i = start; i < batch_frames.size(); ++i) {
    const frame_t f = batch_frames[i];
    model.poses[f] = Compose(model.poses.at(prev), vio.RelativeBetween(prev, f));
    prev = f;
  }
  ++model.registered_batches;
}

std::vector<track_t> TriangulateBatch(
    Reconstruction& model, const std::map<FramePair, PairVerdict>& verdicts,
    const std::map<FramePair, MatchSet>& matchsets,
    const FeatureTable& features, const BatchConfig& cfg) {
  TrackForest forest;

  // Existing tracks seed their components so new pairs extend them.
  for (const auto& [track_id, track] : model.tracks) {
    const Node first{track.observations.front().frame_id,
                     track.observations.front().feature_idx};
    forest.MakeSet(first);
    for (size_t i = 1; i < track.observations.size(); ++i) {
      const Node node{track.observations[i].frame_id,
                      track.observations[i].feature_idx};
      forest.MakeSet(node);
      forest.Union(first, node);
    }
    forest.AttachTrack(first, track_id);
  }

  for (const auto& [pair, verdict] : verdicts) {
    if (!verdict.accepted()) continue;
    if (!model.poses.count(pair.first) || !model.poses.count(pair.second)) {
      continue;
    }
    const auto ms = matchsets.find(pair);
    if (ms == matchsets.end()) continue;
    const MatchSet& matches = ms->second;
    for (size_t i = 0; i < matches.matches.size(); ++i) {
      if (i >= verdict.inlier_mask.size() || !verdict.inlier_mask[i]) continue;
      const Node a{matches.frame_a, matches.matches[i].first};
      const Node b{matches.frame_b, matches.matches[i].second};
      forest.MakeSet(a);
      forest.MakeSet(b);
      forest.Union(a, b);
    }
  }

  std::vector<track_t> added;
  track_t next_id =
      model.tracks.empty() ? 0 : model.tracks.rbegin()->first + 1;

  for (const auto& [root, comp] : forest.components()) {
    if (comp.track != kInvalidTrack) {
      Track& track = model.tracks.at(comp.track);
      std::set<Node> known;
      for (const auto& obs : track.observations) {
        known.insert({obs.frame_id, obs.feature_idx});
      }
      std::vector<Node> fresh;
      for (const auto& node : comp.members) {
        if (!known.count(node)) fresh.push_back(node);
      }
      std::sort(fresh.begin(), fresh.end());
      for (const auto& [frame, feature] : fresh) {
        track.observations.push_back({frame, feature,
                                      features.Point(frame, feature)});
      }
      continue;
    }

    if (comp.members.size() < 2) continue;
    std::vector<Node> nodes = comp.members;
    std::sort(nodes.begin(), nodes.end());
    std::vector<PixelObservation> views;
    views.reserve(nodes.size());
    for (const auto& [frame, feature] : nodes) {
      views.emplace_back(model.poses.at(frame), features.Point(frame, feature));
    }
    const TriangulationResult result =
        Triangulate(views, model.intrinsics, cfg.min_tri_angle);
    if (!result.ok()) continue;

    Track track;
    track.point = result.point;
    for (const auto& [frame, feature] : nodes) {
      track.observations.push_back({frame, feature,
                                    features.Point(frame, feature)});
    }
    model.tracks.emplace(next_id, std::move(track));
    added.push_back(next_id);
    ++next_id;
  }
  return added;
}

std::vector<track_t> FilterPoints(Reconstruction& model,
                                  const BatchConfig& cfg) {
  std::vector<track_t> removed;
  for (auto it = model.tracks.begin(); it != model.tracks.end();) {
    Track& track = it->second;

    std::vector<TrackObservation> kept;
    kept.reserve(track.observations.size());
    for (const auto& obs : track.observations) {
      const Pose& pose = model.poses.at(obs.frame_id);
      const auto projected = Project(pose, track.point, model.intrinsics);
      if (!projected) continue;
      if ((*projected - obs.pixel).norm() > cfg.max_reproj_error) continue;
      kept.push_back(obs);
    }
    track.observations = std::move(kept);

    bool drop = track.observations.size() < 2;
    if (!drop) {
      std::vector<Eigen::Vector3d> centers;
      centers.reserve(track.observations.size());
      for (const auto& obs : track.observations) {
        centers.push_back(model.poses.at(obs.frame_id).translation);
      }
      drop = MaxTriangulationAngleDeg(centers, track.point) <
             cfg.min_tri_angle;
    }

    if (drop) {
      removed.push_back(it->first);
      it = model.tracks.erase(it);
    } else {
      ++it;
    }
  }
  return removed;
}

PipelineResult Reconstruct(const Dataset& dataset, const PipelineConfig& cfg,
                           const RetrievalProvider& retrieval) {
  using Clock = std::chrono::steady_clock;
  const auto seconds_since = [](Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
  };

  PipelineResult out;
  out.model.intrinsics = dataset.intrinsics;
  if (dataset.frames.empty()) return out;

  const auto verify_start = Clock::now();
  const std::vector<FramePair> candidates =
      GenerateCandidates(dataset.frames, retrieval, cfg.pairing);
  out.candidate_pairs = static_cast<int>(candidates.size());
  out.verdicts =
      VerifyPairs(candidates, dataset.matches, dataset.features, dataset.vio,
                  dataset.intrinsics, cfg.pairing, cfg.seed, cfg.mode);
  out.verify_seconds = seconds_since(verify_start);

  std::map<FramePair, int> counts;
  for (const auto& [pair, verdict] : out.verdicts) {
    if (!verdict.accepted()) continue;
    ++out.accepted_pairs;
    counts[pair] = verdict.SurvivingMatches();
  }

  const std::set<frame_t> anchor{dataset.frames.front()};
  std::set<FramePair> consumed;
  const size_t k = static_cast<size_t>(cfg.batch.batch_size_k);

  for (size_t start = 0; start < dataset.frames.size(); start += k) {
    const auto batch_start = Clock::now();
    const size_t end = std::min(start + k, dataset.frames.size());
    const std::vector<frame_t> batch(dataset.frames.begin() + start,
                                     dataset.frames.begin() + end);

    BatchSummary summary;
    summary.batch_index = static_cast<int>(out.batches.size());
    summary.first_frame = batch.front();
    summary.last_frame = batch.back();

    RegisterBatch(out.model, batch, dataset.vio);

    std::map<FramePair, PairVerdict> active;
    for (const auto& [pair, verdict] : out.verdicts) {
      if (!verdict.accepted() || consumed.count(pair)) continue;
      if (!out.model.poses.count(pair.first) ||
          !out.model.poses.count(pair.second)) {
        continue;
      }
      active.emplace(pair, verdict);
      consumed.insert(pair);
    }

    summary.new_tracks = static_cast<int>(
        TriangulateBatch(out.model, active, dataset.matches, dataset.features,
                         cfg.batch)
            .size());
    summary.ba = Solve(out.model, dataset.vio, counts, anchor, cfg.ba);
    summary.removed_tracks =
        static_cast<int>(FilterPoints(out.model, cfg.batch).size());
    summary.wall_seconds = seconds_since(batch_start);
    out.batches.push_back(std::move(summary));
  }
  return out;
}

PipelineResult Reconstruct(const Dataset& dataset, const PipelineConfig& cfg) {
  const RankedRetrieval retrieval = MakeMatchCountRetrieval(dataset.matches);
  return Reconstruct(dataset, cfg, retrieval);
}

}  // namespace viosfm
