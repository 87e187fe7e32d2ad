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
#include <vector>

#include "viosfm/ba/solver.h"
#include "viosfm/matching/feature_table.h"
#include "viosfm/matching/retrieval.h"
#include "viosfm/sfm/scene.h"
#include "viosfm/types.h"
#include "viosfm/verification/verification.h"

namespace viosfm {

// Everything the reconstruction pipeline consumes. Detection, matching and
// retrieval ranking happen upstream (simulator or files on disk).
struct Dataset {
  std::vector<frame_t> frames;  // strictly increasing
  FeatureTable features;
  std::map<FramePair, MatchSet> matches;
  VioSequence vio;
  Intrinsics intrinsics;
};

// Registers `batch_frames` into the model by chaining per-frame VIO
// relatives. The first batch pins its first frame to the world identity;
// later batches chain from the newest registered pose, so each batch
// inherits every correction bundle adjustment has applied so far.
//
// Throws std::invalid_argument if the batch is not strictly increasing or
// overlaps registered frames, std::runtime_error on a missing VIO pose.
void RegisterBatch(Reconstruction& model,
                   const std::vector<frame_t>& batch_frames,
                   const VioSequence& vio);

// Chains the surviving matches of accepted pairs into tracks via union-find
// on (frame, feature) nodes and triangulates components with at least two
// observations. Components already attached to a model track extend that
// track in place; its point is not recomputed. A match that would put two
// different features of one frame into a single component is refused, as is
// a merge of two components that both already carry tracks. Components that
// fail triangulation are left for later batches to complete.
//
// Pairs with an unregistered frame are ignored. Returns new track ids.
std::vector<track_t> TriangulateBatch(
    Reconstruction& model, const std::map<FramePair, PairVerdict>& verdicts,
    const std::map<FramePair, MatchSet>& matchsets, const FeatureTable& features,
    const BatchConfig& cfg);

// Drops observations whose reprojection error exceeds cfg.max_reproj_error
// (or whose point fell behind the camera), then whole tracks with fewer
// than two surviving observations or a maximum triangulation angle below
// cfg.min_tri_angle. Idempotent. Returns removed track ids.
std::vector<track_t> FilterPoints(Reconstruction& model,
                                  const BatchConfig& cfg);

struct PipelineConfig {
  PairingConfig pairing;
  BatchConfig batch;
  BaConfig ba;
  VerificationMode mode = VerificationMode::kTwoStep;
  uint64_t seed = 0;
};

struct BatchSummary {
  int batch_index = 0;
  frame_t first_frame = 0;
  frame_t last_frame = 0;
  int new_tracks = 0;
  int removed_tracks = 0;
  SolverReport ba;
  double wall_seconds = 0.0;
};

struct PipelineResult {
  Reconstruction model;
  std::map<FramePair, PairVerdict> verdicts;
  std::vector<BatchSummary> batches;
  int candidate_pairs = 0;
  int accepted_pairs = 0;
  double verify_seconds = 0.0;
};

// Full pipeline: verify all candidate pairs once, then register batches of
// cfg.batch.batch_size_k frames, each followed by triangulation, global
// bundle adjustment anchored at the first frame, and point filtering.
PipelineResult Reconstruct(const Dataset& dataset, const PipelineConfig& cfg,
                           const RetrievalProvider& retrieval);

// Convenience overload ranking retrieval partners by raw match count.
PipelineResult Reconstruct(const Dataset& dataset, const PipelineConfig& cfg);

}  // namespace viosfm
