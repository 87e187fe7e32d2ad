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

#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "viosfm/sfm/pipeline.h"
#include "viosfm/sfm/scene.h"
#include "viosfm/sim/simulation.h"
#include "viosfm/types.h"

namespace viosfm {

// Unreadable, unwritable, or malformed file. Parse failures carry
// "<file>:<line>: <reason>" in the message.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Poses as CSV with header `frame_id,tx,ty,tz,qw,qx,qy,qz`, translation in
// meters and a unit quaternion, printed with round-trip precision. The file
// format carries no frame tag; the reader stamps every pose with `tag`.
void WritePosesCsv(const std::filesystem::path& path,
                   const std::map<frame_t, Pose>& poses);
std::map<frame_t, Pose> ReadPosesCsv(const std::filesystem::path& path,
                                     FrameTag tag);

// Four whitespace-separated numbers: fx fy cx cy.
void WriteIntrinsicsFile(const std::filesystem::path& path,
                         const Intrinsics& K);
Intrinsics ReadIntrinsicsFile(const std::filesystem::path& path);

// One `<frame>.txt` per frame inside `dir`, rows `<index> <x> <y>` with
// indices starting at 0 and matching the row position.
void WriteFeaturesDir(const std::filesystem::path& dir,
                      const FeatureTable& features);
FeatureTable ReadFeaturesDir(const std::filesystem::path& dir);

// All pairs in one file: a `pair <a> <b> <count>` line followed by `count`
// rows of `<feature_a> <feature_b>`.
void WriteMatchesFile(const std::filesystem::path& path,
                      const std::map<FramePair, MatchSet>& matchsets);
std::map<FramePair, MatchSet> ReadMatchesFile(
    const std::filesystem::path& path);

// One `<a> <b>` pair per line.
void WritePairListFile(const std::filesystem::path& path,
                       const std::set<FramePair>& pairs);
std::set<FramePair> ReadPairListFile(const std::filesystem::path& path);

// ASCII PLY of the model points, with the observation count of each track
// exported as a per-vertex `track_length` property.
void WritePlyFile(const std::filesystem::path& path,
                  const Reconstruction& model);

// Flat dotted-key JSON views of the config structs, e.g.
// "scenario.num_frames" or "ba.alpha". A config file is one JSON object
// mixing any of these keys; Apply* overwrite only the fields present,
// validate values, and record every key they consumed so callers can
// reject unknown ones. Bad values throw std::invalid_argument naming the
// key.
nlohmann::json ScenarioToJson(const ScenarioConfig& cfg);
nlohmann::json PipelineToJson(const PipelineConfig& cfg);
void ApplyScenarioJson(const nlohmann::json& j, ScenarioConfig* cfg,
                       std::set<std::string>* consumed);
void ApplyPipelineJson(const nlohmann::json& j, PipelineConfig* cfg,
                       std::set<std::string>* consumed);

// Parses a JSON object from `path`; parse failures raise IoError with the
// line reported by the JSON parser.
nlohmann::json ReadJsonFile(const std::filesystem::path& path);
void WriteJsonFile(const std::filesystem::path& path, const nlohmann::json& j);

// A dataset directory as consumed by the reconstruction commands:
// gt_poses.csv, vio_poses.csv, intrinsics.txt, features/, matches.txt,
// scenario.json, doppelganger_pairs.txt.
struct StoredDataset {
  Dataset dataset;
  std::map<frame_t, Pose> gt_poses;
  std::set<FramePair> doppelganger_pairs;
  ScenarioConfig scenario;
};

void WriteDataset(const std::filesystem::path& dir, const SimulatedData& data);
StoredDataset ReadDataset(const std::filesystem::path& dir);

}  // namespace viosfm
