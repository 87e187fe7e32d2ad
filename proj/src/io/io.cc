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

#include "viosfm/io/io.h"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace viosfm {
namespace {

constexpr char kPoseHeader[] = "frame_id,tx,ty,tz,qw,qx,qy,qz";

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

[[noreturn]] void FailAt(const std::filesystem::path& path, int line,
                         const std::string& reason) {
  throw IoError(path.string() + ":" + std::to_string(line) + ": " + reason);
}

std::ofstream OpenForWrite(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  return out;
}

std::ifstream OpenForRead(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  return in;
}

void FinishWrite(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

// Key-presence-driven field setters. Each consumes its key only when
// present and records it, so the caller can detect unknown keys.
void TakeValue(const nlohmann::json& j, const std::string& key, double* out,
               std::set<std::string>* consumed) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_number())
    throw std::invalid_argument("config key '" + key + "' expects a number");
  *out = j.at(key).get<double>();
  consumed->insert(key);
}

void TakeValue(const nlohmann::json& j, const std::string& key, int* out,
               std::set<std::string>* consumed) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_number_integer())
    throw std::invalid_argument("config key '" + key + "' expects an integer");
  *out = j.at(key).get<int>();
  consumed->insert(key);
}

void TakeValue(const nlohmann::json& j, const std::string& key, uint64_t* out,
               std::set<std::string>* consumed) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_number_unsigned())
    throw std::invalid_argument("config key '" + key +
                                "' expects a non-negative integer");
  *out = j.at(key).get<uint64_t>();
  consumed->insert(key);
}

void TakeValue(const nlohmann::json& j, const std::string& key, bool* out,
               std::set<std::string>* consumed) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_boolean())
    throw std::invalid_argument("config key '" + key + "' expects a boolean");
  *out = j.at(key).get<bool>();
  consumed->insert(key);
}

}  // namespace

void WritePosesCsv(const std::filesystem::path& path,
                   const std::map<frame_t, Pose>& poses) {
  std::ofstream out = OpenForWrite(path);
  out << kPoseHeader << "\n";
  for (const auto& [frame, pose] : poses) {
    const Eigen::Quaterniond& q = pose.rotation.quaternion();
    out << frame << ',' << Num(pose.translation.x()) << ','
        << Num(pose.translation.y()) << ',' << Num(pose.translation.z()) << ','
        << Num(q.w()) << ',' << Num(q.x()) << ',' << Num(q.y()) << ','
        << Num(q.z()) << "\n";
  }
  FinishWrite(out, path);
}

std::map<frame_t, Pose> ReadPosesCsv(const std::filesystem::path& path,
                                     FrameTag tag) {
  std::ifstream in = OpenForRead(path);
  std::map<frame_t, Pose> poses;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (line != kPoseHeader)
        FailAt(path, 1, "expected header '" + std::string(kPoseHeader) + "'");
      continue;
    }
    if (line.empty()) continue;
    int frame = 0;
    double tx, ty, tz, qw, qx, qy, qz;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf,%lf,%lf,%lf", &frame,
                    &tx, &ty, &tz, &qw, &qx, &qy, &qz) != 8)
      FailAt(path, line_no, "expected 8 comma-separated pose fields");
    if (!poses
             .emplace(frame, Pose(Rotation(qw, qx, qy, qz), {tx, ty, tz}, tag))
             .second)
      FailAt(path, line_no, "duplicate frame id " + std::to_string(frame));
  }
  return poses;
}

void WriteIntrinsicsFile(const std::filesystem::path& path,
                         const Intrinsics& K) {
  std::ofstream out = OpenForWrite(path);
  out << Num(K.fx) << ' ' << Num(K.fy) << ' ' << Num(K.cx) << ' ' << Num(K.cy)
      << "\n";
  FinishWrite(out, path);
}

Intrinsics ReadIntrinsicsFile(const std::filesystem::path& path) {
  std::ifstream in = OpenForRead(path);
  Intrinsics K;
  if (!(in >> K.fx >> K.fy >> K.cx >> K.cy))
    FailAt(path, 1, "expected 4 numbers: fx fy cx cy");
  return K;
}

void WriteFeaturesDir(const std::filesystem::path& dir,
                      const FeatureTable& features) {
  std::filesystem::create_directories(dir);
  for (const auto& [frame, points] : features.frames()) {
    const std::filesystem::path path = dir / (std::to_string(frame) + ".txt");
    std::ofstream out = OpenForWrite(path);
    for (size_t i = 0; i < points.size(); ++i) {
      out << i << ' ' << Num(points[i].x()) << ' ' << Num(points[i].y())
          << "\n";
    }
    FinishWrite(out, path);
  }
}

FeatureTable ReadFeaturesDir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw IoError("not a directory: " + dir.string());
  FeatureTable table;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::filesystem::path& path = entry.path();
    if (path.extension() != ".txt") continue;
    const std::string stem = path.stem().string();
    char* end = nullptr;
    const long frame = std::strtol(stem.c_str(), &end, 10);
    if (end == stem.c_str() || *end != '\0')
      throw IoError("feature file name is not a frame id: " + path.string());
    std::ifstream in = OpenForRead(path);
    std::vector<Eigen::Vector2d> points;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      long idx = 0;
      double x, y;
      if (std::sscanf(line.c_str(), "%ld %lf %lf", &idx, &x, &y) != 3)
        FailAt(path, line_no, "expected '<index> <x> <y>'");
      if (idx != static_cast<long>(points.size()))
        FailAt(path, line_no, "feature indices must be consecutive from 0");
      points.emplace_back(x, y);
    }
    table.SetFrame(static_cast<frame_t>(frame), std::move(points));
  }
  return table;
}

void WriteMatchesFile(const std::filesystem::path& path,
                      const std::map<FramePair, MatchSet>& matchsets) {
  std::ofstream out = OpenForWrite(path);
  for (const auto& [pair, set] : matchsets) {
    out << "pair " << pair.first << ' ' << pair.second << ' '
        << set.matches.size() << "\n";
    for (const auto& [ia, ib] : set.matches) out << ia << ' ' << ib << "\n";
  }
  FinishWrite(out, path);
}

std::map<FramePair, MatchSet> ReadMatchesFile(
    const std::filesystem::path& path) {
  std::ifstream in = OpenForRead(path);
  std::map<FramePair, MatchSet> matchsets;
  std::string line;
  int line_no = 0;
  int rows_left = 0;
  MatchSet* current = nullptr;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (rows_left == 0) {
      int a, b, count;
      if (std::sscanf(line.c_str(), "pair %d %d %d", &a, &b, &count) != 3)
        FailAt(path, line_no, "expected 'pair <a> <b> <count>'");
      if (a >= b) FailAt(path, line_no, "pair must satisfy a < b");
      if (count < 0) FailAt(path, line_no, "negative match count");
      auto [it, inserted] = matchsets.emplace(FramePair(a, b), MatchSet());
      if (!inserted) FailAt(path, line_no, "duplicate pair");
      current = &it->second;
      current->frame_a = a;
      current->frame_b = b;
      rows_left = count;
      continue;
    }
    int ia, ib;
    if (std::sscanf(line.c_str(), "%d %d", &ia, &ib) != 2)
      FailAt(path, line_no, "expected '<feature_a> <feature_b>'");
    current->matches.emplace_back(ia, ib);
    --rows_left;
  }
  if (rows_left != 0)
    FailAt(path, line_no, "file ends inside a match block");
  return matchsets;
}

void WritePairListFile(const std::filesystem::path& path,
                       const std::set<FramePair>& pairs) {
  std::ofstream out = OpenForWrite(path);
  for (const auto& [a, b] : pairs) out << a << ' ' << b << "\n";
  FinishWrite(out, path);
}

std::set<FramePair> ReadPairListFile(const std::filesystem::path& path) {
  std::ifstream in = OpenForRead(path);
  std::set<FramePair> pairs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    int a, b;
    if (std::sscanf(line.c_str(), "%d %d", &a, &b) != 2)
      FailAt(path, line_no, "expected '<a> <b>'");
    pairs.insert(MakeFramePair(a, b));
  }
  return pairs;
}

void WritePlyFile(const std::filesystem::path& path,
                  const Reconstruction& model) {
  std::ofstream out = OpenForWrite(path);
  out << "ply\nformat ascii 1.0\nelement vertex " << model.tracks.size()
      << "\nproperty double x\nproperty double y\nproperty double z\n"
         "property int track_length\nend_header\n";
  for (const auto& [id, track] : model.tracks) {
    out << Num(track.point.x()) << ' ' << Num(track.point.y()) << ' '
        << Num(track.point.z()) << ' ' << track.observations.size() << "\n";
  }
  FinishWrite(out, path);
}

nlohmann::json ScenarioToJson(const ScenarioConfig& cfg) {
  nlohmann::json gaps = nlohmann::json::array();
  for (const TextureGap& gap : cfg.texture_gaps)
    gaps.push_back({gap.first, gap.last});
  return {
      {"seed", cfg.seed},
      {"scenario.world", WorldKindName(cfg.world)},
      {"scenario.num_frames", cfg.num_frames},
      {"scenario.num_points", cfg.num_points},
      {"scenario.sigma_px", cfg.sigma_px},
      {"scenario.outlier_fraction", cfg.outlier_fraction},
      {"scenario.vio_sigma_rot_deg", cfg.vio_sigma_rot_deg},
      {"scenario.vio_sigma_trans", cfg.vio_sigma_trans},
      {"scenario.texture_gaps", gaps},
      {"scenario.temporal_match_window", cfg.temporal_match_window},
      {"scenario.covisible_partners", cfg.covisible_partners},
      {"scenario.max_view_distance", cfg.max_view_distance},
  };
}

void ApplyScenarioJson(const nlohmann::json& j, ScenarioConfig* cfg,
                       std::set<std::string>* consumed) {
  if (j.contains("scenario.world")) {
    const nlohmann::json& v = j.at("scenario.world");
    if (!v.is_string())
      throw std::invalid_argument("config key 'scenario.world' expects a string");
    const auto world = ParseWorldKind(v.get<std::string>());
    if (!world)
      throw std::invalid_argument("unknown world '" + v.get<std::string>() +
                                  "' for config key 'scenario.world'");
    cfg->world = *world;
    consumed->insert("scenario.world");
  }
  TakeValue(j, "seed", &cfg->seed, consumed);
  TakeValue(j, "scenario.num_frames", &cfg->num_frames, consumed);
  TakeValue(j, "scenario.num_points", &cfg->num_points, consumed);
  TakeValue(j, "scenario.sigma_px", &cfg->sigma_px, consumed);
  TakeValue(j, "scenario.outlier_fraction", &cfg->outlier_fraction, consumed);
  TakeValue(j, "scenario.vio_sigma_rot_deg", &cfg->vio_sigma_rot_deg,
            consumed);
  TakeValue(j, "scenario.vio_sigma_trans", &cfg->vio_sigma_trans, consumed);
  TakeValue(j, "scenario.temporal_match_window", &cfg->temporal_match_window,
            consumed);
  TakeValue(j, "scenario.covisible_partners", &cfg->covisible_partners,
            consumed);
  TakeValue(j, "scenario.max_view_distance", &cfg->max_view_distance,
            consumed);
  if (j.contains("scenario.texture_gaps")) {
    const nlohmann::json& v = j.at("scenario.texture_gaps");
    if (!v.is_array())
      throw std::invalid_argument(
          "config key 'scenario.texture_gaps' expects an array of "
          "[first, last] pairs");
    cfg->texture_gaps.clear();
    for (const nlohmann::json& range : v) {
      if (!range.is_array() || range.size() != 2 ||
          !range[0].is_number_integer() || !range[1].is_number_integer())
        throw std::invalid_argument(
            "config key 'scenario.texture_gaps' expects an array of "
            "[first, last] pairs");
      TextureGap gap;
      gap.first = range[0].get<frame_t>();
      gap.last = range[1].get<frame_t>();
      cfg->texture_gaps.push_back(gap);
    }
    consumed->insert("scenario.texture_gaps");
  }
}

nlohmann::json PipelineToJson(const PipelineConfig& cfg) {
  return {
      {"seed", cfg.seed},
      {"mode", cfg.mode == VerificationMode::kTwoStep ? "two-step"
                                                      : "ransac-only"},
      {"pairing.n1_temporal", cfg.pairing.n1_temporal},
      {"pairing.n2_retrieval", cfg.pairing.n2_retrieval},
      {"pairing.t_ee", cfg.pairing.t_ee},
      {"pairing.max_outlier_ratio", cfg.pairing.max_outlier_ratio},
      {"pairing.ransac_threshold", cfg.pairing.ransac_threshold},
      {"pairing.ransac_max_iters", cfg.pairing.ransac_max_iters},
      {"pairing.min_inliers", cfg.pairing.min_inliers},
      {"batch.batch_size_k", cfg.batch.batch_size_k},
      {"batch.max_reproj_error", cfg.batch.max_reproj_error},
      {"batch.min_tri_angle", cfg.batch.min_tri_angle},
      {"ba.alpha", cfg.ba.alpha},
      {"ba.beta", cfg.ba.beta},
      {"ba.cauchy_scale", cfg.ba.cauchy_scale},
      {"ba.max_iterations", cfg.ba.max_iterations},
      {"ba.function_tolerance", cfg.ba.function_tolerance},
      {"ba.parameter_tolerance", cfg.ba.parameter_tolerance},
      {"ba.optimize_intrinsics", cfg.ba.optimize_intrinsics},
  };
}

void ApplyPipelineJson(const nlohmann::json& j, PipelineConfig* cfg,
                       std::set<std::string>* consumed) {
  if (j.contains("mode")) {
    const nlohmann::json& v = j.at("mode");
    const std::string name = v.is_string() ? v.get<std::string>() : "";
    if (name == "two-step") {
      cfg->mode = VerificationMode::kTwoStep;
    } else if (name == "ransac-only") {
      cfg->mode = VerificationMode::kRansacOnly;
    } else {
      throw std::invalid_argument(
          "config key 'mode' expects \"two-step\" or \"ransac-only\"");
    }
    consumed->insert("mode");
  }
  TakeValue(j, "seed", &cfg->seed, consumed);
  TakeValue(j, "pairing.n1_temporal", &cfg->pairing.n1_temporal, consumed);
  TakeValue(j, "pairing.n2_retrieval", &cfg->pairing.n2_retrieval, consumed);
  TakeValue(j, "pairing.t_ee", &cfg->pairing.t_ee, consumed);
  TakeValue(j, "pairing.max_outlier_ratio", &cfg->pairing.max_outlier_ratio,
            consumed);
  TakeValue(j, "pairing.ransac_threshold", &cfg->pairing.ransac_threshold,
            consumed);
  TakeValue(j, "pairing.ransac_max_iters", &cfg->pairing.ransac_max_iters,
            consumed);
  TakeValue(j, "pairing.min_inliers", &cfg->pairing.min_inliers, consumed);
  TakeValue(j, "batch.batch_size_k", &cfg->batch.batch_size_k, consumed);
  TakeValue(j, "batch.max_reproj_error", &cfg->batch.max_reproj_error,
            consumed);
  TakeValue(j, "batch.min_tri_angle", &cfg->batch.min_tri_angle, consumed);
  TakeValue(j, "ba.alpha", &cfg->ba.alpha, consumed);
  TakeValue(j, "ba.beta", &cfg->ba.beta, consumed);
  TakeValue(j, "ba.cauchy_scale", &cfg->ba.cauchy_scale, consumed);
  TakeValue(j, "ba.max_iterations", &cfg->ba.max_iterations, consumed);
  TakeValue(j, "ba.function_tolerance", &cfg->ba.function_tolerance, consumed);
  TakeValue(j, "ba.parameter_tolerance", &cfg->ba.parameter_tolerance,
            consumed);
  TakeValue(j, "ba.optimize_intrinsics", &cfg->ba.optimize_intrinsics,
            consumed);
}

nlohmann::json ReadJsonFile(const std::filesystem::path& path) {
  std::ifstream in = OpenForRead(path);
  try {
    nlohmann::json j = nlohmann::json::parse(in);
    if (!j.is_object())
      throw IoError(path.string() + ":1: top-level JSON object expected");
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    // The parser message already carries "at line L, column C".
    throw IoError(path.string() + ": " + e.what());
  }
}

void WriteJsonFile(const std::filesystem::path& path,
                   const nlohmann::json& j) {
  std::ofstream out = OpenForWrite(path);
  out << j.dump(2) << "\n";
  FinishWrite(out, path);
}

void WriteDataset(const std::filesystem::path& dir,
                  const SimulatedData& data) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory: " + dir.string());
  WritePosesCsv(dir / "gt_poses.csv", data.gt_poses);
  WritePosesCsv(dir / "vio_poses.csv", data.dataset.vio.poses());
  WriteIntrinsicsFile(dir / "intrinsics.txt", data.dataset.intrinsics);
  WriteFeaturesDir(dir / "features", data.dataset.features);
  WriteMatchesFile(dir / "matches.txt", data.dataset.matches);
  WriteJsonFile(dir / "scenario.json", ScenarioToJson(data.config));
  WritePairListFile(dir / "doppelganger_pairs.txt", data.doppelganger_pairs);
}

StoredDataset ReadDataset(const std::filesystem::path& dir) {
  StoredDataset stored;
  stored.gt_poses = ReadPosesCsv(dir / "gt_poses.csv", FrameTag::kWorld);
  stored.dataset.vio = VioSequence(
      ReadPosesCsv(dir / "vio_poses.csv", FrameTag::kVioLocal));
  stored.dataset.intrinsics = ReadIntrinsicsFile(dir / "intrinsics.txt");
  stored.dataset.features = ReadFeaturesDir(dir / "features");
  stored.dataset.matches = ReadMatchesFile(dir / "matches.txt");
  stored.doppelganger_pairs =
      ReadPairListFile(dir / "doppelganger_pairs.txt");

  const std::filesystem::path scenario_path = dir / "scenario.json";
  const nlohmann::json j = ReadJsonFile(scenario_path);
  std::set<std::string> consumed;
  try {
    ApplyScenarioJson(j, &stored.scenario, &consumed);
  } catch (const std::invalid_argument& e) {
    throw IoError(scenario_path.string() + ":1: " + e.what());
  }
  for (const auto& [key, value] : j.items()) {
    if (!consumed.count(key))
      throw IoError(scenario_path.string() + ":1: unknown key '" + key + "'");
  }

  for (const auto& [frame, points] : stored.dataset.features.frames())
    stored.dataset.frames.push_back(frame);
  return stored;
}

}  // namespace viosfm
