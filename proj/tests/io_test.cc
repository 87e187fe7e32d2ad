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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "viosfm/io/io.h"
#include "viosfm/sim/simulation.h"

using namespace viosfm;
namespace fs = std::filesystem;

namespace {

fs::path TestDir() {
  const fs::path dir =
      fs::temp_directory_path() / "viosfm_io_test" / std::to_string(::getpid());
  fs::create_directories(dir);
  return dir;
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

std::string Slurp(const fs::path& path) {
  std::ifstream in(path);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("pose csv round trip preserves values") {
  const fs::path path = TestDir() / "poses.csv";
  std::map<frame_t, Pose> poses;
  poses[0] = Pose(Rotation::Identity(), {0.0, 0.0, 0.0}, FrameTag::kWorld);
  poses[3] = Pose(Rotation::Exp({0.1, -0.2, 0.3}),
                  {1.25, -3.5e-7, 1e17}, FrameTag::kWorld);
  poses[7] = Pose(Rotation::Exp({-1.0, 0.5, 2.0}),
                  {-0.1234567890123456, 2.0, -9.0}, FrameTag::kWorld);
  WritePosesCsv(path, poses);

  const std::map<frame_t, Pose> back = ReadPosesCsv(path, FrameTag::kWorld);
  REQUIRE(back.size() == poses.size());
  for (const auto& [frame, pose] : poses) {
    REQUIRE(back.count(frame) == 1);
    const Pose& b = back.at(frame);
    CHECK(b.translation == pose.translation);  // %.17g round-trips exactly
    CHECK(b.rotation.quaternion().coeffs().isApprox(
        pose.rotation.quaternion().coeffs(), 1e-15));
    CHECK(b.frame_tag == FrameTag::kWorld);
  }
}

TEST_CASE("pose csv rejects malformed input naming the line") {
  const fs::path dir = TestDir();

  WriteText(dir / "no_header.csv", "0,1,2,3,1,0,0,0\n");
  CHECK_THROWS_WITH_AS(ReadPosesCsv(dir / "no_header.csv", FrameTag::kWorld),
                       doctest::Contains("no_header.csv:1"), IoError);

  WriteText(dir / "short_row.csv",
            "frame_id,tx,ty,tz,qw,qx,qy,qz\n0,1,2\n");
  CHECK_THROWS_WITH_AS(ReadPosesCsv(dir / "short_row.csv", FrameTag::kWorld),
                       doctest::Contains("short_row.csv:2"), IoError);

  WriteText(dir / "dup.csv",
            "frame_id,tx,ty,tz,qw,qx,qy,qz\n"
            "4,0,0,0,1,0,0,0\n4,1,1,1,1,0,0,0\n");
  CHECK_THROWS_WITH_AS(ReadPosesCsv(dir / "dup.csv", FrameTag::kWorld),
                       doctest::Contains("dup.csv:3"), IoError);

  CHECK_THROWS_AS(ReadPosesCsv(dir / "absent.csv", FrameTag::kWorld), IoError);
}

TEST_CASE("intrinsics file round trip") {
  const fs::path path = TestDir() / "intrinsics.txt";
  const Intrinsics K(458.654, 457.296, 367.215, 248.375);
  WriteIntrinsicsFile(path, K);
  const Intrinsics back = ReadIntrinsicsFile(path);
  CHECK(back.fx == K.fx);
  CHECK(back.fy == K.fy);
  CHECK(back.cx == K.cx);
  CHECK(back.cy == K.cy);

  WriteText(path, "1.0 2.0\n");
  CHECK_THROWS_AS(ReadIntrinsicsFile(path), IoError);
}

TEST_CASE("features directory round trip") {
  const fs::path dir = TestDir() / "features";
  fs::remove_all(dir);
  FeatureTable table;
  table.SetFrame(0, {{1.5, 2.5}, {-0.25, 1e-9}});
  table.SetFrame(12, {{640.0, 479.125}});
  WriteFeaturesDir(dir, table);

  const FeatureTable back = ReadFeaturesDir(dir);
  REQUIRE(back.frames().size() == 2);
  CHECK(back.Points(0) == table.Points(0));
  CHECK(back.Points(12) == table.Points(12));

  WriteText(dir / "3.txt", "1 5.0 5.0\n");
  CHECK_THROWS_WITH_AS(ReadFeaturesDir(dir),
                       doctest::Contains("consecutive"), IoError);
}

TEST_CASE("matches file round trip and framing errors") {
  const fs::path path = TestDir() / "matches.txt";
  std::map<FramePair, MatchSet> sets;
  MatchSet& ab = sets[MakeFramePair(0, 2)];
  ab.frame_a = 0;
  ab.frame_b = 2;
  ab.matches = {{0, 3}, {1, 0}, {5, 4}};
  MatchSet& cd = sets[MakeFramePair(2, 9)];
  cd.frame_a = 2;
  cd.frame_b = 9;
  cd.matches = {};
  WriteMatchesFile(path, sets);

  const auto back = ReadMatchesFile(path);
  REQUIRE(back.size() == 2);
  CHECK(back.at({0, 2}).matches == ab.matches);
  CHECK(back.at({2, 9}).matches.empty());
  CHECK(back.at({0, 2}).frame_a == 0);
  CHECK(back.at({0, 2}).frame_b == 2);

  WriteText(path, "pair 0 1 2\n3 4\n");
  CHECK_THROWS_WITH_AS(ReadMatchesFile(path),
                       doctest::Contains("inside a match block"), IoError);

  WriteText(path, "pair 5 5 0\n");
  CHECK_THROWS_WITH_AS(ReadMatchesFile(path), doctest::Contains(":1"),
                       IoError);
}

TEST_CASE("pair list round trip normalizes order") {
  const fs::path path = TestDir() / "pairs.txt";
  WritePairListFile(path, {{0, 5}, {2, 3}});
  WriteText(path, Slurp(path) + "9 7\n");  // reversed pair on read
  const std::set<FramePair> back = ReadPairListFile(path);
  CHECK(back == std::set<FramePair>{{0, 5}, {2, 3}, {7, 9}});
}

TEST_CASE("ply export lists every track with its length") {
  const fs::path path = TestDir() / "points.ply";
  Reconstruction model;
  model.tracks[0].point = {1.0, 2.0, 3.0};
  model.tracks[0].observations.resize(4);
  model.tracks[5].point = {-0.5, 0.0, 12.25};
  model.tracks[5].observations.resize(2);
  WritePlyFile(path, model);

  CHECK(Slurp(path) ==
        "ply\n"
        "format ascii 1.0\n"
        "element vertex 2\n"
        "property double x\n"
        "property double y\n"
        "property double z\n"
        "property int track_length\n"
        "end_header\n"
        "1 2 3 4\n"
        "-0.5 0 12.25 2\n");
}

TEST_CASE("scenario json round trips every field") {
  ScenarioConfig cfg;
  cfg.world = WorldKind::kDuplicatedCorridor;
  cfg.num_frames = 77;
  cfg.num_points = 321;
  cfg.sigma_px = 0.75;
  cfg.outlier_fraction = 0.125;
  cfg.vio_sigma_rot_deg = 0.3;
  cfg.vio_sigma_trans = 0.004;
  cfg.texture_gaps = {{10, 19}, {40, 44}};
  cfg.temporal_match_window = 17;
  cfg.covisible_partners = 9;
  cfg.max_view_distance = 6.5;
  cfg.seed = 1234567890123ULL;

  const nlohmann::json j = ScenarioToJson(cfg);
  ScenarioConfig back;
  std::set<std::string> consumed;
  ApplyScenarioJson(j, &back, &consumed);
  CHECK(consumed.size() == j.size());
  CHECK(back.world == cfg.world);
  CHECK(back.num_frames == cfg.num_frames);
  CHECK(back.num_points == cfg.num_points);
  CHECK(back.sigma_px == cfg.sigma_px);
  CHECK(back.outlier_fraction == cfg.outlier_fraction);
  CHECK(back.vio_sigma_rot_deg == cfg.vio_sigma_rot_deg);
  CHECK(back.vio_sigma_trans == cfg.vio_sigma_trans);
  REQUIRE(back.texture_gaps.size() == 2);
  CHECK(back.texture_gaps[1].first == 40);
  CHECK(back.texture_gaps[1].last == 44);
  CHECK(back.temporal_match_window == cfg.temporal_match_window);
  CHECK(back.covisible_partners == cfg.covisible_partners);
  CHECK(back.max_view_distance == cfg.max_view_distance);
  CHECK(back.seed == cfg.seed);
}

TEST_CASE("pipeline json round trips every field") {
  PipelineConfig cfg;
  cfg.seed = 42;
  cfg.mode = VerificationMode::kRansacOnly;
  cfg.pairing.n1_temporal = 11;
  cfg.pairing.n2_retrieval = 7;
  cfg.pairing.t_ee = 15.5;
  cfg.pairing.max_outlier_ratio = 0.4;
  cfg.pairing.ransac_threshold = 3.25;
  cfg.pairing.ransac_max_iters = 555;
  cfg.pairing.min_inliers = 21;
  cfg.batch.batch_size_k = 33;
  cfg.batch.max_reproj_error = 2.5;
  cfg.batch.min_tri_angle = 0.75;
  cfg.ba.alpha = 500.0;
  cfg.ba.beta = 0.01;
  cfg.ba.cauchy_scale = 2.0;
  cfg.ba.max_iterations = 17;
  cfg.ba.function_tolerance = 1e-7;
  cfg.ba.parameter_tolerance = 1e-9;
  cfg.ba.optimize_intrinsics = true;

  const nlohmann::json j = PipelineToJson(cfg);
  PipelineConfig back;
  std::set<std::string> consumed;
  ApplyPipelineJson(j, &back, &consumed);
  CHECK(consumed.size() == j.size());
  CHECK(back.seed == cfg.seed);
  CHECK(back.mode == cfg.mode);
  CHECK(back.pairing.n1_temporal == cfg.pairing.n1_temporal);
  CHECK(back.pairing.n2_retrieval == cfg.pairing.n2_retrieval);
  CHECK(back.pairing.t_ee == cfg.pairing.t_ee);
  CHECK(back.pairing.max_outlier_ratio == cfg.pairing.max_outlier_ratio);
  CHECK(back.pairing.ransac_threshold == cfg.pairing.ransac_threshold);
  CHECK(back.pairing.ransac_max_iters == cfg.pairing.ransac_max_iters);
  CHECK(back.pairing.min_inliers == cfg.pairing.min_inliers);
  CHECK(back.batch.batch_size_k == cfg.batch.batch_size_k);
  CHECK(back.batch.max_reproj_error == cfg.batch.max_reproj_error);
  CHECK(back.batch.min_tri_angle == cfg.batch.min_tri_angle);
  CHECK(back.ba.alpha == cfg.ba.alpha);
  CHECK(back.ba.beta == cfg.ba.beta);
  CHECK(back.ba.cauchy_scale == cfg.ba.cauchy_scale);
  CHECK(back.ba.max_iterations == cfg.ba.max_iterations);
  CHECK(back.ba.function_tolerance == cfg.ba.function_tolerance);
  CHECK(back.ba.parameter_tolerance == cfg.ba.parameter_tolerance);
  CHECK(back.ba.optimize_intrinsics == cfg.ba.optimize_intrinsics);
}

TEST_CASE("config values are type checked and unknown keys left unconsumed") {
  ScenarioConfig cfg;
  std::set<std::string> consumed;
  CHECK_THROWS_AS(ApplyScenarioJson({{"scenario.num_frames", "many"}}, &cfg,
                                    &consumed),
                  std::invalid_argument);
  CHECK_THROWS_AS(ApplyScenarioJson({{"scenario.world", "moon-base"}}, &cfg,
                                    &consumed),
                  std::invalid_argument);
  CHECK_THROWS_AS(ApplyScenarioJson({{"scenario.texture_gaps", 7}}, &cfg,
                                    &consumed),
                  std::invalid_argument);

  PipelineConfig pcfg;
  CHECK_THROWS_AS(ApplyPipelineJson({{"mode", "guesswork"}}, &pcfg, &consumed),
                  std::invalid_argument);
  CHECK_THROWS_AS(ApplyPipelineJson({{"ba.alpha", true}}, &pcfg, &consumed),
                  std::invalid_argument);

  consumed.clear();
  ApplyPipelineJson({{"ba.alpha", 2.0}, {"mystery", 1}}, &pcfg, &consumed);
  CHECK(pcfg.ba.alpha == 2.0);
  CHECK(consumed == std::set<std::string>{"ba.alpha"});
}

TEST_CASE("json file parse errors carry the file name and line") {
  const fs::path path = TestDir() / "broken.json";
  WriteText(path, "{\n  \"a\": 1,\n  oops\n}\n");
  CHECK_THROWS_WITH_AS(ReadJsonFile(path), doctest::Contains("line 3"),
                       IoError);
  CHECK_THROWS_WITH_AS(ReadJsonFile(path), doctest::Contains("broken.json"),
                       IoError);
}

TEST_CASE("dataset directory round trip") {
  ScenarioConfig cfg;
  cfg.world = WorldKind::kCorridorLoop;
  cfg.num_frames = 30;
  cfg.num_points = 220;
  cfg.sigma_px = 0.5;
  cfg.temporal_match_window = 8;
  cfg.covisible_partners = 4;
  cfg.seed = 11;
  const SimulatedData data = Generate(cfg);

  const fs::path dir = TestDir() / "dataset";
  fs::remove_all(dir);
  WriteDataset(dir, data);
  for (const char* name :
       {"gt_poses.csv", "vio_poses.csv", "intrinsics.txt", "matches.txt",
        "scenario.json", "doppelganger_pairs.txt"}) {
    CHECK(fs::exists(dir / name));
  }
  CHECK(fs::is_directory(dir / "features"));

  const StoredDataset back = ReadDataset(dir);
  CHECK(back.dataset.frames == data.dataset.frames);
  CHECK(back.gt_poses.size() == data.gt_poses.size());
  CHECK(back.dataset.vio.size() == data.dataset.vio.size());
  CHECK(back.doppelganger_pairs == data.doppelganger_pairs);
  CHECK(back.scenario.world == cfg.world);
  CHECK(back.scenario.num_frames == cfg.num_frames);
  CHECK(back.scenario.seed == cfg.seed);

  REQUIRE(back.dataset.matches.size() == data.dataset.matches.size());
  for (const auto& [pair, set] : data.dataset.matches)
    CHECK(back.dataset.matches.at(pair).matches == set.matches);

  for (const auto& [frame, pose] : data.gt_poses) {
    CHECK(back.gt_poses.at(frame).translation == pose.translation);
    CHECK(back.dataset.vio.At(frame).translation ==
          data.dataset.vio.At(frame).translation);
  }
  for (const frame_t frame : data.dataset.frames) {
    CHECK(back.dataset.features.Points(frame) ==
          data.dataset.features.Points(frame));
  }
  CHECK(back.dataset.intrinsics.fx == data.dataset.intrinsics.fx);
}
