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

// viosfm command line: dataset simulation, reconstruction, evaluation,
// and the batch-size sweep.
//
// Exit codes: 0 success, 1 config error, 2 I/O error, 3 pipeline failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "viosfm/io/io.h"
#include "viosfm/sfm/pipeline.h"
#include "viosfm/sim/simulation.h"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;
using namespace viosfm;

// Scenario and pipeline settings merged into one key space; every command
// takes the subset it needs. Precedence: flags > config file > defaults.
struct RunConfig {
  ScenarioConfig scenario;
  PipelineConfig pipeline;
};

struct Overrides {
  std::optional<uint64_t> seed;
  std::optional<int> batch_size;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<double> t_ee;
  std::optional<int> n1;
  std::optional<int> n2;
};

void AddOverrideFlags(CLI::App* cmd, std::string* config_path,
                      Overrides* over) {
  cmd->add_option("--config", *config_path, "JSON config with dotted keys");
  cmd->add_option("--seed", over->seed, "Master RNG seed");
  cmd->add_option("--batch-size", over->batch_size,
                  "Frames per registration batch (k)");
  cmd->add_option("--alpha", over->alpha, "Relative-pose weight scale");
  cmd->add_option("--beta", over->beta, "Adaptive-weight decay rate");
  cmd->add_option("--t-ee", over->t_ee,
                  "Epipolar screening threshold in pixels");
  cmd->add_option("--n1", over->n1, "Temporal pairing window");
  cmd->add_option("--n2", over->n2, "Retrieval partners per frame");
}

RunConfig ResolveConfig(const std::string& config_path,
                        const Overrides& over) {
  RunConfig cfg;
  if (!config_path.empty()) {
    const json j = ReadJsonFile(config_path);
    std::set<std::string> consumed;
    ApplyScenarioJson(j, &cfg.scenario, &consumed);
    ApplyPipelineJson(j, &cfg.pipeline, &consumed);
    for (const auto& [key, value] : j.items()) {
      if (!consumed.count(key))
        throw std::invalid_argument("unknown config key '" + key + "' in " +
                                    config_path);
    }
  }
  if (over.seed) {
    cfg.scenario.seed = *over.seed;
    cfg.pipeline.seed = *over.seed;
  }
  if (over.batch_size) cfg.pipeline.batch.batch_size_k = *over.batch_size;
  if (over.alpha) cfg.pipeline.ba.alpha = *over.alpha;
  if (over.beta) cfg.pipeline.ba.beta = *over.beta;
  if (over.t_ee) cfg.pipeline.pairing.t_ee = *over.t_ee;
  if (over.n1) cfg.pipeline.pairing.n1_temporal = *over.n1;
  if (over.n2) cfg.pipeline.pairing.n2_retrieval = *over.n2;
  return cfg;
}

json MergedEcho(const RunConfig& cfg) {
  json echo = ScenarioToJson(cfg.scenario);
  echo.update(PipelineToJson(cfg.pipeline));
  // One seed drives both halves; the echo must reproduce the run.
  echo["seed"] = cfg.pipeline.seed;
  return echo;
}

int CountStatus(const std::map<FramePair, PairVerdict>& verdicts,
                frame_t first, frame_t last, PairStatus status) {
  int n = 0;
  for (const auto& [pair, verdict] : verdicts) {
    if (pair.second < first || pair.second > last) continue;
    if (verdict.status == status) ++n;
  }
  return n;
}

json BuildReport(const Dataset& dataset, const PipelineResult& result,
                 double wall_seconds) {
  json report;
  report["candidate_pairs"] = result.candidate_pairs;
  report["accepted_pairs"] = result.accepted_pairs;
  report["verify_seconds"] = result.verify_seconds;
  report["wall_seconds"] = wall_seconds;
  report["registered_frames"] = result.model.poses.size();
  report["tracks"] = result.model.tracks.size();
  json batches = json::array();
  for (const BatchSummary& b : result.batches) {
    int frames_registered = 0;
    for (const frame_t f : dataset.frames)
      if (f >= b.first_frame && f <= b.last_frame) ++frames_registered;
    batches.push_back({
        {"batch_index", b.batch_index},
        {"first_frame", b.first_frame},
        {"last_frame", b.last_frame},
        {"frames_registered", frames_registered},
        {"pairs_accepted", CountStatus(result.verdicts, b.first_frame,
                                       b.last_frame, PairStatus::kAccepted)},
        {"pairs_rejected_by_vio",
         CountStatus(result.verdicts, b.first_frame, b.last_frame,
                     PairStatus::kRejectedByVio)},
        {"pairs_rejected_by_ransac",
         CountStatus(result.verdicts, b.first_frame, b.last_frame,
                     PairStatus::kRejectedByRansac)},
        {"new_tracks", b.new_tracks},
        {"removed_tracks", b.removed_tracks},
        {"ba", json::parse(b.ba.ToJson())},
        {"wall_seconds", b.wall_seconds},
    });
  }
  report["batches"] = batches;
  return report;
}

int CmdSimulate(const RunConfig& cfg, const fs::path& out_dir) {
  const SimulatedData data = Generate(cfg.scenario);
  WriteDataset(out_dir, data);
  std::printf("wrote %s: frames=%zu points=%zu pairs=%zu doppelgangers=%zu\n",
              out_dir.string().c_str(), data.dataset.frames.size(),
              data.gt_points.size(), data.dataset.matches.size(),
              data.doppelganger_pairs.size());
  return 0;
}

int CmdReconstruct(const RunConfig& cfg, const fs::path& dataset_dir,
                   const fs::path& out_dir) {
  const StoredDataset stored = ReadDataset(dataset_dir);
  const auto t0 = std::chrono::steady_clock::now();
  const PipelineResult result = Reconstruct(stored.dataset, cfg.pipeline);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create directory: " + out_dir.string());
  WritePosesCsv(out_dir / "poses.csv", result.model.poses);
  WritePlyFile(out_dir / "points.ply", result.model);
  WriteJsonFile(out_dir / "report.json",
                BuildReport(stored.dataset, result, wall));
  WriteJsonFile(out_dir / "config.json", MergedEcho(cfg));
  std::printf(
      "wrote %s: registered=%zu tracks=%zu batches=%zu accepted_pairs=%d/%d "
      "wall=%.2fs\n",
      out_dir.string().c_str(), result.model.poses.size(),
      result.model.tracks.size(), result.batches.size(),
      result.accepted_pairs, result.candidate_pairs, wall);
  return 0;
}

int CmdEvaluate(const fs::path& estimated_path, const fs::path& reference_path,
                const fs::path& out_path) {
  const std::map<frame_t, Pose> estimated =
      ReadPosesCsv(estimated_path, FrameTag::kWorld);
  const std::map<frame_t, Pose> reference =
      ReadPosesCsv(reference_path, FrameTag::kWorld);
  const std::optional<AteResult> ate =
      EvaluateAte(estimated, reference, /*with_scale=*/true);
  if (!ate)
    throw std::runtime_error(
        "evaluation failed: fewer than 3 common frames or degenerate "
        "alignment");
  std::printf("rmse %.9g median %.9g\n", ate->rmse, ate->median);
  if (!out_path.empty()) {
    json per_frame;
    for (const auto& [frame, err] : ate->per_frame)
      per_frame[std::to_string(frame)] = err;
    WriteJsonFile(out_path, json{{"rmse", ate->rmse},
                                 {"median", ate->median},
                                 {"per_frame", per_frame}});
  }
  return 0;
}

int CmdSweep(const RunConfig& cfg, const fs::path& dataset_dir,
             const fs::path& out_dir, const std::vector<int>& ks) {
  const StoredDataset stored = ReadDataset(dataset_dir);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create directory: " + out_dir.string());

  std::string csv = "k,rmse,wall_seconds\n";
  for (const int k : ks) {
    PipelineConfig run = cfg.pipeline;
    run.batch.batch_size_k = k;
    const auto t0 = std::chrono::steady_clock::now();
    const PipelineResult result = Reconstruct(stored.dataset, run);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    const std::optional<AteResult> ate =
        EvaluateAte(result.model.poses, stored.gt_poses, /*with_scale=*/true);
    if (!ate) throw std::runtime_error("sweep evaluation failed at k=" +
                                       std::to_string(k));
    char row[96];
    std::snprintf(row, sizeof(row), "%d,%.17g,%.3f\n", k, ate->rmse, wall);
    csv += row;
    std::printf("k=%d rmse=%.6f wall=%.2fs\n", k, ate->rmse, wall);
  }
  const fs::path csv_path = out_dir / "sweep.csv";
  std::ofstream out(csv_path);
  if (!out) throw IoError("cannot open for writing: " + csv_path.string());
  out << csv;
  out.flush();
  if (!out) throw IoError("write failed: " + csv_path.string());
  WriteJsonFile(out_dir / "config.json", MergedEcho(cfg));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse reconstruction from feature tracks and VIO priors"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides over;
  std::string out;
  std::string dataset_dir;
  std::string estimated_path, reference_path;
  std::vector<int> ks = {10, 25, 50, 100, 200};

  CLI::App* simulate =
      app.add_subcommand("simulate", "Generate a synthetic dataset directory");
  AddOverrideFlags(simulate, &config_path, &over);
  simulate->add_option("--out", out, "Output dataset directory")->required();

  CLI::App* reconstruct = app.add_subcommand(
      "reconstruct", "Reconstruct a dataset directory into poses and points");
  AddOverrideFlags(reconstruct, &config_path, &over);
  reconstruct->add_option("dataset", dataset_dir, "Dataset directory")
      ->required();
  reconstruct->add_option("--out", out, "Output directory")->required();

  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "Absolute trajectory error between two pose CSV files");
  evaluate->add_option("estimated", estimated_path, "Estimated poses CSV")
      ->required();
  evaluate->add_option("reference", reference_path, "Reference poses CSV")
      ->required();
  evaluate->add_option("--out", out, "Optional metrics JSON path");

  CLI::App* sweep = app.add_subcommand(
      "sweep-batch-size",
      "Reconstruct once per batch size and emit a k,rmse,wall-time CSV");
  AddOverrideFlags(sweep, &config_path, &over);
  sweep->add_option("dataset", dataset_dir, "Dataset directory")->required();
  sweep->add_option("--out", out, "Output directory")->required();
  sweep->add_option("--ks", ks, "Batch sizes to sweep")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (simulate->parsed())
      return CmdSimulate(ResolveConfig(config_path, over), out);
    if (reconstruct->parsed())
      return CmdReconstruct(ResolveConfig(config_path, over), dataset_dir,
                            out);
    if (evaluate->parsed())
      return CmdEvaluate(estimated_path, reference_path, out);
    if (sweep->parsed())
      return CmdSweep(ResolveConfig(config_path, over), dataset_dir, out, ks);
  } catch (const IoError& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "pipeline error: %s\n", e.what());
    return 3;
  }
  return 0;
}
