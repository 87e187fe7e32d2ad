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

#include "viosfm/sim/simulation.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <utility>

#include "viosfm/geometry/alignment.h"
#include "viosfm/geometry/intrinsics.h"

namespace viosfm {
namespace {

constexpr int kImageWidth = 640;
constexpr int kImageHeight = 480;
constexpr double kMinDepth = 0.2;
// Pixel noise draws are clamped to this many sigmas, keeping every true
// match within the 5 sigma reprojection band the dataset guarantees.
constexpr double kNoiseClampSigmas = 4.0;
// Pairs below this covisibility count are not worth a retrieval edge.
constexpr int kMinCovisibleCount = 16;

Intrinsics SharedIntrinsics() { return Intrinsics(500.0, 500.0, 320.0, 240.0); }

// World-from-camera rotation for a camera at `eye` looking along
// `forward` with `up` roughly opposing the image y axis. Camera axes are
// x right, y down, z forward.
Rotation LookAlong(const Eigen::Vector3d& forward, const Eigen::Vector3d& up) {
  const Eigen::Vector3d f = forward.normalized();
  Eigen::Vector3d r = f.cross(up);
  if (r.norm() < 1e-9) {
    throw std::invalid_argument("viewing direction parallel to up vector");
  }
  r.normalize();
  const Eigen::Vector3d d = f.cross(r);
  Eigen::Matrix3d m;
  m.col(0) = r;
  m.col(1) = d;
  m.col(2) = f;
  return Rotation::FromMatrix(m);
}

Pose CameraAt(const Eigen::Vector3d& eye, const Eigen::Vector3d& forward) {
  Pose pose;
  pose.rotation = LookAlong(forward, Eigen::Vector3d::UnitZ());
  pose.translation = eye;
  pose.frame_tag = FrameTag::kWorld;
  return pose;
}

struct World {
  std::vector<Eigen::Vector3d> points;
  std::map<frame_t, Pose> poses;
  // Duplicated corridor only: twin frame pairs and the point-id offset
  // between the two congruent layouts.
  std::vector<FramePair> twin_pairs;
  int twin_point_offset = 0;
};

double Uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

World BuildBoxCloud(const ScenarioConfig& cfg, std::mt19937_64& rng) {
  World w;
  w.points.reserve(cfg.num_points);
  for (int i = 0; i < cfg.num_points; ++i) {
    w.points.emplace_back(Uniform(rng, -2.5, 2.5), Uniform(rng, -2.5, 2.5),
                          Uniform(rng, -1.5, 1.5));
  }
  const double span = 1.5 * std::numbers::pi;
  const double step = span / std::max(cfg.num_frames - 1, 1);
  for (int f = 0; f < cfg.num_frames; ++f) {
    const double theta = step * f;
    const Eigen::Vector3d eye(7.0 * std::cos(theta), 7.0 * std::sin(theta),
                              0.4 * std::sin(2.0 * theta));
    w.poses[f] = CameraAt(eye, -eye.normalized());
  }
  return w;
}

World BuildCorridorLoop(const ScenarioConfig& cfg, std::mt19937_64& rng) {
  World w;
  w.points.reserve(cfg.num_points);
  const int n_outer = (cfg.num_points * 55) / 100;
  const int n_inner = (cfg.num_points * 25) / 100;
  for (int i = 0; i < cfg.num_points; ++i) {
    const double phi = Uniform(rng, 0.0, 2.0 * std::numbers::pi);
    double radius, height;
    if (i < n_outer) {
      radius = 5.5 + Uniform(rng, -0.15, 0.15);
      height = Uniform(rng, -0.3, 2.3);
    } else if (i < n_outer + n_inner) {
      radius = 2.5 + Uniform(rng, -0.15, 0.15);
      height = Uniform(rng, -0.3, 2.3);
    } else {
      radius = Uniform(rng, 2.6, 5.4);
      height = Uniform(rng, -0.05, 0.05);
    }
    w.points.emplace_back(radius * std::cos(phi), radius * std::sin(phi),
                          height);
  }
  // Two laps around the ring. Relative drift accumulated over one lap is
  // still small against the baselines of lap-to-lap revisit pairs, so
  // those pairs survive prior-based screening and close the loop.
  const double step = 4.0 * std::numbers::pi / cfg.num_frames;
  for (int f = 0; f < cfg.num_frames; ++f) {
    const double theta = step * f;
    const Eigen::Vector3d eye(4.0 * std::cos(theta), 4.0 * std::sin(theta),
                              1.0 + 0.03 * std::sin(4.0 * theta));
    const Eigen::Vector3d forward(-std::sin(theta), std::cos(theta), 0.0);
    w.poses[f] = CameraAt(eye, forward);
  }
  return w;
}

World BuildDuplicatedCorridor(const ScenarioConfig& cfg,
                              std::mt19937_64& rng) {
  World w;
  const int half_frames = std::max(cfg.num_frames / 2, 1);
  const double step = 0.18;
  const double length = step * (half_frames - 1);
  const int half_points = std::max(cfg.num_points / 2, 1);

  w.points.reserve(2 * static_cast<size_t>(half_points));
  const int n_wall = (half_points * 35) / 100;
  const int n_floor = (half_points * 15) / 100;
  for (int i = 0; i < half_points; ++i) {
    const double x = Uniform(rng, -1.0, length + 6.0);
    double y, z;
    if (i < 2 * n_wall) {
      const double side = (i % 2 == 0) ? 1.0 : -1.0;
      y = side * (1.5 - Uniform(rng, 0.0, 0.25));
      z = Uniform(rng, 0.1, 2.3);
    } else if (i < 2 * n_wall + n_floor) {
      y = Uniform(rng, -1.4, 1.4);
      z = Uniform(rng, 0.0, 0.08);
    } else {
      y = Uniform(rng, -1.4, 1.4);
      z = 2.4 - Uniform(rng, 0.0, 0.08);
    }
    w.points.emplace_back(x, y, z);
  }
  // Congruent copy one floor band up, far beyond the viewing distance.
  const Eigen::Vector3d shift(0.0, 0.0, 20.0);
  for (int i = 0; i < half_points; ++i) {
    w.points.push_back(w.points[i] + shift);
  }
  w.twin_point_offset = half_points;

  // Walk corridor A, then walk the copy with a small in-camera offset:
  // the twin views are nearly identical images, but the two trajectories
  // disagree laterally and in heading, which is what the pose prior can
  // detect and pure two-view geometry cannot.
  Pose lift;
  lift.translation = shift;
  Pose offset;
  offset.rotation = Rotation::Exp(Eigen::Vector3d(0.0, 0.05, 0.0));
  offset.translation = Eigen::Vector3d(0.90, 0.0, 0.50);
  for (int f = 0; f < half_frames; ++f) {
    const Eigen::Vector3d eye(step * f, 0.0, 1.0 + 0.02 * std::sin(0.5 * f));
    w.poses[f] = CameraAt(eye, Eigen::Vector3d::UnitX());
  }
  for (int f = half_frames; f < cfg.num_frames; ++f) {
    const Pose& base = w.poses.at(f - half_frames);
    w.poses[f] = Compose(Compose(lift, base), offset);
    w.poses[f].frame_tag = FrameTag::kWorld;
  }
  const int n_twins = std::min(half_frames, cfg.num_frames - half_frames);
  for (int f = 0; f < n_twins; ++f) {
    w.twin_pairs.push_back(MakeFramePair(f, f + half_frames));
  }
  return w;
}

World BuildWorld(const ScenarioConfig& cfg, std::mt19937_64& rng) {
  switch (cfg.world) {
    case WorldKind::kBoxCloud:
      return BuildBoxCloud(cfg, rng);
    case WorldKind::kCorridorLoop:
      return BuildCorridorLoop(cfg, rng);
    case WorldKind::kDuplicatedCorridor:
      return BuildDuplicatedCorridor(cfg, rng);
  }
  throw std::invalid_argument("unknown world kind");
}

bool InGap(const std::vector<TextureGap>& gaps, frame_t frame) {
  for (const auto& g : gaps) {
    if (frame >= g.first && frame <= g.last) return true;
  }
  return false;
}

uint64_t PairKey(frame_t a, frame_t b) {
  return (static_cast<uint64_t>(static_cast<uint32_t>(a)) << 32) |
         static_cast<uint64_t>(static_cast<uint32_t>(b));
}

}  // namespace

std::string WorldKindName(WorldKind world) {
  switch (world) {
    case WorldKind::kBoxCloud:
      return "box-cloud";
    case WorldKind::kCorridorLoop:
      return "corridor-loop";
    case WorldKind::kDuplicatedCorridor:
      return "duplicated-corridor";
  }
  return "unknown";
}

std::optional<WorldKind> ParseWorldKind(const std::string& name) {
  if (name == "box-cloud") return WorldKind::kBoxCloud;
  if (name == "corridor-loop") return WorldKind::kCorridorLoop;
  if (name == "duplicated-corridor") return WorldKind::kDuplicatedCorridor;
  return std::nullopt;
}

SimulatedData Generate(const ScenarioConfig& cfg) {
  if (cfg.num_frames < 1) throw std::invalid_argument("num_frames must be >= 1");
  if (cfg.num_points < 1) throw std::invalid_argument("num_points must be >= 1");
  if (cfg.sigma_px < 0.0) throw std::invalid_argument("sigma_px must be >= 0");
  if (cfg.outlier_fraction < 0.0 || cfg.outlier_fraction >= 1.0) {
    throw std::invalid_argument("outlier_fraction must be in [0, 1)");
  }
  if (cfg.vio_sigma_rot_deg < 0.0 || cfg.vio_sigma_trans < 0.0) {
    throw std::invalid_argument("vio noise sigmas must be >= 0");
  }
  if (cfg.max_view_distance <= 0.0) {
    throw std::invalid_argument("max_view_distance must be > 0");
  }
  if (cfg.temporal_match_window < 0 || cfg.covisible_partners < 0) {
    throw std::invalid_argument("match emission counts must be >= 0");
  }
  for (const auto& g : cfg.texture_gaps) {
    if (g.first > g.last) {
      throw std::invalid_argument("texture gap range is reversed");
    }
  }

  std::mt19937_64 rng(cfg.seed);
  World world = BuildWorld(cfg, rng);

  SimulatedData out;
  out.config = cfg;
  out.gt_poses = world.poses;
  out.gt_points = world.points;
  out.dataset.intrinsics = SharedIntrinsics();
  const Intrinsics& K = out.dataset.intrinsics;

  // Visibility and feature tables. Feature index of a point in a frame is
  // its rank in that frame's visible-point list (ascending point id).
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::vector<int>> visible(cfg.num_frames);
  std::vector<std::map<int, feature_t>> feat_of(cfg.num_frames);
  const int num_points = static_cast<int>(world.points.size());
  for (int f = 0; f < cfg.num_frames; ++f) {
    const Pose& pose = world.poses.at(f);
    std::vector<Eigen::Vector2d> pixels;
    for (int p = 0; p < num_points; ++p) {
      const Eigen::Vector3d& pt = world.points[p];
      if ((pt - pose.translation).norm() > cfg.max_view_distance) continue;
      if (PointDepth(pose, pt) < kMinDepth) continue;
      const auto px = Project(pose, pt, K);
      if (!px) continue;
      if (px->x() < 0.0 || px->x() >= kImageWidth || px->y() < 0.0 ||
          px->y() >= kImageHeight) {
        continue;
      }
      Eigen::Vector2d noisy = *px;
      noisy.x() += cfg.sigma_px * std::clamp(gauss(rng), -kNoiseClampSigmas,
                                             kNoiseClampSigmas);
      noisy.y() += cfg.sigma_px * std::clamp(gauss(rng), -kNoiseClampSigmas,
                                             kNoiseClampSigmas);
      feat_of[f][p] = static_cast<feature_t>(pixels.size());
      pixels.push_back(noisy);
      visible[f].push_back(p);
    }
    if (pixels.empty()) {
      throw std::runtime_error("frame " + std::to_string(f) +
                               " observes no points");
    }
    out.dataset.frames.push_back(f);
    out.dataset.features.SetFrame(f, std::move(pixels));
  }

  // Covisibility counts drive which non-temporal pairs get match sets.
  std::unordered_map<uint64_t, int> covis;
  {
    std::vector<std::vector<frame_t>> frames_of_point(num_points);
    for (int f = 0; f < cfg.num_frames; ++f) {
      for (int p : visible[f]) frames_of_point[p].push_back(f);
    }
    for (const auto& frames : frames_of_point) {
      for (size_t i = 0; i < frames.size(); ++i) {
        for (size_t j = i + 1; j < frames.size(); ++j) {
          ++covis[PairKey(frames[i], frames[j])];
        }
      }
    }
  }

  std::set<FramePair> selected;
  for (int f = 0; f < cfg.num_frames; ++f) {
    const int hi = std::min(cfg.num_frames - 1, f + cfg.temporal_match_window);
    for (int g = f + 1; g <= hi; ++g) selected.insert(MakeFramePair(f, g));
  }
  if (cfg.covisible_partners > 0) {
    std::vector<std::vector<std::pair<int, frame_t>>> partners(cfg.num_frames);
    for (const auto& [key, count] : covis) {
      if (count < kMinCovisibleCount) continue;
      const auto a = static_cast<frame_t>(key >> 32);
      const auto b = static_cast<frame_t>(key & 0xffffffffu);
      partners[a].emplace_back(count, b);
      partners[b].emplace_back(count, a);
    }
    for (int f = 0; f < cfg.num_frames; ++f) {
      auto& list = partners[f];
      std::sort(list.begin(), list.end(), [](const auto& x, const auto& y) {
        if (x.first != y.first) return x.first > y.first;
        return x.second < y.second;
      });
      int taken = 0;
      for (const auto& [count, g] : list) {
        if (taken >= cfg.covisible_partners) break;
        if (std::abs(g - f) <= cfg.temporal_match_window) continue;
        selected.insert(MakeFramePair(f, g));
        ++taken;
      }
    }
  }

  for (const FramePair& pair : selected) {
    const auto& va = visible[pair.first];
    const auto& vb = visible[pair.second];
    std::vector<int> common;
    std::set_intersection(va.begin(), va.end(), vb.begin(), vb.end(),
                          std::back_inserter(common));
    if (common.empty()) continue;

    MatchSet ms;
    ms.frame_a = pair.first;
    ms.frame_b = pair.second;
    std::vector<bool> mask;
    for (int p : common) {
      ms.matches.emplace_back(feat_of[pair.first].at(p),
                              feat_of[pair.second].at(p));
      mask.push_back(true);
    }

    if (cfg.outlier_fraction > 0.0) {
      const int n_in = static_cast<int>(ms.matches.size());
      int n_out = static_cast<int>(std::lround(
          cfg.outlier_fraction / (1.0 - cfg.outlier_fraction) * n_in));
      std::vector<feature_t> free_a, free_b;
      for (int p : va) {
        if (!std::binary_search(common.begin(), common.end(), p)) {
          free_a.push_back(feat_of[pair.first].at(p));
        }
      }
      for (int p : vb) {
        if (!std::binary_search(common.begin(), common.end(), p)) {
          free_b.push_back(feat_of[pair.second].at(p));
        }
      }
      std::shuffle(free_a.begin(), free_a.end(), rng);
      std::shuffle(free_b.begin(), free_b.end(), rng);
      n_out = std::min<int>({n_out, static_cast<int>(free_a.size()),
                             static_cast<int>(free_b.size())});
      for (int i = 0; i < n_out; ++i) {
        ms.matches.emplace_back(free_a[i], free_b[i]);
        mask.push_back(false);
      }
    }

    if (InGap(cfg.texture_gaps, pair.first) ||
        InGap(cfg.texture_gaps, pair.second)) {
      if (ms.matches.size() > 5) {
        ms.matches.resize(5);
        mask.resize(5);
      }
    }

    out.dataset.matches[pair] = std::move(ms);
    out.gt_inlier_masks[pair] = std::move(mask);
  }

  // Doppelganger injection: match each twin frame pair through the
  // point-to-copy map. The matches fit a valid two-view geometry (the
  // in-camera offset between the two walks) but connect different
  // points, so the ground-truth mask is all false.
  for (const FramePair& pair : world.twin_pairs) {
    MatchSet ms;
    ms.frame_a = pair.first;
    ms.frame_b = pair.second;
    for (int p : visible[pair.first]) {
      if (p >= world.twin_point_offset) continue;
      const auto it = feat_of[pair.second].find(p + world.twin_point_offset);
      if (it == feat_of[pair.second].end()) continue;
      ms.matches.emplace_back(feat_of[pair.first].at(p), it->second);
    }
    if (InGap(cfg.texture_gaps, pair.first) ||
        InGap(cfg.texture_gaps, pair.second)) {
      if (ms.matches.size() > 5) ms.matches.resize(5);
    }
    if (ms.matches.empty()) continue;
    out.gt_inlier_masks[pair] = std::vector<bool>(ms.matches.size(), false);
    out.dataset.matches[pair] = std::move(ms);
    out.doppelganger_pairs.insert(pair);
  }

  out.dataset.vio = SimulateVio(out.gt_poses, cfg.vio_sigma_rot_deg,
                                cfg.vio_sigma_trans,
                                cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  return out;
}

VioSequence SimulateVio(const std::map<frame_t, Pose>& gt_poses,
                        double sigma_rot_deg, double sigma_trans,
                        uint64_t seed) {
  if (gt_poses.empty()) {
    throw std::invalid_argument("need at least one pose to simulate from");
  }
  // Sigmas are the rms norm of the per-frame perturbation, so each axis
  // gets sigma / sqrt(3) and terminal drift follows sqrt(N) * sigma.
  const double axis_rot =
      sigma_rot_deg * std::numbers::pi / 180.0 / std::sqrt(3.0);
  const double axis_trans = sigma_trans / std::sqrt(3.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::map<frame_t, Pose> noisy;
  auto it = gt_poses.begin();
  noisy[it->first] = it->second;
  noisy[it->first].frame_tag = FrameTag::kVioLocal;
  auto prev = it++;
  for (; it != gt_poses.end(); prev = it++) {
    Pose rel = RelativePose(prev->second, it->second);
    const Eigen::Vector3d w(gauss(rng), gauss(rng), gauss(rng));
    const Eigen::Vector3d v(gauss(rng), gauss(rng), gauss(rng));
    rel.rotation = rel.rotation * Rotation::Exp(axis_rot * w);
    rel.translation += axis_trans * v;
    Pose integrated = Compose(noisy.at(prev->first), rel);
    integrated.frame_tag = FrameTag::kVioLocal;
    noisy[it->first] = integrated;
  }
  return VioSequence(std::move(noisy));
}

std::optional<AteResult> EvaluateAte(const std::map<frame_t, Pose>& estimated,
                                     const std::map<frame_t, Pose>& reference,
                                     bool with_scale) {
  std::vector<frame_t> common;
  std::vector<Eigen::Vector3d> src, dst;
  for (const auto& [frame, pose] : estimated) {
    const auto it = reference.find(frame);
    if (it == reference.end()) continue;
    common.push_back(frame);
    src.push_back(pose.translation);
    dst.push_back(it->second.translation);
  }
  if (common.size() < 3) return std::nullopt;

  const auto align = UmeyamaAlign(src, dst, with_scale);
  if (!align) return std::nullopt;

  AteResult result;
  std::vector<double> errors;
  double sq_sum = 0.0;
  for (size_t i = 0; i < common.size(); ++i) {
    const double err = (align->Apply(src[i]) - dst[i]).norm();
    result.per_frame[common[i]] = err;
    errors.push_back(err);
    sq_sum += err * err;
  }
  result.rmse = std::sqrt(sq_sum / static_cast<double>(errors.size()));
  std::sort(errors.begin(), errors.end());
  const size_t n = errors.size();
  result.median = (n % 2 == 1) ? errors[n / 2]
                               : 0.5 * (errors[n / 2 - 1] + errors[n / 2]);
  return result;
}

}  // namespace viosfm
