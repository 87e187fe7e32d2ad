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

#include "viosfm/ba/solver.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#ifdef VIOSFM_WITH_CHOLMOD
#include <Eigen/CholmodSupport>
#endif

#include "json.hpp"

namespace viosfm {

namespace {

constexpr double kInitialLambda = 1e-4;
constexpr double kMaxLambda = 1e12;
constexpr double kLambdaUp = 10.0;
constexpr double kLambdaDown = 1.0 / 3.0;
// Absolute floor added to damped point blocks so a rank-deficient point
// cannot poison the Schur elimination.
constexpr double kPointDampFloor = 1e-12;

// Visual residual work is split into a fixed number of chunks so partial
// sums can be merged in a fixed order. Results are bit-identical for any
// thread count, including a serial run.
constexpr int kSolverChunks = 32;

// Runs fn(chunk_index) for every chunk on a small thread pool. The chunk
// decomposition carries the determinism; the schedule does not matter.
template <typename Fn>
void ParallelChunks(int num_chunks, const Fn& fn) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned n_workers =
      std::min<unsigned>(hw, static_cast<unsigned>(num_chunks));
  if (n_workers <= 1) {
    for (int c = 0; c < num_chunks; ++c) fn(c);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int c = next.fetch_add(1, std::memory_order_relaxed);
      if (c >= num_chunks) return;
      fn(c);
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(n_workers);
  for (unsigned t = 0; t < n_workers; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
}

struct CostSplit {
  double visual = 0.0;
  double relative = 0.0;
  double total() const { return visual + relative; }
};

struct VisualBlock {
  int frame_idx = -1;   // index into the frame arrays
  int point_idx = -1;   // index into the point arrays
  int observer_pos = -1;  // position of this camera in the point's observers
  track_t track = kInvalidTrack;
  Eigen::Vector2d z = Eigen::Vector2d::Zero();
  bool active = true;
};

struct RelativeBlock {
  int frame_idx_i = -1;
  int frame_idx_j = -1;
  Pose prior;
  double weight = 0.0;
  bool active = true;
  bool retried = false;
};

// Per-chunk partial sums for the camera and intrinsics parameters. Point
// sums need no partials because a chunk owns whole points.
struct CamChunkSums {
  std::vector<Matrix6d> a_diag;
  std::vector<Vector6d> g_cam;
  std::vector<Eigen::Matrix<double, 6, 4>> a_ck;
  Eigen::Matrix4d a_kk = Eigen::Matrix4d::Zero();
  Eigen::Vector4d g_k = Eigen::Vector4d::Zero();
};

class BaSolver {
 public:
  BaSolver(Reconstruction& model, const VioSequence& vio,
           const std::map<FramePair, int>& correspondence_counts,
           const std::set<frame_t>& fixed_frames, const BaConfig& cfg)
      : model_(model), fixed_frames_(fixed_frames), cfg_(cfg) {
    if (model.poses.empty()) {
      throw std::invalid_argument("bundle adjustment on an empty model");
    }
    if (fixed_frames.empty()) {
      throw std::invalid_argument("bundle adjustment without a gauge anchor");
    }

    for (const auto& [frame, pose] : model.poses) {
      frame_of_.push_back(frame);
      frame_index_[frame] = static_cast<int>(poses_.size());
      poses_.push_back(pose);
    }
    for (const auto& [track_id, track] : model.tracks) {
      track_of_.push_back(track_id);
      points_.push_back(track.point);
    }
    intrinsics_ = model.intrinsics;

    int point_idx = 0;
    for (const auto& [track_id, track] : model.tracks) {
      for (const auto& obs : track.observations) {
        VisualBlock block;
        block.frame_idx = frame_index_.at(obs.frame_id);
        block.point_idx = point_idx;
        block.track = track_id;
        block.z = obs.pixel;
        visual_.push_back(block);
      }
      ++point_idx;
    }

    if (cfg.alpha > 0.0) {
      for (size_t i = 0; i + 1 < frame_of_.size(); ++i) {
        const frame_t fi = frame_of_[i];
        const frame_t fj = frame_of_[i + 1];
        if (!vio.Has(fi) || !vio.Has(fj)) continue;
        RelativeBlock block;
        block.frame_idx_i = static_cast<int>(i);
        block.frame_idx_j = static_cast<int>(i + 1);
        block.prior = vio.RelativeBetween(fi, fj);
        const auto it = correspondence_counts.find(MakeFramePair(fi, fj));
        const int count = it == correspondence_counts.end() ? 0 : it->second;
        block.weight = AdaptiveWeight(count, cfg);
        relative_.push_back(block);
      }
    }
  }

  SolverReport Run() {
    SolverReport report;
    DeactivateInvalidBlocks(&report);
    BuildParameterLayout();
    BuildSchurPattern();
    BuildVisualChunks();

    report.num_visual_residuals = CountActive(visual_);
    report.num_relative_residuals = CountActive(relative_);

    const auto initial = Evaluate(poses_, points_, intrinsics_);
    if (!initial) {
      // Active blocks were validated against the current state already.
      throw std::runtime_error("initial bundle-adjustment state invalid");
    }
    report.initial_cost = initial->total();
    report.cost_history.push_back(initial->total());
    CostSplit current = *initial;

    if (report.num_visual_residuals + report.num_relative_residuals == 0 ||
        total_dim_ == 0) {
      report.termination = total_dim_ == 0 &&
                                   report.num_visual_residuals +
                                           report.num_relative_residuals >
                                       0
                               ? "converged_parameter_tolerance"
                               : "no_residuals";
      FinishReport(current, &report);
      return report;
    }

    double lambda = kInitialLambda;
    for (int iter = 0; iter < cfg_.max_iterations; ++iter) {
      report.iterations = iter + 1;
      Linearize();

      bool accepted = false;
      while (!accepted) {
        Eigen::VectorXd delta;
        std::vector<Eigen::Vector3d> point_delta;
        const bool solved = SolveStep(lambda, &delta, &point_delta);

        if (solved) {
          std::vector<Pose> cand_poses = poses_;
          std::vector<Eigen::Vector3d> cand_points = points_;
          Intrinsics cand_k = intrinsics_;
          ApplyStep(delta, point_delta, &cand_poses, &cand_points, &cand_k);

          const auto candidate = Evaluate(cand_poses, cand_points, cand_k);
          if (candidate && candidate->total() <= current.total()) {
            const double decrease = current.total() - candidate->total();
            const double step_norm = StepNorm(delta, point_delta);
            poses_ = std::move(cand_poses);
            points_ = std::move(cand_points);
            intrinsics_ = cand_k;
            const double prev = current.total();
            current = *candidate;
            report.cost_history.push_back(current.total());
            lambda = std::max(lambda * kLambdaDown, 1e-16);
            accepted = true;

            if (decrease <= cfg_.function_tolerance * prev) {
              report.termination = "converged_function_tolerance";
              FinishReport(current, &report);
              return report;
            }
            if (step_norm <= cfg_.parameter_tolerance) {
              report.termination = "converged_parameter_tolerance";
              FinishReport(current, &report);
              return report;
            }
            break;
          }
        }

        lambda *= kLambdaUp;
        if (lambda > kMaxLambda) {
          report.termination = "diverged";
          report.diverged = true;
          FinishReport(current, &report);
          return report;
        }
      }
    }

    report.termination = "max_iterations";
    FinishReport(current, &report);
    return report;
  }

 private:
  template <typename Blocks>
  static int CountActive(const Blocks& blocks) {
    int n = 0;
    for (const auto& b : blocks) n += b.active ? 1 : 0;
    return n;
  }

  bool IsFixed(int frame_idx) const {
    return fixed_frames_.count(frame_of_[frame_idx]) > 0;
  }

  // Sticky deactivation of blocks that are invalid at the initial state.
  // A relative block at the log singularity gets one perturb-and-retry of
  // its movable endpoint before deactivation.
  void DeactivateInvalidBlocks(SolverReport* report) {
    bool retry = true;
    while (retry) {
      retry = false;
      for (auto& block : visual_) {
        if (!block.active) continue;
        const Pose& pose = poses_[block.frame_idx];
        const Eigen::Vector3d& point = points_[block.point_idx];
        if (!point.allFinite() || !pose.translation.allFinite()) {
          std::ostringstream msg;
          msg << "non-finite state for track " << block.track << " in frame "
              << frame_of_[block.frame_idx];
          throw std::runtime_error(msg.str());
        }
        const auto r = VisualResidual(pose, point, intrinsics_, block.z);
        if (!r) {
          block.active = false;
          ++report->deactivated_visual;
        } else if (!r->allFinite()) {
          std::ostringstream msg;
          msg << "non-finite residual for track " << block.track
              << " in frame " << frame_of_[block.frame_idx];
          throw std::runtime_error(msg.str());
        }
      }
      for (auto& block : relative_) {
        if (!block.active) continue;
        const auto r = RelativeResidual(poses_[block.frame_idx_i],
                                        poses_[block.frame_idx_j],
                                        block.prior);
        if (r) continue;
        const int movable = !IsFixed(block.frame_idx_j) ? block.frame_idx_j
                            : !IsFixed(block.frame_idx_i)
                                ? block.frame_idx_i
                                : -1;
        if (!block.retried && movable >= 0) {
          block.retried = true;
          Tangent6 nudge;
          nudge.omega = Eigen::Vector3d::Constant(1e-5);
          poses_[movable] = Compose(poses_[movable], Pose::Exp(nudge));
          retry = true;
        } else {
          block.active = false;
          ++report->deactivated_relative;
        }
      }
    }
  }

  void BuildParameterLayout() {
    std::vector<int> frame_active(poses_.size(), 0);
    std::vector<int> point_active(points_.size(), 0);
    for (const auto& block : visual_) {
      if (!block.active) continue;
      ++frame_active[block.frame_idx];
      ++point_active[block.point_idx];
    }
    for (const auto& block : relative_) {
      if (!block.active) continue;
      ++frame_active[block.frame_idx_i];
      ++frame_active[block.frame_idx_j];
    }

    cam_block_of_frame_.assign(poses_.size(), -1);
    for (size_t i = 0; i < poses_.size(); ++i) {
      if (IsFixed(static_cast<int>(i)) || frame_active[i] == 0) continue;
      cam_block_of_frame_[i] = num_cam_blocks_++;
    }

    intrinsics_block_ = -1;
    if (cfg_.optimize_intrinsics && CountActive(visual_) > 0) {
      intrinsics_block_ = num_cam_blocks_;
    }
    num_blocks_ = num_cam_blocks_ + (intrinsics_block_ >= 0 ? 1 : 0);
    total_dim_ = 6 * num_cam_blocks_ + (intrinsics_block_ >= 0 ? 4 : 0);

    point_param_of_.assign(points_.size(), -1);
    for (size_t p = 0; p < points_.size(); ++p) {
      if (point_active[p] > 0) {
        point_param_of_[p] = static_cast<int>(param_points_.size());
        param_points_.push_back(static_cast<int>(p));
      }
    }
  }

  int BlockOffset(int block) const { return 6 * block; }
  int BlockWidth(int block) const {
    return block == intrinsics_block_ ? 4 : 6;
  }

  void BuildSchurPattern() {
    auto slot = [&](int bi, int bj) {
      if (bi > bj) std::swap(bi, bj);
      const auto key = std::make_pair(bi, bj);
      const auto it = slot_of_.find(key);
      if (it != slot_of_.end()) return it->second;
      const int id = static_cast<int>(slot_blocks_.size());
      slot_of_[key] = id;
      slot_blocks_.push_back(key);
      return id;
    };

    for (int b = 0; b < num_blocks_; ++b) slot(b, b);

    for (const auto& block : relative_) {
      if (!block.active) continue;
      const int bi = cam_block_of_frame_[block.frame_idx_i];
      const int bj = cam_block_of_frame_[block.frame_idx_j];
      if (bi >= 0 && bj >= 0 && bi != bj) slot(bi, bj);
    }

    // Per parameterized point: its parameterized observers in ascending
    // block order, one slot per unordered observer pair.
    point_observers_.assign(param_points_.size(), {});
    for (auto& block : visual_) {
      block.observer_pos = -1;
      if (!block.active) continue;
      const int pp = point_param_of_[block.point_idx];
      if (pp < 0) continue;
      const int cam = cam_block_of_frame_[block.frame_idx];
      if (cam < 0) continue;
      point_observers_[pp].push_back(cam);
    }
    for (auto& observers : point_observers_) {
      std::sort(observers.begin(), observers.end());
      // A parameterized point has at least one active observation, so it
      // always couples to a free intrinsics block.
      if (intrinsics_block_ >= 0) {
        observers.push_back(intrinsics_block_);
      }
    }
    for (auto& block : visual_) {
      if (!block.active) continue;
      const int pp = point_param_of_[block.point_idx];
      const int cam = cam_block_of_frame_[block.frame_idx];
      if (pp < 0 || cam < 0) continue;
      const auto& observers = point_observers_[pp];
      block.observer_pos = static_cast<int>(
          std::lower_bound(observers.begin(), observers.end(), cam) -
          observers.begin());
    }

    point_pair_slots_.assign(param_points_.size(), {});
    for (size_t pp = 0; pp < param_points_.size(); ++pp) {
      const auto& observers = point_observers_[pp];
      auto& slots = point_pair_slots_[pp];
      slots.reserve(observers.size() * (observers.size() + 1) / 2);
      for (size_t i = 0; i < observers.size(); ++i) {
        for (size_t j = i; j < observers.size(); ++j) {
          slots.push_back(slot(observers[i], observers[j]));
        }
      }
    }

    slot_values_.resize(slot_blocks_.size());
    for (size_t s = 0; s < slot_blocks_.size(); ++s) {
      slot_values_[s].resize(BlockWidth(slot_blocks_[s].first),
                             BlockWidth(slot_blocks_[s].second));
    }

    point_w_.assign(param_points_.size(), {});
    for (size_t pp = 0; pp < param_points_.size(); ++pp) {
      point_w_[pp].resize(point_observers_[pp].size());
      for (size_t i = 0; i < point_observers_[pp].size(); ++i) {
        point_w_[pp][i].resize(BlockWidth(point_observers_[pp][i]), 3);
      }
    }
    point_y_ = point_w_;
  }

  // Chunk boundaries over the visual blocks, aligned so one point's
  // observations never straddle two chunks. The blocks are grouped by
  // point at construction, which makes the alignment a local scan.
  void BuildVisualChunks() {
    visual_chunks_.clear();
    const size_t n = visual_.size();
    if (n == 0) return;
    const size_t target =
        (n + static_cast<size_t>(kSolverChunks) - 1) / kSolverChunks;
    size_t begin = 0;
    while (begin < n) {
      size_t end = std::min(begin + target, n);
      while (end < n && visual_[end].point_idx == visual_[end - 1].point_idx) {
        ++end;
      }
      visual_chunks_.emplace_back(begin, end);
      begin = end;
    }
  }

  // Compressed layout of the reduced camera system plus, per slot element,
  // its index into the value array. Every nonzero belongs to exactly one
  // slot, so a step only rewrites values through these indices. The layout
  // is assembled column block by column block; block offsets grow with the
  // block id, which makes every inner index position pure arithmetic.
  void BuildSparsePattern() {
    std::vector<std::vector<int>> partners(num_blocks_);
    for (const auto& [bi, bj] : slot_blocks_) {
      partners[bi].push_back(bj);
      if (bi != bj) partners[bj].push_back(bi);
    }
    // Running row count per partner, for locating a block inside a column.
    std::vector<std::vector<std::pair<int, int>>> partner_start(num_blocks_);
    for (int b = 0; b < num_blocks_; ++b) {
      std::sort(partners[b].begin(), partners[b].end());
      partner_start[b].reserve(partners[b].size());
      int rows = 0;
      for (const int p : partners[b]) {
        partner_start[b].emplace_back(p, rows);
        rows += BlockWidth(p);
      }
    }

    size_t nnz = 0;
    for (const auto& value : slot_values_) nnz += 2 * value.size();
    std::vector<int> outer(total_dim_ + 1, 0);
    std::vector<int> inner;
    inner.reserve(nnz);
    for (int b = 0; b < num_blocks_; ++b) {
      for (int c = 0; c < BlockWidth(b); ++c) {
        outer[BlockOffset(b) + c] = static_cast<int>(inner.size());
        for (const int p : partners[b]) {
          for (int r = 0; r < BlockWidth(p); ++r) {
            inner.push_back(BlockOffset(p) + r);
          }
        }
      }
    }
    outer[total_dim_] = static_cast<int>(inner.size());
    const std::vector<double> zeros(inner.size(), 0.0);
    hessian_ = Eigen::Map<const Eigen::SparseMatrix<double>>(
        total_dim_, total_dim_, static_cast<int>(inner.size()), outer.data(),
        inner.data(), zeros.data());

    const auto start_of = [&](int col_block, int row_block) {
      const auto& starts = partner_start[col_block];
      const auto it = std::lower_bound(
          starts.begin(), starts.end(), std::make_pair(row_block, 0),
          [](const std::pair<int, int>& a, const std::pair<int, int>& b) {
            return a.first < b.first;
          });
      return it->second;
    };
    slot_value_index_.assign(slot_blocks_.size(), {});
    for (size_t s = 0; s < slot_blocks_.size(); ++s) {
      const auto [bi, bj] = slot_blocks_[s];
      const int oi = BlockOffset(bi);
      const int oj = BlockOffset(bj);
      auto& where = slot_value_index_[s];
      where.reserve((bi != bj ? 2 : 1) * BlockWidth(bi) * BlockWidth(bj));
      // Column-major element order, matching the dense slot storage.
      const int direct = start_of(bj, bi);
      for (int c = 0; c < BlockWidth(bj); ++c) {
        for (int r = 0; r < BlockWidth(bi); ++r) {
          where.push_back(outer[oj + c] + direct + r);
        }
      }
      if (bi != bj) {
        const int mirrored = start_of(bi, bj);
        for (int c = 0; c < BlockWidth(bj); ++c) {
          for (int r = 0; r < BlockWidth(bi); ++r) {
            where.push_back(outer[oi + r] + mirrored + c);
          }
        }
      }
    }

    ldlt_.analyzePattern(hessian_);
    pattern_built_ = true;
  }

  std::optional<CostSplit> Evaluate(const std::vector<Pose>& poses,
                                    const std::vector<Eigen::Vector3d>& points,
                                    const Intrinsics& K) const {
    // Visual terms sum per chunk, merged in chunk order, so the total does
    // not depend on the thread count.
    const int n_chunks = static_cast<int>(visual_chunks_.size());
    std::vector<double> chunk_visual(n_chunks, 0.0);
    std::atomic<bool> invalid{false};
    ParallelChunks(n_chunks, [&](int c) {
      double sum = 0.0;
      for (size_t i = visual_chunks_[c].first; i < visual_chunks_[c].second;
           ++i) {
        const auto& block = visual_[i];
        if (!block.active) continue;
        const auto r = VisualResidual(poses[block.frame_idx],
                                      points[block.point_idx], K, block.z);
        if (!r) {
          invalid.store(true, std::memory_order_relaxed);
          return;
        }
        sum += 0.5 * CauchyLoss(r->squaredNorm(), cfg_.cauchy_scale);
      }
      chunk_visual[c] = sum;
    });
    if (invalid.load(std::memory_order_relaxed)) return std::nullopt;

    CostSplit cost;
    for (const double v : chunk_visual) cost.visual += v;
    for (const auto& block : relative_) {
      if (!block.active) continue;
      const auto r = RelativeResidual(poses[block.frame_idx_i],
                                      poses[block.frame_idx_j], block.prior);
      if (!r) return std::nullopt;
      cost.relative += 0.5 * block.weight * r->Vector().squaredNorm();
    }
    return cost;
  }

  void Linearize() {
    a_diag_.assign(num_cam_blocks_, Matrix6d::Zero());
    g_cam_.assign(num_cam_blocks_, Vector6d::Zero());
    a_rel_.clear();
    a_kk_.setZero();
    g_k_.setZero();
    a_ck_.assign(intrinsics_block_ >= 0 ? num_cam_blocks_ : 0,
                 Eigen::Matrix<double, 6, 4>::Zero());
    c_pt_.assign(param_points_.size(), Eigen::Matrix3d::Zero());
    g_pt_.assign(param_points_.size(), Eigen::Vector3d::Zero());
    for (auto& ws : point_w_) {
      for (auto& w : ws) w.setZero();
    }

    // Point-indexed sums are written in place because a chunk owns whole
    // points. Camera and intrinsics sums go through per-chunk partials
    // merged in chunk order, keeping the result thread-count independent.
    const int n_chunks = static_cast<int>(visual_chunks_.size());
    if (static_cast<int>(chunk_sums_.size()) != n_chunks) {
      chunk_sums_.assign(n_chunks, CamChunkSums());
    }
    ParallelChunks(n_chunks, [&](int c) {
      CamChunkSums& local = chunk_sums_[c];
      local.a_diag.assign(num_cam_blocks_, Matrix6d::Zero());
      local.g_cam.assign(num_cam_blocks_, Vector6d::Zero());
      local.a_ck.assign(intrinsics_block_ >= 0 ? num_cam_blocks_ : 0,
                        Eigen::Matrix<double, 6, 4>::Zero());
      local.a_kk.setZero();
      local.g_k.setZero();
      for (size_t idx = visual_chunks_[c].first;
           idx < visual_chunks_[c].second; ++idx) {
        const auto& block = visual_[idx];
        if (!block.active) continue;
        const auto jac =
            VisualResidualJacobians(poses_[block.frame_idx],
                                    points_[block.point_idx], intrinsics_,
                                    block.z);
        // Active blocks stay valid at accepted states by construction.
        if (!jac) continue;
        const double scale = std::sqrt(
            CauchyLossDerivative(jac->residual.squaredNorm(),
                                 cfg_.cauchy_scale));
        const Eigen::Vector2d r = scale * jac->residual;
        const Eigen::Matrix<double, 2, 6> jp = scale * jac->j_pose;
        const Eigen::Matrix<double, 2, 3> jx = scale * jac->j_point;

        const int cam = cam_block_of_frame_[block.frame_idx];
        const int pp = point_param_of_[block.point_idx];
        if (cam >= 0) {
          local.a_diag[cam].noalias() += jp.transpose() * jp;
          local.g_cam[cam].noalias() += jp.transpose() * r;
        }
        if (pp >= 0) {
          c_pt_[pp].noalias() += jx.transpose() * jx;
          g_pt_[pp].noalias() += jx.transpose() * r;
          if (cam >= 0) {
            point_w_[pp][block.observer_pos].noalias() +=
                jp.transpose() * jx;
          }
        }
        if (intrinsics_block_ >= 0) {
          const Eigen::Matrix<double, 2, 4> jk = scale * jac->j_intrinsics;
          local.a_kk.noalias() += jk.transpose() * jk;
          local.g_k.noalias() += jk.transpose() * r;
          if (cam >= 0) local.a_ck[cam].noalias() += jp.transpose() * jk;
          if (pp >= 0) point_w_[pp].back().noalias() += jk.transpose() * jx;
        }
      }
    });
    for (const CamChunkSums& local : chunk_sums_) {
      for (int b = 0; b < num_cam_blocks_; ++b) {
        a_diag_[b] += local.a_diag[b];
        g_cam_[b] += local.g_cam[b];
      }
      if (intrinsics_block_ >= 0) {
        a_kk_ += local.a_kk;
        g_k_ += local.g_k;
        for (int b = 0; b < num_cam_blocks_; ++b) a_ck_[b] += local.a_ck[b];
      }
    }

    for (const auto& block : relative_) {
      if (!block.active) continue;
      const auto jac = RelativeResidualJacobians(
          poses_[block.frame_idx_i], poses_[block.frame_idx_j], block.prior);
      if (!jac) continue;
      const double sw = std::sqrt(block.weight);
      const Vector6d r = sw * jac->residual;
      const Matrix6d ji = sw * jac->j_pose_i;
      const Matrix6d jj = sw * jac->j_pose_j;

      const int bi = cam_block_of_frame_[block.frame_idx_i];
      const int bj = cam_block_of_frame_[block.frame_idx_j];
      if (bi >= 0) {
        a_diag_[bi] += ji.transpose() * ji;
        g_cam_[bi] += ji.transpose() * r;
      }
      if (bj >= 0) {
        a_diag_[bj] += jj.transpose() * jj;
        g_cam_[bj] += jj.transpose() * r;
      }
      if (bi >= 0 && bj >= 0) {
        const auto key = std::make_pair(std::min(bi, bj), std::max(bi, bj));
        auto it = a_rel_.find(key);
        if (it == a_rel_.end()) {
          it = a_rel_.emplace(key, Matrix6d::Zero()).first;
        }
        it->second += bi < bj ? (ji.transpose() * jj).eval()
                              : (jj.transpose() * ji).eval();
      }
    }
  }

  bool SolveStep(double lambda, Eigen::VectorXd* delta,
                 std::vector<Eigen::Vector3d>* point_delta) {
    for (auto& value : slot_values_) value.setZero();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(total_dim_);

    for (int b = 0; b < num_cam_blocks_; ++b) {
      Matrix6d damped = a_diag_[b];
      damped.diagonal() *= 1.0 + lambda;
      slot_values_[slot_of_.at(std::make_pair(b, b))] = damped;
      rhs.segment<6>(BlockOffset(b)) = -g_cam_[b];
    }
    if (intrinsics_block_ >= 0) {
      Eigen::Matrix4d damped = a_kk_;
      damped.diagonal() *= 1.0 + lambda;
      slot_values_[slot_of_.at(
          std::make_pair(intrinsics_block_, intrinsics_block_))] = damped;
      rhs.segment<4>(BlockOffset(intrinsics_block_)) = -g_k_;
      for (int b = 0; b < num_cam_blocks_; ++b) {
        if (a_ck_[b].isZero(0.0)) continue;
        slot_values_[slot_of_.at(std::make_pair(b, intrinsics_block_))] +=
            a_ck_[b];
      }
    }
    for (const auto& [key, value] : a_rel_) {
      slot_values_[slot_of_.at(key)] += value;
    }

    // Schur elimination of the point blocks.
    point_cinv_.assign(param_points_.size(), Eigen::Matrix3d::Zero());
    for (size_t pp = 0; pp < param_points_.size(); ++pp) {
      Eigen::Matrix3d c = c_pt_[pp];
      c.diagonal() *= 1.0 + lambda;
      c += kPointDampFloor * Eigen::Matrix3d::Identity();
      const Eigen::Matrix3d cinv = c.inverse();
      if (!cinv.allFinite()) return false;
      point_cinv_[pp] = cinv;

      const auto& observers = point_observers_[pp];
      const auto& ws = point_w_[pp];
      auto& y = point_y_[pp];
      for (size_t i = 0; i < observers.size(); ++i) {
        y[i].noalias() = ws[i] * cinv;
        rhs.segment(BlockOffset(observers[i]), BlockWidth(observers[i]))
            .noalias() += y[i] * g_pt_[pp];
      }
      size_t slot_pos = 0;
      const auto& slots = point_pair_slots_[pp];
      for (size_t i = 0; i < observers.size(); ++i) {
        for (size_t j = i; j < observers.size(); ++j) {
          slot_values_[slots[slot_pos++]].noalias() -=
              y[i] * ws[j].transpose();
        }
      }
    }

    // The sparsity pattern is fixed for the lifetime of a solve, so the
    // compressed layout and the symbolic factorization are reused and only
    // the numeric values are refreshed per step.
    if (!pattern_built_) BuildSparsePattern();
    double* values = hessian_.valuePtr();
    for (size_t s = 0; s < slot_blocks_.size(); ++s) {
      const Eigen::MatrixXd& value = slot_values_[s];
      const std::vector<int>& where = slot_value_index_[s];
      const double* src = value.data();
      const int n = static_cast<int>(value.size());
      for (int k = 0; k < n; ++k) values[where[k]] = src[k];
      if (static_cast<int>(where.size()) == 2 * n) {
        for (int k = 0; k < n; ++k) values[where[n + k]] = src[k];
      }
    }

    ldlt_.factorize(hessian_);
    if (ldlt_.info() != Eigen::Success) return false;
    *delta = ldlt_.solve(rhs);
    if (ldlt_.info() != Eigen::Success || !delta->allFinite()) return false;

    // Back-substitute the point increments.
    point_delta->assign(param_points_.size(), Eigen::Vector3d::Zero());
    for (size_t pp = 0; pp < param_points_.size(); ++pp) {
      Eigen::Vector3d wtd = g_pt_[pp];
      const auto& observers = point_observers_[pp];
      const auto& ws = point_w_[pp];
      for (size_t i = 0; i < observers.size(); ++i) {
        wtd.noalias() += ws[i].transpose() *
                         delta->segment(BlockOffset(observers[i]),
                                        BlockWidth(observers[i]));
      }
      (*point_delta)[pp] = -point_cinv_[pp] * wtd;
      if (!(*point_delta)[pp].allFinite()) return false;
    }
    return true;
  }

  void ApplyStep(const Eigen::VectorXd& delta,
                 const std::vector<Eigen::Vector3d>& point_delta,
                 std::vector<Pose>* poses,
                 std::vector<Eigen::Vector3d>* points,
                 Intrinsics* K) const {
    for (size_t i = 0; i < poses->size(); ++i) {
      const int b = cam_block_of_frame_[i];
      if (b < 0) continue;
      const Tangent6 xi = Tangent6::FromVector(delta.segment<6>(BlockOffset(b)));
      (*poses)[i] = Compose((*poses)[i], Pose::Exp(xi));
    }
    if (intrinsics_block_ >= 0) {
      const auto dk = delta.segment<4>(BlockOffset(intrinsics_block_));
      K->fx += dk(0);
      K->fy += dk(1);
      K->cx += dk(2);
      K->cy += dk(3);
    }
    for (size_t pp = 0; pp < param_points_.size(); ++pp) {
      (*points)[param_points_[pp]] += point_delta[pp];
    }
  }

  double StepNorm(const Eigen::VectorXd& delta,
                  const std::vector<Eigen::Vector3d>& point_delta) const {
    double n = delta.size() > 0 ? delta.lpNorm<Eigen::Infinity>() : 0.0;
    for (const auto& d : point_delta) {
      n = std::max(n, d.lpNorm<Eigen::Infinity>());
    }
    return n;
  }

  void FinishReport(const CostSplit& cost, SolverReport* report) {
    report->final_cost = cost.total();
    report->visual_cost = cost.visual;
    report->relative_cost = cost.relative;
    WriteBack();
  }

  void WriteBack() {
    for (size_t i = 0; i < frame_of_.size(); ++i) {
      model_.poses[frame_of_[i]] = poses_[i];
    }
    for (size_t p = 0; p < track_of_.size(); ++p) {
      model_.tracks[track_of_[p]].point = points_[p];
    }
    model_.intrinsics = intrinsics_;
  }

  Reconstruction& model_;
  const std::set<frame_t>& fixed_frames_;
  const BaConfig& cfg_;

  std::vector<frame_t> frame_of_;
  std::map<frame_t, int> frame_index_;
  std::vector<Pose> poses_;
  std::vector<track_t> track_of_;
  std::vector<Eigen::Vector3d> points_;
  Intrinsics intrinsics_;

  std::vector<VisualBlock> visual_;
  std::vector<RelativeBlock> relative_;

  std::vector<int> cam_block_of_frame_;
  int num_cam_blocks_ = 0;
  int intrinsics_block_ = -1;
  int num_blocks_ = 0;
  int total_dim_ = 0;
  std::vector<int> point_param_of_;
  std::vector<int> param_points_;

  std::map<std::pair<int, int>, int> slot_of_;
  std::vector<std::pair<int, int>> slot_blocks_;
  std::vector<Eigen::MatrixXd> slot_values_;
  std::vector<std::vector<int>> point_observers_;
  std::vector<std::vector<int>> point_pair_slots_;
  std::vector<std::vector<Eigen::MatrixXd>> point_w_;
  std::vector<std::vector<Eigen::MatrixXd>> point_y_;

  std::vector<std::pair<size_t, size_t>> visual_chunks_;
  std::vector<CamChunkSums> chunk_sums_;

  Eigen::SparseMatrix<double> hessian_;
  std::vector<std::vector<int>> slot_value_index_;
#ifdef VIOSFM_WITH_CHOLMOD
  Eigen::CholmodSupernodalLLT<Eigen::SparseMatrix<double>> ldlt_;
#else
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
#endif
  bool pattern_built_ = false;

  std::vector<Matrix6d> a_diag_;
  std::vector<Vector6d> g_cam_;
  std::map<std::pair<int, int>, Matrix6d> a_rel_;
  Eigen::Matrix4d a_kk_ = Eigen::Matrix4d::Zero();
  Eigen::Vector4d g_k_ = Eigen::Vector4d::Zero();
  std::vector<Eigen::Matrix<double, 6, 4>> a_ck_;
  std::vector<Eigen::Matrix3d> c_pt_;
  std::vector<Eigen::Vector3d> g_pt_;
  std::vector<Eigen::Matrix3d> point_cinv_;
};

}  // namespace

std::string SolverReport::ToJson() const {
  nlohmann::json j;
  j["iterations"] = iterations;
  j["initial_cost"] = initial_cost;
  j["final_cost"] = final_cost;
  j["visual_cost"] = visual_cost;
  j["relative_cost"] = relative_cost;
  j["termination"] = termination;
  j["diverged"] = diverged;
  j["num_visual_residuals"] = num_visual_residuals;
  j["num_relative_residuals"] = num_relative_residuals;
  j["deactivated_visual"] = deactivated_visual;
  j["deactivated_relative"] = deactivated_relative;
  return j.dump();
}

SolverReport Solve(Reconstruction& model, const VioSequence& vio,
                   const std::map<FramePair, int>& correspondence_counts,
                   const std::set<frame_t>& fixed_frames, const BaConfig& cfg) {
  BaSolver solver(model, vio, correspondence_counts, fixed_frames, cfg);
  return solver.Run();
}

}  // namespace viosfm
