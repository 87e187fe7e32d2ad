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

#include "viosfm/verification/verification.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <set>
#include <thread>

#include "viosfm/geometry/epipolar.h"

namespace viosfm {

namespace {

// Deterministic per-pair RANSAC seed (splitmix64 over the inputs).
uint64_t MixSeed(uint64_t seed, frame_t a, frame_t b) {
  uint64_t x = seed ^ (static_cast<uint64_t>(a) << 32) ^
               static_cast<uint64_t>(static_cast<uint32_t>(b));
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Iterations for confidence 0.99 given the current best inlier ratio.
int AdaptiveIterations(int best_inliers, int total, int cap) {
  if (best_inliers <= 0 || total <= 0) return cap;
  const double w = static_cast<double>(best_inliers) / total;
  const double p_all_inliers = std::pow(w, 8);
  if (p_all_inliers >= 1.0 - 1e-12) return 1;
  const double needed = std::log(0.01) / std::log(1.0 - p_all_inliers);
  if (!std::isfinite(needed) || needed >= cap) return cap;
  return std::max(1, static_cast<int>(std::ceil(needed)));
}

std::vector<bool> InlierMask(const Eigen::Matrix3d& F,
                             const std::vector<Eigen::Vector2d>& pts_a,
                             const std::vector<Eigen::Vector2d>& pts_b,
                             double threshold, int* count) {
  std::vector<bool> mask(pts_a.size(), false);
  int n = 0;
  for (size_t i = 0; i < pts_a.size(); ++i) {
    if (SymmetricEpipolarError(F, pts_a[i], pts_b[i]) <= threshold) {
      mask[i] = true;
      ++n;
    }
  }
  *count = n;
  return mask;
}

}  // namespace

std::vector<FramePair> GenerateCandidates(const std::vector<frame_t>& frames,
                                          const RetrievalProvider& retrieval,
                                          const PairingConfig& cfg) {
  const std::set<frame_t> known(frames.begin(), frames.end());
  std::set<FramePair> pairs;
  for (size_t i = 0; i < frames.size(); ++i) {
    const frame_t frame = frames[i];
    const size_t last =
        std::min(frames.size(), i + 1 + static_cast<size_t>(std::max(
                                            0, cfg.n1_temporal)));
    for (size_t j = i + 1; j < last; ++j) {
      pairs.insert(MakeFramePair(frame, frames[j]));
    }
    for (const frame_t other : retrieval.Query(frame, cfg.n2_retrieval)) {
      if (other == frame || known.count(other) == 0) continue;
      pairs.insert(MakeFramePair(frame, other));
    }
  }
  return std::vector<FramePair>(pairs.begin(), pairs.end());
}

PairVerdict VioScreen(const MatchSet& pair, const FeatureTable& features,
                      const Pose& prior_rel, const Intrinsics& K,
                      const PairingConfig& cfg) {
  PairVerdict verdict;
  if (pair.matches.empty()) {
    verdict.status = PairStatus::kRejectedByVio;
    verdict.ee_outlier_ratio = 1.0;
    return verdict;
  }

  const auto F = FundamentalFromPrior(K, prior_rel);
  if (!F) {
    // Degenerate prior motion: screening is skipped, all matches pass.
    verdict.status = PairStatus::kPending;
    verdict.inlier_mask.assign(pair.matches.size(), true);
    return verdict;
  }

  verdict.inlier_mask.assign(pair.matches.size(), false);
  int outliers = 0;
  for (size_t i = 0; i < pair.matches.size(); ++i) {
    const Eigen::Vector2d& x_a =
        features.Point(pair.frame_a, pair.matches[i].first);
    const Eigen::Vector2d& x_b =
        features.Point(pair.frame_b, pair.matches[i].second);
    const bool inlier = EpipolarError(*F, x_a, x_b) <= cfg.t_ee;
    verdict.inlier_mask[i] = inlier;
    if (!inlier) ++outliers;
  }
  verdict.ee_outlier_ratio =
      static_cast<double>(outliers) / static_cast<double>(pair.matches.size());
  verdict.status = *verdict.ee_outlier_ratio > cfg.max_outlier_ratio
                       ? PairStatus::kRejectedByVio
                       : PairStatus::kPending;
  return verdict;
}

std::pair<Eigen::Matrix3d, PairVerdict> RansacFundamental(
    const MatchSet& pair, const FeatureTable& features,
    const PairingConfig& cfg, uint64_t seed) {
  PairVerdict verdict;
  verdict.inlier_mask.assign(pair.matches.size(), false);
  Eigen::Matrix3d best_f = Eigen::Matrix3d::Zero();

  const int n = static_cast<int>(pair.matches.size());
  if (n < 8) {
    verdict.status = PairStatus::kRejectedByRansac;
    return {best_f, verdict};
  }

  std::vector<Eigen::Vector2d> pts_a(n), pts_b(n);
  for (int i = 0; i < n; ++i) {
    pts_a[i] = features.Point(pair.frame_a, pair.matches[i].first);
    pts_b[i] = features.Point(pair.frame_b, pair.matches[i].second);
  }

  std::mt19937_64 rng(seed);
  std::vector<int> indices(n);
  for (int i = 0; i < n; ++i) indices[i] = i;

  int best_count = 0;
  std::vector<bool> best_mask;
  int max_iters = cfg.ransac_max_iters;
  std::vector<Eigen::Vector2d> sample_a(8), sample_b(8);
  for (int iter = 0; iter < max_iters; ++iter) {
    // Partial Fisher-Yates draw of 8 distinct indices.
    for (int k = 0; k < 8; ++k) {
      std::uniform_int_distribution<int> pick(k, n - 1);
      std::swap(indices[k], indices[pick(rng)]);
      sample_a[k] = pts_a[indices[k]];
      sample_b[k] = pts_b[indices[k]];
    }
    const auto F = EightPointFundamental(sample_a, sample_b);
    if (!F) continue;

    int count = 0;
    std::vector<bool> mask =
        InlierMask(*F, pts_a, pts_b, cfg.ransac_threshold, &count);
    if (count > best_count) {
      best_count = count;
      best_mask = std::move(mask);
      best_f = *F;
      const int needed =
          AdaptiveIterations(best_count, n, cfg.ransac_max_iters);
      max_iters = std::min(max_iters, std::max(iter + 1, needed));
    }
  }

  if (best_count >= 8) {
    // Refit on the consensus set; keep the sample model if refit collapses.
    std::vector<Eigen::Vector2d> in_a, in_b;
    in_a.reserve(best_count);
    in_b.reserve(best_count);
    for (int i = 0; i < n; ++i) {
      if (best_mask[i]) {
        in_a.push_back(pts_a[i]);
        in_b.push_back(pts_b[i]);
      }
    }
    if (const auto refit = EightPointFundamental(in_a, in_b)) {
      int refit_count = 0;
      std::vector<bool> refit_mask =
          InlierMask(*refit, pts_a, pts_b, cfg.ransac_threshold, &refit_count);
      if (refit_count >= best_count) {
        best_count = refit_count;
        best_mask = std::move(refit_mask);
        best_f = *refit;
      }
    }
  }

  if (best_count > 0) verdict.inlier_mask = std::move(best_mask);
  verdict.ransac_inlier_count = best_count;
  verdict.status = best_count >= cfg.min_inliers ? PairStatus::kAccepted
                                                 : PairStatus::kRejectedByRansac;
  return {best_f, verdict};
}

std::map<FramePair, PairVerdict> VerifyPairs(
    const std::vector<FramePair>& candidates,
    const std::map<FramePair, MatchSet>& matchsets,
    const FeatureTable& features, const VioSequence& vio, const Intrinsics& K,
    const PairingConfig& cfg, uint64_t seed, VerificationMode mode) {
  const auto verify_one = [&](const FramePair& candidate) -> PairVerdict {
    const auto ms_it = matchsets.find(candidate);
    MatchSet empty_set;
    empty_set.frame_a = candidate.first;
    empty_set.frame_b = candidate.second;
    const MatchSet& set = ms_it != matchsets.end() ? ms_it->second : empty_set;

    PairVerdict screened;
    if (mode == VerificationMode::kTwoStep) {
      const Pose prior_rel =
          vio.RelativeBetween(candidate.second, candidate.first);
      screened = VioScreen(set, features, prior_rel, K, cfg);
      if (screened.status == PairStatus::kRejectedByVio) return screened;
    } else {
      if (set.matches.empty()) {
        screened.status = PairStatus::kRejectedByRansac;
        return screened;
      }
      screened.inlier_mask.assign(set.matches.size(), true);
    }

    auto [F, verdict] = RansacFundamental(
        set, features, cfg, MixSeed(seed, candidate.first, candidate.second));
    verdict.ee_outlier_ratio = screened.ee_outlier_ratio;
    for (size_t i = 0; i < verdict.inlier_mask.size(); ++i) {
      verdict.inlier_mask[i] = verdict.inlier_mask[i] && screened.inlier_mask[i];
    }
    return verdict;
  };

  // Pairs are independent and each has its own derived seed, so they can
  // be verified on any thread; the verdict map is assembled afterwards.
  std::vector<PairVerdict> results(candidates.size());
  const unsigned n_workers = std::min<unsigned>(
      std::max(1u, std::thread::hardware_concurrency()),
      static_cast<unsigned>(candidates.size()) / 16 + 1);
  if (n_workers <= 1) {
    for (size_t i = 0; i < candidates.size(); ++i) {
      results[i] = verify_one(candidates[i]);
    }
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(n_workers);
    for (unsigned w = 0; w < n_workers; ++w) {
      workers.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < candidates.size();
             i = next.fetch_add(1)) {
          results[i] = verify_one(candidates[i]);
        }
      });
    }
    for (auto& worker : workers) worker.join();
  }

  std::map<FramePair, PairVerdict> verdicts;
  for (size_t i = 0; i < candidates.size(); ++i) {
    verdicts[candidates[i]] = std::move(results[i]);
  }
  return verdicts;
}

}  // namespace viosfm
