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

#include <map>
#include <set>
#include <string>
#include <vector>

#include "viosfm/ba/residuals.h"
#include "viosfm/sfm/scene.h"
#include "viosfm/types.h"

namespace viosfm {

struct SolverReport {
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  // Final-cost split between the two objective terms.
  double visual_cost = 0.0;
  double relative_cost = 0.0;
  std::string termination;
  bool diverged = false;
  int num_visual_residuals = 0;
  int num_relative_residuals = 0;

  // Total cost at the initial state followed by one entry per accepted step.
  std::vector<double> cost_history;
  int deactivated_visual = 0;
  int deactivated_relative = 0;

  std::string ToJson() const;
};

// Joint bundle adjustment: Cauchy-robustified reprojection residuals for
// every track observation plus adaptively weighted relative-pose residuals
// for every consecutive registered frame pair (skipped when alpha is 0).
// Levenberg-Marquardt with Marquardt diagonal damping and a Schur
// complement over point blocks. Frames in `fixed_frames` are gauge
// anchors: bit-identical after the solve.
//
// correspondence_counts carries the verified match count per consecutive
// frame pair for the adaptive weights; absent pairs count as 0 (maximum
// weight). Observations behind the camera at the initial state and
// relative terms at the log singularity are deactivated for the whole
// solve; candidate steps that would break an active block are rejected.
// Throws std::invalid_argument on an empty model or empty anchor set and
// std::runtime_error on a non-finite initial residual.
SolverReport Solve(Reconstruction& model, const VioSequence& vio,
                   const std::map<FramePair, int>& correspondence_counts,
                   const std::set<frame_t>& fixed_frames, const BaConfig& cfg);

}  // namespace viosfm
