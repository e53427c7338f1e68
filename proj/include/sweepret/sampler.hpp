// Copyright 2026 The sweepret Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "sweepret/augment.hpp"
#include "sweepret/sweep.hpp"

namespace sweepret {

/// Two batches drawn from one sweep that share floor(overlap * b) frames.
struct DualBatch {
  std::string sweep_id;
  std::vector<std::size_t> batch1_indices;
  std::vector<std::size_t> batch2_indices;
  std::size_t shared_count = 0;
};

/// Positive partner per row / column, or the dustbin index (b2 for rows,
/// b1 for columns).
struct PairLabels {
  std::vector<int> gt_1to2;
  std::vector<int> gt_2to1;
  /// b1 x b2, row-major; the quantity the labels were thresholded on.
  std::vector<double> distance_matrix_mm;
  std::size_t b1 = 0;
  std::size_t b2 = 0;

  double distance(std::size_t i, std::size_t j) const { return distance_matrix_mm[i * b2 + j]; }
  int row_dustbin() const { return static_cast<int>(b2); }
  int col_dustbin() const { return static_cast<int>(b1); }
};

/// Number of carried-over frames for batch size b (floor, never more than b).
std::size_t shared_count_for(std::size_t b, double overlap_frac);
/// Minimum sweep length for sample_dual_batches.
std::size_t min_sweep_length(std::size_t b, double overlap_frac);

DualBatch sample_dual_batches(const Sweep& sweep, std::size_t b, double overlap_frac, Rng& rng);

/// Row i's positive is the column with the smallest distance among those
/// strictly below the threshold (ties to the lower index); rows without a
/// candidate go to the dustbin. Columns are labelled the same way.
PairLabels label_from_distances(std::vector<double> distances, std::size_t b1, std::size_t b2,
                                double threshold);

/// Probe-distance labelling (threshold in mm).
PairLabels label_pairs(const std::vector<ProbePose>& poses1, const std::vector<ProbePose>& poses2,
                       double threshold_mm = 10.0);

/// Positive only for the identical frame (same sweep and index).
PairLabels label_same_frame(const std::vector<std::size_t>& frames1,
                            const std::vector<std::size_t>& frames2);

/// (delta_t - |t2 - t1|) / (delta_t + 1).
double ivpp_weight(long t1, long t2, long delta_t = 8);
/// (delta_probe - ||p2 - p1||) / (delta_probe + 1).
double distance_ivpp_weight(const ProbePose& p1, const ProbePose& p2, double delta_probe_mm = 10.0);

struct FrameRef {
  std::size_t sweep = 0;
  std::size_t frame = 0;

  bool operator==(const FrameRef&) const = default;
  auto operator<=>(const FrameRef&) const = default;
};

/// b distinct frames drawn uniformly from all frames of all sweeps.
std::vector<FrameRef> sample_inter_sweep_batch(const std::vector<Sweep>& dataset, std::size_t b,
                                               Rng& rng);

}  // namespace sweepret
