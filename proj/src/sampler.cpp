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

#include "sweepret/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "sweepret/error.hpp"

namespace sweepret {

namespace {

// First `count` entries of a uniform random permutation of `pool`.
template <typename V>
void partial_shuffle(std::vector<V>& pool, std::size_t count, Rng& rng) {
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
}

}  // namespace

std::size_t shared_count_for(std::size_t b, double overlap_frac) {
  if (overlap_frac < 0.0 || overlap_frac > 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "sampler", "overlap_frac must be in [0, 1]");
  }
  // The small epsilon keeps exact products (0.75 * 4 = 3) from flooring down.
  const auto shared = static_cast<std::size_t>(std::floor(overlap_frac * static_cast<double>(b) + 1e-9));
  return std::min(shared, b);
}

std::size_t min_sweep_length(std::size_t b, double overlap_frac) {
  return b + (b - shared_count_for(b, overlap_frac));
}

DualBatch sample_dual_batches(const Sweep& sweep, std::size_t b, double overlap_frac, Rng& rng) {
  if (b == 0) throw Error(ErrorCode::kInvalidArgument, "sampler", "batch size must be positive");
  const std::size_t need = min_sweep_length(b, overlap_frac);
  if (sweep.size() < need) {
    throw Error(ErrorCode::kInvalidArgument, "sweep '" + sweep.id + "'",
                "sweep has " + std::to_string(sweep.size()) + " frames; dual batches of " +
                    std::to_string(b) + " need at least " + std::to_string(need));
  }
  DualBatch out;
  out.sweep_id = sweep.id;
  out.shared_count = shared_count_for(b, overlap_frac);

  std::vector<std::size_t> pool(sweep.size());
  std::iota(pool.begin(), pool.end(), 0);
  partial_shuffle(pool, b, rng);
  out.batch1_indices.assign(pool.begin(), pool.begin() + b);

  std::vector<std::size_t> carried = out.batch1_indices;
  partial_shuffle(carried, out.shared_count, rng);
  out.batch2_indices.assign(carried.begin(), carried.begin() + out.shared_count);

  std::vector<std::size_t> rest(pool.begin() + b, pool.end());
  const std::size_t fresh = b - out.shared_count;
  partial_shuffle(rest, fresh, rng);
  out.batch2_indices.insert(out.batch2_indices.end(), rest.begin(), rest.begin() + fresh);
  std::shuffle(out.batch2_indices.begin(), out.batch2_indices.end(), rng);
  return out;
}

PairLabels label_from_distances(std::vector<double> distances, std::size_t b1, std::size_t b2,
                                double threshold) {
  if (b1 == 0 || b2 == 0 || distances.size() != b1 * b2) {
    throw Error(ErrorCode::kInvalidArgument, "label_pairs", "need non-empty batches and a b1 x b2 matrix");
  }
  PairLabels labels;
  labels.b1 = b1;
  labels.b2 = b2;
  labels.distance_matrix_mm = std::move(distances);
  labels.gt_1to2.assign(b1, static_cast<int>(b2));
  labels.gt_2to1.assign(b2, static_cast<int>(b1));
  for (std::size_t i = 0; i < b1; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < b2; ++j) {
      const double d = labels.distance(i, j);
      if (d < threshold && d < best) {
        best = d;
        labels.gt_1to2[i] = static_cast<int>(j);
      }
    }
  }
  for (std::size_t j = 0; j < b2; ++j) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < b1; ++i) {
      const double d = labels.distance(i, j);
      if (d < threshold && d < best) {
        best = d;
        labels.gt_2to1[j] = static_cast<int>(i);
      }
    }
  }
  return labels;
}

PairLabels label_pairs(const std::vector<ProbePose>& poses1, const std::vector<ProbePose>& poses2,
                       double threshold_mm) {
  std::vector<double> d(poses1.size() * poses2.size());
  for (std::size_t i = 0; i < poses1.size(); ++i)
    for (std::size_t j = 0; j < poses2.size(); ++j) d[i * poses2.size() + j] = probe_distance(poses1[i], poses2[j]);
  return label_from_distances(std::move(d), poses1.size(), poses2.size(), threshold_mm);
}

PairLabels label_same_frame(const std::vector<std::size_t>& frames1,
                            const std::vector<std::size_t>& frames2) {
  std::vector<double> d(frames1.size() * frames2.size());
  for (std::size_t i = 0; i < frames1.size(); ++i)
    for (std::size_t j = 0; j < frames2.size(); ++j)
      d[i * frames2.size() + j] = frames1[i] == frames2[j] ? 0.0 : 1.0;
  return label_from_distances(std::move(d), frames1.size(), frames2.size(), 0.5);
}

double ivpp_weight(long t1, long t2, long delta_t) {
  if (delta_t < 0) throw Error(ErrorCode::kInvalidArgument, "ivpp_weight", "delta_t must be >= 0");
  const double gap = static_cast<double>(t2 > t1 ? t2 - t1 : t1 - t2);
  return (static_cast<double>(delta_t) - gap) / (static_cast<double>(delta_t) + 1.0);
}

double distance_ivpp_weight(const ProbePose& p1, const ProbePose& p2, double delta_probe_mm) {
  if (delta_probe_mm < 0) {
    throw Error(ErrorCode::kInvalidArgument, "distance_ivpp_weight", "delta_probe must be >= 0");
  }
  return (delta_probe_mm - probe_distance(p1, p2)) / (delta_probe_mm + 1.0);
}

std::vector<FrameRef> sample_inter_sweep_batch(const std::vector<Sweep>& dataset, std::size_t b, Rng& rng) {
  std::vector<FrameRef> pool;
  for (std::size_t s = 0; s < dataset.size(); ++s)
    for (std::size_t f = 0; f < dataset[s].size(); ++f) pool.push_back({s, f});
  if (pool.size() < b) {
    throw Error(ErrorCode::kInvalidArgument, "sampler",
                "dataset has " + std::to_string(pool.size()) + " frames, batch needs " + std::to_string(b));
  }
  partial_shuffle(pool, b, rng);
  pool.resize(b);
  return pool;
}

}  // namespace sweepret
