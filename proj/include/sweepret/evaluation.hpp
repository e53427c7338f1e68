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

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "sweepret/augment.hpp"
#include "sweepret/baselines.hpp"
#include "sweepret/retrieval.hpp"

namespace sweepret {

struct SimulatedQuery {
  Image image;
  ProbePose gt_pose;
  std::size_t source_index = 0;
  Affine3D transform;
};

struct QuerySimulation {
  std::size_t count = 50;
  std::size_t half_width = 30;
  Affine3DRanges ranges;
  std::uint64_t seed = 0;
  /// Skip the random transform (queries equal their source frames).
  bool identity = false;
};

/// Source frames drawn without replacement (with replacement when the sweep
/// is shorter than the request); each query is the centre slice of a
/// randomly transformed mini-volume around its source frame. Query k uses
/// its own RNG stream derived from (seed, k).
std::vector<SimulatedQuery> simulate_queries(const Sweep& sweep, const QuerySimulation& sim);

struct QueryRecord {
  ProbePose gt_pose;
  bool matched = false;
  std::optional<ProbePose> retrieved_pose;
  std::optional<double> distance_mm;
  double similarity = 0.0;
  bool success = false;
};

struct EvalReport {
  std::size_t query_count = 0;
  std::size_t success_count = 0;
  std::size_t rejected_count = 0;
  double success_rate = 0.0;
  double rejection_rate = 0.0;
  /// Over non-rejected queries; absent when every query was rejected.
  std::optional<double> mean_probe_distance_mm;
  std::optional<double> std_probe_distance_mm;
  std::vector<QueryRecord> records;
};

nlohmann::json to_json(const EvalReport& report, bool include_records = true);

/// Success iff matched and the retrieved pose lies strictly closer than the
/// threshold. The distance spread is the population standard deviation.
EvalReport evaluate_results(std::span<const RetrievalResult> results, std::span<const ProbePose> gt_poses,
                            double success_threshold_mm = 15.0);

EvalReport evaluate(const EmbeddingIndex& index, Model<float>& model, std::span<const SimulatedQuery> queries,
                    double success_threshold_mm = 15.0, std::optional<double> alpha = std::nullopt);
EvalReport evaluate(const NccDatabase& database, std::span<const SimulatedQuery> queries,
                    double success_threshold_mm = 15.0);

/// Pools several per-sweep reports into one (records concatenated).
EvalReport merge_reports(std::span<const EvalReport> reports);

}  // namespace sweepret
