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

#include "sweepret/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sweepret/error.hpp"

namespace sweepret {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::vector<SimulatedQuery> simulate_queries(const Sweep& sweep, const QuerySimulation& sim) {
  if (sweep.frames.empty()) throw Error(ErrorCode::kInvalidArgument, "simulate_queries " + sweep.id, "empty sweep");
  Rng pick(splitmix64(sim.seed));
  std::vector<std::size_t> sources;
  if (sweep.size() >= sim.count) {
    std::vector<std::size_t> all(sweep.size());
    std::iota(all.begin(), all.end(), 0);
    for (std::size_t i = 0; i < sim.count; ++i) {
      std::uniform_int_distribution<std::size_t> d(i, all.size() - 1);
      std::swap(all[i], all[d(pick)]);
    }
    sources.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(sim.count));
  } else {
    std::uniform_int_distribution<std::size_t> d(0, sweep.size() - 1);
    for (std::size_t i = 0; i < sim.count; ++i) sources.push_back(d(pick));
  }

  std::vector<SimulatedQuery> out;
  out.reserve(sources.size());
  for (std::size_t k = 0; k < sources.size(); ++k) {
    Rng rng(splitmix64(sim.seed ^ splitmix64(k + 1)));
    SimulatedQuery q;
    q.source_index = sources[k];
    q.gt_pose = sweep.frames[sources[k]].pose;
    if (!sim.identity) q.transform = sample_affine_3d(sim.ranges, rng);
    q.image = affine_3d_query(build_mini_volume(sweep, sources[k], sim.half_width), q.transform);
    out.push_back(std::move(q));
  }
  return out;
}

nlohmann::json to_json(const EvalReport& r, bool include_records) {
  using nlohmann::json;
  json j = {{"query_count", r.query_count},
            {"success_count", r.success_count},
            {"rejected_count", r.rejected_count},
            {"success_rate", r.success_rate},
            {"rejection_rate", r.rejection_rate}};
  j["mean_probe_distance_mm"] = r.mean_probe_distance_mm ? json(*r.mean_probe_distance_mm) : json(nullptr);
  j["std_probe_distance_mm"] = r.std_probe_distance_mm ? json(*r.std_probe_distance_mm) : json(nullptr);
  if (include_records) {
    json recs = json::array();
    for (const auto& q : r.records) {
      json e = {{"gt_pose", q.gt_pose.position},
                {"status", q.matched ? "matched" : "rejected"},
                {"similarity", q.similarity},
                {"success", q.success}};
      if (q.retrieved_pose) e["retrieved_pose"] = q.retrieved_pose->position;
      if (q.distance_mm) e["distance_mm"] = *q.distance_mm;
      recs.push_back(std::move(e));
    }
    j["records"] = std::move(recs);
  }
  return j;
}

namespace {

void finalize(EvalReport& r) {
  r.query_count = r.records.size();
  r.success_count = 0;
  r.rejected_count = 0;
  std::vector<double> d;
  for (const auto& q : r.records) {
    if (q.success) ++r.success_count;
    if (!q.matched) ++r.rejected_count;
    if (q.distance_mm) d.push_back(*q.distance_mm);
  }
  const double n = static_cast<double>(r.query_count);
  r.success_rate = r.query_count ? r.success_count / n : 0.0;
  r.rejection_rate = r.query_count ? r.rejected_count / n : 0.0;
  r.mean_probe_distance_mm.reset();
  r.std_probe_distance_mm.reset();
  if (!d.empty()) {
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
    double ss = 0.0;
    for (double x : d) ss += (x - mean) * (x - mean);
    r.mean_probe_distance_mm = mean;
    r.std_probe_distance_mm = std::sqrt(ss / static_cast<double>(d.size()));
  }
}

}  // namespace

EvalReport evaluate_results(std::span<const RetrievalResult> results, std::span<const ProbePose> gt_poses,
                            double success_threshold_mm) {
  if (results.size() != gt_poses.size()) {
    throw Error(ErrorCode::kShapeMismatch, "evaluate",
                std::to_string(results.size()) + " results for " + std::to_string(gt_poses.size()) + " queries");
  }
  if (results.empty()) throw Error(ErrorCode::kInvalidArgument, "evaluate", "no queries");
  EvalReport r;
  for (std::size_t i = 0; i < results.size(); ++i) {
    QueryRecord q;
    q.gt_pose = gt_poses[i];
    q.matched = results[i].matched;
    q.similarity = results[i].score;
    if (q.matched) {
      q.retrieved_pose = results[i].pose;
      q.distance_mm = probe_distance(results[i].pose, gt_poses[i]);
      q.success = *q.distance_mm < success_threshold_mm;
    }
    r.records.push_back(std::move(q));
  }
  finalize(r);
  return r;
}

namespace {

std::vector<ProbePose> gt_of(std::span<const SimulatedQuery> queries) {
  std::vector<ProbePose> gt;
  for (const auto& q : queries) gt.push_back(q.gt_pose);
  return gt;
}

}  // namespace

EvalReport evaluate(const EmbeddingIndex& index, Model<float>& model, std::span<const SimulatedQuery> queries,
                    double success_threshold_mm, std::optional<double> alpha) {
  std::vector<Image> images;
  for (const auto& q : queries) images.push_back(q.image);
  const auto results = batch_query(index, model, images, alpha);
  const auto gt = gt_of(queries);
  return evaluate_results(results, gt, success_threshold_mm);
}

EvalReport evaluate(const NccDatabase& database, std::span<const SimulatedQuery> queries,
                    double success_threshold_mm) {
  std::vector<RetrievalResult> results;
  for (const auto& q : queries) results.push_back(database.retrieve(q.image));
  const auto gt = gt_of(queries);
  return evaluate_results(results, gt, success_threshold_mm);
}

EvalReport merge_reports(std::span<const EvalReport> reports) {
  EvalReport r;
  for (const auto& x : reports) r.records.insert(r.records.end(), x.records.begin(), x.records.end());
  finalize(r);
  return r;
}

}  // namespace sweepret
