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

#include "sweepret/baselines.hpp"

#include <cmath>
#include <limits>

#include "sweepret/error.hpp"

namespace sweepret {

std::string_view to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::kNcc: return "ncc";
    case BaselineKind::kInterSweepCl: return "inter-sweep";
    case BaselineKind::kIvpp: return "ivpp";
    case BaselineKind::kDistanceIvpp: return "distance-ivpp";
    case BaselineKind::kOurs: return "ours";
  }
  return "ours";
}

BaselineKind parse_baseline_kind(std::string_view text) {
  for (BaselineKind k : {BaselineKind::kNcc, BaselineKind::kInterSweepCl, BaselineKind::kIvpp,
                         BaselineKind::kDistanceIvpp, BaselineKind::kOurs}) {
    if (text == to_string(k)) return k;
  }
  if (text == "inter_sweep_cl" || text == "inter-sweep-cl") return BaselineKind::kInterSweepCl;
  if (text == "distance_ivpp") return BaselineKind::kDistanceIvpp;
  throw Error(ErrorCode::kConfig, "baseline",
              "unknown baseline '" + std::string(text) + "' (expected ncc|inter-sweep|ivpp|distance-ivpp|ours)");
}

std::string_view to_string(SamplerMode mode) {
  switch (mode) {
    case SamplerMode::kNone: return "none";
    case SamplerMode::kPooled: return "pooled";
    case SamplerMode::kDualBatch: return "dual-batch";
  }
  return "none";
}

std::string_view to_string(LabelMode mode) {
  switch (mode) {
    case LabelMode::kNone: return "none";
    case LabelMode::kSameFrame: return "same-frame";
    case LabelMode::kTemporal: return "temporal";
    case LabelMode::kProbe: return "probe";
  }
  return "none";
}

std::string_view to_string(WeightMode mode) {
  switch (mode) {
    case WeightMode::kNone: return "none";
    case WeightMode::kIvpp: return "ivpp";
    case WeightMode::kDistanceIvpp: return "distance-ivpp";
  }
  return "none";
}

TrainingMode make_training_mode(BaselineKind kind, AblationMode ablation) {
  switch (kind) {
    case BaselineKind::kNcc:
      return {kind, SamplerMode::kNone, LabelMode::kNone, WeightMode::kNone, false};
    case BaselineKind::kInterSweepCl:
      return {kind, SamplerMode::kPooled, LabelMode::kSameFrame, WeightMode::kNone, false};
    case BaselineKind::kIvpp:
      return {kind, SamplerMode::kDualBatch, LabelMode::kTemporal, WeightMode::kIvpp, false};
    case BaselineKind::kDistanceIvpp:
      return {kind, SamplerMode::kDualBatch, LabelMode::kProbe, WeightMode::kDistanceIvpp, false};
    case BaselineKind::kOurs:
      return {kind, SamplerMode::kDualBatch,
              uses_probe_labels(ablation) ? LabelMode::kProbe : LabelMode::kSameFrame, WeightMode::kNone,
              uses_triplet(ablation)};
  }
  throw Error(ErrorCode::kInvalidArgument, "baseline", "unhandled baseline kind");
}

namespace {

double mean_of(const std::vector<float>& v) {
  double s = 0.0;
  for (float x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

double ncc(const Image& a, const Image& b) {
  if (a.height != b.height || a.width != b.width) {
    throw Error(ErrorCode::kShapeMismatch, "ncc",
                std::to_string(a.height) + "x" + std::to_string(a.width) + " vs " + std::to_string(b.height) +
                    "x" + std::to_string(b.width));
  }
  if (a.pixels.empty()) return 0.0;
  const double ma = mean_of(a.pixels), mb = mean_of(b.pixels);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double da = a.pixels[i] - ma, db = b.pixels[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

NccDatabase::NccDatabase(const Sweep& sweep) {
  if (sweep.frames.empty()) throw Error(ErrorCode::kInvalidArgument, "ncc " + sweep.id, "empty database");
  height_ = sweep.frames[0].image.height;
  width_ = sweep.frames[0].image.width;
  for (const auto& f : sweep.frames) {
    Frame fr;
    const double m = mean_of(f.image.pixels);
    fr.centered.resize(f.image.pixels.size());
    double ss = 0.0;
    for (std::size_t i = 0; i < fr.centered.size(); ++i) {
      const double d = f.image.pixels[i] - m;
      fr.centered[i] = static_cast<float>(d);
      ss += d * d;
    }
    fr.norm = std::sqrt(ss);
    fr.frame_index = f.frame_index;
    fr.pose = f.pose;
    frames_.push_back(std::move(fr));
  }
}

RetrievalResult NccDatabase::retrieve(const Image& query) const {
  const Image q = (query.height == height_ && query.width == width_) ? query
                                                                     : resize_bilinear(query, height_, width_);
  const double mq = mean_of(q.pixels);
  std::vector<double> cq(q.pixels.size());
  double ssq = 0.0;
  for (std::size_t i = 0; i < cq.size(); ++i) {
    cq[i] = q.pixels[i] - mq;
    ssq += cq[i] * cq[i];
  }
  const double nq = std::sqrt(ssq);
  const double ninf = -std::numeric_limits<double>::infinity();
  double best = ninf, second = ninf;
  std::size_t best_i = 0;
  for (std::size_t k = 0; k < frames_.size(); ++k) {
    const Frame& f = frames_[k];
    double s = 0.0;
    if (nq > 0.0 && f.norm > 0.0) {
      double acc = 0.0;
      for (std::size_t i = 0; i < cq.size(); ++i) acc += cq[i] * f.centered[i];
      s = std::clamp(acc / (nq * f.norm), -1.0, 1.0);
    }
    if (k == 0 || s > best) {
      if (k != 0) second = best;
      best = s;
      best_i = k;
    } else if (s > second) {
      second = s;
    }
  }
  RetrievalResult r;
  r.matched = true;
  r.frame_index = static_cast<std::uint32_t>(frames_[best_i].frame_index);
  r.pose = frames_[best_i].pose;
  r.score = best;
  r.runner_up_score = second;
  return r;
}

RetrievalResult ncc_retrieve(const Sweep& database, const Image& query) {
  return NccDatabase(database).retrieve(query);
}

}  // namespace sweepret
