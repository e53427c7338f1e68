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

#include <span>
#include <string_view>
#include <vector>

#include "sweepret/image.hpp"
#include "sweepret/objective.hpp"
#include "sweepret/retrieval.hpp"
#include "sweepret/sweep.hpp"

namespace sweepret {

enum class BaselineKind { kNcc, kInterSweepCl, kIvpp, kDistanceIvpp, kOurs };

/// "ncc", "inter-sweep", "ivpp", "distance-ivpp", "ours".
std::string_view to_string(BaselineKind kind);
BaselineKind parse_baseline_kind(std::string_view text);

enum class SamplerMode { kNone, kPooled, kDualBatch };
/// Where positives come from: the same source frame, the nearest frame in
/// time (within the IVPP window), or the nearest probe position.
enum class LabelMode { kNone, kSameFrame, kTemporal, kProbe };
enum class WeightMode { kNone, kIvpp, kDistanceIvpp };

std::string_view to_string(SamplerMode mode);
std::string_view to_string(LabelMode mode);
std::string_view to_string(WeightMode mode);

struct TrainingMode {
  BaselineKind kind = BaselineKind::kOurs;
  SamplerMode sampler = SamplerMode::kDualBatch;
  LabelMode labels = LabelMode::kProbe;
  WeightMode weights = WeightMode::kNone;
  bool triplet = true;

  bool trainable() const { return sampler != SamplerMode::kNone; }
  bool operator==(const TrainingMode&) const = default;
};

/// `ablation` only affects kOurs.
TrainingMode make_training_mode(BaselineKind kind, AblationMode ablation = AblationMode::kFull);

/// Zero-mean normalized cross-correlation in [-1, 1]; 0 when either image
/// is constant.
double ncc(const Image& a, const Image& b);

/// Database frames with their means and norms precomputed.
class NccDatabase {
 public:
  explicit NccDatabase(const Sweep& sweep);

  /// Argmax NCC (earliest frame on ties); never rejects. The query is
  /// resized to the database frame size when needed.
  RetrievalResult retrieve(const Image& query) const;
  std::size_t size() const { return frames_.size(); }

 private:
  struct Frame {
    std::vector<float> centered;
    double norm = 0.0;
    std::size_t frame_index = 0;
    ProbePose pose;
  };
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<Frame> frames_;
};

RetrievalResult ncc_retrieve(const Sweep& database, const Image& query);

}  // namespace sweepret
