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
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include <json.hpp>

#include "sweepret/baselines.hpp"
#include "sweepret/config.hpp"
#include "sweepret/encoder.hpp"
#include "sweepret/sampler.hpp"

namespace sweepret {

/// Images, labels and optional CE pair weights of one contrastive step.
struct StepBatch {
  std::vector<Image> view1;
  std::vector<Image> view2;
  PairLabels labels;
  /// b1 x b2; empty for unweighted CE.
  std::vector<double> pair_weights;
};

/// Labels (and IVPP weights) for a dual batch drawn from `sweep`.
StepBatch make_dual_batch_step(const Sweep& sweep, const DualBatch& batch, const TrainingMode& mode,
                               const SamplerConfig& sampler, const Augment2DParams& augment, Rng& rng);
/// Two augmented views of each pooled frame; positives are the two views of
/// the same frame.
StepBatch make_pooled_step(const std::vector<Sweep>& dataset, const std::vector<FrameRef>& frames,
                           const Augment2DParams& augment, Rng& rng);

/// Loss of one step under the run's training mode. Train mode uses batch
/// statistics for batch norm; infer mode uses the running averages.
template <typename T>
Var<T> step_loss(Tape<T>& tape, Model<T>& model, const StepBatch& batch, const TrainingMode& mode,
                 const LossConfig& loss, Mode encoder_mode);

struct EpochRecord {
  std::int64_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> val_loss;
  double learning_rate = 0.0;
  double alpha = 0.0;
  std::size_t steps = 0;
  bool improved = false;
  double seconds = 0.0;
};

nlohmann::json to_json(const EpochRecord& record);

struct TrainOptions {
  std::int64_t epochs = 0;
  std::filesystem::path out_dir;
  /// Called after every epoch.
  std::function<void(const EpochRecord&)> on_epoch;
  /// Extra provenance stored in the checkpoint.
  nlohmann::json provenance = nlohmann::json::object();
};

struct TrainResult {
  std::filesystem::path best_checkpoint;
  std::int64_t best_epoch = 0;
  double best_loss = 0.0;
  std::vector<EpochRecord> history;
};

/// Trains `config.train.baseline` and saves `best.swmc` in out_dir whenever
/// the selection loss (validation loss, or training loss without validation
/// sweeps) improves. Throws Error(kNonFinite) with epoch/step context when a
/// loss stops being finite.
TrainResult train(const AppConfig& config, const std::vector<Sweep>& train_set,
                  const std::vector<Sweep>& val_set, const TrainOptions& options);

}  // namespace sweepret
