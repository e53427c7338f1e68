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

#include "sweepret/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "sweepret/checkpoint.hpp"
#include "sweepret/error.hpp"
#include "sweepret/objective.hpp"
#include "sweepret/optim.hpp"
#include "sweepret/retrieval.hpp"

namespace sweepret {

namespace {

std::vector<double> probe_distances(const std::vector<ProbePose>& a, const std::vector<ProbePose>& b) {
  std::vector<double> d(a.size() * b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) d[i * b.size() + j] = probe_distance(a[i], b[j]);
  return d;
}

std::size_t steps_for(const Sweep& sweep, std::size_t b) { return (sweep.size() + b - 1) / b; }

std::size_t pooled_steps(const std::vector<Sweep>& set, std::size_t b) {
  std::size_t n = 0;
  for (const auto& s : set) n += steps_for(s, b);
  return n;
}

std::vector<Sweep> at_input_size(const std::vector<Sweep>& set, const EncoderConfig& config) {
  std::vector<Sweep> out = set;
  for (auto& s : out)
    for (auto& f : s.frames) f.image = prepare_image(f.image, config);
  return out;
}

}  // namespace

StepBatch make_dual_batch_step(const Sweep& sweep, const DualBatch& batch, const TrainingMode& mode,
                               const SamplerConfig& sampler, const Augment2DParams& augment, Rng& rng) {
  StepBatch step;
  const auto& i1 = batch.batch1_indices;
  const auto& i2 = batch.batch2_indices;
  std::vector<ProbePose> p1, p2;
  for (std::size_t i : i1) {
    step.view1.push_back(augment_2d(sweep.frames[i].image, augment, rng));
    p1.push_back(sweep.frames[i].pose);
  }
  for (std::size_t i : i2) {
    step.view2.push_back(augment_2d(sweep.frames[i].image, augment, rng));
    p2.push_back(sweep.frames[i].pose);
  }

  switch (mode.labels) {
    case LabelMode::kProbe:
      step.labels = label_pairs(p1, p2, sampler.positive_threshold_mm);
      break;
    case LabelMode::kSameFrame:
      step.labels = label_same_frame(i1, i2);
      break;
    case LabelMode::kTemporal: {
      std::vector<double> gaps(i1.size() * i2.size());
      for (std::size_t a = 0; a < i1.size(); ++a)
        for (std::size_t b = 0; b < i2.size(); ++b)
          gaps[a * i2.size() + b] = std::abs(static_cast<double>(i1[a]) - static_cast<double>(i2[b]));
      step.labels = label_from_distances(std::move(gaps), i1.size(), i2.size(),
                                         static_cast<double>(sampler.ivpp_delta_t));
      break;
    }
    case LabelMode::kNone:
      throw Error(ErrorCode::kInvalidArgument, "training", "training mode has no labels");
  }
  if (mode.triplet && mode.labels != LabelMode::kProbe) step.labels.distance_matrix_mm = probe_distances(p1, p2);

  if (mode.weights != WeightMode::kNone) {
    step.pair_weights.resize(i1.size() * i2.size());
    for (std::size_t a = 0; a < i1.size(); ++a) {
      for (std::size_t b = 0; b < i2.size(); ++b) {
        step.pair_weights[a * i2.size() + b] =
            mode.weights == WeightMode::kIvpp
                ? ivpp_weight(static_cast<long>(i1[a]), static_cast<long>(i2[b]), sampler.ivpp_delta_t)
                : distance_ivpp_weight(p1[a], p2[b], sampler.ivpp_delta_probe_mm);
      }
    }
  }
  return step;
}

StepBatch make_pooled_step(const std::vector<Sweep>& dataset, const std::vector<FrameRef>& frames,
                           const Augment2DParams& augment, Rng& rng) {
  StepBatch step;
  std::vector<std::size_t> ids(frames.size());
  std::iota(ids.begin(), ids.end(), 0);
  for (const auto& f : frames) step.view1.push_back(augment_2d(dataset[f.sweep].frames[f.frame].image, augment, rng));
  for (const auto& f : frames) step.view2.push_back(augment_2d(dataset[f.sweep].frames[f.frame].image, augment, rng));
  step.labels = label_same_frame(ids, ids);
  return step;
}

template <typename T>
Var<T> step_loss(Tape<T>& tape, Model<T>& model, const StepBatch& batch, const TrainingMode& mode,
                 const LossConfig& loss, Mode encoder_mode) {
  const std::size_t b1 = batch.view1.size(), b2 = batch.view2.size();
  std::vector<Image> all;
  all.reserve(b1 + b2);
  all.insert(all.end(), batch.view1.begin(), batch.view1.end());
  all.insert(all.end(), batch.view2.begin(), batch.view2.end());
  Var<T> x = tape.constant(images_to_tensor<T>(all, model.encoder.config), "frames");
  Var<T> z = encode(tape, x, model.encoder, encoder_mode);
  LossConfig lc = loss;
  if (mode.triplet) {
    lc.mode = mode.labels == LabelMode::kProbe ? AblationMode::kFull : AblationMode::kP2;
  } else {
    lc.mode = mode.labels == LabelMode::kProbe ? AblationMode::kP1 : AblationMode::kSce;
  }
  return embedding_loss(slice_rows(z, 0, b1), slice_rows(z, b1, b1 + b2), tape.parameter(model.dustbin),
                        batch.labels, lc, batch.pair_weights);
}

template Var<float> step_loss(Tape<float>&, Model<float>&, const StepBatch&, const TrainingMode&,
                              const LossConfig&, Mode);
template Var<double> step_loss(Tape<double>&, Model<double>&, const StepBatch&, const TrainingMode&,
                               const LossConfig&, Mode);

nlohmann::json to_json(const EpochRecord& r) {
  nlohmann::json j = {{"event", "epoch"},
                      {"epoch", r.epoch},
                      {"train_loss", r.train_loss},
                      {"learning_rate", r.learning_rate},
                      {"alpha", r.alpha},
                      {"steps", r.steps},
                      {"improved", r.improved},
                      {"seconds", r.seconds}};
  j["val_loss"] = r.val_loss ? nlohmann::json(*r.val_loss) : nlohmann::json(nullptr);
  return j;
}

namespace {

/// Runs one pass over `set` and returns the mean step loss. With `state`
/// set, every step also updates the model.
double run_pass(const AppConfig& config, const TrainingMode& mode, Model<float>& model,
                const std::vector<Sweep>& set, Rng& rng, AdamState<float>* state, std::int64_t epoch) {
  const std::size_t b = config.sampler.batch_size;
  const bool training = state != nullptr;
  auto params = model.trainable();
  double total = 0.0;
  std::size_t steps = 0;

  auto run_step = [&](const StepBatch& batch) {
    Tape<float> tape(training);
    Var<float> loss = step_loss(tape, model, batch, mode, config.loss, training ? Mode::kTrain : Mode::kInfer);
    const double value = loss.item();
    if (!std::isfinite(value)) {
      throw Error(ErrorCode::kNonFinite,
                  std::string(training ? "train" : "validation") + " epoch " + std::to_string(epoch) + " step " +
                      std::to_string(steps + 1),
                  "loss is not finite");
    }
    if (training) {
      for (auto* p : params) p->zero_grad();
      tape.backward(loss);
      adam_step(std::span<Parameter<float>* const>(params), *state);
    }
    total += value;
    ++steps;
  };

  if (mode.sampler == SamplerMode::kPooled) {
    const std::size_t n = pooled_steps(set, b);
    for (std::size_t s = 0; s < n; ++s) {
      auto frames = sample_inter_sweep_batch(set, b, rng);
      run_step(make_pooled_step(set, frames, config.augment, rng));
    }
  } else {
    // Round-robin: one step per sweep in turn until every sweep has had
    // ceil(T / b) steps.
    std::vector<std::size_t> remaining(set.size());
    for (std::size_t k = 0; k < set.size(); ++k) remaining[k] = steps_for(set[k], b);
    for (bool any = true; any;) {
      any = false;
      for (std::size_t k = 0; k < set.size(); ++k) {
        if (remaining[k] == 0) continue;
        --remaining[k];
        any = true;
        DualBatch dual = sample_dual_batches(set[k], b, config.sampler.overlap, rng);
        run_step(make_dual_batch_step(set[k], dual, mode, config.sampler, config.augment, rng));
      }
    }
  }
  return steps ? total / static_cast<double>(steps) : 0.0;
}

}  // namespace

TrainResult train(const AppConfig& config, const std::vector<Sweep>& train_set_in,
                  const std::vector<Sweep>& val_set_in, const TrainOptions& options) {
  const TrainingMode mode = make_training_mode(config.train.baseline, config.loss.mode);
  if (!mode.trainable()) {
    throw Error(ErrorCode::kInvalidArgument, "train",
                "baseline '" + std::string(to_string(mode.kind)) + "' has no parameters to train");
  }
  if (options.epochs <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "train", "at least one epoch is required to select a checkpoint");
  }
  if (train_set_in.empty()) throw Error(ErrorCode::kInvalidArgument, "train", "no training sweeps");
  for (const auto& t : train_set_in)
    for (const auto& v : val_set_in)
      if (t.id == v.id) throw Error(ErrorCode::kInvalidArgument, "train", "sweep '" + t.id + "' is in both splits");

  const auto train_set = at_input_size(train_set_in, config.encoder);
  const auto val_set = at_input_size(val_set_in, config.encoder);
  std::filesystem::create_directories(options.out_dir);

  Model<float> model = init_model<float>(config.encoder, config.train.seed);
  auto params = model.trainable();
  AdamState<float> state(std::span<Parameter<float>* const>(params), config.optimizer.adam);
  StepLR schedule(config.optimizer.adam.learning_rate, config.optimizer.step_size, config.optimizer.gamma);
  std::seed_seq seq{config.train.seed, std::uint64_t{0x5eed}};
  Rng rng(seq);

  nlohmann::json provenance = options.provenance;
  provenance["config"] = to_json(config);
  provenance["config_text"] = config.source_text;
  provenance["training_mode"] = {{"baseline", to_string(mode.kind)},
                                 {"sampler", to_string(mode.sampler)},
                                 {"labels", to_string(mode.labels)},
                                 {"weights", to_string(mode.weights)},
                                 {"triplet", mode.triplet}};

  TrainResult result;
  result.best_checkpoint = options.out_dir / "best.swmc";
  std::ofstream history(options.out_dir / "history.jsonl");
  double best = std::numeric_limits<double>::infinity();

  for (std::int64_t epoch = 1; epoch <= options.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    schedule.set_epoch(epoch - 1);
    state.learning_rate = schedule.learning_rate();

    EpochRecord rec;
    rec.epoch = epoch;
    rec.learning_rate = state.learning_rate;
    const std::int64_t before = state.step_count;
    rec.train_loss = run_pass(config, mode, model, train_set, rng, &state, epoch);
    rec.steps = static_cast<std::size_t>(state.step_count - before);
    if (!val_set.empty()) {
      Rng vrng(config.train.validation_seed);
      rec.val_loss = run_pass(config, mode, model, val_set, vrng, nullptr, epoch);
    }
    rec.alpha = model.dustbin.value[0];
    const double selection = rec.val_loss.value_or(rec.train_loss);
    if (selection < best) {
      best = selection;
      rec.improved = true;
      result.best_epoch = epoch;
      result.best_loss = selection;
      save_checkpoint(result.best_checkpoint, model, state, epoch, provenance);
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    history << to_json(rec).dump() << '\n';
    history.flush();
    result.history.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);
  }
  if (result.best_epoch == 0) {
    throw Error(ErrorCode::kNonFinite, "train", "no epoch produced a finite selection loss");
  }
  return result;
}

}  // namespace sweepret
