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

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>

#include "fixtures.hpp"
#include "sweepret/checkpoint.hpp"
#include "sweepret/error.hpp"
#include "sweepret/phantom.hpp"
#include "sweepret/training.hpp"

using namespace sweepret;
using testsupport::TempDir;

namespace {

AppConfig tiny() { return parse_config(testsupport::tiny_config_text()); }

std::vector<Sweep> tiny_sweeps(const AppConfig& c, std::size_t n, std::size_t first = 0) {
  std::vector<Sweep> out;
  for (std::size_t k = first; k < first + n; ++k) out.push_back(generate_phantom_sweep(c.phantom, k));
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Augment2DParams no_augment() {
  Augment2DParams a;
  a.rotation_deg = {0, 0};
  a.translate_frac = {0, 0};
  a.scale = {1, 1};
  a.crop_scale = {1, 1};
  a.brightness_delta = {0, 0};
  a.contrast_factor = {1, 1};
  return a;
}

}  // namespace

TEST_CASE("argument checks") {
  const AppConfig c = tiny();
  const auto tr = tiny_sweeps(c, 2);
  TempDir dir("train_args");
  TrainOptions opt;
  opt.out_dir = dir.path();
  opt.epochs = 0;
  CHECK_THROWS_AS(train(c, tr, {}, opt), Error);
  opt.epochs = 1;
  CHECK_THROWS_AS(train(c, {}, {}, opt), Error);
  CHECK_THROWS_AS(train(c, tr, {tr[1]}, opt), Error);
  AppConfig ncc = c;
  ncc.train.baseline = BaselineKind::kNcc;
  CHECK_THROWS_AS(train(ncc, tr, {}, opt), Error);
}

TEST_CASE("training is deterministic and makes progress") {
  AppConfig c = tiny();
  const auto tr = tiny_sweeps(c, 4);
  const auto va = tiny_sweeps(c, 1, 4);
  TempDir a("train_a"), b("train_b");
  TrainOptions opt;
  opt.epochs = 6;
  std::size_t callbacks = 0;
  opt.on_epoch = [&](const EpochRecord&) { ++callbacks; };
  opt.out_dir = a.path();
  const TrainResult ra = train(c, tr, va, opt);
  opt.out_dir = b.path();
  const TrainResult rb = train(c, tr, va, opt);
  CHECK(callbacks == 12);
  REQUIRE(ra.history.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(ra.history[i].train_loss == rb.history[i].train_loss);
    CHECK(ra.history[i].val_loss == rb.history[i].val_loss);
    CHECK(ra.history[i].steps == 20);  // ceil(40 / 8) dual batches per sweep, four sweeps
    CHECK(std::isfinite(ra.history[i].train_loss));
  }
  CHECK(slurp(ra.best_checkpoint) == slurp(rb.best_checkpoint));
  CHECK(ra.history.back().train_loss < ra.history.front().train_loss);
  const Checkpoint ck = load_checkpoint(ra.best_checkpoint);
  CHECK(ck.epoch == ra.best_epoch);
  CHECK(*ra.history[ra.best_epoch - 1].val_loss == ra.best_loss);
  CHECK(ra.history[ra.best_epoch - 1].improved);
  CHECK(ck.provenance.contains("config"));
  CHECK(std::filesystem::exists(a / "history.jsonl"));

  c.train.seed = 4;
  opt.out_dir = b.path();
  opt.on_epoch = nullptr;
  opt.epochs = 1;
  CHECK(train(c, tr, va, opt).history[0].train_loss != ra.history[0].train_loss);
}

TEST_CASE("a non-finite frame stops training with a located error") {
  const AppConfig c = tiny();
  auto tr = tiny_sweeps(c, 2);
  for (auto& f : tr[1].frames) f.image.pixels[5] = std::numeric_limits<float>::quiet_NaN();
  TempDir dir("train_nan");
  TrainOptions opt;
  opt.out_dir = dir.path();
  opt.epochs = 1;
  try {
    train(c, tr, {}, opt);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNonFinite);
    // Either the loss or the first parameter gradient it reaches is named.
    const std::string what = e.what();
    const bool located = what.find("epoch 1") != std::string::npos || what.find("stem.conv") != std::string::npos;
    CHECK(located);
  }
}

TEST_CASE("step batches follow the training mode") {
  const AppConfig c = tiny();
  const Sweep s = tiny_sweeps(c, 1)[0];
  Rng rng(5);
  const DualBatch db = sample_dual_batches(s, 8, 0.75, rng);
  const Augment2DParams id = no_augment();

  const StepBatch ours = make_dual_batch_step(s, db, make_training_mode(BaselineKind::kOurs), c.sampler, id, rng);
  CHECK(ours.view1.size() == 8);
  CHECK(ours.view1[0] == s.frames[db.batch1_indices[0]].image);
  CHECK(ours.pair_weights.empty());
  std::vector<ProbePose> p1, p2;
  for (auto i : db.batch1_indices) p1.push_back(s.frames[i].pose);
  for (auto i : db.batch2_indices) p2.push_back(s.frames[i].pose);
  CHECK(ours.labels.gt_1to2 == label_pairs(p1, p2, c.sampler.positive_threshold_mm).gt_1to2);

  const StepBatch inter = make_dual_batch_step(s, db, make_training_mode(BaselineKind::kInterSweepCl), c.sampler, id, rng);
  CHECK(inter.labels.gt_1to2 == label_same_frame(db.batch1_indices, db.batch2_indices).gt_1to2);

  const StepBatch ivpp = make_dual_batch_step(s, db, make_training_mode(BaselineKind::kIvpp), c.sampler, id, rng);
  REQUIRE(ivpp.pair_weights.size() == 64);
  CHECK(ivpp.pair_weights[0] ==
        ivpp_weight(static_cast<long>(db.batch1_indices[0]), static_cast<long>(db.batch2_indices[0]), c.sampler.ivpp_delta_t));
  for (std::size_t a = 0; a < 8; ++a) {
    const int j = ivpp.labels.gt_1to2[a];
    if (j == ivpp.labels.row_dustbin()) continue;
    const long gap = std::labs(static_cast<long>(db.batch1_indices[a]) - static_cast<long>(db.batch2_indices[j]));
    CHECK(gap < c.sampler.ivpp_delta_t);
  }

  const StepBatch dist = make_dual_batch_step(s, db, make_training_mode(BaselineKind::kDistanceIvpp), c.sampler, id, rng);
  CHECK(dist.pair_weights[9] == distance_ivpp_weight(p1[1], p2[1], c.sampler.ivpp_delta_probe_mm));

  std::vector<Sweep> set{s, tiny_sweeps(c, 1, 1)[0]};
  const auto frames = sample_inter_sweep_batch(set, 6, rng);
  const StepBatch pooled = make_pooled_step(set, frames, id, rng);
  CHECK(pooled.view1 == pooled.view2);
  for (int i = 0; i < 6; ++i) CHECK(pooled.labels.gt_1to2[i] == i);
}
