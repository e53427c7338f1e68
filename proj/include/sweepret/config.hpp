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

// Run configuration read from one INI file with sections [data], [phantom],
// [encoder], [loss], [augment], [optimizer], [sampler], [train], [eval].
// Unknown sections or keys are rejected so typos do not silently fall back
// to defaults.

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "sweepret/augment.hpp"
#include "sweepret/baselines.hpp"
#include "sweepret/encoder.hpp"
#include "sweepret/objective.hpp"
#include "sweepret/optim.hpp"
#include "sweepret/phantom.hpp"

namespace sweepret {

struct DataConfig {
  std::filesystem::path train_dir = "data/train";
  std::filesystem::path val_dir = "data/val";
  std::filesystem::path test_dir = "data/test";
};

struct SplitConfig {
  std::size_t train_sweeps = 8;
  std::size_t val_sweeps = 2;
  std::size_t test_sweeps = 2;
};

struct SamplerConfig {
  std::size_t batch_size = 30;
  double overlap = 0.75;
  double positive_threshold_mm = 10.0;
  long ivpp_delta_t = 8;
  double ivpp_delta_probe_mm = 10.0;
};

struct OptimizerConfig {
  AdamOptions adam;
  std::int64_t step_size = 100;
  double gamma = 0.95;
};

struct TrainSettings {
  std::int64_t max_epochs = 300;
  std::int64_t desk_max_epochs = 60;
  std::uint64_t seed = 0;
  std::uint64_t validation_seed = 12345;
  BaselineKind baseline = BaselineKind::kOurs;
};

struct EvalSettings {
  std::size_t queries_per_sweep = 50;
  std::size_t half_width = 30;
  double success_threshold_mm = 15.0;
  Affine3DRanges affine;
  std::uint64_t seed = 2024;
  std::filesystem::path checkpoint;
};

struct AppConfig {
  DataConfig data;
  PhantomConfig phantom;
  SplitConfig splits;
  EncoderConfig encoder;
  LossConfig loss;
  Augment2DParams augment;
  OptimizerConfig optimizer;
  SamplerConfig sampler;
  TrainSettings train;
  EvalSettings eval;
  /// File contents as read, for provenance.
  std::string source_text;
};

/// Parses INI text; relative data paths are resolved against `base_dir`.
AppConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
AppConfig load_config(const std::filesystem::path& path);
/// Checks every section; throws Error(kConfig) naming the offending key.
void validate(const AppConfig& config);
/// Effective values after overrides (not the source text).
nlohmann::json to_json(const AppConfig& config);

}  // namespace sweepret
