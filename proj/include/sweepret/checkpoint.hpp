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

#include <json.hpp>

#include "sweepret/encoder.hpp"
#include "sweepret/optim.hpp"

namespace sweepret {

inline constexpr char kCheckpointMagic[4] = {'S', 'W', 'M', 'C'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Model<float> model;
  AdamState<float> optimizer;
  std::int64_t epoch = 0;
  /// Free-form provenance (config echo, loss mode...) stored with the weights.
  nlohmann::json provenance = nlohmann::json::object();
};

/// Layout: magic "SWMC", u32 version, u32 length + UTF-8 JSON header
/// (encoder config, epoch, optimizer scalars, record count, provenance), then
/// one record per tensor: u32 name length, name, u32 rank, rank x u32 dims,
/// little-endian f32 values. Records cover encoder parameters, batch-norm
/// buffers, the dustbin scalar and the Adam moments ("adam.m/<name>",
/// "adam.v/<name>").
void save_checkpoint(const std::filesystem::path& path, const Model<float>& model,
                     const AdamState<float>& optimizer, std::int64_t epoch,
                     const nlohmann::json& provenance = nlohmann::json::object());

/// Throws Error(kFormat) on bad magic/version, truncation, trailing bytes,
/// or any record whose name or shape disagrees with the embedded config.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace sweepret
