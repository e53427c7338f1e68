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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sweepret/encoder.hpp"
#include "sweepret/sweep.hpp"

namespace sweepret {

inline constexpr char kIndexMagic[4] = {'S', 'W', 'I', 'X'};
inline constexpr std::uint32_t kIndexVersion = 1;

struct IndexEntry {
  std::uint32_t frame_index = 0;
  std::array<float, 3> position{0.0f, 0.0f, 0.0f};
  std::vector<float> embedding;

  ProbePose pose() const { return {{position[0], position[1], position[2]}}; }
  bool operator==(const IndexEntry&) const = default;
};

/// Database embeddings of one sweep plus the dustbin value they are
/// compared against.
struct EmbeddingIndex {
  std::string sweep_id;
  std::uint32_t embedding_dim = 0;
  float alpha = 0.0f;
  std::vector<IndexEntry> entries;

  bool operator==(const EmbeddingIndex&) const = default;
};

struct RetrievalResult {
  bool matched = false;
  /// Best entry even when rejected.
  std::uint32_t frame_index = 0;
  ProbePose pose;
  double score = 0.0;
  /// Second-best score; -inf for a one-entry database.
  double runner_up_score = 0.0;
};

nlohmann::json to_json(const RetrievalResult& result);

/// Resizes to the encoder input when needed.
Image prepare_image(const Image& image, const EncoderConfig& config);

/// One inference embedding per frame, in frame order.
EmbeddingIndex build_index(const Sweep& sweep, Model<float>& model);
EmbeddingIndex build_index(const Sweep& sweep, const std::filesystem::path& checkpoint);

/// Maximum dot product over the index; rejected when it is below `alpha`
/// (the index value unless overridden). Ties go to the earlier entry.
RetrievalResult match_embedding(const EmbeddingIndex& index, std::span<const float> embedding,
                                std::optional<double> alpha = std::nullopt);

RetrievalResult query(const EmbeddingIndex& index, Model<float>& model, const Image& image,
                      std::optional<double> alpha = std::nullopt);
RetrievalResult query(const EmbeddingIndex& index, const Image& image, const std::filesystem::path& checkpoint);

/// Element-wise equal to query(), one encoder pass over all images.
std::vector<RetrievalResult> batch_query(const EmbeddingIndex& index, Model<float>& model,
                                         std::span<const Image> images,
                                         std::optional<double> alpha = std::nullopt);

/// Throws Error(kShapeMismatch) when the index and model disagree on the
/// embedding size.
void check_compatible(const EmbeddingIndex& index, const EncoderConfig& config);

void save_index(const std::filesystem::path& path, const EmbeddingIndex& index);
EmbeddingIndex load_index(const std::filesystem::path& path);

}  // namespace sweepret
