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

#include "sweepret/retrieval.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "sweepret/checkpoint.hpp"
#include "sweepret/error.hpp"
#include "sweepret/kernels.hpp"

namespace sweepret {

static_assert(std::endian::native == std::endian::little, "index I/O assumes a little-endian host");

nlohmann::json to_json(const RetrievalResult& r) {
  nlohmann::json j = {{"status", r.matched ? "matched" : "rejected"}, {"score", r.score}};
  if (std::isfinite(r.runner_up_score)) {
    j["runner_up_score"] = r.runner_up_score;
  } else {
    j["runner_up_score"] = nullptr;
  }
  if (r.matched) {
    j["frame_index"] = r.frame_index;
    j["pose"] = r.pose.position;
  } else {
    j["best_frame_index"] = r.frame_index;
  }
  return j;
}

Image prepare_image(const Image& image, const EncoderConfig& config) {
  if (image.height == config.input_height && image.width == config.input_width) return image;
  return resize_bilinear(image, config.input_height, config.input_width);
}

void check_compatible(const EmbeddingIndex& index, const EncoderConfig& config) {
  if (index.embedding_dim != config.embedding_dim) {
    throw Error(ErrorCode::kShapeMismatch, "index " + index.sweep_id,
                "index embeddings have dimension " + std::to_string(index.embedding_dim) +
                    " but the encoder produces " + std::to_string(config.embedding_dim));
  }
}

EmbeddingIndex build_index(const Sweep& sweep, Model<float>& model) {
  std::vector<Image> images;
  images.reserve(sweep.size());
  for (const auto& f : sweep.frames) images.push_back(prepare_image(f.image, model.encoder.config));
  auto emb = embed_images(model.encoder, images);

  EmbeddingIndex index;
  index.sweep_id = sweep.id;
  index.embedding_dim = static_cast<std::uint32_t>(model.encoder.config.embedding_dim);
  index.alpha = model.dustbin.value[0];
  index.entries.reserve(sweep.size());
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    for (float v : emb[i]) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kNonFinite, "index " + sweep.id,
                    "non-finite embedding for frame " + std::to_string(i));
      }
    }
    const auto& p = sweep.frames[i].pose.position;
    index.entries.push_back({static_cast<std::uint32_t>(sweep.frames[i].frame_index),
                             {static_cast<float>(p[0]), static_cast<float>(p[1]), static_cast<float>(p[2])},
                             std::move(emb[i])});
  }
  return index;
}

EmbeddingIndex build_index(const Sweep& sweep, const std::filesystem::path& checkpoint) {
  Checkpoint ck = load_checkpoint(checkpoint);
  return build_index(sweep, ck.model);
}

RetrievalResult match_embedding(const EmbeddingIndex& index, std::span<const float> embedding,
                                std::optional<double> alpha) {
  if (index.entries.empty()) throw Error(ErrorCode::kInvalidArgument, "index " + index.sweep_id, "index is empty");
  if (embedding.size() != index.embedding_dim) {
    throw Error(ErrorCode::kShapeMismatch, "index " + index.sweep_id,
                "query embedding has dimension " + std::to_string(embedding.size()) + ", index has " +
                    std::to_string(index.embedding_dim));
  }
  const double ninf = -std::numeric_limits<double>::infinity();
  double best = ninf, second = ninf;
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < index.entries.size(); ++i) {
    const double s = kernels::dot(embedding.data(), index.entries[i].embedding.data(), embedding.size());
    if (i == 0 || s > best) {
      if (i != 0) second = best;
      best = s;
      best_i = i;
    } else if (s > second) {
      second = s;
    }
  }
  RetrievalResult r;
  r.score = best;
  r.runner_up_score = second;
  r.frame_index = index.entries[best_i].frame_index;
  r.pose = index.entries[best_i].pose();
  r.matched = !(best < alpha.value_or(index.alpha));
  return r;
}

std::vector<RetrievalResult> batch_query(const EmbeddingIndex& index, Model<float>& model,
                                         std::span<const Image> images, std::optional<double> alpha) {
  check_compatible(index, model.encoder.config);
  if (index.entries.empty()) throw Error(ErrorCode::kInvalidArgument, "index " + index.sweep_id, "index is empty");
  std::vector<Image> prepared;
  prepared.reserve(images.size());
  for (const auto& im : images) prepared.push_back(prepare_image(im, model.encoder.config));
  auto emb = embed_images(model.encoder, prepared);
  std::vector<RetrievalResult> out;
  out.reserve(images.size());
  for (const auto& e : emb) out.push_back(match_embedding(index, e, alpha));
  return out;
}

RetrievalResult query(const EmbeddingIndex& index, Model<float>& model, const Image& image,
                      std::optional<double> alpha) {
  return batch_query(index, model, std::span<const Image>(&image, 1), alpha).front();
}

RetrievalResult query(const EmbeddingIndex& index, const Image& image, const std::filesystem::path& checkpoint) {
  Checkpoint ck = load_checkpoint(checkpoint);
  return query(index, ck.model, image);
}

namespace {

void put_u32(std::vector<char>& buf, std::uint32_t v) {
  const char* p = reinterpret_cast<const char*>(&v);
  buf.insert(buf.end(), p, p + 4);
}

void put_f32(std::vector<char>& buf, float v) {
  const char* p = reinterpret_cast<const char*>(&v);
  buf.insert(buf.end(), p, p + 4);
}

}  // namespace

void save_index(const std::filesystem::path& path, const EmbeddingIndex& index) {
  std::vector<char> buf(kIndexMagic, kIndexMagic + 4);
  put_u32(buf, kIndexVersion);
  put_u32(buf, static_cast<std::uint32_t>(index.sweep_id.size()));
  buf.insert(buf.end(), index.sweep_id.begin(), index.sweep_id.end());
  put_u32(buf, index.embedding_dim);
  put_f32(buf, index.alpha);
  put_u32(buf, static_cast<std::uint32_t>(index.entries.size()));
  for (const auto& e : index.entries) {
    if (e.embedding.size() != index.embedding_dim) {
      throw Error(ErrorCode::kShapeMismatch, path.string(),
                  "entry for frame " + std::to_string(e.frame_index) + " has the wrong embedding size");
    }
    put_u32(buf, e.frame_index);
    for (float v : e.position) put_f32(buf, v);
    for (float v : e.embedding) put_f32(buf, v);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, path.string(), "cannot open index for writing");
  f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!f) throw Error(ErrorCode::kIo, path.string(), "index write failed");
}

EmbeddingIndex load_index(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, path.string(), "cannot open index");
  const std::vector<char> data((std::istreambuf_iterator<char>(f)), {});
  std::size_t pos = 0;
  auto need = [&](std::size_t n, const char* what) {
    if (pos + n > data.size()) {
      throw Error(ErrorCode::kFormat, path.string(), std::string("truncated index while reading ") + what);
    }
  };
  auto u32 = [&](const char* what) {
    need(4, what);
    std::uint32_t v;
    std::memcpy(&v, data.data() + pos, 4);
    pos += 4;
    return v;
  };
  auto f32 = [&](const char* what) {
    need(4, what);
    float v;
    std::memcpy(&v, data.data() + pos, 4);
    pos += 4;
    return v;
  };

  need(4, "magic");
  if (std::memcmp(data.data(), kIndexMagic, 4) != 0) {
    throw Error(ErrorCode::kFormat, path.string(), "bad magic (not a SWIX index)");
  }
  pos = 4;
  const std::uint32_t version = u32("version");
  if (version != kIndexVersion) {
    throw Error(ErrorCode::kFormat, path.string(), "unsupported index version " + std::to_string(version));
  }
  EmbeddingIndex index;
  const std::uint32_t id_len = u32("sweep id length");
  need(id_len, "sweep id");
  index.sweep_id.assign(data.data() + pos, id_len);
  pos += id_len;
  index.embedding_dim = u32("embedding dim");
  index.alpha = f32("alpha");
  const std::uint32_t count = u32("entry count");
  const std::size_t record_bytes = 4 + 12 + 4 * static_cast<std::size_t>(index.embedding_dim);
  if (static_cast<std::size_t>(count) * record_bytes != data.size() - pos) {
    throw Error(ErrorCode::kFormat, path.string(),
                "expected " + std::to_string(count) + " records of " + std::to_string(record_bytes) +
                    " bytes, found " + std::to_string(data.size() - pos) + " bytes");
  }
  index.entries.resize(count);
  for (auto& e : index.entries) {
    e.frame_index = u32("frame index");
    for (float& v : e.position) v = f32("pose");
    e.embedding.resize(index.embedding_dim);
    for (float& v : e.embedding) {
      v = f32("embedding");
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kFormat, path.string(),
                    "non-finite embedding for frame " + std::to_string(e.frame_index));
      }
    }
  }
  for (std::size_t i = 1; i < index.entries.size(); ++i) {
    if (index.entries[i].frame_index <= index.entries[i - 1].frame_index) {
      throw Error(ErrorCode::kFormat, path.string(), "entries are not ordered by frame index");
    }
  }
  return index;
}

}  // namespace sweepret
