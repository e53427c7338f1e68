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

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sweepret/autodiff.hpp"
#include "sweepret/image.hpp"

namespace sweepret {

struct ConvStage {
  std::size_t channels = 16;
  std::size_t blocks = 1;
  std::size_t stride = 2;

  bool operator==(const ConvStage&) const = default;
};

enum class MlpOrder { kLinearNormRelu, kLinearReluNorm };

/// Residual conv backbone (3x3 stem, basic blocks, no pooling) flattened into
/// an MLP head. The last MLP layer is a bare linear map.
struct EncoderConfig {
  std::size_t input_height = 128;
  std::size_t input_width = 128;
  std::size_t stem_stride = 2;
  std::vector<ConvStage> conv_stages{{16, 1, 2}, {32, 1, 2}, {64, 1, 2}, {128, 1, 2}};
  std::size_t embedding_dim = 512;
  std::size_t mlp_layers = 4;
  std::size_t mlp_width = 512;
  MlpOrder mlp_order = MlpOrder::kLinearNormRelu;
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;

  /// Spatial size of the final feature map.
  std::size_t feature_height() const;
  std::size_t feature_width() const;
  /// Input width of the first MLP layer.
  std::size_t flatten_dim() const;

  bool operator==(const EncoderConfig&) const = default;
};

void validate(const EncoderConfig& config);
nlohmann::json to_json(const EncoderConfig& config);
EncoderConfig encoder_config_from_json(const nlohmann::json& j);

enum class Mode { kTrain, kInfer };

template <typename T>
struct Buffer {
  std::string name;
  std::vector<T> data;

  bool operator==(const Buffer&) const = default;
};

/// Every weight plus the batch-norm running statistics of one encoder.
template <typename T>
struct EncoderParams {
  EncoderConfig config;
  std::uint64_t init_seed = 0;
  std::vector<Parameter<T>> params;
  std::vector<Buffer<T>> buffers;

  Parameter<T>& param(const std::string& name);
  const Parameter<T>& param(const std::string& name) const;
  std::vector<T>& buffer(const std::string& name);
  std::size_t parameter_count() const;
  void rebuild_index();

 private:
  std::map<std::string, std::size_t> param_index_;
  std::map<std::string, std::size_t> buffer_index_;
};

/// Name and shape of every parameter and buffer implied by a config, in
/// creation order.
struct ParamSpec {
  std::string name;
  Shape shape;
  bool is_buffer = false;
};
std::vector<ParamSpec> parameter_layout(const EncoderConfig& config);

/// He (fan-in) normal weights, zero biases, unit batch-norm scale, zero
/// shift, running mean 0 / variance 1.
template <typename T>
EncoderParams<T> init_params(const EncoderConfig& config, std::uint64_t seed);

template <typename T>
EncoderParams<T> cast_params(const EncoderParams<float>& src);

/// Stacks images into a [N,1,H,W] tensor after checking their size.
template <typename T>
Tensor<T> images_to_tensor(std::span<const Image> images, const EncoderConfig& config);

/// [N,1,H,W] -> [N, embedding_dim]. Embeddings are not normalized. Train
/// mode uses batch statistics (needs N >= 2) and updates running averages.
template <typename T>
Var<T> encode(Tape<T>& tape, Var<T> frames, EncoderParams<T>& params, Mode mode);

/// Inference-mode embeddings, one row per image, computed in chunks of
/// `chunk` images. Each row is independent of the others in its chunk.
std::vector<std::vector<float>> embed_images(EncoderParams<float>& params,
                                             std::span<const Image> images, std::size_t chunk = 32);

/// Encoder plus the learnable dustbin score.
template <typename T>
struct Model {
  EncoderParams<T> encoder;
  Parameter<T> dustbin{"dustbin.alpha", Tensor<T>(Shape{}, T(0))};

  std::vector<Parameter<T>*> trainable();
};

template <typename T>
Model<T> init_model(const EncoderConfig& config, std::uint64_t seed);

}  // namespace sweepret
