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

#include "sweepret/encoder.hpp"

#include <cmath>
#include <random>

#include "sweepret/error.hpp"

namespace sweepret {

using nlohmann::json;

namespace {

std::size_t conv_out(std::size_t in, std::size_t stride) { return (in - 1) / stride + 1; }

std::string block_prefix(std::size_t stage, std::size_t block) {
  return "stage" + std::to_string(stage) + ".block" + std::to_string(block);
}

}  // namespace

std::size_t EncoderConfig::feature_height() const {
  std::size_t h = conv_out(input_height, stem_stride);
  for (const auto& s : conv_stages) h = conv_out(h, s.stride);
  return h;
}

std::size_t EncoderConfig::feature_width() const {
  std::size_t w = conv_out(input_width, stem_stride);
  for (const auto& s : conv_stages) w = conv_out(w, s.stride);
  return w;
}

std::size_t EncoderConfig::flatten_dim() const {
  const std::size_t ch = conv_stages.empty() ? 0 : conv_stages.back().channels;
  return ch * feature_height() * feature_width();
}

void validate(const EncoderConfig& c) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kConfig, "encoder", msg); };
  if (c.input_height == 0 || c.input_width == 0) fail("input size must be positive");
  if (c.stem_stride == 0) fail("stem stride must be positive");
  if (c.conv_stages.empty()) fail("at least one conv stage is required");
  for (const auto& s : c.conv_stages) {
    if (s.channels == 0 || s.blocks == 0 || s.stride == 0) {
      fail("conv stages need positive channels, blocks and stride");
    }
  }
  if (c.mlp_layers < 1) fail("mlp_layers must be >= 1");
  if (c.embedding_dim == 0 || c.mlp_width == 0) fail("embedding_dim and mlp_width must be positive");
  if (!(c.bn_eps > 0.0) || c.bn_momentum < 0.0 || c.bn_momentum > 1.0) {
    fail("bn_eps must be positive and bn_momentum in [0,1]");
  }
}

json to_json(const EncoderConfig& c) {
  json stages = json::array();
  for (const auto& s : c.conv_stages) {
    stages.push_back({{"channels", s.channels}, {"blocks", s.blocks}, {"stride", s.stride}});
  }
  return {{"input_height", c.input_height},
          {"input_width", c.input_width},
          {"stem_stride", c.stem_stride},
          {"conv_stages", stages},
          {"embedding_dim", c.embedding_dim},
          {"mlp_layers", c.mlp_layers},
          {"mlp_width", c.mlp_width},
          {"mlp_order", c.mlp_order == MlpOrder::kLinearNormRelu ? "linear_bn_relu" : "linear_relu_bn"},
          {"bn_momentum", c.bn_momentum},
          {"bn_eps", c.bn_eps},
          {"flatten_dim", c.flatten_dim()}};
}

EncoderConfig encoder_config_from_json(const json& j) {
  EncoderConfig c;
  try {
    c.input_height = j.at("input_height").get<std::size_t>();
    c.input_width = j.at("input_width").get<std::size_t>();
    c.stem_stride = j.at("stem_stride").get<std::size_t>();
    c.conv_stages.clear();
    for (const auto& s : j.at("conv_stages")) {
      c.conv_stages.push_back({s.at("channels").get<std::size_t>(), s.at("blocks").get<std::size_t>(),
                               s.at("stride").get<std::size_t>()});
    }
    c.embedding_dim = j.at("embedding_dim").get<std::size_t>();
    c.mlp_layers = j.at("mlp_layers").get<std::size_t>();
    c.mlp_width = j.at("mlp_width").get<std::size_t>();
    const std::string order = j.at("mlp_order").get<std::string>();
    if (order == "linear_bn_relu") {
      c.mlp_order = MlpOrder::kLinearNormRelu;
    } else if (order == "linear_relu_bn") {
      c.mlp_order = MlpOrder::kLinearReluNorm;
    } else {
      throw Error(ErrorCode::kConfig, "encoder", "unknown mlp_order '" + order + "'");
    }
    c.bn_momentum = j.at("bn_momentum").get<double>();
    c.bn_eps = j.at("bn_eps").get<double>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, "encoder", std::string("bad encoder config: ") + e.what());
  }
  validate(c);
  if (j.contains("flatten_dim") && j.at("flatten_dim").get<std::size_t>() != c.flatten_dim()) {
    throw Error(ErrorCode::kConfig, "encoder", "recorded flatten_dim disagrees with the layer layout");
  }
  return c;
}

std::vector<ParamSpec> parameter_layout(const EncoderConfig& c) {
  validate(c);
  std::vector<ParamSpec> out;
  auto bn = [&](const std::string& p, std::size_t ch) {
    out.push_back({p + ".gamma", {ch}, false});
    out.push_back({p + ".beta", {ch}, false});
    out.push_back({p + ".running_mean", {ch}, true});
    out.push_back({p + ".running_var", {ch}, true});
  };
  std::size_t in = c.conv_stages.front().channels;
  out.push_back({"stem.conv.weight", {in, 1, 3, 3}, false});
  bn("stem.bn", in);
  for (std::size_t s = 0; s < c.conv_stages.size(); ++s) {
    const ConvStage& st = c.conv_stages[s];
    for (std::size_t b = 0; b < st.blocks; ++b) {
      const std::string p = block_prefix(s, b);
      const std::size_t stride = b == 0 ? st.stride : 1;
      out.push_back({p + ".conv1.weight", {st.channels, in, 3, 3}, false});
      bn(p + ".bn1", st.channels);
      out.push_back({p + ".conv2.weight", {st.channels, st.channels, 3, 3}, false});
      bn(p + ".bn2", st.channels);
      if (stride != 1 || in != st.channels) {
        out.push_back({p + ".shortcut.weight", {st.channels, in, 1, 1}, false});
        bn(p + ".shortcut_bn", st.channels);
      }
      in = st.channels;
    }
  }
  std::size_t width = c.flatten_dim();
  for (std::size_t l = 0; l < c.mlp_layers; ++l) {
    const std::string p = "mlp." + std::to_string(l);
    const bool last = l + 1 == c.mlp_layers;
    const std::size_t out_dim = last ? c.embedding_dim : c.mlp_width;
    out.push_back({p + ".weight", {out_dim, width}, false});
    out.push_back({p + ".bias", {out_dim}, false});
    if (!last) bn(p + ".bn", out_dim);
    width = out_dim;
  }
  return out;
}

template <typename T>
Parameter<T>& EncoderParams<T>::param(const std::string& name) {
  auto it = param_index_.find(name);
  if (it == param_index_.end()) throw Error(ErrorCode::kInvalidArgument, name, "no such parameter");
  return params[it->second];
}

template <typename T>
const Parameter<T>& EncoderParams<T>::param(const std::string& name) const {
  auto it = param_index_.find(name);
  if (it == param_index_.end()) throw Error(ErrorCode::kInvalidArgument, name, "no such parameter");
  return params[it->second];
}

template <typename T>
std::vector<T>& EncoderParams<T>::buffer(const std::string& name) {
  auto it = buffer_index_.find(name);
  if (it == buffer_index_.end()) throw Error(ErrorCode::kInvalidArgument, name, "no such buffer");
  return buffers[it->second].data;
}

template <typename T>
std::size_t EncoderParams<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params) n += p.value.size();
  return n;
}

template <typename T>
void EncoderParams<T>::rebuild_index() {
  param_index_.clear();
  buffer_index_.clear();
  for (std::size_t i = 0; i < params.size(); ++i) param_index_[params[i].name] = i;
  for (std::size_t i = 0; i < buffers.size(); ++i) buffer_index_[buffers[i].name] = i;
}

template <typename T>
EncoderParams<T> init_params(const EncoderConfig& config, std::uint64_t seed) {
  EncoderParams<T> out;
  out.config = config;
  out.init_seed = seed;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::string output_weight = "mlp." + std::to_string(config.mlp_layers - 1) + ".weight";
  for (const ParamSpec& spec : parameter_layout(config)) {
    if (spec.is_buffer) {
      const bool is_var = spec.name.ends_with(".running_var");
      out.buffers.push_back({spec.name, std::vector<T>(numel(spec.shape), is_var ? T(1) : T(0))});
      continue;
    }
    Tensor<T> value(spec.shape);
    if (spec.name.ends_with(".weight")) {
      const std::size_t fan_in = numel(spec.shape) / spec.shape[0];
      double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
      // Output projection: unit expected embedding norm, so initial
      // similarities are O(1).
      if (spec.name == output_weight) std_dev /= std::sqrt(static_cast<double>(config.embedding_dim));
      for (T& v : value.data) v = static_cast<T>(std_dev * normal(rng));
    } else if (spec.name.ends_with(".gamma")) {
      std::fill(value.data.begin(), value.data.end(), T(1));
    }
    out.params.emplace_back(spec.name, std::move(value));
  }
  out.rebuild_index();
  return out;
}

template <typename T>
EncoderParams<T> cast_params(const EncoderParams<float>& src) {
  EncoderParams<T> out;
  out.config = src.config;
  out.init_seed = src.init_seed;
  for (const auto& p : src.params) {
    Tensor<T> v(p.value.shape);
    for (std::size_t i = 0; i < v.size(); ++i) v.data[i] = static_cast<T>(p.value.data[i]);
    out.params.emplace_back(p.name, std::move(v));
  }
  for (const auto& b : src.buffers) out.buffers.push_back({b.name, std::vector<T>(b.data.begin(), b.data.end())});
  out.rebuild_index();
  return out;
}

template <typename T>
Tensor<T> images_to_tensor(std::span<const Image> images, const EncoderConfig& config) {
  const std::size_t h = config.input_height, w = config.input_width;
  Tensor<T> t(Shape{images.size(), 1, h, w});
  for (std::size_t n = 0; n < images.size(); ++n) {
    const Image& img = images[n];
    if (img.height != h || img.width != w) {
      throw Error(ErrorCode::kShapeMismatch, "encoder input",
                  "image " + std::to_string(n) + " is " + std::to_string(img.height) + "x" +
                      std::to_string(img.width) + ", encoder expects " + std::to_string(h) + "x" +
                      std::to_string(w));
    }
    std::copy(img.pixels.begin(), img.pixels.end(), t.data.begin() + n * h * w);
  }
  return t;
}

template <typename T>
Var<T> encode(Tape<T>& tape, Var<T> frames, EncoderParams<T>& p, Mode mode) {
  const EncoderConfig& c = p.config;
  const Shape& fs = frames.shape();
  if (fs.size() != 4 || fs[1] != 1 || fs[2] != c.input_height || fs[3] != c.input_width) {
    throw Error(ErrorCode::kShapeMismatch, "encoder input",
                "expected [N,1," + std::to_string(c.input_height) + "," + std::to_string(c.input_width) +
                    "], got " + shape_str(fs));
  }
  const std::size_t batch = fs[0];
  if (batch == 0) throw Error(ErrorCode::kInvalidArgument, "encoder input", "empty batch");
  if (mode == Mode::kTrain && batch < 2) {
    throw Error(ErrorCode::kInvalidArgument, "encoder input",
                "train mode needs a batch of at least 2 for batch statistics");
  }
  const BatchNormOptions bn_opt{mode == Mode::kTrain, c.bn_eps, c.bn_momentum};
  const Var<T> none;

  auto bn = [&](Var<T> x, const std::string& name) {
    BatchNormStats<T> stats{&p.buffer(name + ".running_mean"), &p.buffer(name + ".running_var")};
    return batch_norm(x, tape.parameter(p.param(name + ".gamma")), tape.parameter(p.param(name + ".beta")),
                      stats, bn_opt);
  };
  auto conv = [&](Var<T> x, const std::string& name, std::size_t stride, std::size_t pad) {
    return conv2d(x, tape.parameter(p.param(name)), none, Conv2dOptions{stride, pad});
  };

  Var<T> x;
  {
    typename Tape<T>::Scope scope(tape, "stem");
    x = relu(bn(conv(frames, "stem.conv.weight", c.stem_stride, 1), "stem.bn"));
  }
  std::size_t in = c.conv_stages.front().channels;
  for (std::size_t s = 0; s < c.conv_stages.size(); ++s) {
    const ConvStage& st = c.conv_stages[s];
    for (std::size_t b = 0; b < st.blocks; ++b) {
      const std::string pre = block_prefix(s, b);
      typename Tape<T>::Scope scope(tape, pre);
      const std::size_t stride = b == 0 ? st.stride : 1;
      Var<T> y = relu(bn(conv(x, pre + ".conv1.weight", stride, 1), pre + ".bn1"));
      y = bn(conv(y, pre + ".conv2.weight", 1, 1), pre + ".bn2");
      Var<T> shortcut = x;
      if (stride != 1 || in != st.channels) {
        shortcut = bn(conv(x, pre + ".shortcut.weight", stride, 0), pre + ".shortcut_bn");
      }
      x = relu(add(y, shortcut));
      in = st.channels;
    }
  }
  x = reshape(x, Shape{batch, c.flatten_dim()});
  for (std::size_t l = 0; l < c.mlp_layers; ++l) {
    const std::string pre = "mlp." + std::to_string(l);
    typename Tape<T>::Scope scope(tape, pre);
    x = linear(x, tape.parameter(p.param(pre + ".weight")), tape.parameter(p.param(pre + ".bias")));
    if (l + 1 == c.mlp_layers) break;
    if (c.mlp_order == MlpOrder::kLinearNormRelu) {
      x = relu(bn(x, pre + ".bn"));
    } else {
      x = bn(relu(x), pre + ".bn");
    }
  }
  return x;
}

std::vector<std::vector<float>> embed_images(EncoderParams<float>& params, std::span<const Image> images,
                                             std::size_t chunk) {
  std::vector<std::vector<float>> out;
  out.reserve(images.size());
  const std::size_t dim = params.config.embedding_dim;
  chunk = std::max<std::size_t>(chunk, 1);
  for (std::size_t start = 0; start < images.size(); start += chunk) {
    const std::size_t count = std::min(chunk, images.size() - start);
    Tape<float> tape(false);
    Var<float> x = tape.constant(images_to_tensor<float>(images.subspan(start, count), params.config), "frames");
    auto z = encode(tape, x, params, Mode::kInfer).value();
    for (std::size_t i = 0; i < count; ++i) out.emplace_back(z.begin() + i * dim, z.begin() + (i + 1) * dim);
  }
  return out;
}

template <typename T>
std::vector<Parameter<T>*> Model<T>::trainable() {
  std::vector<Parameter<T>*> out;
  for (auto& p : encoder.params) out.push_back(&p);
  out.push_back(&dustbin);
  return out;
}

template <typename T>
Model<T> init_model(const EncoderConfig& config, std::uint64_t seed) {
  Model<T> m;
  m.encoder = init_params<T>(config, seed);
  return m;
}

template struct EncoderParams<float>;
template struct EncoderParams<double>;
template struct Model<float>;
template struct Model<double>;
template EncoderParams<float> init_params<float>(const EncoderConfig&, std::uint64_t);
template EncoderParams<double> init_params<double>(const EncoderConfig&, std::uint64_t);
template EncoderParams<float> cast_params<float>(const EncoderParams<float>&);
template EncoderParams<double> cast_params<double>(const EncoderParams<float>&);
template Tensor<float> images_to_tensor<float>(std::span<const Image>, const EncoderConfig&);
template Tensor<double> images_to_tensor<double>(std::span<const Image>, const EncoderConfig&);
template Var<float> encode<float>(Tape<float>&, Var<float>, EncoderParams<float>&, Mode);
template Var<double> encode<double>(Tape<double>&, Var<double>, EncoderParams<double>&, Mode);
template Model<float> init_model<float>(const EncoderConfig&, std::uint64_t);
template Model<double> init_model<double>(const EncoderConfig&, std::uint64_t);

}  // namespace sweepret
