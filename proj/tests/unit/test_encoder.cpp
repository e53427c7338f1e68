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
#include <numeric>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "sweepret/encoder.hpp"
#include "sweepret/error.hpp"

using namespace sweepret;

namespace {

EncoderConfig tiny_config() {
  EncoderConfig c;
  c.input_height = 16;
  c.input_width = 16;
  c.stem_stride = 1;
  c.conv_stages = {{4, 1, 2}, {6, 1, 2}};
  c.embedding_dim = 8;
  c.mlp_layers = 2;
  c.mlp_width = 10;
  return c;
}

std::vector<Image> images(std::size_t n, std::size_t h, std::size_t w, std::uint64_t seed) {
  std::vector<Image> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(testsupport::random_image(h, w, seed + i));
  return out;
}

}  // namespace

TEST_CASE("parameter shapes follow the config") {
  const EncoderConfig c = tiny_config();
  const auto p = init_params<float>(c, 3);
  const auto layout = parameter_layout(c);
  std::size_t pi = 0, bi = 0;
  for (const ParamSpec& spec : layout) {
    if (spec.is_buffer) {
      REQUIRE(bi < p.buffers.size());
      CHECK(p.buffers[bi].name == spec.name);
      CHECK(p.buffers[bi].data.size() == numel(spec.shape));
      ++bi;
    } else {
      REQUIRE(pi < p.params.size());
      CHECK(p.params[pi].name == spec.name);
      CHECK(p.params[pi].value.shape == spec.shape);
      ++pi;
    }
  }
  CHECK(pi == p.params.size());
  CHECK(bi == p.buffers.size());
  // 16 -> stem 16 -> 8 -> 4; flatten 6 * 4 * 4
  CHECK(c.feature_height() == 4);
  CHECK(c.flatten_dim() == 96);
  CHECK(p.param("mlp.0.weight").value.shape == Shape{10, 96});
  CHECK(p.param("mlp.1.weight").value.shape == Shape{8, 10});
  CHECK(p.parameter_count() == init_params<float>(c, 9).parameter_count());
}

TEST_CASE("default config produces 512-dimensional embeddings") {
  EncoderConfig c;
  auto p = init_params<float>(c, 0);
  const auto emb = embed_images(p, images(2, 128, 128, 5));
  REQUIRE(emb.size() == 2);
  CHECK(emb[0].size() == 512);
  MESSAGE("default parameter count: " << p.parameter_count());

  // He-normal weights are zero-mean: check a 512x512 layer within 3 standard errors.
  const auto& w = p.param("mlp.1.weight").value;
  REQUIRE(w.shape == Shape{512, 512});
  const double mean = std::accumulate(w.data.begin(), w.data.end(), 0.0) / static_cast<double>(w.size());
  double var = 0.0;
  for (float v : w.data) var += (v - mean) * (v - mean);
  var /= static_cast<double>(w.size() - 1);
  CHECK(std::abs(mean) < 3.0 * std::sqrt(var / static_cast<double>(w.size())));
  CHECK(var == doctest::Approx(2.0 / 512.0).epsilon(0.02));
}

TEST_CASE("initialization is seeded") {
  const EncoderConfig c = tiny_config();
  const auto a = init_params<float>(c, 1), b = init_params<float>(c, 1), d = init_params<float>(c, 2);
  bool all_same = true, any_diff = false;
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    all_same = all_same && a.params[i].value == b.params[i].value;
    any_diff = any_diff || a.params[i].value != d.params[i].value;
  }
  CHECK(all_same);
  CHECK(any_diff);
  CHECK(a.param("stem.bn.gamma").value.data == std::vector<float>(4, 1.0f));
  CHECK(a.param("stem.bn.beta").value.data == std::vector<float>(4, 0.0f));
}

TEST_CASE("inference embeddings are per-frame and batch independent") {
  auto p = init_params<float>(tiny_config(), 4);
  auto imgs = images(5, 16, 16, 10);
  imgs.push_back(imgs[2]);
  const auto batch = embed_images(p, imgs);
  CHECK(batch[2] == batch[5]);
  for (std::size_t i = 0; i < imgs.size(); ++i) {
    const auto alone = embed_images(p, std::span<const Image>(&imgs[i], 1));
    for (std::size_t k = 0; k < batch[i].size(); ++k) CHECK(std::abs(alone[0][k] - batch[i][k]) <= 1e-6f);
  }
  const auto chunked = embed_images(p, imgs, 2);
  for (std::size_t i = 0; i < imgs.size(); ++i) {
    for (std::size_t k = 0; k < batch[i].size(); ++k) CHECK(std::abs(chunked[i][k] - batch[i][k]) <= 1e-6f);
  }
}

TEST_CASE("embeddings are not normalized") {
  auto p = init_params<float>(tiny_config(), 5);
  const auto emb = embed_images(p, images(16, 16, 16, 40));
  std::vector<double> norms;
  for (const auto& e : emb) {
    double s = 0.0;
    for (float v : e) {
      CHECK(std::isfinite(v));
      s += double(v) * v;
    }
    norms.push_back(std::sqrt(s));
  }
  const double mean = std::accumulate(norms.begin(), norms.end(), 0.0) / norms.size();
  double var = 0.0;
  for (double n : norms) var += (n - mean) * (n - mean);
  CHECK(var > 0.0);
}

TEST_CASE("encoder input errors") {
  auto p = init_params<float>(tiny_config(), 1);
  CHECK_THROWS_AS(embed_images(p, images(2, 16, 15, 0)), Error);
  Tape<float> tape;
  auto one = tape.constant(images_to_tensor<float>(images(1, 16, 16, 0), p.config));
  CHECK_THROWS_AS(encode(tape, one, p, Mode::kTrain), Error);
  EncoderConfig bad = tiny_config();
  bad.mlp_layers = 0;
  CHECK_THROWS_AS(validate(bad), Error);
}

TEST_CASE("config JSON round trip") {
  EncoderConfig c = tiny_config();
  c.mlp_order = MlpOrder::kLinearReluNorm;
  CHECK(encoder_config_from_json(to_json(c)) == c);
}

TEST_CASE("full encoder gradient matches finite differences") {
  for (MlpOrder order : {MlpOrder::kLinearNormRelu, MlpOrder::kLinearReluNorm}) {
    EncoderConfig c = tiny_config();
    c.mlp_order = order;
    auto params = init_params<double>(c, 21);
    std::mt19937_64 rng(8);
    // Perturb the batch-norm affine terms away from their trivial init.
    for (auto& p : params.params) {
      if (p.name.find("bn") != std::string::npos || p.name.find("bias") != std::string::npos) {
        for (double& v : p.value.data) v += std::uniform_real_distribution<double>(-0.2, 0.2)(rng);
      }
    }
    const auto imgs = images(3, 16, 16, 90);
    const Tensor<double> x = images_to_tensor<double>(imgs, c);
    std::vector<Parameter<double>*> ps;
    for (auto& p : params.params) ps.push_back(&p);
    for (Mode mode : {Mode::kTrain, Mode::kInfer}) {
      auto f = [&](Tape<double>& tape) {
        return testing::project(encode(tape, tape.constant(x), params, mode), 4);
      };
      const auto r = testing::check_parameters(ps, f, 12, 1e-5, 3);
      CAPTURE(r.checked);
      CHECK(r.max_rel_error < 1e-4);
    }
    const auto in = testing::check_inputs({x}, [&](Tape<double>& tape, const auto& v) {
      return testing::project(encode(tape, v[0], params, Mode::kTrain), 6);
    });
    CHECK(in.max_rel_error < 1e-4);
  }
}
