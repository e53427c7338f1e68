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

#include <fstream>
#include <iterator>

#include "fixtures.hpp"
#include "sweepret/checkpoint.hpp"
#include "sweepret/error.hpp"

using namespace sweepret;
using testsupport::TempDir;

namespace {

EncoderConfig small_config() {
  EncoderConfig c;
  c.input_height = 16;
  c.input_width = 16;
  c.conv_stages = {{4, 1, 2}, {8, 1, 2}};
  c.embedding_dim = 8;
  c.mlp_layers = 2;
  c.mlp_width = 8;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary | std::ios::trunc) << bytes;
}

ErrorCode load_error(const std::filesystem::path& p) {
  try {
    load_checkpoint(p);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("checkpoint unexpectedly loaded");
  return ErrorCode::kInvalidArgument;
}

struct Saved {
  Model<float> model;
  AdamState<float> adam;
};

Saved trained_model() {
  Saved s{init_model<float>(small_config(), 5), {}};
  s.model.dustbin.value[0] = -0.375f;
  auto ps = s.model.trainable();
  s.adam = AdamState<float>(ps, AdamOptions{2e-3, 0.9, 0.999, 1e-8});
  for (auto* p : ps) {
    for (std::size_t i = 0; i < p->grad.size(); ++i) p->grad[i] = 0.01f * static_cast<float>(i % 7) - 0.02f;
  }
  adam_step<float>(ps, s.adam);
  s.model.encoder.buffer("stem.bn.running_mean")[1] = 0.25f;
  return s;
}

}  // namespace

TEST_CASE("checkpoint round trip is exact") {
  TempDir dir("ckpt");
  Saved s = trained_model();
  const auto path = dir / "m.swmc";
  save_checkpoint(path, s.model, s.adam, 17, {{"note", "x"}});
  Checkpoint c = load_checkpoint(path);
  CHECK(c.epoch == 17);
  CHECK(c.provenance.at("note") == "x");
  CHECK(c.model.encoder.config == s.model.encoder.config);
  CHECK(c.model.dustbin.value == s.model.dustbin.value);
  REQUIRE(c.model.encoder.params.size() == s.model.encoder.params.size());
  for (std::size_t i = 0; i < s.model.encoder.params.size(); ++i) {
    CHECK(c.model.encoder.params[i].value == s.model.encoder.params[i].value);
  }
  CHECK(c.model.encoder.buffers == s.model.encoder.buffers);
  CHECK(c.optimizer.step_count == 1);
  CHECK(c.optimizer.learning_rate == 2e-3);
  REQUIRE(c.optimizer.first_moment.size() == s.adam.first_moment.size());
  for (std::size_t i = 0; i < s.adam.first_moment.size(); ++i) {
    CHECK(c.optimizer.first_moment[i] == s.adam.first_moment[i]);
    CHECK(c.optimizer.second_moment[i] == s.adam.second_moment[i]);
  }

  const auto imgs = std::vector<Image>{testsupport::random_image(16, 16, 1), testsupport::random_image(16, 16, 2)};
  CHECK(embed_images(c.model.encoder, imgs) == embed_images(s.model.encoder, imgs));

  // Saving the loaded checkpoint reproduces the file byte for byte.
  save_checkpoint(dir / "again.swmc", c.model, c.optimizer, c.epoch, c.provenance);
  CHECK(slurp(path) == slurp(dir / "again.swmc"));
}

TEST_CASE("damaged checkpoints are rejected") {
  TempDir dir("ckpt_bad");
  Saved s = trained_model();
  const auto path = dir / "m.swmc";
  save_checkpoint(path, s.model, s.adam, 3);
  const std::string bytes = slurp(path);
  const auto bad = dir / "bad.swmc";

  SUBCASE("truncated") {
    for (std::size_t cut : {std::size_t{2}, std::size_t{9}, bytes.size() / 2, bytes.size() - 1}) {
      spit(bad, bytes.substr(0, cut));
      CHECK(load_error(bad) == ErrorCode::kFormat);
    }
  }
  SUBCASE("magic") {
    std::string b = bytes;
    b[0] = 'X';
    spit(bad, b);
    CHECK(load_error(bad) == ErrorCode::kFormat);
  }
  SUBCASE("version") {
    std::string b = bytes;
    b[4] = 9;
    spit(bad, b);
    CHECK(load_error(bad) == ErrorCode::kFormat);
  }
  SUBCASE("trailing bytes") {
    spit(bad, bytes + "junk");
    CHECK(load_error(bad) == ErrorCode::kFormat);
  }
  SUBCASE("config disagrees with the stored tensors") {
    std::string b = bytes;
    const auto at = b.find("\"mlp_width\":8");
    REQUIRE(at != std::string::npos);
    b[at + 12] = '9';
    spit(bad, b);
    CHECK(load_error(bad) == ErrorCode::kShapeMismatch);
  }
  SUBCASE("missing file") { CHECK(load_error(dir / "nope.swmc") == ErrorCode::kIo); }
}
