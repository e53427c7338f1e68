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
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "fixtures.hpp"
#include "sweepret/checkpoint.hpp"
#include "sweepret/error.hpp"
#include "sweepret/retrieval.hpp"

using namespace sweepret;
using testsupport::TempDir;

namespace {

EncoderConfig small_config() {
  EncoderConfig c;
  c.input_height = 16;
  c.input_width = 16;
  c.conv_stages = {{4, 1, 2}, {8, 1, 2}};
  c.embedding_dim = 6;
  c.mlp_layers = 2;
  c.mlp_width = 8;
  return c;
}

EmbeddingIndex hand_index(std::vector<std::vector<float>> embs, float alpha = 0.0f) {
  EmbeddingIndex idx;
  idx.sweep_id = "hand";
  idx.embedding_dim = static_cast<std::uint32_t>(embs.front().size());
  idx.alpha = alpha;
  for (std::size_t i = 0; i < embs.size(); ++i) {
    IndexEntry e;
    e.frame_index = static_cast<std::uint32_t>(i);
    e.position = {static_cast<float>(i), 0.0f, 1.0f};
    e.embedding = std::move(embs[i]);
    idx.entries.push_back(std::move(e));
  }
  return idx;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("index construction") {
  Model<float> model = init_model<float>(small_config(), 3);
  model.dustbin.value[0] = 0.125f;
  const Sweep s = testsupport::synthetic_sweep(7, 16, 16, 2);
  const EmbeddingIndex idx = build_index(s, model);
  CHECK(idx.entries.size() == s.size());
  CHECK(idx.sweep_id == s.id);
  CHECK(idx.embedding_dim == 6);
  CHECK(idx.alpha == 0.125f);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(idx.entries[i].frame_index == i);
    CHECK(idx.entries[i].position[0] == static_cast<float>(s.frames[i].pose.position[0]));
  }
  CHECK(build_index(s, model) == idx);

  TempDir dir("index");
  save_checkpoint(dir / "m.swmc", model, AdamState<float>(model.trainable(), AdamOptions{}), 1);
  CHECK(build_index(s, dir / "m.swmc") == idx);

  // Frames of another size are resized to the encoder input.
  const Sweep big = testsupport::synthetic_sweep(3, 20, 24, 5);
  CHECK(build_index(big, model).entries.size() == 3);
  CHECK(prepare_image(big.frames[0].image, model.encoder.config).height == 16);
}

TEST_CASE("matching rule") {
  const auto idx = hand_index({{1, 0}, {0, 1}, {0, 1}, {0.5f, 0.5f}}, 0.25f);
  const std::vector<float> q{0.0f, 2.0f};
  const auto r = match_embedding(idx, q);
  CHECK(r.matched);
  CHECK(r.frame_index == 1);  // tie with frame 2 goes to the lower index
  CHECK(r.score == 2.0);
  CHECK(r.runner_up_score == 2.0);
  CHECK(r.pose.position[0] == 1.0);

  const std::vector<float> weak{0.1f, 0.1f};
  const auto rej = match_embedding(idx, weak);
  CHECK(!rej.matched);
  CHECK(rej.score < 0.25);
  CHECK(match_embedding(idx, weak, -1.0).matched);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(!match_embedding(idx, q, inf).matched);
  CHECK(match_embedding(idx, std::vector<float>{-5.0f, -5.0f}, -inf).matched);

  // A score exactly at alpha is accepted.
  CHECK(match_embedding(idx, std::vector<float>{0.25f, 0.0f}).matched);

  CHECK_THROWS_AS(match_embedding(idx, std::vector<float>{1.0f}), Error);
  EmbeddingIndex empty = idx;
  empty.entries.clear();
  CHECK_THROWS_AS(match_embedding(empty, q), Error);
}

TEST_CASE("argmax is scale invariant and rejections are monotone in alpha") {
  std::mt19937_64 rng(4);
  std::normal_distribution<float> n(0.0f, 1.0f);
  std::vector<std::vector<float>> embs(30, std::vector<float>(5));
  for (auto& e : embs)
    for (float& v : e) v = n(rng);
  std::vector<std::vector<float>> queries(40, std::vector<float>(5));
  for (auto& e : queries)
    for (float& v : e) v = n(rng);
  const auto idx = hand_index(embs);
  auto scaled_embs = embs;
  for (auto& e : scaled_embs)
    for (float& v : e) v *= 4.0f;
  const auto scaled = hand_index(scaled_embs);
  const double inf = std::numeric_limits<double>::infinity();
  for (auto q : queries) {
    const auto a = match_embedding(idx, q, -inf);
    for (float& v : q) v *= 4.0f;
    CHECK(match_embedding(scaled, q, -inf).frame_index == a.frame_index);
  }
  std::size_t prev = 0;
  for (double alpha = -4.0; alpha <= 4.0; alpha += 0.25) {
    std::size_t rejected = 0;
    for (const auto& q : queries) rejected += !match_embedding(idx, q, alpha).matched;
    CHECK(rejected >= prev);
    prev = rejected;
  }
  for (const auto& q : queries) CHECK(!match_embedding(idx, q, inf).matched);
}

TEST_CASE("query paths agree") {
  Model<float> model = init_model<float>(small_config(), 8);
  model.dustbin.value[0] = -1e9f;
  const Sweep s = testsupport::synthetic_sweep(6, 16, 16, 3);
  const EmbeddingIndex idx = build_index(s, model);
  std::vector<Image> imgs{s.frames[4].image, testsupport::random_image(16, 16, 77), s.frames[1].image};
  const auto batch = batch_query(idx, model, imgs);
  REQUIRE(batch.size() == 3);
  for (std::size_t i = 0; i < imgs.size(); ++i) {
    const auto one = query(idx, model, imgs[i]);
    CHECK(one.frame_index == batch[i].frame_index);
    CHECK(one.score == batch[i].score);
    const auto single = batch_query(idx, model, std::span<const Image>(&imgs[i], 1));
    CHECK(single[0].score == one.score);
  }

  TempDir dir("query");
  save_checkpoint(dir / "m.swmc", model, AdamState<float>(model.trainable(), AdamOptions{}), 1);
  CHECK(query(idx, imgs[0], dir / "m.swmc").frame_index == batch[0].frame_index);

  EncoderConfig other = small_config();
  other.embedding_dim = 7;
  CHECK_THROWS_AS(check_compatible(idx, other), Error);
}

TEST_CASE("result JSON") {
  RetrievalResult r;
  r.matched = true;
  r.frame_index = 3;
  r.pose.position = {1, 2, 3};
  r.score = 0.5;
  r.runner_up_score = 0.25;
  auto j = to_json(r);
  CHECK(j["status"] == "matched");
  CHECK(j["frame_index"] == 3);
  r.matched = false;
  r.runner_up_score = -std::numeric_limits<double>::infinity();
  j = to_json(r);
  CHECK(j["status"] == "rejected");
  CHECK(j["runner_up_score"].is_null());
}

TEST_CASE("index file layout and round trip") {
  TempDir dir("swix");
  const auto idx = hand_index({{1, 2, 3}, {4, 5, 6}}, -0.5f);
  save_index(dir / "a.swix", idx);
  CHECK(load_index(dir / "a.swix") == idx);
  const std::string b = slurp(dir / "a.swix");
  // magic, version, id length + "hand", dim, alpha, count, 2 x (index + 3 pose + 3 emb) x 4 bytes
  CHECK(b.size() == 4 + 4 + 4 + 4 + 4 + 4 + 4 + 2 * (4 + 12 + 12));
  CHECK(b.substr(0, 4) == "SWIX");
  std::uint32_t u;
  std::memcpy(&u, b.data() + 4, 4);
  CHECK(u == kIndexVersion);
  std::memcpy(&u, b.data() + 8, 4);
  CHECK(u == 4);
  CHECK(b.substr(12, 4) == "hand");
  float f;
  std::memcpy(&f, b.data() + 20, 4);
  CHECK(f == -0.5f);

  auto bad = [&](const std::string& bytes) {
    std::ofstream(dir / "b.swix", std::ios::binary | std::ios::trunc) << bytes;
    CHECK_THROWS_AS(load_index(dir / "b.swix"), Error);
  };
  bad(b.substr(0, b.size() - 2));
  bad(b + "x");
  bad("SWIY" + b.substr(4));
  std::string nan = b;
  const float q = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(nan.data() + b.size() - 4, &q, 4);
  bad(nan);
  auto unordered = idx;
  std::swap(unordered.entries[0].frame_index, unordered.entries[1].frame_index);
  save_index(dir / "c.swix", unordered);
  CHECK_THROWS_AS(load_index(dir / "c.swix"), Error);
}
