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
#include <json.hpp>
#include <random>

#include "fixtures.hpp"
#include "sweepret/error.hpp"
#include "sweepret/sweep.hpp"

using namespace sweepret;
using testsupport::TempDir;

TEST_CASE("sweep round trip is exact") {
  TempDir dir("sweep");
  Sweep s = testsupport::synthetic_sweep(3, 5, 7, 1);
  s.frames[1].pose.position = {12.5, -3.25, 40.0};
  save_sweep(s, dir.path());
  Sweep back = load_sweep(dir.path());
  CHECK(back == s);
  CHECK(back.frames[1].pose.position == std::array<double, 3>{12.5, -3.25, 40.0});
}

TEST_CASE("manifest fields use the documented names") {
  TempDir dir("manifest");
  save_sweep(testsupport::synthetic_sweep(2, 3, 3, 2, "abc"), dir.path());
  std::ifstream in(dir / "manifest.json");
  const auto j = nlohmann::json::parse(in);
  CHECK(j.at("id") == "abc");
  CHECK(j.at("pixel_spacing_mm") == 0.5);
  REQUIRE(j.at("frames").size() == 2);
  const auto& f = j["frames"][1];
  CHECK(f.at("index") == 1);
  CHECK(f.at("file") == "frames/000001.pgm");
  CHECK(f.at("time_s") == 0.25);
  CHECK(f.at("pose_mm").size() == 3);
}

TEST_CASE("a missing frame file is reported by name") {
  TempDir dir("missing");
  save_sweep(testsupport::synthetic_sweep(5, 4, 4, 3), dir.path());
  std::filesystem::remove(dir / "frames/000004.pgm");
  try {
    load_sweep(dir.path());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("000004.pgm") != std::string::npos);
  }
}

TEST_CASE("corrupt manifests and frame files are rejected") {
  TempDir dir("corrupt");
  save_sweep(testsupport::synthetic_sweep(3, 4, 4, 4), dir.path());
  SUBCASE("non-monotonic timestamps") {
    std::ifstream in(dir / "manifest.json");
    auto j = nlohmann::json::parse(in);
    in.close();
    j["frames"][2]["time_s"] = 0.1;
    std::ofstream(dir / "manifest.json") << j.dump();
    CHECK_THROWS_AS(load_sweep(dir.path()), Error);
  }
  SUBCASE("broken JSON") {
    std::ofstream(dir / "manifest.json") << "{\"id\": ";
    CHECK_THROWS_AS(load_sweep(dir.path()), Error);
  }
  SUBCASE("bad PGM header") {
    std::ofstream(dir / "frames/000001.pgm", std::ios::binary) << "P2\n4 4\n255\n";
    CHECK_THROWS_AS(load_sweep(dir.path()), Error);
  }
  SUBCASE("truncated PGM") {
    std::ofstream(dir / "frames/000001.pgm", std::ios::binary) << "P5\n4 4\n255\nabc";
    CHECK_THROWS_AS(load_sweep(dir.path()), Error);
  }
}

TEST_CASE("PGM stores clamped 8-bit values") {
  TempDir dir("pgm");
  Image img(2, 2);
  img.pixels = {-0.5f, 0.0f, 0.5f, 2.0f};
  write_pgm(dir / "a.pgm", img);
  Image back = read_pgm(dir / "a.pgm");
  CHECK(back.height == 2);
  CHECK(back.width == 2);
  CHECK(back.pixels[0] == 0.0f);
  CHECK(back.pixels[1] == 0.0f);
  CHECK(back.pixels[2] == 128.0f / 255.0f);
  CHECK(back.pixels[3] == 1.0f);
  CHECK(back == quantize_u8(img));
}

TEST_CASE("probe distance") {
  CHECK(probe_distance(ProbePose{{1, 2, 3}}, ProbePose{{1, 2, 3}}) == 0.0);
  CHECK(probe_distance(ProbePose{{0, 0, 0}}, ProbePose{{3, 4, 0}}) == 5.0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-100, 100);
  auto pose = [&] { return ProbePose{{u(rng), u(rng), u(rng)}}; };
  for (int i = 0; i < 1000; ++i) {
    const ProbePose a = pose(), b = pose(), c = pose();
    CHECK(probe_distance(a, b) == probe_distance(b, a));
    CHECK(probe_distance(a, b) >= 0.0);
    CHECK(probe_distance(a, c) <= probe_distance(a, b) + probe_distance(b, c) + 1e-9);
  }
}

TEST_CASE("sweep validator") {
  Sweep s = testsupport::synthetic_sweep(4, 3, 3, 9);
  CHECK_NOTHROW(validate_sweep(s));
  SUBCASE("empty") {
    s.frames.clear();
    CHECK_THROWS_AS(validate_sweep(s), Error);
  }
  SUBCASE("index gap") {
    s.frames[2].frame_index = 5;
    CHECK_THROWS_AS(validate_sweep(s), Error);
  }
  SUBCASE("time not increasing") {
    s.frames[3].time_s = s.frames[2].time_s;
    CHECK_THROWS_AS(validate_sweep(s), Error);
  }
  SUBCASE("image size") {
    s.frames[1].image = Image(4, 3);
    CHECK_THROWS_AS(validate_sweep(s), Error);
  }
  SUBCASE("non-finite pose") {
    s.frames[0].pose.position[1] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(validate_sweep(s), Error);
  }
  SUBCASE("pixel spacing") {
    s.pixel_spacing_mm = 0.0;
    CHECK_THROWS_AS(validate_sweep(s), Error);
  }
}

TEST_CASE("sweep sets load in name order") {
  TempDir dir("set");
  save_sweep(testsupport::synthetic_sweep(2, 3, 3, 1, "b"), dir / "b");
  save_sweep(testsupport::synthetic_sweep(2, 3, 3, 2, "a"), dir / "a");
  std::filesystem::create_directories(dir / "not_a_sweep");
  auto set = load_sweep_set(dir.path());
  REQUIRE(set.size() == 2);
  CHECK(set[0].id == "a");
  CHECK(set[1].id == "b");
}
