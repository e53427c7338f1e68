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

#include "fixtures.hpp"
#include "sweepret/augment.hpp"
#include "sweepret/baselines.hpp"
#include "sweepret/error.hpp"

using namespace sweepret;

namespace {

Augment2DParams only_brightness(double delta) {
  Augment2DParams p = Augment2DParams::identity();
  p.brightness_delta = {delta, delta};
  return p;
}

}  // namespace

TEST_CASE("identity augmentation returns the input") {
  const Image img = testsupport::random_image(17, 23, 1);
  Rng rng(3);
  CHECK(augment_2d(img, Augment2DParams::identity(), rng) == img);
}

TEST_CASE("brightness shift on a constant image") {
  Image img(8, 8, 0.5f);
  Rng rng(1);
  const Image out = augment_2d(img, only_brightness(0.1), rng);
  for (float p : out.pixels) CHECK(p == doctest::Approx(0.6).epsilon(1e-6));
}

TEST_CASE("augmentation is seeded, shape-preserving and clamped") {
  const Image img = testsupport::random_image(20, 16, 2);
  Augment2DParams wide;
  wide.brightness_delta = {-0.8, 0.8};
  wide.contrast_factor = {0.2, 3.0};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng a(seed), b(seed);
    const Image x = augment_2d(img, wide, a);
    CHECK(x == augment_2d(img, wide, b));
    CHECK(x.height == img.height);
    CHECK(x.width == img.width);
    for (float p : x.pixels) {
      CHECK(p >= 0.0f);
      CHECK(p <= 1.0f);
    }
  }
  Rng a(1), b(2);
  CHECK(augment_2d(img, Augment2DParams{}, a) != augment_2d(img, Augment2DParams{}, b));
}

TEST_CASE("augmentation parameter validation") {
  Augment2DParams p;
  p.scale = {1.1, 0.9};
  CHECK_THROWS_AS(validate(p), Error);
  p = Augment2DParams{};
  p.crop_scale = {0.0, 1.0};
  CHECK_THROWS_AS(validate(p), Error);
  CHECK_NOTHROW(validate(Augment2DParams{}));
}

TEST_CASE("mini-volume construction") {
  const Sweep s = testsupport::synthetic_sweep(80, 6, 5, 3);
  SUBCASE("interior") {
    const MiniVolume v = build_mini_volume(s, 40, 30);
    CHECK(v.depth() == 61);
    CHECK(v.center_index == 30);
    CHECK(v.slices[30] == s.frames[40].image);
    CHECK(v.slices[0] == s.frames[10].image);
    CHECK(v.slices[60] == s.frames[70].image);
    CHECK(v.source_pose == s.frames[40].pose);
  }
  SUBCASE("edges replicate") {
    const MiniVolume v = build_mini_volume(s, 0, 30);
    for (std::size_t k = 0; k <= 30; ++k) CHECK(v.slices[k] == s.frames[0].image);
    CHECK(v.slices[31] == s.frames[1].image);
    const MiniVolume e = build_mini_volume(s, 79, 30);
    for (std::size_t k = 30; k < 61; ++k) CHECK(e.slices[k] == s.frames[79].image);
  }
  SUBCASE("half width zero") {
    const MiniVolume v = build_mini_volume(s, 5, 0);
    CHECK(v.depth() == 1);
    CHECK(v.slices[0] == s.frames[5].image);
  }
  CHECK_THROWS_AS(build_mini_volume(s, 80, 30), Error);
}

TEST_CASE("identity 3D transform returns the centre slice exactly") {
  const Sweep s = testsupport::synthetic_sweep(40, 9, 11, 4);
  const MiniVolume v = build_mini_volume(s, 20, 10);
  CHECK(affine_3d_query(v, Affine3D{}) == s.frames[20].image);
}

TEST_CASE("180 degree rotation about the slice normal flips the frame") {
  const Sweep s = testsupport::synthetic_sweep(21, 9, 11, 5);
  const MiniVolume v = build_mini_volume(s, 10, 10);
  Affine3D t;
  t.rotation_deg = {0.0, 0.0, 180.0};
  const Image out = affine_3d_query(v, t);
  const Image& src = s.frames[10].image;
  for (std::size_t y = 0; y < src.height; ++y) {
    for (std::size_t x = 0; x < src.width; ++x) {
      CHECK(std::abs(out.at(y, x) - src.at(src.height - 1 - y, src.width - 1 - x)) < 1e-6);
    }
  }
}

TEST_CASE("a small out-of-plane tilt stays closest to the centre slice") {
  const Sweep s = generate_phantom_sweep(testsupport::small_phantom(), 0);
  const std::size_t hw = 10;
  const MiniVolume v = build_mini_volume(s, 20, hw);
  for (int axis = 0; axis < 2; ++axis) {
    Affine3D t;
    t.rotation_deg[axis] = 5.0;
    const Image out = affine_3d_query(v, t);
    CHECK(out != v.slices[hw]);
    const double centre = ncc(out, v.slices[hw]);
    CHECK(centre > ncc(out, v.slices[0]));
    CHECK(centre > ncc(out, v.slices[2 * hw]));
  }
}

TEST_CASE("3D affine sampling respects its ranges and seed") {
  Affine3DRanges r;
  Rng a(9), b(9);
  for (int i = 0; i < 200; ++i) {
    const Affine3D t = sample_affine_3d(r, a);
    const Affine3D u = sample_affine_3d(r, b);
    CHECK(t.rotation_deg == u.rotation_deg);
    CHECK(t.scale == u.scale);
    for (int k = 0; k < 3; ++k) {
      CHECK(std::abs(t.rotation_deg[k]) <= 10.0);
      CHECK(std::abs(t.translation_frac[k]) <= 0.05);
    }
    CHECK(t.scale >= 0.95);
    CHECK(t.scale <= 1.05);
  }
}
