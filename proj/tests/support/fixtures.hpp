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

#include <filesystem>
#include <random>
#include <string>

#include "sweepret/image.hpp"
#include "sweepret/phantom.hpp"
#include "sweepret/sweep.hpp"

namespace testsupport {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("sweepret_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

// 8-bit-quantized random image, so PGM round trips are exact.
inline sweepret::Image random_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, 255);
  sweepret::Image img(h, w);
  for (float& p : img.pixels) p = static_cast<float>(u(rng)) / 255.0f;
  return img;
}

inline sweepret::Sweep synthetic_sweep(std::size_t frames, std::size_t h, std::size_t w, std::uint64_t seed,
                                       const std::string& id = "synthetic") {
  sweepret::Sweep s;
  s.id = id;
  s.pixel_spacing_mm = 0.5;
  for (std::size_t i = 0; i < frames; ++i) {
    sweepret::SweepFrame f;
    f.image = random_image(h, w, seed * 1000 + i);
    f.frame_index = i;
    f.time_s = 0.25 * static_cast<double>(i);
    f.pose.position = {0.5 * static_cast<double>(i), -3.25, 40.0};
    s.frames.push_back(std::move(f));
  }
  return s;
}

// Small phantom: 1 mm voxels, 24x24 frames, fits 120 frames along y.
inline sweepret::PhantomConfig small_phantom() {
  sweepret::PhantomConfig c;
  c.volume_dims_voxels = {48, 140, 32};
  c.voxel_mm = 1.0;
  c.inclusion_count = 8;
  c.vessel_count = 1;
  c.sweep_length_frames = 40;
  c.image_height = 24;
  c.image_width = 24;
  c.pixel_spacing_mm = 0.75;
  c.seed = 11;
  return c;
}

// Complete INI text for a run that trains in about a second.
inline std::string tiny_config_text() {
  return R"(
[data]
train_dir = data/train
val_dir = data/val
test_dir = data/test

[phantom]
volume_dims_voxels = 48, 140, 32
voxel_mm = 1.0
inclusion_count = 8
vessel_count = 1
sweep_length_frames = 40
image_height = 24
image_width = 24
pixel_spacing_mm = 0.75
seed = 11
train_sweeps = 2
val_sweeps = 1
test_sweeps = 1

[encoder]
input_height = 24
input_width = 24
stem_stride = 1
stage_channels = 4, 8
stage_blocks = 1, 1
stage_strides = 2, 2
embedding_dim = 8
mlp_layers = 2
mlp_width = 16

[loss]
mode = full

[sampler]
batch_size = 8

[train]
max_epochs = 3
desk_max_epochs = 2
seed = 3

[eval]
queries_per_sweep = 6
half_width = 5
)";
}

}  // namespace testsupport
