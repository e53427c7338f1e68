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
#include <filesystem>
#include <vector>

namespace sweepret {

/// Single-channel image, row-major, intensities nominally in [0, 1].
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(std::size_t h, std::size_t w, float fill = 0.0f) : height(h), width(w), pixels(h * w, fill) {}

  float& at(std::size_t y, std::size_t x) { return pixels[y * width + x]; }
  float at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }
  std::size_t size() const { return pixels.size(); }

  bool operator==(const Image&) const = default;
};

/// Bilinear sample at continuous pixel coordinates; samples outside the
/// image read as zero.
float sample_bilinear(const Image& image, double y, double x);

/// Bilinear resize using pixel-center alignment. Same-size input is returned
/// unchanged.
Image resize_bilinear(const Image& image, std::size_t height, std::size_t width);

/// Quantizes to 8 bits the way write_pgm stores the image.
Image quantize_u8(const Image& image);

/// Binary PGM (P5, maxval 255). Values are clamped to [0,1] and rounded.
void write_pgm(const std::filesystem::path& path, const Image& image);
/// Reads a P5 file with maxval 255; pixel = byte / 255.
Image read_pgm(const std::filesystem::path& path);

}  // namespace sweepret
