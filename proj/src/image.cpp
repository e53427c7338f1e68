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

#include "sweepret/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include "sweepret/error.hpp"

namespace sweepret {

float sample_bilinear(const Image& image, double y, double x) {
  const double fy = std::floor(y), fx = std::floor(x);
  const long y0 = static_cast<long>(fy), x0 = static_cast<long>(fx);
  const double wy = y - fy, wx = x - fx;
  auto px = [&](long yy, long xx) -> double {
    if (yy < 0 || xx < 0 || yy >= static_cast<long>(image.height) ||
        xx >= static_cast<long>(image.width)) {
      return 0.0;
    }
    return image.pixels[static_cast<std::size_t>(yy) * image.width + static_cast<std::size_t>(xx)];
  };
  // Exact grid points read the pixel directly so identity maps are lossless.
  if (wy == 0.0 && wx == 0.0) return static_cast<float>(px(y0, x0));
  const double top = px(y0, x0) * (1.0 - wx) + px(y0, x0 + 1) * wx;
  const double bottom = px(y0 + 1, x0) * (1.0 - wx) + px(y0 + 1, x0 + 1) * wx;
  return static_cast<float>(top * (1.0 - wy) + bottom * wy);
}

Image resize_bilinear(const Image& image, std::size_t height, std::size_t width) {
  if (image.height == height && image.width == width) return image;
  if (image.height == 0 || image.width == 0) {
    throw Error(ErrorCode::kInvalidArgument, "resize", "cannot resize an empty image");
  }
  Image out(height, width);
  const double sy = static_cast<double>(image.height) / static_cast<double>(height);
  const double sx = static_cast<double>(image.width) / static_cast<double>(width);
  for (std::size_t y = 0; y < height; ++y) {
    const double src_y = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0,
                                    static_cast<double>(image.height - 1));
    for (std::size_t x = 0; x < width; ++x) {
      const double src_x = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0,
                                      static_cast<double>(image.width - 1));
      out.at(y, x) = sample_bilinear(image, src_y, src_x);
    }
  }
  return out;
}

namespace {

std::uint8_t to_byte(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

}  // namespace

Image quantize_u8(const Image& image) {
  Image out = image;
  for (float& v : out.pixels) v = static_cast<float>(to_byte(v)) / 255.0f;
  return out;
}

void write_pgm(const std::filesystem::path& path, const Image& image) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, path.string(), "cannot open for writing");
  f << "P5\n" << image.width << " " << image.height << "\n255\n";
  std::vector<char> bytes(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) bytes[i] = static_cast<char>(to_byte(image.pixels[i]));
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error(ErrorCode::kIo, path.string(), "write failed");
}

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in) {
  std::string tok;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      std::string dummy;
      std::getline(in, dummy);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(c);
  }
  return tok;
}

}  // namespace

Image read_pgm(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, path.string(), "cannot open for reading");
  if (header_token(f) != "P5") throw Error(ErrorCode::kFormat, path.string(), "not a binary PGM (P5)");
  std::size_t width = 0, height = 0;
  int maxval = 0;
  try {
    width = std::stoul(header_token(f));
    height = std::stoul(header_token(f));
    maxval = std::stoi(header_token(f));
  } catch (const std::exception&) {
    throw Error(ErrorCode::kFormat, path.string(), "corrupt PGM header");
  }
  if (maxval != 255 || width == 0 || height == 0) {
    throw Error(ErrorCode::kFormat, path.string(), "unsupported PGM header (need maxval 255)");
  }
  std::vector<unsigned char> bytes(width * height);
  f.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(f.gcount()) != bytes.size()) {
    throw Error(ErrorCode::kFormat, path.string(), "truncated pixel data");
  }
  Image img(height, width);
  for (std::size_t i = 0; i < bytes.size(); ++i) img.pixels[i] = static_cast<float>(bytes[i]) / 255.0f;
  return img;
}

}  // namespace sweepret
