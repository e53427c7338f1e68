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

#include "sweepret/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sweepret/error.hpp"

namespace sweepret {

namespace {

double draw(Rng& rng, const Range& r) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double t = u(rng);
  return r.lo == r.hi ? r.lo : r.lo + (r.hi - r.lo) * t;
}

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

}  // namespace

Augment2DParams Augment2DParams::identity() {
  Augment2DParams p;
  p.rotation_deg = {0, 0};
  p.translate_frac = {0, 0};
  p.scale = {1, 1};
  p.crop_scale = {1, 1};
  p.brightness_delta = {0, 0};
  p.contrast_factor = {1, 1};
  return p;
}

void validate(const Augment2DParams& p) {
  const std::pair<const char*, Range> ranges[] = {
      {"rotation_deg", p.rotation_deg},   {"translate_frac", p.translate_frac},
      {"scale", p.scale},                 {"crop_scale", p.crop_scale},
      {"brightness_delta", p.brightness_delta}, {"contrast_factor", p.contrast_factor}};
  for (const auto& [name, r] : ranges) {
    if (r.lo > r.hi) {
      throw Error(ErrorCode::kInvalidArgument, "augment", std::string(name) + " has lo > hi");
    }
  }
  if (p.scale.lo <= 0 || p.crop_scale.lo <= 0 || p.crop_scale.hi > 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "augment",
                "scale must be positive and crop_scale within (0, 1]");
  }
}

Image augment_2d(const Image& frame, const Augment2DParams& params, Rng& rng) {
  const double angle = deg2rad(draw(rng, params.rotation_deg));
  const double ty = draw(rng, params.translate_frac) * static_cast<double>(frame.height);
  const double tx = draw(rng, params.translate_frac) * static_cast<double>(frame.width);
  const double s = draw(rng, params.scale);
  const double side = std::sqrt(draw(rng, params.crop_scale));
  const double oy_t = draw(rng, Range{0.0, 1.0});
  const double ox_t = draw(rng, Range{0.0, 1.0});
  const double brightness = draw(rng, params.brightness_delta);
  const double contrast = draw(rng, params.contrast_factor);

  const double h = static_cast<double>(frame.height), w = static_cast<double>(frame.width);
  const double crop_h = h * side, crop_w = w * side;
  const double crop_y0 = (h - crop_h) * oy_t, crop_x0 = (w - crop_w) * ox_t;
  const double ry = crop_h / h, rx = crop_w / w;
  const double cy = 0.5 * (h - 1.0), cx = 0.5 * (w - 1.0);
  const double cos_a = std::cos(angle), sin_a = std::sin(angle);
  const float offset = static_cast<float>(brightness + (1.0 - contrast) * 0.5);
  const float gain = static_cast<float>(contrast);

  Image out(frame.height, frame.width);
  for (std::size_t y = 0; y < frame.height; ++y) {
    for (std::size_t x = 0; x < frame.width; ++x) {
      // Output pixel -> crop window -> inverse affine about the image centre.
      const double py = crop_y0 + (static_cast<double>(y) + 0.5) * ry - 0.5;
      const double px = crop_x0 + (static_cast<double>(x) + 0.5) * rx - 0.5;
      const double dy = (py - cy - ty) / s, dx = (px - cx - tx) / s;
      const double sy = cos_a * dy - sin_a * dx + cy;
      const double sx = sin_a * dy + cos_a * dx + cx;
      const float v = sample_bilinear(frame, sy, sx) * gain + offset;
      out.at(y, x) = std::clamp(v, 0.0f, 1.0f);
    }
  }
  return out;
}

MiniVolume build_mini_volume(const Sweep& sweep, std::size_t index, std::size_t half_width) {
  if (index >= sweep.size()) {
    throw Error(ErrorCode::kOutOfRange, "mini_volume",
                "frame " + std::to_string(index) + " outside sweep of " + std::to_string(sweep.size()));
  }
  MiniVolume vol;
  vol.center_index = half_width;
  vol.source_pose = sweep.frames[index].pose;
  vol.slices.reserve(2 * half_width + 1);
  const long last = static_cast<long>(sweep.size()) - 1;
  for (long k = -static_cast<long>(half_width); k <= static_cast<long>(half_width); ++k) {
    const long src = std::clamp(static_cast<long>(index) + k, 0L, last);
    vol.slices.push_back(sweep.frames[static_cast<std::size_t>(src)].image);
  }
  return vol;
}

Affine3D sample_affine_3d(const Affine3DRanges& ranges, Rng& rng) {
  Affine3D t;
  for (double& r : t.rotation_deg) r = draw(rng, ranges.rotation_deg);
  for (double& v : t.translation_frac) v = draw(rng, ranges.translation_frac);
  t.scale = draw(rng, ranges.scale);
  return t;
}

Image affine_3d_query(const MiniVolume& volume, const Affine3D& transform) {
  if (volume.slices.empty()) throw Error(ErrorCode::kInvalidArgument, "affine_3d", "empty mini-volume");
  if (!(transform.scale > 0.0)) throw Error(ErrorCode::kInvalidArgument, "affine_3d", "scale must be positive");
  const std::size_t depth = volume.depth();
  const std::size_t h = volume.slices[0].height, w = volume.slices[0].width;
  const double cx = 0.5 * (w - 1.0), cy = 0.5 * (h - 1.0), cz = static_cast<double>(volume.center_index);
  const double t[3] = {transform.translation_frac[0] * w, transform.translation_frac[1] * h,
                       transform.translation_frac[2] * depth};

  // R = Rz * Ry * Rx; sampling uses R^T (inverse rotation).
  const double ax = deg2rad(transform.rotation_deg[0]);
  const double ay = deg2rad(transform.rotation_deg[1]);
  const double az = deg2rad(transform.rotation_deg[2]);
  const double rx[3][3] = {{1, 0, 0}, {0, std::cos(ax), -std::sin(ax)}, {0, std::sin(ax), std::cos(ax)}};
  const double ry[3][3] = {{std::cos(ay), 0, std::sin(ay)}, {0, 1, 0}, {-std::sin(ay), 0, std::cos(ay)}};
  const double rz[3][3] = {{std::cos(az), -std::sin(az), 0}, {std::sin(az), std::cos(az), 0}, {0, 0, 1}};
  double ryx[3][3] = {}, r[3][3] = {};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) ryx[i][j] += ry[i][k] * rx[k][j];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) r[i][j] += rz[i][k] * ryx[k][j];

  auto voxel = [&](long z, long y, long x) -> double {
    if (z < 0 || y < 0 || x < 0 || z >= static_cast<long>(depth) || y >= static_cast<long>(h) ||
        x >= static_cast<long>(w)) {
      return 0.0;
    }
    return volume.slices[z].pixels[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)];
  };

  Image out(h, w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double p[3] = {(x - cx - t[0]) / transform.scale, (y - cy - t[1]) / transform.scale,
                           (0.0 - t[2]) / transform.scale};
      double q[3];
      for (int i = 0; i < 3; ++i) q[i] = r[0][i] * p[0] + r[1][i] * p[1] + r[2][i] * p[2];
      const double sx = q[0] + cx, sy = q[1] + cy, sz = q[2] + cz;
      const double fx = std::floor(sx), fy = std::floor(sy), fz = std::floor(sz);
      const long x0 = static_cast<long>(fx), y0 = static_cast<long>(fy), z0 = static_cast<long>(fz);
      const double wx = sx - fx, wy = sy - fy, wz = sz - fz;
      double v;
      if (wx == 0.0 && wy == 0.0 && wz == 0.0) {
        v = voxel(z0, y0, x0);
      } else {
        const double c00 = voxel(z0, y0, x0) * (1 - wx) + voxel(z0, y0, x0 + 1) * wx;
        const double c01 = voxel(z0, y0 + 1, x0) * (1 - wx) + voxel(z0, y0 + 1, x0 + 1) * wx;
        const double c10 = voxel(z0 + 1, y0, x0) * (1 - wx) + voxel(z0 + 1, y0, x0 + 1) * wx;
        const double c11 = voxel(z0 + 1, y0 + 1, x0) * (1 - wx) + voxel(z0 + 1, y0 + 1, x0 + 1) * wx;
        v = (c00 * (1 - wy) + c01 * wy) * (1 - wz) + (c10 * (1 - wy) + c11 * wy) * wz;
      }
      out.at(y, x) = static_cast<float>(v);
    }
  }
  return out;
}

}  // namespace sweepret
