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

#include <array>
#include <cstddef>
#include <random>
#include <vector>

#include "sweepret/image.hpp"
#include "sweepret/sweep.hpp"

namespace sweepret {

using Rng = std::mt19937_64;

/// Closed interval [lo, hi]; symmetric ranges are written {-r, r}.
struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// 2D training augmentation: random affine, random resized crop, brightness
/// and contrast jitter.
struct Augment2DParams {
  Range rotation_deg{-10.0, 10.0};
  Range translate_frac{-0.1, 0.1};
  Range scale{0.9, 1.1};
  /// Fraction of the image area kept by the crop before resizing back.
  Range crop_scale{0.7, 1.0};
  Range brightness_delta{-0.2, 0.2};
  Range contrast_factor{0.8, 1.2};

  /// Every range zero-width at the identity.
  static Augment2DParams identity();
};

/// Throws Error(kInvalidArgument) when a range has lo > hi or a scale is
/// non-positive.
void validate(const Augment2DParams& params);

/// Same size as the input, values clamped to [0,1], zero fill outside the
/// source image. Draws a fixed number of variates from `rng`.
Image augment_2d(const Image& frame, const Augment2DParams& params, Rng& rng);

/// Stack of 2*half_width+1 consecutive frames centred on a source frame.
struct MiniVolume {
  std::vector<Image> slices;
  std::size_t center_index = 0;
  ProbePose source_pose;

  std::size_t depth() const { return slices.size(); }
};

/// Indices outside the sweep replicate the first/last frame.
MiniVolume build_mini_volume(const Sweep& sweep, std::size_t index, std::size_t half_width = 30);

/// 3D affine applied about the volume centre in voxel coordinates
/// (x = column, y = row, z = slice). Rotations are applied x, then y, then z
/// (z is the slice normal); translations are fractions of each axis extent.
struct Affine3D {
  std::array<double, 3> rotation_deg{0.0, 0.0, 0.0};
  std::array<double, 3> translation_frac{0.0, 0.0, 0.0};
  double scale = 1.0;
};

struct Affine3DRanges {
  Range rotation_deg{-10.0, 10.0};
  Range translation_frac{-0.05, 0.05};
  Range scale{0.95, 1.05};
};

Affine3D sample_affine_3d(const Affine3DRanges& ranges, Rng& rng);

/// Central slice of the transformed mini-volume (trilinear, zero outside).
/// The identity transform returns the centre slice exactly.
Image affine_3d_query(const MiniVolume& volume, const Affine3D& transform);

}  // namespace sweepret
