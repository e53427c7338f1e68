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
#include <cstdint>
#include <vector>

#include "sweepret/sweep.hpp"

namespace sweepret {

/// Procedural speckle phantom and sweep trajectory settings.
///
/// Volume axes: x lateral, y along the sweep, z depth (skin at z = 0). Each
/// sweep slices its own phantom; frames are perpendicular to a planar
/// constant-curvature trajectory that starts near the y = 0 face.
struct PhantomConfig {
  std::array<std::size_t, 3> volume_dims_voxels{160, 340, 96};
  double voxel_mm = 0.5;
  std::size_t inclusion_count = 40;
  std::size_t vessel_count = 3;
  double speckle_noise_sigma = 0.3;
  std::size_t sweep_length_frames = 150;
  double inter_frame_spacing_mm = 1.0;
  /// Magnitude of the path curvature (1/mm); each sweep draws the sign.
  double trajectory_curvature = 0.001;
  double pose_jitter_mm = 0.2;
  std::uint64_t seed = 1;

  std::size_t image_height = 128;
  std::size_t image_width = 128;
  double pixel_spacing_mm = 0.3125;
  double frame_rate_hz = 5.76;
  /// Sweeps start at y = start_margin_mm.
  double start_margin_mm = 5.0;
};

/// Throws Error(kInvalidArgument) for non-positive sizes or spacing.
void validate_phantom_config(const PhantomConfig& config);

/// Dense intensity volume in [0, 1], indexed (z * ny + y) * nx + x.
struct PhantomVolume {
  std::array<std::size_t, 3> dims{0, 0, 0};
  double voxel_mm = 1.0;
  std::vector<float> voxels;

  /// Trilinear sample at a millimetre position; returns false outside.
  bool sample(double x_mm, double y_mm, double z_mm, float& out) const;
};

PhantomVolume generate_phantom_volume(const PhantomConfig& config, std::uint64_t volume_seed);

/// Exact slice centre of frame `index` on the trajectory of sweep
/// `sweep_index` (no jitter). Exposed for tests of the trajectory geometry.
ProbePose trajectory_center(const PhantomConfig& config, std::size_t sweep_index, std::size_t index);

/// Deterministic per (config, n_sweeps); sweep ids are "phantom_<seed>_<k>".
/// Throws Error(kOutOfRange) naming the sweep whose trajectory leaves the
/// volume.
std::vector<Sweep> generate_phantom_dataset(const PhantomConfig& config, std::size_t n_sweeps);

/// Single sweep `sweep_index` of the dataset above.
Sweep generate_phantom_sweep(const PhantomConfig& config, std::size_t sweep_index);

}  // namespace sweepret
