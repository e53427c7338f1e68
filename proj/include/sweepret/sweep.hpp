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
#include <filesystem>
#include <string>
#include <vector>

#include "sweepret/image.hpp"

namespace sweepret {

/// Probe translation in the tracker frame, millimetres.
struct ProbePose {
  std::array<double, 3> position{0.0, 0.0, 0.0};

  bool operator==(const ProbePose&) const = default;
};

struct SweepFrame {
  Image image;
  double time_s = 0.0;
  ProbePose pose;
  std::size_t frame_index = 0;

  bool operator==(const SweepFrame&) const = default;
};

/// One continuous tracked scan.
struct Sweep {
  std::string id;
  std::vector<SweepFrame> frames;
  double pixel_spacing_mm = 1.0;

  std::size_t size() const { return frames.size(); }
  bool operator==(const Sweep&) const = default;
};

/// Euclidean distance between probe positions (mm).
double probe_distance(const ProbePose& a, const ProbePose& b);

/// Throws Error(kFormat) describing the first violated sweep invariant:
/// non-empty, contiguous frame indices from 0, strictly increasing
/// non-negative timestamps, uniform image size, finite poses, positive
/// pixel spacing.
void validate_sweep(const Sweep& sweep);

/// Writes `manifest.json` and `frames/%06d.pgm` under `directory`. Images are
/// stored as 8-bit PGM, so the round trip is exact for 8-bit-quantized frames.
void save_sweep(const Sweep& sweep, const std::filesystem::path& directory);
Sweep load_sweep(const std::filesystem::path& directory);

/// Loads every sub-directory of `root` that holds a manifest, sorted by name.
std::vector<Sweep> load_sweep_set(const std::filesystem::path& root);

}  // namespace sweepret
