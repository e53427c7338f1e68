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

#include "sweepret/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "sweepret/error.hpp"

namespace sweepret {

namespace fs = std::filesystem;
using nlohmann::json;

double probe_distance(const ProbePose& a, const ProbePose& b) {
  const double dx = a.position[0] - b.position[0];
  const double dy = a.position[1] - b.position[1];
  const double dz = a.position[2] - b.position[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

void validate_sweep(const Sweep& sweep) {
  const std::string ctx = "sweep '" + sweep.id + "'";
  if (sweep.frames.empty()) throw Error(ErrorCode::kFormat, ctx, "sweep has no frames");
  if (!(sweep.pixel_spacing_mm > 0.0)) {
    throw Error(ErrorCode::kFormat, ctx, "pixel spacing must be positive");
  }
  const std::size_t h = sweep.frames[0].image.height, w = sweep.frames[0].image.width;
  for (std::size_t i = 0; i < sweep.frames.size(); ++i) {
    const SweepFrame& f = sweep.frames[i];
    const std::string fctx = ctx + " frame " + std::to_string(i);
    if (f.frame_index != i) {
      throw Error(ErrorCode::kFormat, fctx,
                  "frame index " + std::to_string(f.frame_index) + " is not contiguous");
    }
    if (f.image.height != h || f.image.width != w || f.image.pixels.size() != h * w || h == 0) {
      throw Error(ErrorCode::kFormat, fctx, "image size differs from the sweep's");
    }
    if (!(f.time_s >= 0.0) || !std::isfinite(f.time_s)) {
      throw Error(ErrorCode::kFormat, fctx, "timestamp must be finite and non-negative");
    }
    if (i > 0 && !(f.time_s > sweep.frames[i - 1].time_s)) {
      throw Error(ErrorCode::kFormat, fctx, "timestamps are not strictly increasing");
    }
    for (double c : f.pose.position) {
      if (!std::isfinite(c)) throw Error(ErrorCode::kFormat, fctx, "pose is not finite");
    }
  }
}

namespace {

std::string frame_file(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frames/%06zu.pgm", index);
  return buf;
}

}  // namespace

void save_sweep(const Sweep& sweep, const fs::path& directory) {
  validate_sweep(sweep);
  std::error_code ec;
  fs::create_directories(directory / "frames", ec);
  if (ec) throw Error(ErrorCode::kIo, directory.string(), "cannot create directory: " + ec.message());

  json manifest;
  manifest["id"] = sweep.id;
  manifest["pixel_spacing_mm"] = sweep.pixel_spacing_mm;
  json frames = json::array();
  for (const SweepFrame& f : sweep.frames) {
    const std::string file = frame_file(f.frame_index);
    write_pgm(directory / file, f.image);
    frames.push_back({{"index", f.frame_index},
                      {"file", file},
                      {"time_s", f.time_s},
                      {"pose_mm", {f.pose.position[0], f.pose.position[1], f.pose.position[2]}}});
  }
  manifest["frames"] = std::move(frames);
  std::ofstream out(directory / "manifest.json");
  if (!out) throw Error(ErrorCode::kIo, (directory / "manifest.json").string(), "cannot write");
  out << manifest.dump(1) << "\n";
}

Sweep load_sweep(const fs::path& directory) {
  const fs::path manifest_path = directory / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorCode::kIo, manifest_path.string(), "manifest not found");
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, manifest_path.string(), std::string("corrupt manifest: ") + e.what());
  }

  Sweep sweep;
  try {
    sweep.id = manifest.at("id").get<std::string>();
    sweep.pixel_spacing_mm = manifest.at("pixel_spacing_mm").get<double>();
    const json& frames = manifest.at("frames");
    if (!frames.is_array()) throw Error(ErrorCode::kFormat, manifest_path.string(), "'frames' must be an array");
    for (const json& jf : frames) {
      SweepFrame f;
      f.frame_index = jf.at("index").get<std::size_t>();
      f.time_s = jf.at("time_s").get<double>();
      const auto pose = jf.at("pose_mm").get<std::vector<double>>();
      if (pose.size() != 3) {
        throw Error(ErrorCode::kFormat, manifest_path.string(),
                    "pose_mm of frame " + std::to_string(f.frame_index) + " must have 3 entries");
      }
      std::copy(pose.begin(), pose.end(), f.pose.position.begin());
      const std::string file = jf.at("file").get<std::string>();
      const fs::path frame_path = directory / file;
      if (!fs::exists(frame_path)) {
        throw Error(ErrorCode::kFormat, manifest_path.string(),
                    "manifest lists missing frame file '" + file + "'");
      }
      f.image = read_pgm(frame_path);
      sweep.frames.push_back(std::move(f));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, manifest_path.string(), std::string("bad manifest field: ") + e.what());
  }
  validate_sweep(sweep);
  return sweep;
}

std::vector<Sweep> load_sweep_set(const fs::path& root) {
  if (!fs::is_directory(root)) throw Error(ErrorCode::kIo, root.string(), "not a directory");
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && fs::exists(entry.path() / "manifest.json")) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<Sweep> sweeps;
  for (const auto& d : dirs) sweeps.push_back(load_sweep(d));
  return sweeps;
}

}  // namespace sweepret
