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

#include "sweepret/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "sweepret/error.hpp"

namespace sweepret {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

enum class Stream : std::uint64_t { kTrajectory = 1, kVolume = 2, kJitter = 3 };

std::uint64_t stream_seed(std::uint64_t seed, std::size_t sweep, Stream stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(sweep * 0x100 + static_cast<std::uint64_t>(stream)));
}

struct SweepGeometry {
  double x0, y0, z_center, heading, curvature;
};

SweepGeometry sweep_geometry(const PhantomConfig& c, std::size_t sweep_index) {
  std::mt19937_64 rng(stream_seed(c.seed, sweep_index, Stream::kTrajectory));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double width_mm = static_cast<double>(c.volume_dims_voxels[0] - 1) * c.voxel_mm;
  SweepGeometry g;
  g.heading = 0.03 * u(rng);
  const double sign = u(rng) < 0.0 ? -1.0 : 1.0;
  g.curvature = sign * c.trajectory_curvature * (0.5 + 0.25 * (u(rng) + 1.0));
  g.x0 = 0.5 * width_mm + 0.05 * width_mm * u(rng);
  g.y0 = c.start_margin_mm;
  g.z_center = 1.0 + 0.5 * static_cast<double>(c.image_height) * c.pixel_spacing_mm;
  return g;
}

// Centre and heading after arc length s.
void arc_point(const SweepGeometry& g, double s, double& x, double& y, double& theta) {
  theta = g.heading + g.curvature * s;
  if (std::abs(g.curvature) < 1e-12) {
    x = g.x0 + s * std::sin(g.heading);
    y = g.y0 + s * std::cos(g.heading);
  } else {
    x = g.x0 + (std::cos(g.heading) - std::cos(theta)) / g.curvature;
    y = g.y0 + (std::sin(theta) - std::sin(g.heading)) / g.curvature;
  }
}

// Smooth random field: value noise on a coarse lattice, trilinear.
class ValueNoise {
 public:
  ValueNoise(std::mt19937_64& rng, double cell_mm, double extent_x, double extent_y, double extent_z)
      : cell_(cell_mm),
        nx_(static_cast<std::size_t>(extent_x / cell_mm) + 2),
        ny_(static_cast<std::size_t>(extent_y / cell_mm) + 2),
        nz_(static_cast<std::size_t>(extent_z / cell_mm) + 2),
        v_(nx_ * ny_ * nz_) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& x : v_) x = u(rng);
  }

  double operator()(double x, double y, double z) const {
    const double fx = x / cell_, fy = y / cell_, fz = z / cell_;
    const std::size_t ix = std::min(static_cast<std::size_t>(fx), nx_ - 2);
    const std::size_t iy = std::min(static_cast<std::size_t>(fy), ny_ - 2);
    const std::size_t iz = std::min(static_cast<std::size_t>(fz), nz_ - 2);
    const double tx = smooth(fx - ix), ty = smooth(fy - iy), tz = smooth(fz - iz);
    auto at = [&](std::size_t a, std::size_t b, std::size_t c) { return v_[(c * ny_ + b) * nx_ + a]; };
    const double c00 = at(ix, iy, iz) * (1 - tx) + at(ix + 1, iy, iz) * tx;
    const double c10 = at(ix, iy + 1, iz) * (1 - tx) + at(ix + 1, iy + 1, iz) * tx;
    const double c01 = at(ix, iy, iz + 1) * (1 - tx) + at(ix + 1, iy, iz + 1) * tx;
    const double c11 = at(ix, iy + 1, iz + 1) * (1 - tx) + at(ix + 1, iy + 1, iz + 1) * tx;
    return (c00 * (1 - ty) + c10 * ty) * (1 - tz) + (c01 * (1 - ty) + c11 * ty) * tz;
  }

 private:
  static double smooth(double t) { return t * t * (3.0 - 2.0 * t); }
  double cell_;
  std::size_t nx_, ny_, nz_;
  std::vector<double> v_;
};

struct Ellipsoid {
  std::array<double, 3> center, radii;
  double gain;
};

struct Vessel {
  std::array<double, 3> point, dir;
  double radius;
};

}  // namespace

void validate_phantom_config(const PhantomConfig& c) {
  for (std::size_t d : c.volume_dims_voxels) {
    if (d < 2) throw Error(ErrorCode::kInvalidArgument, "phantom", "volume dimensions must be >= 2");
  }
  if (!(c.voxel_mm > 0.0) || !(c.inter_frame_spacing_mm > 0.0) || !(c.pixel_spacing_mm > 0.0) ||
      !(c.frame_rate_hz > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "phantom",
                "voxel size, frame spacing, pixel spacing and frame rate must be positive");
  }
  if (c.sweep_length_frames == 0 || c.image_height == 0 || c.image_width == 0) {
    throw Error(ErrorCode::kInvalidArgument, "phantom", "sweep length and image size must be positive");
  }
  if (c.pose_jitter_mm < 0.0 || c.speckle_noise_sigma < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "phantom", "jitter and speckle sigma must be >= 0");
  }
}

bool PhantomVolume::sample(double x_mm, double y_mm, double z_mm, float& out) const {
  const double fx = x_mm / voxel_mm, fy = y_mm / voxel_mm, fz = z_mm / voxel_mm;
  if (fx < 0 || fy < 0 || fz < 0 || fx > static_cast<double>(dims[0] - 1) ||
      fy > static_cast<double>(dims[1] - 1) || fz > static_cast<double>(dims[2] - 1)) {
    return false;
  }
  const std::size_t ix = std::min(static_cast<std::size_t>(fx), dims[0] - 2);
  const std::size_t iy = std::min(static_cast<std::size_t>(fy), dims[1] - 2);
  const std::size_t iz = std::min(static_cast<std::size_t>(fz), dims[2] - 2);
  const double tx = fx - ix, ty = fy - iy, tz = fz - iz;
  auto at = [&](std::size_t a, std::size_t b, std::size_t c) {
    return static_cast<double>(voxels[(c * dims[1] + b) * dims[0] + a]);
  };
  const double c00 = at(ix, iy, iz) * (1 - tx) + at(ix + 1, iy, iz) * tx;
  const double c10 = at(ix, iy + 1, iz) * (1 - tx) + at(ix + 1, iy + 1, iz) * tx;
  const double c01 = at(ix, iy, iz + 1) * (1 - tx) + at(ix + 1, iy, iz + 1) * tx;
  const double c11 = at(ix, iy + 1, iz + 1) * (1 - tx) + at(ix + 1, iy + 1, iz + 1) * tx;
  out = static_cast<float>((c00 * (1 - ty) + c10 * ty) * (1 - tz) + (c01 * (1 - ty) + c11 * ty) * tz);
  return true;
}

PhantomVolume generate_phantom_volume(const PhantomConfig& c, std::uint64_t volume_seed) {
  validate_phantom_config(c);
  std::mt19937_64 rng(volume_seed);
  const auto [nx, ny, nz] = c.volume_dims_voxels;
  const double ex = (nx - 1) * c.voxel_mm, ey = (ny - 1) * c.voxel_mm, ez = (nz - 1) * c.voxel_mm;
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  ValueNoise coarse(rng, 12.0, ex, ey, ez);
  ValueNoise fine(rng, 4.0, ex, ey, ez);
  const double layer_period = 3.0 + 3.0 * u01(rng);
  const double layer_phase = 2.0 * std::numbers::pi * u01(rng);

  std::vector<Ellipsoid> inclusions(c.inclusion_count);
  for (auto& e : inclusions) {
    e.center = {u01(rng) * ex, u01(rng) * ey, (0.15 + 0.8 * u01(rng)) * ez};
    e.radii = {2.0 + 6.0 * u01(rng), 2.0 + 6.0 * u01(rng), 1.5 + 4.0 * u01(rng)};
    e.gain = u01(rng) < 0.5 ? 0.15 + 0.4 * u01(rng) : 1.4 + 0.6 * u01(rng);
  }
  std::vector<Vessel> vessels(c.vessel_count);
  for (auto& v : vessels) {
    v.point = {(0.2 + 0.6 * u01(rng)) * ex, u01(rng) * ey, (0.3 + 0.55 * u01(rng)) * ez};
    const double az = (u01(rng) - 0.5) * 1.2;  // around the sweep axis
    const double el = (u01(rng) - 0.5) * 0.3;
    v.dir = {std::sin(az) * std::cos(el), std::cos(az) * std::cos(el), std::sin(el)};
    v.radius = 1.5 + 3.0 * u01(rng);
  }

  PhantomVolume vol;
  vol.dims = c.volume_dims_voxels;
  vol.voxel_mm = c.voxel_mm;
  vol.voxels.resize(nx * ny * nz);
  std::normal_distribution<double> normal(0.0, 1.0);

  for (std::size_t z = 0; z < nz; ++z) {
    const double zm = z * c.voxel_mm;
    const double atten = std::exp(-0.012 * zm);
    for (std::size_t y = 0; y < ny; ++y) {
      const double ym = y * c.voxel_mm;
      for (std::size_t x = 0; x < nx; ++x) {
        const double xm = x * c.voxel_mm;
        double e = 0.45 + 0.18 * coarse(xm, ym, zm) + 0.10 * fine(xm, ym, zm);
        // Skin line and fascia-like layers that undulate along the sweep.
        if (zm < 1.5) e += 0.4;
        const double undulation = 1.5 * coarse(xm, ym, 0.0);
        e += 0.08 * std::sin(2.0 * std::numbers::pi * (zm + undulation) / layer_period + layer_phase);
        for (const auto& inc : inclusions) {
          const double dx = (xm - inc.center[0]) / inc.radii[0];
          const double dy = (ym - inc.center[1]) / inc.radii[1];
          const double dz = (zm - inc.center[2]) / inc.radii[2];
          const double r2 = dx * dx + dy * dy + dz * dz;
          if (r2 < 1.44) {
            const double w = r2 < 1.0 ? 1.0 : (1.44 - r2) / 0.44;
            e *= 1.0 + (inc.gain - 1.0) * w;
          }
        }
        for (const auto& v : vessels) {
          const double px = xm - v.point[0], py = ym - v.point[1], pz = zm - v.point[2];
          const double t = px * v.dir[0] + py * v.dir[1] + pz * v.dir[2];
          const double qx = px - t * v.dir[0], qy = py - t * v.dir[1], qz = pz - t * v.dir[2];
          const double r = std::sqrt(qx * qx + qy * qy + qz * qz);
          if (r < v.radius) {
            e *= 0.08;
          } else if (r < v.radius + 0.8) {
            e *= 1.6;
          }
        }
        const double speckle = std::abs(1.0 + c.speckle_noise_sigma * normal(rng));
        vol.voxels[(z * ny + y) * nx + x] = static_cast<float>(std::clamp(e * speckle * atten, 0.0, 1.0));
      }
    }
  }
  return vol;
}

ProbePose trajectory_center(const PhantomConfig& c, std::size_t sweep_index, std::size_t index) {
  const SweepGeometry g = sweep_geometry(c, sweep_index);
  double x, y, theta;
  arc_point(g, static_cast<double>(index) * c.inter_frame_spacing_mm, x, y, theta);
  return ProbePose{{x, y, g.z_center}};
}

Sweep generate_phantom_sweep(const PhantomConfig& c, std::size_t sweep_index) {
  validate_phantom_config(c);
  const SweepGeometry g = sweep_geometry(c, sweep_index);
  const std::string ctx = "sweep " + std::to_string(sweep_index);
  const std::size_t h = c.image_height, w = c.image_width;
  const double half_w = 0.5 * static_cast<double>(w - 1) * c.pixel_spacing_mm;
  const double half_h = 0.5 * static_cast<double>(h - 1) * c.pixel_spacing_mm;

  // Reject the trajectory before paying for the volume.
  const double ex = (c.volume_dims_voxels[0] - 1) * c.voxel_mm;
  const double ey = (c.volume_dims_voxels[1] - 1) * c.voxel_mm;
  const double ez = (c.volume_dims_voxels[2] - 1) * c.voxel_mm;
  for (std::size_t i = 0; i < c.sweep_length_frames; ++i) {
    double x, y, theta;
    arc_point(g, static_cast<double>(i) * c.inter_frame_spacing_mm, x, y, theta);
    const double ux = std::cos(theta), uy = -std::sin(theta);
    for (double sx : {-1.0, 1.0}) {
      for (double sz : {-1.0, 1.0}) {
        const double px = x + sx * half_w * ux, py = y + sx * half_w * uy, pz = g.z_center + sz * half_h;
        if (px < 0 || py < 0 || pz < 0 || px > ex || py > ey || pz > ez) {
          throw Error(ErrorCode::kOutOfRange, ctx,
                      "trajectory exits the phantom volume at frame " + std::to_string(i));
        }
      }
    }
  }

  const PhantomVolume vol = generate_phantom_volume(c, stream_seed(c.seed, sweep_index, Stream::kVolume));
  std::mt19937_64 jitter_rng(stream_seed(c.seed, sweep_index, Stream::kJitter));
  std::normal_distribution<double> jitter(0.0, 1.0);

  Sweep sweep;
  sweep.id = "phantom_" + std::to_string(c.seed) + "_" + std::to_string(sweep_index);
  sweep.pixel_spacing_mm = c.pixel_spacing_mm;
  sweep.frames.reserve(c.sweep_length_frames);
  for (std::size_t i = 0; i < c.sweep_length_frames; ++i) {
    double x, y, theta;
    arc_point(g, static_cast<double>(i) * c.inter_frame_spacing_mm, x, y, theta);
    const double ux = std::cos(theta), uy = -std::sin(theta);
    SweepFrame f;
    f.frame_index = i;
    f.time_s = static_cast<double>(i) / c.frame_rate_hz;
    f.image = Image(h, w);
    for (std::size_t r = 0; r < h; ++r) {
      const double dz = (static_cast<double>(r) - 0.5 * (h - 1)) * c.pixel_spacing_mm;
      for (std::size_t col = 0; col < w; ++col) {
        const double du = (static_cast<double>(col) - 0.5 * (w - 1)) * c.pixel_spacing_mm;
        float v = 0.0f;
        vol.sample(x + du * ux, y + du * uy, g.z_center + dz, v);
        f.image.at(r, col) = v;
      }
    }
    f.image = quantize_u8(f.image);
    f.pose.position = {x, y, g.z_center};
    if (c.pose_jitter_mm > 0.0) {
      for (double& p : f.pose.position) p += c.pose_jitter_mm * jitter(jitter_rng);
    }
    sweep.frames.push_back(std::move(f));
  }
  return sweep;
}

std::vector<Sweep> generate_phantom_dataset(const PhantomConfig& c, std::size_t n_sweeps) {
  std::vector<Sweep> sweeps;
  sweeps.reserve(n_sweeps);
  for (std::size_t k = 0; k < n_sweeps; ++k) sweeps.push_back(generate_phantom_sweep(c, k));
  return sweeps;
}

}  // namespace sweepret
