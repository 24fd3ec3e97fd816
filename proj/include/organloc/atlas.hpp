/*
* organloc - regression forest organ localization and atlas segmentation.
*
* Copyright 2026 The organloc Authors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*/

#pragma once

#include "organloc/box.hpp"
#include "organloc/volume.hpp"

#include <filesystem>
#include <optional>
#include <span>

namespace organloc {

/// Organ probability on normalized box coordinates, where the box maps to
/// [0,1]^3. The R^3 grid spans [-padding, 1 + padding]^3 and is stored with
/// spacing (1 + 2 padding) / R and origin -padding, so a cell's world
/// position is its normalized coordinate.
/// Gaussian organ and background intensity statistics pooled over training
/// cases. Background voxels are those of the margin-grown box outside the mask.
struct IntensityModel
{
  double fg_mean = 0.0, fg_sd = 1.0;
  double bg_mean = 0.0, bg_sd = 1.0;

  void validate() const;
  /// log N(i; fg) - log N(i; bg)
  double log_ratio(double intensity) const;
};

struct ProbAtlas
{
  Volume<float> grid;
  int case_count = 0;
  double padding = 0.0;
  std::optional<IntensityModel> intensity;

  int resolution() const { return grid.nx(); }
};

struct AtlasCase
{
  const MaskVolume* mask = nullptr; ///< nonzero = organ
  BoundingBox box;
  const ScalarVolume* ct = nullptr; ///< only needed for fit_intensity_model
};

/// Trilinear interpolation at a world point, clamping to the edge samples.
template <typename T>
double sample_trilinear(const Volume<T>& v, const Vec3d& world, int channel = 0)
{
  Eigen::Array3i i0;
  Eigen::Array3d t;
  for (int a = 0; a < 3; ++a)
  {
    const double n = double(v.dims()[a] - 1);
    const double u = std::clamp((world[a] - v.origin()[a]) / v.spacing()[a] - 0.5, 0.0, n);
    const double f = std::min(std::floor(u), std::max(n - 1.0, 0.0));
    i0[a] = int(f);
    t[a] = u - f;
  }
  const Eigen::Array3i i1 = (i0 + 1).min(v.dims().array() - 1);
  auto at = [&](int x, int y, int z) { return double(v(x, y, z, channel)); };
  const double c00 = at(i0[0], i0[1], i0[2]) * (1 - t[0]) + at(i1[0], i0[1], i0[2]) * t[0];
  const double c10 = at(i0[0], i1[1], i0[2]) * (1 - t[0]) + at(i1[0], i1[1], i0[2]) * t[0];
  const double c01 = at(i0[0], i0[1], i1[2]) * (1 - t[0]) + at(i1[0], i0[1], i1[2]) * t[0];
  const double c11 = at(i0[0], i1[1], i1[2]) * (1 - t[0]) + at(i1[0], i1[1], i1[2]) * t[0];
  const double c0 = c00 * (1 - t[1]) + c10 * t[1];
  const double c1 = c01 * (1 - t[1]) + c11 * t[1];
  return c0 * (1 - t[2]) + c1 * t[2];
}

/// Cell value = mean over cases of the case mask's trilinear occupancy at
/// the cell's normalized position mapped affinely into that case's box.
ProbAtlas build_atlas(std::span<const AtlasCase> cases, int resolution = 64, double padding = 0.25);

/// Probability volume on `target`'s grid: voxels whose centers fall inside
/// the box grown by `margin_mm` (clamped to the volume) get the atlas value
/// at their normalized position in `box`, clamped to the atlas grid edge;
/// all other voxels are 0.
ScalarVolume project_atlas(const ProbAtlas& atlas, const BoundingBox& box, double margin_mm,
                           const ScalarVolume& target);

IntensityModel fit_intensity_model(std::span<const AtlasCase> cases, double margin_mm);

/// Replaces each roi voxel's prior p with the posterior under `model`, after
/// clamping p to [floor, 1 - floor]. Voxels outside the roi are untouched.
void apply_intensity_model(ScalarVolume& prob, const ScalarVolume& ct, const MaskVolume& roi,
                           const IntensityModel& model, double floor);

/// Voxels whose centers lie inside the box.
MaskVolume box_region(const ScalarVolume& grid, const BoundingBox& box);

/// prob >= threshold, restricted to prob > 0 so that a zero threshold
/// yields the projection's support.
MaskVolume rough_segment(const ScalarVolume& prob, double threshold);

/// VOLF1 f32 grid plus a "<path>.meta" text sidecar.
void save_atlas(const std::filesystem::path& path, const ProbAtlas& atlas);
ProbAtlas load_atlas(const std::filesystem::path& path);

} // namespace organloc
