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

#include <cstdint>
#include <vector>

namespace organloc {

struct Ellipsoid
{
  Vec3d center = Vec3d::Zero(); ///< world mm
  Vec3d radii = Vec3d::Ones();  ///< semi-axes, mm
  double intensity_mean = 100.0;
  double intensity_stddev = 0.0;

  bool contains(const Vec3d& w) const
  {
    return ((w - center).cwiseQuotient(radii)).squaredNorm() <= 1.0;
  }
};

/// Synthetic CT description. Organ k is painted with label k + 1, later
/// organs overwriting earlier ones where they overlap.
struct PhantomConfig
{
  Vec3i dims{64, 64, 64};
  Vec3d spacing{1.0, 1.0, 1.0};
  double background_mean = 0.0;
  double background_noise = 0.0;
  std::vector<Ellipsoid> organs;
  std::uint64_t seed = 1;

  /// Throws ConfigError if an ellipsoid leaves the volume's world extent.
  void validate() const;
};

struct Phantom
{
  ScalarVolume ct;
  MaskVolume labels; ///< 0 = background, k + 1 = organ k
  std::vector<BoundingBox> boxes;

  MaskVolume organ_mask(int organ) const { return select_label(labels, std::uint8_t(organ + 1)); }
};

/// Deterministic in cfg. Intensities draw one normal sample per voxel in
/// index order. Each box is the minimal box around its organ's voxels.
Phantom generate_phantom(const PhantomConfig& cfg);

/// Randomized geometry for a dataset member: organ 0 is centered near the
/// volume middle with jittered position and radii; further organs are placed
/// anywhere they fit.
struct PhantomSetParams
{
  Vec3i dims{64, 64, 64};
  Vec3d spacing{1.0, 1.0, 1.0};
  int organ_count = 1;
  double background_noise = 15.0;
  double organ_noise = 15.0;
  double center_jitter = 0.15; ///< fraction of the extent
  double radius_min = 0.12;    ///< fraction of the extent
  double radius_max = 0.20;
};

PhantomConfig random_phantom_config(const PhantomSetParams& params, std::uint64_t seed);

struct SynthFeatureOptions
{
  int downsample = 2;         ///< output grid is dims / downsample with spacing * downsample
  double noise = 0.05;        ///< stddev of per-sample Gaussian noise
  std::vector<int> radii{1, 2, 4}; ///< box-blur radii (feature voxels)
  std::uint64_t network_seed = 0x5eed; ///< fixes the per-channel mixing across cases
};

/// Multichannel stand-in for deep features: each channel mixes smoothed
/// per-label occupancy fields at several scales plus noise. Channel 0 is the
/// organ-1 occupancy at the finest radius. Mixing weights depend only on
/// opts.network_seed, noise only on `seed`.
FeatureVolume synth_feature_volume(const MaskVolume& labels, int channels, std::uint64_t seed,
                                   const SynthFeatureOptions& opts = {});

inline constexpr int kLikelihoodChannels = 8;

/// Eight-class likelihoods; channel k is label k (channel 0 background).
/// Every voxel's channels are non-negative and sum to 1.
FeatureVolume synth_likelihood_volume(const MaskVolume& labels, std::uint64_t seed,
                                      const SynthFeatureOptions& opts = {});

/// Three passes of a clamped-edge moving average of half-width `radius` along each axis.
void box_blur3(Volume<float>& v, int radius, int channel = 0);

} // namespace organloc
