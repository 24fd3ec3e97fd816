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

#include "organloc/phantom.hpp"

#include "organloc/rng.hpp"

#include <algorithm>
#include <string>

namespace organloc {

void PhantomConfig::validate() const
{
  try
  {
    VolumeHeader{dims, 1, spacing, DType::F32}.validate();
  }
  catch (const ValidationError& e)
  {
    throw ConfigError(e.what());
  }
  const Vec3d extent = dims.cast<double>().cwiseProduct(spacing);
  for (std::size_t k = 0; k < organs.size(); ++k)
  {
    const auto& e = organs[k];
    if ((e.radii.array() <= 0.0).any() || e.intensity_stddev < 0.0)
      throw ConfigError("organ " + std::to_string(k) + ": radii must be positive");
    if ((e.center - e.radii).minCoeff() < 0.0 || ((e.center + e.radii) - extent).maxCoeff() > 0.0)
      throw ConfigError("organ " + std::to_string(k) + ": ellipsoid does not fit inside the volume");
  }
  if (organs.size() > 254)
    throw ConfigError("too many organs");
  if (background_noise < 0.0)
    throw ConfigError("background noise must be >= 0");
}

Phantom generate_phantom(const PhantomConfig& cfg)
{
  cfg.validate();
  Phantom ph;
  ph.ct = ScalarVolume(cfg.dims, cfg.spacing);
  ph.labels = MaskVolume(cfg.dims, cfg.spacing);

  Rng rng(cfg.seed);
  for (int z = 0; z < cfg.dims.z(); ++z)
    for (int y = 0; y < cfg.dims.y(); ++y)
      for (int x = 0; x < cfg.dims.x(); ++x)
      {
        const Vec3d w = ph.ct.world({x, y, z});
        int label = 0;
        for (std::size_t k = 0; k < cfg.organs.size(); ++k)
          if (cfg.organs[k].contains(w))
            label = int(k) + 1;
        const double n = rng.normal();
        double value;
        if (label == 0)
          value = cfg.background_mean + cfg.background_noise * n;
        else
        {
          const auto& e = cfg.organs[std::size_t(label - 1)];
          value = e.intensity_mean + e.intensity_stddev * n;
        }
        ph.labels(x, y, z) = std::uint8_t(label);
        ph.ct(x, y, z) = float(value);
      }

  for (std::size_t k = 0; k < cfg.organs.size(); ++k)
  {
    const MaskVolume m = ph.organ_mask(int(k));
    if (count_nonzero(m) == 0)
      throw ConfigError("organ " + std::to_string(k) + " covers no voxel center");
    ph.boxes.push_back(mask_bounding_box(m));
  }
  return ph;
}

PhantomConfig random_phantom_config(const PhantomSetParams& params, std::uint64_t seed)
{
  PhantomConfig cfg;
  cfg.dims = params.dims;
  cfg.spacing = params.spacing;
  cfg.background_noise = params.background_noise;
  cfg.seed = derive_seed(seed, 0);

  Rng rng(derive_seed(seed, 1));
  const Vec3d extent = params.dims.cast<double>().cwiseProduct(params.spacing);
  for (int k = 0; k < params.organ_count; ++k)
  {
    Ellipsoid e;
    const double shrink = k == 0 ? 1.0 : 0.6;
    for (int a = 0; a < 3; ++a)
      e.radii[a] = shrink * extent[a] * rng.uniform(params.radius_min, params.radius_max);
    for (int a = 0; a < 3; ++a)
    {
      if (k == 0)
        e.center[a] = extent[a] * (0.5 + rng.uniform(-params.center_jitter, params.center_jitter));
      else
        e.center[a] = rng.uniform(e.radii[a], extent[a] - e.radii[a]);
      // keep a one-voxel rim free
      e.center[a] = std::clamp(e.center[a], e.radii[a] + params.spacing[a],
                               extent[a] - e.radii[a] - params.spacing[a]);
    }
    e.intensity_mean = k == 0 ? rng.uniform(80.0, 120.0) : rng.uniform(-80.0, 60.0);
    e.intensity_stddev = params.organ_noise;
    cfg.organs.push_back(e);
  }
  return cfg;
}

void box_blur3(Volume<float>& v, int radius, int channel)
{
  if (radius <= 0)
    return;
  const Vec3i d = v.dims();
  std::vector<double> line, prefix;
  for (int pass = 0; pass < 3; ++pass)
    for (int axis = 0; axis < 3; ++axis)
    {
      const int n = d[axis];
      const int u = (axis + 1) % 3, w = (axis + 2) % 3;
      line.resize(std::size_t(n));
      prefix.resize(std::size_t(n) + 1);
      for (int j = 0; j < d[w]; ++j)
        for (int i = 0; i < d[u]; ++i)
        {
          Vec3i p;
          p[u] = i;
          p[w] = j;
          for (int t = 0; t < n; ++t)
          {
            p[axis] = t;
            line[std::size_t(t)] = v(p, channel);
          }
          prefix[0] = 0.0;
          for (int t = 0; t < n; ++t)
            prefix[std::size_t(t) + 1] = prefix[std::size_t(t)] + line[std::size_t(t)];
          for (int t = 0; t < n; ++t)
          {
            // clamped edges: out-of-range taps repeat the boundary sample
            const int lo = t - radius, hi = t + radius;
            const int clo = std::max(lo, 0), chi = std::min(hi, n - 1);
            double s = prefix[std::size_t(chi) + 1] - prefix[std::size_t(clo)];
            s += double(clo - lo) * line[0] + double(hi - chi) * line[std::size_t(n) - 1];
            p[axis] = t;
            v(p, channel) = float(s / double(2 * radius + 1));
          }
        }
    }
}

namespace {

/// Per-label occupancy fractions on the downsampled grid.
std::vector<Volume<float>> occupancy_fields(const MaskVolume& labels, int label_count, int factor)
{
  if (factor < 1)
    throw ValidationError("downsample factor must be >= 1");
  const Vec3i fd = (labels.dims().array() + factor - 1) / factor;
  const Vec3d fs = labels.spacing() * double(factor);
  std::vector<Volume<float>> fields;
  for (int l = 0; l < label_count; ++l)
  {
    fields.emplace_back(fd, fs);
    fields.back().set_origin(labels.origin());
  }
  Volume<float> counts(fd, fs);
  for (int z = 0; z < labels.nz(); ++z)
    for (int y = 0; y < labels.ny(); ++y)
      for (int x = 0; x < labels.nx(); ++x)
      {
        const Vec3i q(x / factor, y / factor, z / factor);
        counts(q) += 1.0f;
        const int l = labels(x, y, z);
        if (l < label_count)
          fields[std::size_t(l)](q) += 1.0f;
      }
  for (auto& f : fields)
    f.data() /= counts.data();
  return fields;
}

int max_label(const MaskVolume& labels)
{
  return labels.data().size() ? int(labels.data().maxCoeff()) : 0;
}

} // namespace

FeatureVolume synth_feature_volume(const MaskVolume& labels, int channels, std::uint64_t seed,
                                   const SynthFeatureOptions& opts)
{
  if (channels < 1)
    throw ValidationError("channels must be >= 1");
  if (opts.radii.empty())
    throw ValidationError("at least one blur radius is required");
  const int label_count = std::max(max_label(labels), 1) + 1;
  const auto occupancy = occupancy_fields(labels, label_count, opts.downsample);

  // base[l * R + r]: label l occupancy blurred at radius r
  const std::size_t R = opts.radii.size();
  std::vector<Volume<float>> base;
  for (int l = 0; l < label_count; ++l)
    for (std::size_t r = 0; r < R; ++r)
    {
      base.push_back(occupancy[std::size_t(l)]);
      box_blur3(base.back(), opts.radii[r]);
    }

  const auto& grid = occupancy.front();
  FeatureVolume out = volume_like<float>(grid, channels);
  Rng mix(opts.network_seed);
  Rng noise(seed);
  const std::size_t organs = std::size_t(label_count - 1);
  for (int c = 0; c < channels; ++c)
  {
    auto ch = out.channel(c);
    if (c == 0)
      ch = base[1 * R + 0].data();
    else
    {
      const auto l1 = std::size_t(mix.uniform_int(1, std::int64_t(organs)));
      const auto r1 = std::size_t(mix.uniform_int(0, std::int64_t(R) - 1));
      const auto l2 = std::size_t(mix.uniform_int(0, std::int64_t(label_count) - 1));
      const auto r2 = std::size_t(mix.uniform_int(0, std::int64_t(R) - 1));
      const float w1 = float(mix.uniform(0.5, 1.5));
      const float w2 = float(mix.uniform(-1.0, 1.0));
      ch = w1 * base[l1 * R + r1].data() + w2 * base[l2 * R + r2].data();
    }
    if (opts.noise > 0.0)
      for (Eigen::Index i = 0; i < ch.size(); ++i)
        ch[i] += float(opts.noise * noise.normal());
  }
  return out;
}

FeatureVolume synth_likelihood_volume(const MaskVolume& labels, std::uint64_t seed,
                                      const SynthFeatureOptions& opts)
{
  if (max_label(labels) >= kLikelihoodChannels)
    throw ValidationError("likelihood synthesis supports labels 0..7");
  auto occupancy = occupancy_fields(labels, kLikelihoodChannels, opts.downsample);
  for (auto& f : occupancy)
    box_blur3(f, 1);

  const auto& grid = occupancy.front();
  FeatureVolume out = volume_like<float>(grid, kLikelihoodChannels);
  Rng noise(seed);
  const Eigen::Index n = grid.voxel_count();
  std::vector<double> raw(kLikelihoodChannels);
  for (Eigen::Index i = 0; i < n; ++i)
  {
    double sum = 0.0;
    for (int k = 0; k < kLikelihoodChannels; ++k)
    {
      double v = occupancy[std::size_t(k)].data()[i] + opts.noise * noise.normal();
      v = std::max(v, 0.0);
      raw[std::size_t(k)] = v;
      sum += v;
    }
    if (sum <= 0.0)
    {
      std::fill(raw.begin(), raw.end(), 0.0);
      raw[0] = sum = 1.0;
    }
    for (int k = 0; k < kLikelihoodChannels; ++k)
      out.data()[Eigen::Index(k) * n + i] = float(raw[std::size_t(k)] / sum);
  }
  return out;
}

} // namespace organloc
