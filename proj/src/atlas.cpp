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

#include "organloc/atlas.hpp"

#include "organloc/volume_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace organloc {

namespace {

/// Normalized coordinate of a world point inside a box; a flat axis maps to 0.5.
Vec3d normalize(const BoundingBox& box, const Vec3d& w)
{
  Vec3d u;
  const Vec3d lo = box.lo(), ext = box.extent();
  for (int a = 0; a < 3; ++a)
    u[a] = ext[a] > 0.0 ? (w[a] - lo[a]) / ext[a] : 0.5;
  return u;
}

} // namespace

ProbAtlas build_atlas(std::span<const AtlasCase> cases, int resolution, double padding)
{
  if (cases.empty())
    throw ValidationError("atlas needs at least one case");
  if (resolution < 1)
    throw ValidationError("atlas resolution must be >= 1");
  if (!(padding >= 0.0) || !std::isfinite(padding))
    throw ValidationError("atlas padding must be >= 0");

  ProbAtlas atlas;
  atlas.padding = padding;
  atlas.grid = Volume<float>(Vec3i::Constant(resolution), Vec3d::Constant((1.0 + 2.0 * padding) / resolution));
  atlas.grid.set_origin(Vec3d::Constant(-padding));
  Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(atlas.grid.voxel_count());

  for (const auto& c : cases)
  {
    if (!c.mask)
      throw ValidationError("atlas case without mask");
    c.box.validate();
    Volume<float> occupancy = volume_like<float>(*c.mask);
    occupancy.data() = (c.mask->data() != 0).cast<float>();
    Vec3i lo, hi;
    bool any = false;
    if (box_index_range(occupancy, c.box, lo, hi))
      for (int z = lo.z(); z <= hi.z() && !any; ++z)
        for (int y = lo.y(); y <= hi.y() && !any; ++y)
          for (int x = lo.x(); x <= hi.x() && !any; ++x)
            any = occupancy(x, y, z) != 0.0f;
    if (!any)
      throw ValidationError("atlas case mask is empty inside its box");

    const Vec3d blo = c.box.lo(), ext = c.box.extent();
    Eigen::Index i = 0;
    for (int z = 0; z < resolution; ++z)
      for (int y = 0; y < resolution; ++y)
        for (int x = 0; x < resolution; ++x, ++i)
        {
          const Vec3d u = atlas.grid.world({x, y, z});
          const Vec3d w = blo + u.cwiseProduct(ext);
          acc[i] += sample_trilinear(occupancy, w);
        }
  }
  atlas.case_count = int(cases.size());
  atlas.grid.data() = (acc / double(cases.size())).cast<float>();
  return atlas;
}

MaskVolume box_region(const ScalarVolume& grid, const BoundingBox& box)
{
  MaskVolume region = volume_like<std::uint8_t>(grid);
  Vec3i lo, hi;
  if (!box.valid() || !box_index_range(grid, box, lo, hi))
    return region;
  for (int z = lo.z(); z <= hi.z(); ++z)
    for (int y = lo.y(); y <= hi.y(); ++y)
      for (int x = lo.x(); x <= hi.x(); ++x)
        region(x, y, z) = 1;
  return region;
}

ScalarVolume project_atlas(const ProbAtlas& atlas, const BoundingBox& box, double margin_mm,
                           const ScalarVolume& target)
{
  box.validate();
  if (atlas.grid.empty())
    throw ValidationError("atlas is empty");
  const BoundingBox grown = box.expanded(margin_mm);
  Vec3i lo, hi;
  if (!grown.valid() || !box_index_range(target, grown, lo, hi))
    throw ValidationError("expanded box contains no voxel of the target volume");

  ScalarVolume prob = volume_like<float>(target);
  for (int z = lo.z(); z <= hi.z(); ++z)
    for (int y = lo.y(); y <= hi.y(); ++y)
      for (int x = lo.x(); x <= hi.x(); ++x)
      {
        const Vec3d u = normalize(box, target.world({x, y, z}));
        prob(x, y, z) = float(std::clamp(sample_trilinear(atlas.grid, u), 0.0, 1.0));
      }
  return prob;
}

void IntensityModel::validate() const
{
  if (!std::isfinite(fg_mean) || !std::isfinite(bg_mean) || !(fg_sd > 0.0) || !(bg_sd > 0.0) ||
      !std::isfinite(fg_sd) || !std::isfinite(bg_sd))
    throw ValidationError("intensity model needs finite means and positive deviations");
}

double IntensityModel::log_ratio(double intensity) const
{
  const double zf = (intensity - fg_mean) / fg_sd, zb = (intensity - bg_mean) / bg_sd;
  return 0.5 * (zb * zb - zf * zf) + std::log(bg_sd / fg_sd);
}

IntensityModel fit_intensity_model(std::span<const AtlasCase> cases, double margin_mm)
{
  double n[2] = {0, 0}, s[2] = {0, 0}, ss[2] = {0, 0};
  for (const auto& c : cases)
  {
    if (!c.mask || !c.ct)
      throw ValidationError("intensity model needs a mask and a CT per case");
    if (!c.ct->same_grid(*c.mask))
      throw ValidationError("CT and mask grids differ");
    Vec3i lo, hi;
    if (!box_index_range(*c.ct, c.box.expanded(margin_mm), lo, hi))
      continue;
    for (int z = lo.z(); z <= hi.z(); ++z)
      for (int y = lo.y(); y <= hi.y(); ++y)
        for (int x = lo.x(); x <= hi.x(); ++x)
        {
          const int k = (*c.mask)(x, y, z) != 0 ? 0 : 1;
          const double v = (*c.ct)(x, y, z);
          n[k] += 1;
          s[k] += v;
          ss[k] += v * v;
        }
  }
  if (n[0] < 2 || n[1] < 2)
    throw ValidationError("intensity model needs organ and background voxels");
  IntensityModel m;
  m.fg_mean = s[0] / n[0];
  m.bg_mean = s[1] / n[1];
  m.fg_sd = std::sqrt(std::max(ss[0] / n[0] - m.fg_mean * m.fg_mean, 0.0));
  m.bg_sd = std::sqrt(std::max(ss[1] / n[1] - m.bg_mean * m.bg_mean, 0.0));
  // A constant class would make the ratio degenerate.
  m.fg_sd = std::max(m.fg_sd, 1e-3);
  m.bg_sd = std::max(m.bg_sd, 1e-3);
  return m;
}

void apply_intensity_model(ScalarVolume& prob, const ScalarVolume& ct, const MaskVolume& roi,
                           const IntensityModel& model, double floor)
{
  model.validate();
  if (!(floor >= 0.0 && floor < 0.5))
    throw ValidationError("prior floor must lie in [0, 0.5)");
  if (!prob.same_grid(ct) || !prob.same_grid(roi))
    throw ValidationError("probability, CT and roi grids differ");
  auto& p = prob.data();
  const auto& i = ct.data();
  const auto& r = roi.data();
  for (Eigen::Index k = 0; k < p.size(); ++k)
  {
    if (r[k] == 0)
      continue;
    const double prior = std::clamp(double(p[k]), floor, 1.0 - floor);
    if (prior <= 0.0 || prior >= 1.0)
      continue;
    const double logit = std::log(prior / (1.0 - prior)) + model.log_ratio(i[k]);
    p[k] = float(1.0 / (1.0 + std::exp(-logit)));
  }
}

MaskVolume rough_segment(const ScalarVolume& prob, double threshold)
{
  MaskVolume mask = volume_like<std::uint8_t>(prob);
  mask.data() = ((prob.channel(0) > 0.0f) && (prob.channel(0).template cast<double>() >= threshold))
                  .cast<std::uint8_t>();
  return mask;
}

void save_atlas(const std::filesystem::path& path, const ProbAtlas& atlas)
{
  Volume<float> stored = atlas.grid;
  stored.set_origin(Vec3d::Zero());
  save_volume(path, stored);
  std::ofstream meta(path.string() + ".meta");
  if (!meta)
    throw IoError("cannot write atlas sidecar for " + path.string());
  meta.precision(17);
  meta << "organloc-atlas 1\ncase_count " << atlas.case_count << "\nresolution " << atlas.resolution()
       << "\npadding " << atlas.padding << "\n";
  if (atlas.intensity)
    meta << "intensity " << atlas.intensity->fg_mean << ' ' << atlas.intensity->fg_sd << ' '
         << atlas.intensity->bg_mean << ' ' << atlas.intensity->bg_sd << "\n";
  else
    meta << "intensity none\n";
}

ProbAtlas load_atlas(const std::filesystem::path& path)
{
  ProbAtlas atlas;
  atlas.grid = load_volume_as<float>(path);
  std::ifstream meta(path.string() + ".meta");
  if (!meta)
    throw IoError("missing atlas sidecar " + path.string() + ".meta");
  std::string magic, k1, k2, k3;
  int version = 0, resolution = 0;
  if (!(meta >> magic >> version >> k1 >> atlas.case_count >> k2 >> resolution >> k3 >> atlas.padding) ||
      magic != "organloc-atlas" || k1 != "case_count" || k2 != "resolution" || k3 != "padding")
    throw FormatError("malformed atlas sidecar");
  if (version != 1)
    throw FormatError("unsupported atlas sidecar version");
  std::string k4, first;
  if (!(meta >> k4 >> first) || k4 != "intensity")
    throw FormatError("malformed atlas sidecar");
  if (first != "none")
  {
    IntensityModel m;
    try
    {
      m.fg_mean = std::stod(first);
    }
    catch (const std::exception&)
    {
      throw FormatError("malformed atlas intensity line");
    }
    if (!(meta >> m.fg_sd >> m.bg_mean >> m.bg_sd))
      throw FormatError("malformed atlas intensity line");
    m.validate();
    atlas.intensity = m;
  }
  if (atlas.grid.dims() != Vec3i::Constant(resolution) || atlas.grid.channels() != 1)
    throw ValidationError("atlas grid does not match its sidecar resolution");
  if (atlas.case_count < 1)
    throw ValidationError("atlas sidecar reports no cases");
  atlas.grid.set_origin(Vec3d::Constant(-atlas.padding));
  if ((atlas.grid.data() < 0.0f).any() || (atlas.grid.data() > 1.0f).any())
    throw ValidationError("atlas values must lie in [0,1]");
  return atlas;
}

} // namespace organloc
