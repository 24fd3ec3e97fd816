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


#include "oracle.hpp"

#include "organloc/box.hpp"
#include "organloc/phantom.hpp"

#include <doctest.h>

#include <cstring>
#include <sstream>

using namespace organloc;

namespace {

PhantomConfig centered_config()
{
  PhantomConfig cfg;
  cfg.dims = Vec3i(40, 36, 32);
  cfg.spacing = Vec3d(1.0, 1.25, 1.5);
  Ellipsoid e;
  e.center = Vec3d(20.0, 22.5, 24.0);
  e.radii = Vec3d(9.3, 7.1, 8.4);
  e.intensity_mean = 100.0;
  cfg.organs.push_back(e);
  return cfg;
}

bool same_bytes(const ScalarVolume& a, const ScalarVolume& b)
{
  return a.data().size() == b.data().size() &&
         std::memcmp(a.data().data(), b.data().data(), std::size_t(a.data().size()) * sizeof(float)) == 0;
}

} // namespace

TEST_CASE("phantom generation is deterministic")
{
  PhantomSetParams params;
  params.dims = Vec3i(32, 32, 32);
  params.organ_count = 3;
  const Phantom a = generate_phantom(random_phantom_config(params, 9));
  const Phantom b = generate_phantom(random_phantom_config(params, 9));
  CHECK(same_bytes(a.ct, b.ct));
  CHECK((a.labels.data() == b.labels.data()).all());
  CHECK(a.boxes.size() == 3);
  for (std::size_t k = 0; k < a.boxes.size(); ++k)
    CHECK(a.boxes[k] == b.boxes[k]);
  const Phantom c = generate_phantom(random_phantom_config(params, 10));
  CHECK_FALSE(same_bytes(a.ct, c.ct));
}

TEST_CASE("zero-noise centered ellipsoid matches the analytic inequality")
{
  const PhantomConfig cfg = centered_config();
  const Phantom ph = generate_phantom(cfg);
  const Ellipsoid& e = cfg.organs[0];
  for (int z = 0; z < cfg.dims.z(); ++z)
    for (int y = 0; y < cfg.dims.y(); ++y)
      for (int x = 0; x < cfg.dims.x(); ++x)
      {
        const double wx = (x + 0.5) * cfg.spacing.x(), wy = (y + 0.5) * cfg.spacing.y();
        const double wz = (z + 0.5) * cfg.spacing.z();
        const double q = std::pow((wx - e.center.x()) / e.radii.x(), 2) +
                         std::pow((wy - e.center.y()) / e.radii.y(), 2) +
                         std::pow((wz - e.center.z()) / e.radii.z(), 2);
        const bool inside = q <= 1.0;
        REQUIRE(bool(ph.labels(x, y, z)) == inside);
        REQUIRE(ph.ct(x, y, z) == (inside ? 100.0f : 0.0f));
      }
}

TEST_CASE("returned box equals a fresh scan of the mask and is minimal")
{
  PhantomSetParams params;
  params.dims = Vec3i(48, 40, 36);
  params.spacing = Vec3d(0.8, 1.0, 1.3);
  params.organ_count = 2;
  for (std::uint64_t seed = 1; seed <= 4; ++seed)
  {
    const Phantom ph = generate_phantom(random_phantom_config(params, seed));
    for (int organ = 0; organ < 2; ++organ)
    {
      const MaskVolume m = ph.organ_mask(organ);
      Vec3d lo = Vec3d::Constant(1e300), hi = Vec3d::Constant(-1e300);
      for (int z = 0; z < m.nz(); ++z)
        for (int y = 0; y < m.ny(); ++y)
          for (int x = 0; x < m.nx(); ++x)
            if (m(x, y, z))
            {
              const Vec3d w((x + 0.5) * params.spacing.x(), (y + 0.5) * params.spacing.y(),
                            (z + 0.5) * params.spacing.z());
              lo = lo.cwiseMin(w);
              hi = hi.cwiseMax(w);
            }
      const BoundingBox& box = ph.boxes[std::size_t(organ)];
      CHECK(box == BoundingBox::from_corners(lo, hi));

      // shrinking any face by one voxel pitch loses a mask voxel
      const Eigen::Index total = count_nonzero(m);
      for (int f = 0; f < 6; ++f)
      {
        BoundingBox s = box;
        const int axis = f / 2;
        s.b[f] += (f % 2 == 0 ? 1.0 : -1.0) * params.spacing[axis];
        Eigen::Index kept = 0;
        Vec3i ilo, ihi;
        if (s.valid() && box_index_range(m, s, ilo, ihi))
          kept = Eigen::Index(oracle::box_sum(volume_cast<float>(m), ilo, ihi));
        CHECK(kept < total);
      }
    }
  }
}

TEST_CASE("likelihood channels sum to one everywhere")
{
  PhantomSetParams params;
  params.dims = Vec3i(32, 32, 32);
  params.organ_count = 3;
  const Phantom ph = generate_phantom(random_phantom_config(params, 4));
  const FeatureVolume lik = synth_likelihood_volume(ph.labels, 77);
  REQUIRE(lik.channels() == kLikelihoodChannels);
  CHECK(lik.dims() == Vec3i(16, 16, 16));
  CHECK(lik.spacing() == Vec3d(2, 2, 2));
  for (Eigen::Index v = 0; v < lik.voxel_count(); ++v)
  {
    double s = 0.0;
    for (int c = 0; c < lik.channels(); ++c)
    {
      const float p = lik.channel(c)[v];
      REQUIRE(p >= 0.0f);
      REQUIRE(p <= 1.0f);
      s += p;
    }
    REQUIRE(std::abs(s - 1.0) <= 1e-6);
  }
}

TEST_CASE("zero-noise feature channel 0 separates deep interior from far exterior")
{
  PhantomConfig cfg = centered_config();
  cfg.dims = Vec3i(56, 48, 44);
  cfg.organs[0].center = Vec3d(28.0, 30.0, 33.0);
  cfg.organs[0].radii = Vec3d(18.0, 20.0, 22.0);
  const Phantom ph = generate_phantom(cfg);
  SynthFeatureOptions opts;
  opts.noise = 0.0;
  const FeatureVolume f = synth_feature_volume(ph.labels, 4, 1, opts);
  // radius 1 blurred three times reaches 3 coarse cells, plus the half cell
  // around the coarse center, less half a fine voxel
  const Vec3d reach = 6.5 * ph.labels.spacing();
  float inside_min = 1e30f, outside_max = -1e30f;
  int n_in = 0, n_out = 0;
  for (int z = 0; z < f.nz(); ++z)
    for (int y = 0; y < f.ny(); ++y)
      for (int x = 0; x < f.nx(); ++x)
      {
        const Vec3d w = f.world(Vec3i(x, y, z));
        bool all = true, none = true;
        for (int k = 0; k < ph.labels.nz(); ++k)
          for (int j = 0; j < ph.labels.ny(); ++j)
            for (int i = 0; i < ph.labels.nx(); ++i)
            {
              const Vec3d lw = ph.labels.world(Vec3i(i, j, k));
              if (((lw - w).cwiseAbs().array() > reach.array()).any())
                continue;
              if (ph.labels(i, j, k))
                none = false;
              else
                all = false;
            }
        if (all)
        {
          inside_min = std::min(inside_min, f(x, y, z, 0));
          ++n_in;
        }
        if (none)
        {
          outside_max = std::max(outside_max, f(x, y, z, 0));
          ++n_out;
        }
      }
  REQUIRE(n_in > 0);
  REQUIRE(n_out > 0);
  CHECK(inside_min > outside_max);
}

TEST_CASE("feature synthesis is reproducible and keyed by the case seed")
{
  PhantomSetParams params;
  params.dims = Vec3i(24, 24, 24);
  const Phantom ph = generate_phantom(random_phantom_config(params, 2));
  const FeatureVolume a = synth_feature_volume(ph.labels, 8, 5);
  const FeatureVolume b = synth_feature_volume(ph.labels, 8, 5);
  const FeatureVolume c = synth_feature_volume(ph.labels, 8, 6);
  CHECK(same_bytes(a, b));
  CHECK_FALSE(same_bytes(a, c));
  CHECK(a.channels() == 8);
}

TEST_CASE("invalid phantom configs are rejected")
{
  PhantomConfig cfg = centered_config();
  cfg.spacing.x() = 0.0;
  CHECK_THROWS_AS(generate_phantom(cfg), ConfigError);
  cfg = centered_config();
  cfg.organs[0].radii.y() = -1.0;
  CHECK_THROWS_AS(generate_phantom(cfg), ConfigError);
  cfg = centered_config();
  cfg.background_noise = -1.0;
  CHECK_THROWS_AS(generate_phantom(cfg), ConfigError);
}

TEST_CASE("box text round trip keeps full precision")
{
  std::vector<BoundingBox> boxes{{0.1, 10.3, 1.0 / 3.0, 20.0, -5.5, 7.25}, {1, 2, 3, 4, 5, 6}};
  std::stringstream ss;
  write_boxes(ss, boxes);
  const auto back = read_boxes(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[0] == boxes[0]);
  CHECK(back[1] == boxes[1]);
  std::stringstream bad("1 2 3 4 5\n");
  CHECK_THROWS(read_boxes(bad));
}
