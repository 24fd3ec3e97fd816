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

#include "organloc/atlas.hpp"
#include "organloc/eval.hpp"
#include "organloc/phantom.hpp"

#include <doctest.h>

#include <filesystem>

using namespace organloc;

namespace {

Phantom ellipsoid_phantom(std::uint64_t seed, double noise = 0.0)
{
  PhantomSetParams p;
  p.background_noise = noise;
  p.organ_noise = noise;
  return generate_phantom(random_phantom_config(p, seed));
}

ProbAtlas uniform_atlas(float q, int res = 8)
{
  ProbAtlas a;
  a.grid = Volume<float>(Vec3i::Constant(res), Vec3d::Constant(1.0 / res), 1, q);
  a.case_count = 1;
  return a;
}

} // namespace

TEST_CASE("a mask that fills its box gives an all-ones atlas")
{
  MaskVolume m(Vec3i(20, 20, 20), Vec3d::Ones());
  for (int z = 4; z <= 12; ++z)
    for (int y = 6; y <= 15; ++y)
      for (int x = 3; x <= 9; ++x)
        m(x, y, z) = 1;
  const AtlasCase c{&m, mask_bounding_box(m)};
  const ProbAtlas a = build_atlas(std::span(&c, 1), 16, 0.0);
  CHECK((a.grid.data() == 1.0f).all());

  // with padding, every cell whose normalized position is inside [0,1] is 1
  const ProbAtlas p = build_atlas(std::span(&c, 1), 24, 0.25);
  for (int z = 0; z < 24; ++z)
    for (int y = 0; y < 24; ++y)
      for (int x = 0; x < 24; ++x)
      {
        const Vec3d u = p.grid.world(Vec3i(x, y, z));
        if ((u.array() >= 0.0).all() && (u.array() <= 1.0).all())
          CHECK(p.grid(x, y, z) == 1.0f);
      }
}

TEST_CASE("complementary halves average to one half")
{
  MaskVolume a(Vec3i(12, 8, 8), Vec3d::Ones()), b = a;
  for (int z = 0; z < 8; ++z)
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 12; ++x)
        (x < 6 ? a : b)(x, y, z) = 1;
  // both boxes span all voxel centers: x in [0.5, 11.5]
  const BoundingBox box(0.5, 11.5, 0.5, 7.5, 0.5, 7.5);
  const AtlasCase cases[] = {{&a, box}, {&b, box}};
  const ProbAtlas atlas = build_atlas(cases, 16, 0.0);
  int checked = 0;
  for (int z = 0; z < 16; ++z)
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x)
      {
        const double wx = 0.5 + atlas.grid.world(Vec3i(x, y, z)).x() * 11.0;
        // cells whose trilinear stencil stays on one side of the cut
        if (wx <= 5.5 || wx >= 6.5)
        {
          CHECK(atlas.grid(x, y, z) == 0.5f);
          ++checked;
        }
      }
  CHECK(checked > 0);
}

TEST_CASE("projecting a case's own atlas back onto its box recovers the mask")
{
  for (std::uint64_t seed : {1, 2, 3})
  {
    const Phantom ph = ellipsoid_phantom(seed);
    const MaskVolume m = ph.organ_mask(0);
    const AtlasCase c{&m, ph.boxes[0]};
    const ProbAtlas atlas = build_atlas(std::span(&c, 1), 64);
    for (double margin : {0.0, 10.0})
    {
      const ScalarVolume prob = project_atlas(atlas, ph.boxes[0], margin, ph.ct);
      CHECK(dice(rough_segment(prob, 0.5), m) >= 0.95);
    }
  }
}

TEST_CASE("uniform and zero atlases")
{
  const ScalarVolume target(Vec3i(30, 30, 30), Vec3d(1.0, 1.0, 2.0));
  const BoundingBox box(8.0, 14.0, 10.0, 20.0, 12.0, 30.0);
  const double margin = 3.0;
  const ScalarVolume prob = project_atlas(uniform_atlas(0.3f), box, margin, target);
  const BoundingBox grown = box.expanded(margin);
  for (int z = 0; z < 30; ++z)
    for (int y = 0; y < 30; ++y)
      for (int x = 0; x < 30; ++x)
      {
        const Vec3d w = target.world(Vec3i(x, y, z));
        const bool in = (w.array() >= grown.lo().array()).all() && (w.array() <= grown.hi().array()).all();
        REQUIRE(prob(x, y, z) == (in ? 0.3f : 0.0f));
      }

  const ScalarVolume zero = project_atlas(uniform_atlas(0.0f), box, margin, target);
  CHECK((zero.data() == 0.0f).all());

  CHECK_THROWS_AS(project_atlas(uniform_atlas(0.5f), BoundingBox(100, 110, 0, 5, 0, 5), 1.0, target),
                  ValidationError);
}

TEST_CASE("rough segmentation thresholds")
{
  ScalarVolume p(Vec3i(2, 1, 1), Vec3d::Ones());
  p(0, 0, 0) = 0.4f;
  p(1, 0, 0) = 0.6f;
  const MaskVolume r = rough_segment(p, 0.5);
  CHECK(r(0, 0, 0) == 0);
  CHECK(r(1, 0, 0) == 1);

  const Phantom ph = ellipsoid_phantom(5);
  const MaskVolume m = ph.organ_mask(0);
  const AtlasCase c{&m, ph.boxes[0]};
  const ProbAtlas atlas = build_atlas(std::span(&c, 1), 32);
  const ScalarVolume prob = project_atlas(atlas, ph.boxes[0], 6.0, ph.ct);
  const MaskVolume support = rough_segment(prob, 0.0);
  CHECK((support.data() == (prob.data() > 0.0f).cast<std::uint8_t>()).all());

  MaskVolume prev = support;
  for (double t : {0.1, 0.25, 0.5, 0.75, 0.9, 1.0})
  {
    const MaskVolume cur = rough_segment(prob, t);
    CHECK(((cur.data() != 0) && (prev.data() == 0)).count() == 0);
    prev = cur;
  }
}

TEST_CASE("atlas values stay in [0,1] and projections stay local")
{
  std::vector<Phantom> phantoms;
  std::vector<MaskVolume> masks;
  for (std::uint64_t s = 10; s < 14; ++s)
  {
    phantoms.push_back(ellipsoid_phantom(s, 10.0));
    masks.push_back(phantoms.back().organ_mask(0));
  }
  std::vector<AtlasCase> cases;
  for (std::size_t i = 0; i < phantoms.size(); ++i)
    cases.push_back({&masks[i], phantoms[i].boxes[0]});
  const ProbAtlas atlas = build_atlas(cases, 32);
  CHECK((atlas.grid.data() >= 0.0f).all());
  CHECK((atlas.grid.data() <= 1.0f).all());

  const BoundingBox box(20.0, 41.0, 18.0, 37.5, 25.0, 44.0);
  const ScalarVolume prob = project_atlas(atlas, box, 5.0, phantoms[0].ct);
  CHECK((prob.data() >= 0.0f).all());
  CHECK((prob.data() <= 1.0f).all());
  const BoundingBox grown = box.expanded(5.0);
  for (int z = 0; z < prob.nz(); ++z)
    for (int y = 0; y < prob.ny(); ++y)
      for (int x = 0; x < prob.nx(); ++x)
        if (prob(x, y, z) > 0.0f)
        {
          const Vec3d w = prob.world(Vec3i(x, y, z));
          REQUIRE((w.array() >= grown.lo().array()).all());
          REQUIRE((w.array() <= grown.hi().array()).all());
        }
}

TEST_CASE("duplicating a single case leaves the atlas unchanged")
{
  const Phantom ph = ellipsoid_phantom(7);
  const MaskVolume m = ph.organ_mask(0);
  const AtlasCase one[] = {{&m, ph.boxes[0]}};
  const AtlasCase two[] = {{&m, ph.boxes[0]}, {&m, ph.boxes[0]}};
  CHECK((build_atlas(one, 24).grid.data() == build_atlas(two, 24).grid.data()).all());
}

TEST_CASE("atlas build errors")
{
  CHECK_THROWS_AS(build_atlas(std::span<const AtlasCase>{}, 16), ValidationError);
  const MaskVolume empty(Vec3i(8, 8, 8), Vec3d::Ones());
  const AtlasCase c{&empty, BoundingBox(1, 5, 1, 5, 1, 5)};
  CHECK_THROWS_AS(build_atlas(std::span(&c, 1), 16), ValidationError);
  const Phantom ph = ellipsoid_phantom(1);
  const MaskVolume m = ph.organ_mask(0);
  const AtlasCase ok{&m, ph.boxes[0]};
  CHECK_THROWS_AS(build_atlas(std::span(&ok, 1), 0), ValidationError);
  CHECK_THROWS_AS(build_atlas(std::span(&ok, 1), 8, -0.1), ValidationError);
}

TEST_CASE("intensity model and posterior")
{
  PhantomSetParams params;
  const Phantom ph = generate_phantom(random_phantom_config(params, 3));
  const MaskVolume m = ph.organ_mask(0);
  const AtlasCase c{&m, ph.boxes[0], &ph.ct};
  const IntensityModel im = fit_intensity_model(std::span(&c, 1), 10.0);
  CHECK(std::abs(im.fg_mean - 100.0) < 25.0);
  CHECK(std::abs(im.bg_mean) < 3.0);
  CHECK(std::abs(im.bg_sd - 15.0) < 2.0);
  CHECK(im.log_ratio(im.fg_mean) > 0.0);
  CHECK(im.log_ratio(im.bg_mean) < 0.0);

  ScalarVolume prob(Vec3i(3, 1, 1), Vec3d::Ones(), 1, 0.5f);
  ScalarVolume ct(Vec3i(3, 1, 1), Vec3d::Ones());
  ct(0, 0, 0) = float(im.fg_mean);
  ct(1, 0, 0) = float(im.bg_mean);
  ct(2, 0, 0) = float(im.fg_mean);
  MaskVolume roi(Vec3i(3, 1, 1), Vec3d::Ones(), 1, 1);
  roi(2, 0, 0) = 0;
  apply_intensity_model(prob, ct, roi, im, 0.01);
  CHECK(prob(0, 0, 0) > 0.5f);
  CHECK(prob(1, 0, 0) < 0.5f);
  CHECK(prob(2, 0, 0) == 0.5f);
  CHECK_THROWS_AS(apply_intensity_model(prob, ct, roi, im, 0.5), ValidationError);
}

TEST_CASE("atlas file round trip")
{
  const Phantom ph = ellipsoid_phantom(2, 5.0);
  const MaskVolume m = ph.organ_mask(0);
  const AtlasCase c{&m, ph.boxes[0], &ph.ct};
  ProbAtlas a = build_atlas(std::span(&c, 1), 20);
  a.intensity = fit_intensity_model(std::span(&c, 1), 4.0);
  const auto path = std::filesystem::temp_directory_path() / "organloc_unit_atlas.volf";
  save_atlas(path, a);
  const ProbAtlas b = load_atlas(path);
  CHECK((b.grid.data() == a.grid.data()).all());
  CHECK(b.grid.origin() == a.grid.origin());
  CHECK(b.grid.spacing() == a.grid.spacing());
  CHECK(b.case_count == 1);
  CHECK(b.padding == a.padding);
  REQUIRE(b.intensity.has_value());
  CHECK(b.intensity->fg_mean == a.intensity->fg_mean);
  CHECK(b.intensity->bg_sd == a.intensity->bg_sd);

  a.intensity.reset();
  save_atlas(path, a);
  CHECK_FALSE(load_atlas(path).intensity.has_value());
}
