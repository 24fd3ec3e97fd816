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

#include "organloc/integral.hpp"

#include <doctest.h>

using namespace organloc;

TEST_CASE("2x2x2 ones, full extent sums to 8")
{
  const ScalarVolume v(Vec3i(2, 2, 2), Vec3d::Ones(), 1, 1.0f);
  const IntegralVolume iv = build_integral(v);
  CHECK(cuboid_sum(iv, Vec3i(0, 0, 0), Vec3i(2, 2, 2)) == 8.0);
}

TEST_CASE("x+y+z volume: corner cube sums to 12 with mean 1.5")
{
  ScalarVolume v(Vec3i(3, 3, 3), Vec3d::Ones());
  for (int z = 0; z < 3; ++z)
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 3; ++x)
        v(x, y, z) = float(x + y + z);
  const IntegralVolume iv = build_integral(v);
  CHECK(oracle::box_sum(v, Vec3i(0, 0, 0), Vec3i(1, 1, 1)) == 12.0);
  CHECK(cuboid_sum(iv, Vec3i(0, 0, 0), Vec3i(2, 2, 2)) == 12.0);
  CHECK(cuboid_mean(iv, Vec3i(0, 0, 0), Vec3i(1, 1, 1)) == 1.5);
  for (int z = 0; z < 3; ++z)
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 3; ++x)
        CHECK(cuboid_mean(iv, Vec3i(x, y, z), Vec3i(x, y, z)) == v(x, y, z));
}

TEST_CASE("empty cuboid sums to 0")
{
  const ScalarVolume v = oracle::random_volume(Vec3i(6, 5, 4), 11);
  const IntegralVolume iv = build_integral(v);
  CHECK(cuboid_sum(iv, Vec3i(2, 1, 1), Vec3i(2, 4, 3)) == 0.0);
  CHECK(cuboid_sum(iv, Vec3i(3, 3, 3), Vec3i(3, 3, 3)) == 0.0);
}

TEST_CASE("constant volume has constant cuboid means")
{
  const ScalarVolume v(Vec3i(7, 6, 5), Vec3d::Ones(), 1, 3.25f);
  const IntegralVolume iv = build_integral(v);
  Rng rng(5);
  for (int i = 0; i < 50; ++i)
  {
    Vec3i lo, hi;
    for (int a = 0; a < 3; ++a)
    {
      lo[a] = int(rng.uniform_int(0, v.dims()[a] - 1));
      hi[a] = int(rng.uniform_int(lo[a], v.dims()[a] - 1));
    }
    CHECK(cuboid_mean(iv, lo, hi) == doctest::Approx(3.25).epsilon(1e-12));
  }
}

TEST_CASE("200 random cuboids on random 16^3 volumes match the triple loop")
{
  Rng rng(2024);
  for (int vol = 0; vol < 4; ++vol)
  {
    const ScalarVolume v = oracle::random_volume(Vec3i(16, 16, 16), 100 + vol);
    const IntegralVolume iv = build_integral(v);
    for (int i = 0; i < 200; ++i)
    {
      Vec3i lo, hi;
      for (int a = 0; a < 3; ++a)
      {
        lo[a] = int(rng.uniform_int(0, 15));
        hi[a] = int(rng.uniform_int(lo[a], 15));
      }
      const double expect = oracle::box_sum(v, lo, hi);
      const double got = cuboid_sum(iv, lo, hi + Vec3i::Ones());
      CHECK(std::abs(got - expect) <= 1e-9 * std::max(1.0, std::abs(expect)));
    }
  }
}

TEST_CASE("integral of a later channel and bounds checks")
{
  ScalarVolume v(Vec3i(4, 4, 4), Vec3d::Ones(), 2, 1.0f);
  v.channel(1).setConstant(2.0f);
  const IntegralVolume iv = build_integral(v, 1);
  CHECK(cuboid_sum(iv, Vec3i(0, 0, 0), Vec3i(4, 4, 4)) == 128.0);
  CHECK_THROWS_AS(build_integral(v, 2), BoundsError);
  CHECK_THROWS_AS(cuboid_sum(iv, Vec3i(0, 0, 0), Vec3i(5, 4, 4)), BoundsError);
  CHECK_THROWS_AS(cuboid_mean(iv, Vec3i(-1, 0, 0), Vec3i(1, 1, 1)), BoundsError);
  CHECK_THROWS_AS(cuboid_mean(iv, Vec3i(2, 0, 0), Vec3i(1, 1, 1)), BoundsError);
}
