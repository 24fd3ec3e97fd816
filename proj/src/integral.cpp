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

#include "organloc/integral.hpp"

namespace organloc {

double IntegralVolume::sum(const Vec3i& b, const Vec3i& e) const
{
  if ((e.array() <= b.array()).any())
    return 0.0;
  return at(e.x(), e.y(), e.z()) - at(b.x(), e.y(), e.z()) - at(e.x(), b.y(), e.z()) -
         at(e.x(), e.y(), b.z()) + at(b.x(), b.y(), e.z()) + at(b.x(), e.y(), b.z()) +
         at(e.x(), b.y(), b.z()) - at(b.x(), b.y(), b.z());
}

double cuboid_sum(const IntegralVolume& iv, const Vec3i& begin, const Vec3i& end)
{
  if ((begin.array() < 0).any() || (end.array() > iv.dims().array()).any() ||
      (end.array() < begin.array()).any())
    throw BoundsError("cuboid outside integral volume");
  return iv.sum(begin, end);
}

double cuboid_mean(const IntegralVolume& iv, const Vec3i& lo, const Vec3i& hi)
{
  if ((hi.array() < lo.array()).any())
    throw BoundsError("cuboid lo exceeds hi");
  if ((lo.array() < 0).any() || (hi.array() >= iv.dims().array()).any())
    throw BoundsError("cuboid outside integral volume");
  const Vec3i end = hi + Vec3i::Ones();
  const double count = double(end.x() - lo.x()) * (end.y() - lo.y()) * (end.z() - lo.z());
  return iv.sum(lo, end) / count;
}

} // namespace organloc
