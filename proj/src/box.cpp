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

#include "organloc/box.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace organloc {

void BoundingBox::validate() const
{
  if (!valid())
    throw ValidationError("bounding box faces must be finite with x1<=x2, y1<=y2, z1<=z2");
}

BoundingBox BoundingBox::ordered() const
{
  BoundingBox r = *this;
  for (int a = 0; a < 3; ++a)
    if (r.b[2 * a] > r.b[2 * a + 1])
      std::swap(r.b[2 * a], r.b[2 * a + 1]);
  return r;
}

BoundingBox BoundingBox::expanded(double margin_mm) const
{
  BoundingBox r = *this;
  for (int a = 0; a < 3; ++a)
  {
    r.b[2 * a] -= margin_mm;
    r.b[2 * a + 1] += margin_mm;
  }
  return r;
}

BoundingBox BoundingBox::translated(const Vec3d& t) const
{
  BoundingBox r = *this;
  for (int a = 0; a < 3; ++a)
  {
    r.b[2 * a] += t[a];
    r.b[2 * a + 1] += t[a];
  }
  return r;
}

void mask_index_bounds(const MaskVolume& mask, Vec3i& lo, Vec3i& hi)
{
  lo = mask.dims();
  hi = Vec3i::Constant(-1);
  for (int z = 0; z < mask.nz(); ++z)
    for (int y = 0; y < mask.ny(); ++y)
      for (int x = 0; x < mask.nx(); ++x)
        if (mask(x, y, z))
        {
          const Vec3i p(x, y, z);
          lo = lo.cwiseMin(p);
          hi = hi.cwiseMax(p);
        }
  if (hi.x() < 0)
    throw ValidationError("mask is empty");
}

BoundingBox mask_bounding_box(const MaskVolume& mask)
{
  Vec3i lo, hi;
  mask_index_bounds(mask, lo, hi);
  return BoundingBox::from_corners(mask.world(lo), mask.world(hi));
}

void write_boxes(std::ostream& out, const std::vector<BoundingBox>& boxes)
{
  const auto old_precision = out.precision(17);
  for (const auto& box : boxes)
  {
    for (int i = 0; i < 6; ++i)
      out << (i ? " " : "") << box.b[i];
    out << '\n';
  }
  out.precision(old_precision);
}

std::vector<BoundingBox> read_boxes(std::istream& in)
{
  std::vector<BoundingBox> boxes;
  std::string line;
  while (std::getline(in, line))
  {
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#')
      continue;
    std::istringstream ls(line);
    BoundingBox box;
    for (int i = 0; i < 6; ++i)
      if (!(ls >> box.b[i]))
        throw FormatError("box line needs six numbers: " + line);
    box.validate();
    boxes.push_back(box);
  }
  return boxes;
}

} // namespace organloc
