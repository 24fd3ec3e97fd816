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

#include "organloc/volume.hpp"

#include <iosfwd>
#include <vector>

namespace organloc {

/// Axis-aligned box b = (x1, x2, y1, y2, z1, z2) in world millimeters.
struct BoundingBox
{
  Vec6d b = Vec6d::Zero();

  BoundingBox() = default;
  explicit BoundingBox(const Vec6d& faces) : b(faces) {}
  BoundingBox(double x1, double x2, double y1, double y2, double z1, double z2)
  {
    b << x1, x2, y1, y2, z1, z2;
  }

  Vec3d lo() const { return {b[0], b[2], b[4]}; }
  Vec3d hi() const { return {b[1], b[3], b[5]}; }
  Vec3d extent() const { return hi() - lo(); }
  Vec3d center() const { return 0.5 * (lo() + hi()); }

  bool valid() const { return b.allFinite() && b[0] <= b[1] && b[2] <= b[3] && b[4] <= b[5]; }
  /// Throws ValidationError unless valid().
  void validate() const;

  /// Swaps any crossed face pair so the box becomes valid.
  BoundingBox ordered() const;
  BoundingBox expanded(double margin_mm) const;
  BoundingBox translated(const Vec3d& t) const;

  static BoundingBox from_corners(const Vec3d& lo, const Vec3d& hi)
  {
    return {lo.x(), hi.x(), lo.y(), hi.y(), lo.z(), hi.z()};
  }

  bool operator==(const BoundingBox& o) const { return b == o.b; }
};

/// Minimal box around the nonzero voxels, in world mm of voxel centers.
/// Throws ValidationError on an empty mask.
BoundingBox mask_bounding_box(const MaskVolume& mask);

/// Same, as inclusive voxel index bounds.
void mask_index_bounds(const MaskVolume& mask, Vec3i& lo, Vec3i& hi);

/// Voxel index range [lo, hi] whose centers lie inside the box, clamped to the grid.
/// Returns false when no voxel center is inside.
template <typename T>
bool box_index_range(const Volume<T>& grid, const BoundingBox& box, Vec3i& lo, Vec3i& hi);

/// One box per line, "x1 x2 y1 y2 z1 z2".
void write_boxes(std::ostream& out, const std::vector<BoundingBox>& boxes);
std::vector<BoundingBox> read_boxes(std::istream& in);

template <typename T>
bool box_index_range(const Volume<T>& grid, const BoundingBox& box, Vec3i& lo, Vec3i& hi)
{
  for (int a = 0; a < 3; ++a)
  {
    // voxel center i is inside when lo <= origin + (i + 0.5) s <= hi
    const double s = grid.spacing()[a];
    const double o = grid.origin()[a];
    const double first = std::ceil((box.b[2 * a] - o) / s - 0.5 - 1e-9);
    const double last = std::floor((box.b[2 * a + 1] - o) / s - 0.5 + 1e-9);
    const double l = std::max(first, 0.0);
    const double h = std::min(last, double(grid.dims()[a] - 1));
    if (h < l)
      return false;
    lo[a] = int(l);
    hi[a] = int(h);
  }
  return true;
}

} // namespace organloc
