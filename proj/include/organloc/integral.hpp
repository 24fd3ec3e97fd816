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

namespace organloc {

/// Summed-volume table of one channel, one larger than the source per axis.
/// Entry (x,y,z) holds the sum of source voxels with index < (x,y,z), so
/// every entry on a zero-index plane is 0. Accumulated in double.
class IntegralVolume
{
public:
  IntegralVolume() = default;

  template <typename T>
  explicit IntegralVolume(const Volume<T>& v, int channel = 0);

  /// Source volume dims (the table itself is dims + 1).
  const Vec3i& dims() const { return dims_; }

  double at(int x, int y, int z) const { return data_[(Eigen::Index(z) * sy_ + y) * sx_ + x]; }

  /// Sum over the half-open box [begin, end). Empty when any extent is 0.
  double sum(const Vec3i& begin, const Vec3i& end) const;

private:
  Vec3i dims_ = Vec3i::Zero();
  Eigen::Index sx_ = 0;
  Eigen::Index sy_ = 0;
  Eigen::ArrayXd data_;
};

template <typename T>
IntegralVolume build_integral(const Volume<T>& v, int channel = 0)
{
  return IntegralVolume(v, channel);
}

/// Sum over the half-open box [begin, end); throws BoundsError outside the volume.
double cuboid_sum(const IntegralVolume& iv, const Vec3i& begin, const Vec3i& end);

/// Mean over the inclusive box [lo, hi]; throws BoundsError if lo > hi or outside the volume.
double cuboid_mean(const IntegralVolume& iv, const Vec3i& lo, const Vec3i& hi);

template <typename T>
IntegralVolume::IntegralVolume(const Volume<T>& v, int channel)
  : dims_(v.dims()), sx_(v.nx() + 1), sy_(v.ny() + 1)
{
  if (channel < 0 || channel >= v.channels())
    throw BoundsError("integral volume channel out of range");
  data_ = Eigen::ArrayXd::Zero(sx_ * sy_ * (v.nz() + 1));
  const auto src = v.channel(channel);
  const Eigen::Index plane = sx_ * sy_;
  Eigen::Index s = 0;
  for (int z = 0; z < v.nz(); ++z)
  {
    for (int y = 0; y < v.ny(); ++y)
    {
      double row = 0.0;
      const Eigen::Index base = (Eigen::Index(z + 1) * sy_ + (y + 1)) * sx_;
      for (int x = 0; x < v.nx(); ++x)
      {
        row += static_cast<double>(src[s++]);
        // row prefix + (y-1 same z) + (same y, z-1) - (y-1, z-1)
        data_[base + x + 1] = row + data_[base - sx_ + x + 1] + data_[base - plane + x + 1] -
                              data_[base - sx_ - plane + x + 1];
      }
    }
  }
}

} // namespace organloc
