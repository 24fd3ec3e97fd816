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

#include "organloc/common.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <type_traits>

namespace organloc {

enum class DType : std::uint32_t
{
  U8 = 0,
  I16 = 1,
  F32 = 2
};

template <typename T>
struct dtype_of;
template <>
struct dtype_of<std::uint8_t> : std::integral_constant<DType, DType::U8>
{};
template <>
struct dtype_of<std::int16_t> : std::integral_constant<DType, DType::I16>
{};
template <>
struct dtype_of<float> : std::integral_constant<DType, DType::F32>
{};

std::string to_string(DType t);

struct VolumeHeader
{
  Vec3i dims = Vec3i::Ones();
  int channels = 1;
  Vec3d spacing = Vec3d::Ones();
  DType dtype = DType::F32;

  /// Throws ValidationError on non-positive dims/channels or bad spacing.
  void validate() const;
  Eigen::Index voxel_count() const { return Eigen::Index(dims.x()) * dims.y() * dims.z(); }
  Eigen::Index sample_count() const { return voxel_count() * channels; }
};

/// Dense 3D grid with C channels and physical spacing in mm.
///
/// Layout is channel-major, x fastest: index(x,y,z,c) = c*nx*ny*nz + z*nx*ny + y*nx + x.
/// The world position of voxel i is origin + (i + 0.5) * spacing per axis.
/// The origin is an in-memory attribute only; the file format stores none.
template <typename T>
class Volume
{
public:
  using Scalar = T;
  using Array = Eigen::Array<T, Eigen::Dynamic, 1>;

  Volume() = default;

  Volume(const Vec3i& dims, const Vec3d& spacing, int channels = 1, T fill = T{})
    : dims_(dims), spacing_(spacing), channels_(channels)
  {
    header().validate();
    data_ = Array::Constant(header().sample_count(), fill);
  }

  const Vec3i& dims() const { return dims_; }
  const Vec3d& spacing() const { return spacing_; }
  const Vec3d& origin() const { return origin_; }
  void set_origin(const Vec3d& o) { origin_ = o; }
  int channels() const { return channels_; }

  int nx() const { return dims_.x(); }
  int ny() const { return dims_.y(); }
  int nz() const { return dims_.z(); }

  Eigen::Index voxel_count() const { return Eigen::Index(dims_.x()) * dims_.y() * dims_.z(); }
  bool empty() const { return data_.size() == 0; }

  VolumeHeader header() const { return {dims_, channels_, spacing_, dtype_of<T>::value}; }

  Eigen::Index index(int x, int y, int z, int c = 0) const
  {
    return Eigen::Index(c) * voxel_count() + (Eigen::Index(z) * dims_.y() + y) * dims_.x() + x;
  }
  Eigen::Index index(const Vec3i& p, int c = 0) const { return index(p.x(), p.y(), p.z(), c); }

  T& operator()(int x, int y, int z, int c = 0) { return data_[index(x, y, z, c)]; }
  const T& operator()(int x, int y, int z, int c = 0) const { return data_[index(x, y, z, c)]; }
  T& operator()(const Vec3i& p, int c = 0) { return data_[index(p, c)]; }
  const T& operator()(const Vec3i& p, int c = 0) const { return data_[index(p, c)]; }

  Array& data() { return data_; }
  const Array& data() const { return data_; }

  /// One channel as a contiguous segment of voxel_count() samples.
  auto channel(int c) { return data_.segment(Eigen::Index(c) * voxel_count(), voxel_count()); }
  auto channel(int c) const { return data_.segment(Eigen::Index(c) * voxel_count(), voxel_count()); }

  bool contains(const Vec3i& p) const
  {
    return (p.array() >= 0).all() && (p.array() < dims_.array()).all();
  }

  Vec3d world(const Vec3i& p) const
  {
    return origin_ + (p.cast<double>().array() + 0.5).matrix().cwiseProduct(spacing_);
  }

  /// Index of the voxel whose center is nearest to a world point, clamped to the grid.
  Vec3i nearest_index(const Vec3d& w) const
  {
    Vec3i r;
    for (int a = 0; a < 3; ++a)
    {
      const double f = std::floor((w[a] - origin_[a]) / spacing_[a]);
      r[a] = static_cast<int>(std::clamp(f, 0.0, double(dims_[a] - 1)));
    }
    return r;
  }

  template <typename U>
  bool same_grid(const Volume<U>& o) const
  {
    return dims_ == o.dims() && spacing_ == o.spacing() && origin_ == o.origin();
  }

private:
  Vec3i dims_ = Vec3i::Zero();
  Vec3d spacing_ = Vec3d::Ones();
  Vec3d origin_ = Vec3d::Zero();
  int channels_ = 0;
  Array data_;
};

/// CT-like single-channel volume, I(q).
using ScalarVolume = Volume<float>;
/// Multichannel per-voxel features or class likelihoods.
using FeatureVolume = Volume<float>;
/// Binary or label mask.
using MaskVolume = Volume<std::uint8_t>;

template <typename To, typename From>
Volume<To> volume_cast(const Volume<From>& v)
{
  if constexpr (std::is_same_v<To, From>)
    return v;
  else
  {
    Volume<To> out(v.dims(), v.spacing(), v.channels());
    out.set_origin(v.origin());
    out.data() = v.data().template cast<To>();
    return out;
  }
}

/// Allocates a volume on the same grid as `like`.
template <typename T, typename U>
Volume<T> volume_like(const Volume<U>& like, int channels = 1, T fill = T{})
{
  Volume<T> out(like.dims(), like.spacing(), channels, fill);
  out.set_origin(like.origin());
  return out;
}

/// Binary mask of voxels equal to `label`.
template <typename T>
MaskVolume select_label(const Volume<T>& labels, T label)
{
  MaskVolume out = volume_like<std::uint8_t>(labels);
  out.data() = (labels.channel(0) == label).template cast<std::uint8_t>();
  return out;
}

template <typename T>
Eigen::Index count_nonzero(const Volume<T>& v)
{
  return (v.data() != T{0}).count();
}

} // namespace organloc
