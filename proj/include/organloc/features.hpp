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

#include "organloc/integral.hpp"
#include "organloc/volume.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace organloc {

/// p x p x p cube of voxels centered at `center` (p odd).
struct Patch
{
  Vec3i center = Vec3i::Zero();
  int size = 1;

  Vec3i corner() const { return center - Vec3i::Constant(size / 2); }
};

/// Inclusive voxel offsets relative to the patch corner, inside [0, p)^3.
struct CuboidSpec
{
  Vec3i lo = Vec3i::Zero();
  Vec3i hi = Vec3i::Zero();

  Eigen::Index voxel_count() const { return (hi - lo + Vec3i::Ones()).cast<Eigen::Index>().prod(); }
  bool valid_for(int patch_size) const
  {
    return (lo.array() >= 0).all() && (hi.array() >= lo.array()).all() && (hi.array() < patch_size).all();
  }
  bool operator==(const CuboidSpec&) const = default;
};

/// Plane through the patch center: axial is x-y (fixed z), coronal is x-z
/// (fixed y), sagittal is y-z (fixed x).
enum class PlaneAxis : int
{
  Axial = 0,
  Coronal = 1,
  Sagittal = 2
};

/// mean(F1) - mean(F2)
struct Diff1
{
  CuboidSpec f1, f2;
  bool operator==(const Diff1&) const = default;
};

/// mean(F1) + mean(F2) - 2 mean(F3)
struct Diff2
{
  CuboidSpec f1, f2, f3;
  bool operator==(const Diff2&) const = default;
};

/// 8-bit texture code of one deep-feature channel on a plane through the center.
struct Lbp
{
  PlaneAxis plane = PlaneAxis::Axial;
  int channel = 0;
  bool operator==(const Lbp&) const = default;
};

/// Class likelihood sampled at the patch center.
struct Likelihood
{
  int channel = 0;
  bool operator==(const Likelihood&) const = default;
};

using FeatureDescriptor = std::variant<Diff1, Diff2, Lbp, Likelihood>;

struct BankCounts
{
  int diff1 = 0;
  int diff2 = 0;
  int lbp = 0;
  int likelihood = 0;

  int total() const { return diff1 + diff2 + lbp + likelihood; }
  bool operator==(const BankCounts&) const = default;
};

struct FeatureBank
{
  std::vector<FeatureDescriptor> descriptors;
  int patch_size = 25;
  int channels = 64; ///< deep-feature channels the Lbp entries index into
  std::uint64_t seed = 0;
  BankCounts counts;

  std::size_t size() const { return descriptors.size(); }
  bool needs_deep() const { return counts.lbp > 0; }
  bool needs_likelihood() const { return counts.likelihood > 0; }

  /// Versioned text form: a header line, a parameter line, one descriptor per line.
  std::string serialize() const;
  static FeatureBank parse(const std::string& text);

  /// FNV-1a 64 of serialize(); ties forests to the bank that produced their inputs.
  std::uint64_t fingerprint() const;
};

/// Descriptors ordered diff1, diff2, lbp, likelihood. Each kind draws from its
/// own seed stream, so changing one count leaves the other kinds unchanged.
/// Cuboid extents are uniform in [1, ceil(p/2)] per axis, positions uniform.
FeatureBank sample_bank(std::uint64_t seed, const BankCounts& counts, int patch_size, int channels);

/// Nearest-neighbor index mapping from a reference grid onto a second grid
/// through world coordinates. Axis-aligned, so stored as per-axis tables.
class GridMap
{
public:
  GridMap() = default;

  template <typename A, typename B>
  GridMap(const Volume<A>& from, const Volume<B>& to)
  {
    for (int a = 0; a < 3; ++a)
    {
      table_[a].resize(std::size_t(from.dims()[a]));
      for (int i = 0; i < from.dims()[a]; ++i)
      {
        Vec3i p = Vec3i::Zero();
        p[a] = i;
        table_[a][std::size_t(i)] = to.nearest_index(from.world(p))[a];
      }
    }
  }

  Vec3i operator()(const Vec3i& p) const
  {
    return {table_[0][std::size_t(p.x())], table_[1][std::size_t(p.y())], table_[2][std::size_t(p.z())]};
  }

private:
  std::array<std::vector<int>, 3> table_;
};

/// Throws BoundsError unless p is odd and the patch lies inside `dims`.
void check_patch(const Patch& patch, const Vec3i& dims);

double eval_diff1(const IntegralVolume& iv, const Patch& patch, const CuboidSpec& f1, const CuboidSpec& f2);
double eval_diff2(const IntegralVolume& iv, const Patch& patch, const CuboidSpec& f1, const CuboidSpec& f2,
                  const CuboidSpec& f3);

/// LBP code of a square image: 3x3 grid of b x b blocks, b = floor(rows / 3),
/// anchored at (0,0). Bit k is set iff neighbor block k's mean >= center mean;
/// neighbors are numbered clockwise from the top-left block.
int lbp_code(const Eigen::Ref<const Eigen::MatrixXf>& image);

/// The p x p image of one channel on the chosen plane through the patch
/// center. Row index follows y (axial) or z (coronal, sagittal); column
/// index follows x (axial, coronal) or y (sagittal). Patch indices live on
/// the reference grid of `map`.
Eigen::MatrixXf plane_image(const FeatureVolume& fvol, const GridMap& map, const Patch& patch, PlaneAxis plane,
                            int channel);

/// Patch on the feature volume's own grid.
int eval_lbp(const FeatureVolume& fvol, const Patch& patch, PlaneAxis plane, int channel);
int eval_lbp(const FeatureVolume& fvol, const GridMap& map, const Patch& patch, PlaneAxis plane, int channel);

double eval_likelihood(const FeatureVolume& lik, const Vec3i& v, int channel);

/// Per-case evaluation state: the CT integral volume plus grid maps into the
/// optional deep-feature and likelihood volumes. Holds references; the
/// volumes must outlive it.
class FeatureEvaluator
{
public:
  FeatureEvaluator(const ScalarVolume& ct, const FeatureVolume* deep, const FeatureVolume* likelihood);

  double eval(const FeatureDescriptor& d, const Patch& patch) const;

  /// Element i is descriptor i of the bank evaluated on the patch.
  Eigen::VectorXd feature_vector(const FeatureBank& bank, const Patch& patch) const;

  /// Writes into a preallocated row, e.g. of a sample matrix.
  template <typename Row>
  void fill(const FeatureBank& bank, const Patch& patch, Row&& out) const
  {
    check_patch(patch, ct_.dims());
    for (std::size_t i = 0; i < bank.descriptors.size(); ++i)
      out[Eigen::Index(i)] = static_cast<std::decay_t<decltype(out[0])>>(eval(bank.descriptors[i], patch));
  }

  /// Throws ValidationError if the bank needs a volume this evaluator lacks.
  void check_bank(const FeatureBank& bank) const;

  const ScalarVolume& ct() const { return ct_; }

private:
  const ScalarVolume& ct_;
  IntegralVolume integral_;
  const FeatureVolume* deep_;
  const FeatureVolume* likelihood_;
  GridMap deep_map_;
  GridMap lik_map_;
};

Eigen::VectorXd feature_vector(const ScalarVolume& ct, const FeatureVolume* deep, const FeatureVolume* likelihood,
                               const FeatureBank& bank, const Patch& patch);

} // namespace organloc
