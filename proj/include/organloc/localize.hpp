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

#include "organloc/box.hpp"
#include "organloc/features.hpp"
#include "organloc/forest.hpp"

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace organloc {

/// v̂ = (vx, vx, vy, vy, vz, vz).
inline Vec6d face_coordinates(const Vec3d& v)
{
  Vec6d h;
  h << v.x(), v.x(), v.y(), v.y(), v.z(), v.z();
  return h;
}

/// Regular lattice of patch centers, all patches fully inside the volume.
struct PatchGrid
{
  int patch_size = 25;
  int stride = 8;
  std::vector<Vec3i> centers;

  std::size_t size() const { return centers.size(); }
  bool empty() const { return centers.empty(); }
  Patch patch(std::size_t i) const { return {centers[i], patch_size}; }
};

/// Centers start at p/2 on each axis and advance by `stride` while the patch
/// stays inside. A volume thinner than p on any axis gives an empty grid.
PatchGrid place_patches(const Vec3i& dims, int patch_size, int stride);

/// d = b - v̂ per patch, with v the world position (mm) of each center on `grid_ref`.
template <typename T>
std::vector<Vec6d> extract_targets(const PatchGrid& grid, const BoundingBox& box, const Volume<T>& grid_ref)
{
  std::vector<Vec6d> d;
  d.reserve(grid.size());
  for (const auto& c : grid.centers)
    d.push_back(box.b - face_coordinates(grid_ref.world(c)));
  return d;
}

struct LocalizerParams
{
  BankCounts counts{40, 40, 40, 8};
  std::uint64_t bank_seed = 7;
  int patch_size = 25;
  int stride = 8;
  int channels = 64; ///< deep-feature channels expected by the LBP entries
  TrainConfig forest;
};

/// References into caller-owned volumes. `deep` / `likelihood` may be null
/// when the bank has no features that read them.
struct LocalizerCase
{
  const ScalarVolume* ct = nullptr;
  const FeatureVolume* deep = nullptr;
  const FeatureVolume* likelihood = nullptr;
  BoundingBox box;
};

/// Six forests, one per face (x1, x2, y1, y2, z1, z2), sharing one bank.
class LocalizerModel
{
public:
  static constexpr std::uint32_t kFormatVersion = 1;

  FeatureBank bank;
  std::array<RegressionForest, 6> forests;
  int patch_size = 25;
  int stride = 8;

  /// Binary bundle: "OLMB", u32 version, then eight u64-length-prefixed
  /// sections: config text (key = value), bank text, six forest sections.
  std::string serialize() const;
  static LocalizerModel parse(std::string_view bytes);

  void save(const std::filesystem::path& path) const;
  static LocalizerModel load(const std::filesystem::path& path);

  /// Throws ValidationError if a forest's fingerprint differs from the bank's.
  void validate() const;
};

/// Feature rows for every patch of every case (cases in order, patches in
/// grid order) and the matching offset targets.
struct LocalizerSamples
{
  Eigen::MatrixXd features;
  Eigen::Matrix<double, Eigen::Dynamic, 6> targets;
};

LocalizerSamples collect_samples(std::span<const LocalizerCase> cases, const FeatureBank& bank, int stride);

LocalizerModel train_localizer(std::span<const LocalizerCase> cases, const LocalizerParams& params);

struct BoxEstimate
{
  BoundingBox box;
  PatchGrid grid;
  std::vector<Vec6d> per_patch; ///< v̂ + predicted d for each patch
};

/// Each face is the mean of the per-patch face estimates, summed in grid
/// order; crossed face pairs are swapped afterwards.
BoxEstimate estimate_box(const LocalizerModel& model, const ScalarVolume& ct, const FeatureVolume* deep,
                         const FeatureVolume* likelihood);

/// Mean of per-patch face estimates, reordered to a valid box.
BoundingBox aggregate_face_estimates(std::span<const Vec6d> per_patch);

struct FaceDistance
{
  double mean = 0.0;
  Vec6d per_face = Vec6d::Zero();
};

FaceDistance face_distance(const BoundingBox& est, const BoundingBox& gt);

} // namespace organloc
