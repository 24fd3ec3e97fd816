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

#include "organloc/pipeline.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace organloc {

/// One case per line: "id ct feat lik mask box". Paths are relative to the
/// manifest's directory; "-" marks an absent feature or likelihood volume.
struct ManifestEntry
{
  std::string id;
  std::filesystem::path ct;
  std::filesystem::path deep;
  std::filesystem::path likelihood;
  std::filesystem::path mask;
  std::filesystem::path box;
};

struct Manifest
{
  std::filesystem::path base_dir;
  std::vector<ManifestEntry> entries;

  static Manifest load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

/// Mask is binarized to label 1 (the target organ); the box is the first line of the box file.
CaseData load_case(const Manifest& manifest, const ManifestEntry& entry);
std::vector<CaseData> load_cases(const Manifest& manifest);

BoundingBox load_box(const std::filesystem::path& path);
void save_boxes(const std::filesystem::path& path, const std::vector<BoundingBox>& boxes);

/// Writes `count` phantom cases under out_dir/<id>/ and out_dir/manifest.txt.
Manifest write_phantom_dataset(const DatasetParams& params, const std::filesystem::path& out_dir);

} // namespace organloc
