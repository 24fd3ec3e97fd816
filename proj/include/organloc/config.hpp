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
#include <map>
#include <set>
#include <string>

namespace organloc {

/// Flat "key = value" text; '#' starts a comment, blank lines are ignored.
class KeyValueConfig
{
public:
  KeyValueConfig() = default;
  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Either one number (used for all axes) or three.
  Vec3d get_vec3(const std::string& key, const Vec3d& fallback) const;

  /// Throws ConfigError naming any key never read through a getter.
  void check_all_used() const;

private:
  const std::string* find(const std::string& key) const;

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

PipelineConfig pipeline_config_from(const KeyValueConfig& kv);
DatasetParams dataset_params_from(const KeyValueConfig& kv);

} // namespace organloc
