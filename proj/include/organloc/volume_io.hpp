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

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>

namespace organloc {

/// Any volume as stored on disk, typed by its dtype field.
using AnyVolume = std::variant<Volume<std::uint8_t>, Volume<std::int16_t>, Volume<float>>;

/// Serializes to the VOLF1 layout:
///   "VOLF" | u32 version=1 | u32 dtype | u32 nx, ny, nz | u32 channels |
///   f64 sx, sy, sz | samples (channel-major, x fastest)
/// All fields little-endian. Volumes with a non-zero origin are rejected,
/// since the format has no place to store it.
template <typename T>
std::string encode_volume(const Volume<T>& v);

AnyVolume decode_volume(std::string_view bytes);

/// Header only; throws like decode_volume on malformed input.
VolumeHeader decode_header(std::string_view bytes);

template <typename T>
void save_volume(const std::filesystem::path& path, const Volume<T>& v);

AnyVolume load_volume(const std::filesystem::path& path);

/// Loads and converts the samples to T.
template <typename T>
Volume<T> load_volume_as(const std::filesystem::path& path)
{
  return std::visit([](auto&& v) { return volume_cast<T>(v); }, load_volume(path));
}

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

} // namespace organloc
