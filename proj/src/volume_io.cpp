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

#include "organloc/volume_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace organloc {

static_assert(std::endian::native == std::endian::little, "VOLF1 I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'V', 'O', 'L', 'F'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 4 + 4 * 6 + 8 * 3;

template <typename T>
void put(std::string& out, T value)
{
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T get(std::string_view bytes, std::size_t& pos)
{
  T value;
  std::memcpy(&value, bytes.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

std::size_t dtype_size(DType t)
{
  switch (t)
  {
  case DType::U8: return 1;
  case DType::I16: return 2;
  case DType::F32: return 4;
  }
  return 0;
}

template <typename T>
Volume<T> decode_payload(const VolumeHeader& h, std::string_view bytes, std::size_t pos)
{
  Volume<T> v(h.dims, h.spacing, h.channels);
  std::memcpy(v.data().data(), bytes.data() + pos, std::size_t(h.sample_count()) * sizeof(T));
  if constexpr (std::is_floating_point_v<T>)
  {
    if (!v.data().allFinite())
      throw ValidationError("volume contains non-finite samples");
  }
  return v;
}

} // namespace

std::string to_string(DType t)
{
  switch (t)
  {
  case DType::U8: return "u8";
  case DType::I16: return "i16";
  case DType::F32: return "f32";
  }
  return "unknown";
}

void VolumeHeader::validate() const
{
  if ((dims.array() < 1).any())
    throw ValidationError("volume dims must be >= 1");
  if (channels < 1)
    throw ValidationError("volume channels must be >= 1");
  if (!spacing.allFinite() || (spacing.array() <= 0.0).any())
    throw ValidationError("volume spacing must be finite and positive");
}

template <typename T>
std::string encode_volume(const Volume<T>& v)
{
  if (!v.origin().isZero(0.0))
    throw ValidationError("VOLF1 cannot store a non-zero origin");
  const VolumeHeader h = v.header();
  h.validate();

  std::string out;
  out.reserve(kHeaderBytes + std::size_t(h.sample_count()) * sizeof(T));
  out.append(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(h.dtype));
  for (int a = 0; a < 3; ++a)
    put<std::uint32_t>(out, static_cast<std::uint32_t>(h.dims[a]));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(h.channels));
  for (int a = 0; a < 3; ++a)
    put<double>(out, h.spacing[a]);
  out.append(reinterpret_cast<const char*>(v.data().data()), std::size_t(v.data().size()) * sizeof(T));
  return out;
}

VolumeHeader decode_header(std::string_view bytes)
{
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw FormatError("not a VOLF file (bad magic)");
  std::size_t pos = 4;
  const auto version = get<std::uint32_t>(bytes, pos);
  if (version != kVersion)
    throw FormatError("unsupported VOLF version " + std::to_string(version));
  if (bytes.size() < kHeaderBytes)
    throw CorruptionError("truncated VOLF header");

  VolumeHeader h;
  const auto dtype = get<std::uint32_t>(bytes, pos);
  if (dtype > 2)
    throw FormatError("unknown VOLF dtype " + std::to_string(dtype));
  h.dtype = static_cast<DType>(dtype);
  for (int a = 0; a < 3; ++a)
  {
    const auto n = get<std::uint32_t>(bytes, pos);
    if (n > std::uint32_t(INT32_MAX))
      throw ValidationError("VOLF dimension out of range");
    h.dims[a] = static_cast<int>(n);
  }
  const auto channels = get<std::uint32_t>(bytes, pos);
  if (channels > std::uint32_t(INT32_MAX))
    throw ValidationError("VOLF channel count out of range");
  h.channels = static_cast<int>(channels);
  for (int a = 0; a < 3; ++a)
    h.spacing[a] = get<double>(bytes, pos);
  h.validate();
  return h;
}

AnyVolume decode_volume(std::string_view bytes)
{
  const VolumeHeader h = decode_header(bytes);
  const std::size_t expected = kHeaderBytes + std::size_t(h.sample_count()) * dtype_size(h.dtype);
  if (bytes.size() != expected)
  {
    std::ostringstream msg;
    msg << "VOLF payload size mismatch: expected " << expected << " bytes, got " << bytes.size();
    throw CorruptionError(msg.str());
  }
  switch (h.dtype)
  {
  case DType::U8: return decode_payload<std::uint8_t>(h, bytes, kHeaderBytes);
  case DType::I16: return decode_payload<std::int16_t>(h, bytes, kHeaderBytes);
  case DType::F32: return decode_payload<float>(h, bytes, kHeaderBytes);
  }
  throw FormatError("unknown dtype");
}

std::string read_file(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot write " + path.string());
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out)
    throw IoError("write failed for " + path.string());
}

template <typename T>
void save_volume(const std::filesystem::path& path, const Volume<T>& v)
{
  write_file(path, encode_volume(v));
}

AnyVolume load_volume(const std::filesystem::path& path)
{
  return decode_volume(read_file(path));
}

template std::string encode_volume(const Volume<std::uint8_t>&);
template std::string encode_volume(const Volume<std::int16_t>&);
template std::string encode_volume(const Volume<float>&);
template void save_volume(const std::filesystem::path&, const Volume<std::uint8_t>&);
template void save_volume(const std::filesystem::path&, const Volume<std::int16_t>&);
template void save_volume(const std::filesystem::path&, const Volume<float>&);

} // namespace organloc
