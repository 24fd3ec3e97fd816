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

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace organloc {

using Vec3i = Eigen::Vector3i;
using Vec3d = Eigen::Vector3d;

/// Six face coordinates (x1, x2, y1, y2, z1, z2).
using Vec6d = Eigen::Matrix<double, 6, 1>;

class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Bad magic, unknown version or dtype.
class FormatError : public Error
{
public:
  using Error::Error;
};

/// Truncated or inconsistent payload.
class CorruptionError : public Error
{
public:
  using Error::Error;
};

class ValidationError : public Error
{
public:
  using Error::Error;
};

class BoundsError : public Error
{
public:
  using Error::Error;
};

class ConfigError : public Error
{
public:
  using Error::Error;
};

class LocalizationError : public Error
{
public:
  using Error::Error;
};

class IoError : public Error
{
public:
  using Error::Error;
};

} // namespace organloc
