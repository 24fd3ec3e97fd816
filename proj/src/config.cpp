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

#include "organloc/config.hpp"

#include "organloc/volume_io.hpp"

#include <charconv>
#include <sstream>

namespace organloc {

namespace {

std::string trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

} // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text)
{
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line))
  {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    line = trim(line);
    if (line.empty())
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    if (cfg.values_.count(key))
      throw ConfigError("config key '" + key + "' given twice");
    cfg.values_[key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path)
{
  return parse(read_file(path));
}

const std::string* KeyValueConfig::find(const std::string& key) const
{
  const auto it = values_.find(key);
  if (it == values_.end())
    return nullptr;
  used_.insert(key);
  return &it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const
{
  const auto* v = find(key);
  return v ? *v : fallback;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const
{
  const auto* v = find(key);
  if (!v)
    return fallback;
  try
  {
    std::size_t used = 0;
    const double d = std::stod(*v, &used);
    if (used == v->size())
      return d;
  }
  catch (const std::exception&)
  {
  }
  throw ConfigError("config key '" + key + "': not a number: " + *v);
}

long long KeyValueConfig::get_int(const std::string& key, long long fallback) const
{
  const auto* v = find(key);
  if (!v)
    return fallback;
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size())
    throw ConfigError("config key '" + key + "': not an integer: " + *v);
  return out;
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::uint64_t fallback) const
{
  const auto* v = find(key);
  if (!v)
    return fallback;
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size())
    throw ConfigError("config key '" + key + "': not an unsigned integer: " + *v);
  return out;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const
{
  const auto* v = find(key);
  if (!v)
    return fallback;
  if (*v == "true" || *v == "1" || *v == "yes")
    return true;
  if (*v == "false" || *v == "0" || *v == "no")
    return false;
  throw ConfigError("config key '" + key + "': not a boolean: " + *v);
}

Vec3d KeyValueConfig::get_vec3(const std::string& key, const Vec3d& fallback) const
{
  const auto* v = find(key);
  if (!v)
    return fallback;
  std::istringstream in(*v);
  std::vector<double> xs;
  double x;
  while (in >> x)
    xs.push_back(x);
  if (!in.eof())
    throw ConfigError("config key '" + key + "': expected numbers: " + *v);
  if (xs.size() == 1)
    return Vec3d::Constant(xs[0]);
  if (xs.size() == 3)
    return {xs[0], xs[1], xs[2]};
  throw ConfigError("config key '" + key + "': expected 1 or 3 numbers");
}

void KeyValueConfig::check_all_used() const
{
  for (const auto& [k, v] : values_)
    if (!used_.count(k))
      throw ConfigError("unknown config key '" + k + "'");
}

PipelineConfig pipeline_config_from(const KeyValueConfig& kv)
{
  PipelineConfig c;
  auto& loc = c.localizer;
  loc.patch_size = int(kv.get_int("patch_size", loc.patch_size));
  loc.stride = int(kv.get_int("stride", loc.stride));
  if (loc.patch_size < 3 || loc.patch_size % 2 == 0)
    throw ConfigError("config key 'patch_size': must be odd and at least 3");
  if (loc.stride < 1)
    throw ConfigError("config key 'stride': must be positive");
  loc.counts.diff1 = int(kv.get_int("n_diff1", loc.counts.diff1));
  loc.counts.diff2 = int(kv.get_int("n_diff2", loc.counts.diff2));
  loc.counts.lbp = int(kv.get_int("n_lbp", loc.counts.lbp));
  loc.counts.likelihood = int(kv.get_int("n_lik", loc.counts.likelihood));
  loc.bank_seed = kv.get_u64("bank_seed", loc.bank_seed);
  loc.channels = int(kv.get_int("channels", loc.channels));

  auto& f = loc.forest;
  f.tree_count = int(kv.get_int("trees", f.tree_count));
  f.max_depth = int(kv.get_int("max_depth", f.max_depth));
  f.min_samples_leaf = int(kv.get_int("min_leaf", f.min_samples_leaf));
  f.candidate_features = int(kv.get_int("candidate_features", f.candidate_features));
  f.candidate_thresholds = int(kv.get_int("candidate_thresholds", f.candidate_thresholds));
  f.seed = kv.get_u64("forest_seed", f.seed);
  f.bootstrap = kv.get_bool("bootstrap", f.bootstrap);
  f.validate();

  c.atlas_resolution = int(kv.get_int("atlas_resolution", c.atlas_resolution));
  c.atlas_padding = kv.get_double("atlas_padding", c.atlas_padding);
  c.intensity_unary = kv.get_bool("intensity_unary", c.intensity_unary);
  c.prior_floor = kv.get_double("prior_floor", c.prior_floor);
  c.margin_mm = kv.get_double("margin_mm", c.margin_mm);
  c.rough_threshold = kv.get_double("rough_threshold", c.rough_threshold);
  c.energy.lambda = kv.get_double("lambda", c.energy.lambda);
  if (const std::string s = kv.get_string("sigma", "auto"); s != "auto")
    c.energy.sigma = kv.get_double("sigma", 1.0);
  c.energy.epsilon = kv.get_double("epsilon", c.energy.epsilon);
  c.energy.validate();
  return c;
}

DatasetParams dataset_params_from(const KeyValueConfig& kv)
{
  DatasetParams d;
  auto& p = d.phantom;
  p.dims = kv.get_vec3("dims", p.dims.cast<double>()).cast<int>();
  p.spacing = kv.get_vec3("spacing", p.spacing);
  p.organ_count = int(kv.get_int("organs", p.organ_count));
  p.background_noise = kv.get_double("background_noise", p.background_noise);
  p.organ_noise = kv.get_double("organ_noise", p.organ_noise);
  p.center_jitter = kv.get_double("center_jitter", p.center_jitter);
  p.radius_min = kv.get_double("radius_min", p.radius_min);
  p.radius_max = kv.get_double("radius_max", p.radius_max);
  d.count = int(kv.get_int("count", d.count));
  d.channels = int(kv.get_int("channels", d.channels));
  d.features.downsample = int(kv.get_int("feature_downsample", d.features.downsample));
  d.features.noise = kv.get_double("feature_noise", d.features.noise);
  d.seed = kv.get_u64("seed", d.seed);
  if (p.organ_count < 1 || p.organ_count > 7)
    throw ConfigError("organs must be in 1..7");
  if (d.count < 1)
    throw ConfigError("count must be >= 1");
  return d;
}

} // namespace organloc
