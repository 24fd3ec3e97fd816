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

#include "organloc/localize.hpp"

#include "organloc/parallel.hpp"
#include "organloc/rng.hpp"
#include "organloc/volume_io.hpp"

#include <cstring>
#include <sstream>

namespace organloc {

PatchGrid place_patches(const Vec3i& dims, int patch_size, int stride)
{
  if (patch_size < 1 || patch_size % 2 == 0)
    throw ValidationError("patch size must be odd");
  if (stride < 1)
    throw ValidationError("patch stride must be >= 1");
  PatchGrid grid;
  grid.patch_size = patch_size;
  grid.stride = stride;
  const int half = patch_size / 2;
  std::array<std::vector<int>, 3> axis;
  for (int a = 0; a < 3; ++a)
    for (int c = half; c + half < dims[a]; c += stride)
      axis[std::size_t(a)].push_back(c);
  for (int z : axis[2])
    for (int y : axis[1])
      for (int x : axis[0])
        grid.centers.emplace_back(x, y, z);
  return grid;
}

namespace {

constexpr char kBundleMagic[4] = {'O', 'L', 'M', 'B'};

void put_section(std::string& out, std::string_view s)
{
  const std::uint64_t n = s.size();
  char buf[8];
  std::memcpy(buf, &n, 8);
  out.append(buf, 8);
  out.append(s);
}

std::string_view get_section(std::string_view bytes, std::size_t& pos)
{
  if (pos + 8 > bytes.size())
    throw CorruptionError("model bundle truncated");
  std::uint64_t n;
  std::memcpy(&n, bytes.data() + pos, 8);
  pos += 8;
  if (n > bytes.size() - pos)
    throw CorruptionError("model bundle section overruns the file");
  const auto s = bytes.substr(pos, std::size_t(n));
  pos += std::size_t(n);
  return s;
}

} // namespace

void LocalizerModel::validate() const
{
  const std::uint64_t fp = bank.fingerprint();
  for (const auto& f : forests)
  {
    if (f.bank_fingerprint != fp)
      throw ValidationError("forest was trained with a different feature bank");
    if (f.feature_count != Eigen::Index(bank.size()))
      throw ValidationError("forest feature count does not match the bank");
  }
  if (patch_size != bank.patch_size)
    throw ValidationError("model patch size differs from the bank's");
}

std::string LocalizerModel::serialize() const
{
  std::string out(kBundleMagic, 4);
  const std::uint32_t version = kFormatVersion;
  char buf[4];
  std::memcpy(buf, &version, 4);
  out.append(buf, 4);
  std::ostringstream cfg;
  cfg << "patch_size = " << patch_size << "\nstride = " << stride << "\n";
  put_section(out, cfg.str());
  put_section(out, bank.serialize());
  for (const auto& f : forests)
    put_section(out, f.serialize());
  return out;
}

LocalizerModel LocalizerModel::parse(std::string_view bytes)
{
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kBundleMagic, 4) != 0)
    throw FormatError("not a model bundle");
  std::uint32_t version;
  std::memcpy(&version, bytes.data() + 4, 4);
  if (version != kFormatVersion)
    throw FormatError("unsupported model bundle version " + std::to_string(version));
  std::size_t pos = 8;

  LocalizerModel m;
  std::istringstream cfg{std::string(get_section(bytes, pos))};
  std::string key, eq;
  int value = 0;
  bool have_p = false, have_s = false;
  while (cfg >> key >> eq >> value)
  {
    if (eq != "=")
      throw FormatError("model bundle: malformed config line");
    if (key == "patch_size")
      m.patch_size = value, have_p = true;
    else if (key == "stride")
      m.stride = value, have_s = true;
  }
  if (!have_p || !have_s)
    throw FormatError("model bundle: config section lacks patch_size/stride");
  m.bank = FeatureBank::parse(std::string(get_section(bytes, pos)));
  for (auto& f : m.forests)
    f = RegressionForest::parse(get_section(bytes, pos));
  if (pos != bytes.size())
    throw CorruptionError("trailing bytes after model bundle");
  m.validate();
  return m;
}

void LocalizerModel::save(const std::filesystem::path& path) const
{
  write_file(path, serialize());
}

LocalizerModel LocalizerModel::load(const std::filesystem::path& path)
{
  return parse(read_file(path));
}

LocalizerSamples collect_samples(std::span<const LocalizerCase> cases, const FeatureBank& bank, int stride)
{
  std::vector<PatchGrid> grids;
  std::vector<Eigen::Index> offsets{0};
  for (const auto& c : cases)
  {
    if (!c.ct)
      throw ValidationError("training case without CT volume");
    if (!c.box.valid())
      throw ValidationError("degenerate ground-truth box");
    grids.push_back(place_patches(c.ct->dims(), bank.patch_size, stride));
    offsets.push_back(offsets.back() + Eigen::Index(grids.back().size()));
  }

  LocalizerSamples s;
  s.features.resize(offsets.back(), Eigen::Index(bank.size()));
  s.targets.resize(offsets.back(), 6);
  parallel_for(cases.size(), [&](std::size_t k) {
    const auto& c = cases[k];
    const FeatureEvaluator eval(*c.ct, c.deep, c.likelihood);
    eval.check_bank(bank);
    const auto& grid = grids[k];
    const auto targets = extract_targets(grid, c.box, *c.ct);
    for (std::size_t i = 0; i < grid.size(); ++i)
    {
      const Eigen::Index row = offsets[k] + Eigen::Index(i);
      eval.fill(bank, grid.patch(i), s.features.row(row));
      s.targets.row(row) = targets[i].transpose();
    }
  });
  return s;
}

LocalizerModel train_localizer(std::span<const LocalizerCase> cases, const LocalizerParams& params)
{
  if (cases.empty())
    throw ValidationError("localizer training needs at least one case");
  LocalizerModel model;
  model.patch_size = params.patch_size;
  model.stride = params.stride;
  model.bank = sample_bank(params.bank_seed, params.counts, params.patch_size, params.channels);

  const LocalizerSamples samples = collect_samples(cases, model.bank, params.stride);
  if (samples.features.rows() == 0)
    throw ValidationError("training volumes are too small for the patch size");
  const std::uint64_t fp = model.bank.fingerprint();
  for (int k = 0; k < 6; ++k)
  {
    TrainConfig cfg = params.forest;
    cfg.seed = derive_seed(params.forest.seed, std::uint64_t(k));
    model.forests[std::size_t(k)] = train_forest(samples.features, samples.targets.col(k), cfg, fp);
  }
  return model;
}

BoundingBox aggregate_face_estimates(std::span<const Vec6d> per_patch)
{
  if (per_patch.empty())
    throw LocalizationError("no patch estimates to aggregate");
  Vec6d sum = Vec6d::Zero();
  for (const auto& e : per_patch)
    sum += e;
  return BoundingBox(sum / double(per_patch.size())).ordered();
}

BoxEstimate estimate_box(const LocalizerModel& model, const ScalarVolume& ct, const FeatureVolume* deep,
                         const FeatureVolume* likelihood)
{
  BoxEstimate est;
  est.grid = place_patches(ct.dims(), model.patch_size, model.stride);
  if (est.grid.empty())
    throw LocalizationError("volume is smaller than one patch; nothing to localize from");

  const FeatureEvaluator eval(ct, deep, likelihood);
  eval.check_bank(model.bank);
  est.per_patch.resize(est.grid.size());
  parallel_for(est.grid.size(), [&](std::size_t i) {
    const Eigen::VectorXd x = eval.feature_vector(model.bank, est.grid.patch(i));
    Vec6d d;
    for (int k = 0; k < 6; ++k)
      d[k] = model.forests[std::size_t(k)].predict(x);
    est.per_patch[i] = face_coordinates(ct.world(est.grid.centers[i])) + d;
  });
  est.box = aggregate_face_estimates(est.per_patch);
  return est;
}

FaceDistance face_distance(const BoundingBox& est, const BoundingBox& gt)
{
  FaceDistance r;
  r.per_face = (est.b - gt.b).cwiseAbs();
  r.mean = r.per_face.mean();
  return r;
}

} // namespace organloc
