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

#include "organloc/features.hpp"

#include "organloc/rng.hpp"

#include <sstream>

namespace organloc {

namespace {

CuboidSpec sample_cuboid(Rng& rng, int p)
{
  const int max_extent = (p + 1) / 2;
  CuboidSpec c;
  for (int a = 0; a < 3; ++a)
  {
    const int extent = int(rng.uniform_int(1, max_extent));
    c.lo[a] = int(rng.uniform_int(0, p - extent));
    c.hi[a] = c.lo[a] + extent - 1;
  }
  return c;
}

void write_cuboid(std::ostream& out, const CuboidSpec& c)
{
  out << ' ' << c.lo.x() << ' ' << c.lo.y() << ' ' << c.lo.z() << ' ' << c.hi.x() << ' ' << c.hi.y() << ' '
      << c.hi.z();
}

CuboidSpec read_cuboid(std::istream& in)
{
  CuboidSpec c;
  if (!(in >> c.lo.x() >> c.lo.y() >> c.lo.z() >> c.hi.x() >> c.hi.y() >> c.hi.z()))
    throw FormatError("feature bank: malformed cuboid");
  return c;
}

const char* kBankMagic = "organloc-featurebank";
constexpr int kBankVersion = 1;

constexpr std::array<std::array<int, 2>, 8> kNeighborBlocks{
  {{0, 0}, {0, 1}, {0, 2}, {1, 2}, {2, 2}, {2, 1}, {2, 0}, {1, 0}}};

} // namespace

FeatureBank sample_bank(std::uint64_t seed, const BankCounts& counts, int patch_size, int channels)
{
  if (patch_size < 3 || patch_size % 2 == 0)
    throw ValidationError("patch size must be odd and >= 3");
  if (counts.diff1 < 0 || counts.diff2 < 0 || counts.lbp < 0 || counts.likelihood < 0)
    throw ValidationError("feature counts must be >= 0");
  if (counts.lbp > 0 && channels < 1)
    throw ValidationError("LBP features need at least one deep-feature channel");

  FeatureBank bank;
  bank.patch_size = patch_size;
  bank.channels = channels;
  bank.seed = seed;
  bank.counts = counts;

  Rng r1(derive_seed(seed, 1));
  for (int i = 0; i < counts.diff1; ++i)
  {
    Diff1 d;
    d.f1 = sample_cuboid(r1, patch_size);
    d.f2 = sample_cuboid(r1, patch_size);
    bank.descriptors.emplace_back(d);
  }
  Rng r2(derive_seed(seed, 2));
  for (int i = 0; i < counts.diff2; ++i)
  {
    Diff2 d;
    d.f1 = sample_cuboid(r2, patch_size);
    d.f2 = sample_cuboid(r2, patch_size);
    d.f3 = sample_cuboid(r2, patch_size);
    bank.descriptors.emplace_back(d);
  }
  Rng r3(derive_seed(seed, 3));
  for (int i = 0; i < counts.lbp; ++i)
  {
    Lbp d;
    d.plane = static_cast<PlaneAxis>(r3.uniform_int(0, 2));
    d.channel = int(r3.uniform_int(0, channels - 1));
    bank.descriptors.emplace_back(d);
  }
  for (int i = 0; i < counts.likelihood; ++i)
    bank.descriptors.emplace_back(Likelihood{i % 8});
  return bank;
}

std::string FeatureBank::serialize() const
{
  std::ostringstream out;
  out << kBankMagic << ' ' << kBankVersion << '\n';
  out << "seed " << seed << " patch " << patch_size << " channels " << channels << " counts " << counts.diff1
      << ' ' << counts.diff2 << ' ' << counts.lbp << ' ' << counts.likelihood << '\n';
  for (const auto& d : descriptors)
  {
    std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Diff1>)
        {
          out << "diff1";
          write_cuboid(out, f.f1);
          write_cuboid(out, f.f2);
        }
        else if constexpr (std::is_same_v<T, Diff2>)
        {
          out << "diff2";
          write_cuboid(out, f.f1);
          write_cuboid(out, f.f2);
          write_cuboid(out, f.f3);
        }
        else if constexpr (std::is_same_v<T, Lbp>)
          out << "lbp " << int(f.plane) << ' ' << f.channel;
        else
          out << "lik " << f.channel;
      },
      d);
    out << '\n';
  }
  return out.str();
}

FeatureBank FeatureBank::parse(const std::string& text)
{
  std::istringstream in(text);
  std::string magic, key;
  int version = 0;
  if (!(in >> magic >> version) || magic != kBankMagic)
    throw FormatError("not a feature bank");
  if (version != kBankVersion)
    throw FormatError("unsupported feature bank version " + std::to_string(version));

  FeatureBank bank;
  auto expect = [&](const char* k) {
    if (!(in >> key) || key != k)
      throw FormatError(std::string("feature bank: expected '") + k + "'");
  };
  expect("seed");
  in >> bank.seed;
  expect("patch");
  in >> bank.patch_size;
  expect("channels");
  in >> bank.channels;
  expect("counts");
  in >> bank.counts.diff1 >> bank.counts.diff2 >> bank.counts.lbp >> bank.counts.likelihood;
  if (!in)
    throw FormatError("feature bank: malformed header");

  BankCounts seen;
  std::string kind;
  while (in >> kind)
  {
    if (kind == "diff1")
    {
      Diff1 d;
      d.f1 = read_cuboid(in);
      d.f2 = read_cuboid(in);
      bank.descriptors.emplace_back(d);
      ++seen.diff1;
    }
    else if (kind == "diff2")
    {
      Diff2 d;
      d.f1 = read_cuboid(in);
      d.f2 = read_cuboid(in);
      d.f3 = read_cuboid(in);
      bank.descriptors.emplace_back(d);
      ++seen.diff2;
    }
    else if (kind == "lbp")
    {
      int plane = 0;
      Lbp d;
      if (!(in >> plane >> d.channel) || plane < 0 || plane > 2 || d.channel < 0 || d.channel >= bank.channels)
        throw FormatError("feature bank: malformed lbp entry");
      d.plane = static_cast<PlaneAxis>(plane);
      bank.descriptors.emplace_back(d);
      ++seen.lbp;
    }
    else if (kind == "lik")
    {
      Likelihood d;
      if (!(in >> d.channel) || d.channel < 0 || d.channel >= 8)
        throw FormatError("feature bank: malformed lik entry");
      bank.descriptors.emplace_back(d);
      ++seen.likelihood;
    }
    else
      throw FormatError("feature bank: unknown descriptor '" + kind + "'");
  }
  if (!(seen == bank.counts))
    throw CorruptionError("feature bank: descriptor counts disagree with header");
  for (const auto& d : bank.descriptors)
  {
    bool ok = true;
    if (auto* f = std::get_if<Diff1>(&d))
      ok = f->f1.valid_for(bank.patch_size) && f->f2.valid_for(bank.patch_size);
    else if (auto* g = std::get_if<Diff2>(&d))
      ok = g->f1.valid_for(bank.patch_size) && g->f2.valid_for(bank.patch_size) && g->f3.valid_for(bank.patch_size);
    if (!ok)
      throw ValidationError("feature bank: cuboid outside patch");
  }
  return bank;
}

std::uint64_t FeatureBank::fingerprint() const
{
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : serialize())
  {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

void check_patch(const Patch& patch, const Vec3i& dims)
{
  if (patch.size < 1 || patch.size % 2 == 0)
    throw BoundsError("patch size must be odd");
  const Vec3i lo = patch.corner();
  const Vec3i hi = lo + Vec3i::Constant(patch.size - 1);
  if ((lo.array() < 0).any() || (hi.array() >= dims.array()).any())
    throw BoundsError("patch extends outside the volume");
}

double eval_diff1(const IntegralVolume& iv, const Patch& patch, const CuboidSpec& f1, const CuboidSpec& f2)
{
  check_patch(patch, iv.dims());
  const Vec3i c = patch.corner();
  return cuboid_mean(iv, c + f1.lo, c + f1.hi) - cuboid_mean(iv, c + f2.lo, c + f2.hi);
}

double eval_diff2(const IntegralVolume& iv, const Patch& patch, const CuboidSpec& f1, const CuboidSpec& f2,
                  const CuboidSpec& f3)
{
  check_patch(patch, iv.dims());
  const Vec3i c = patch.corner();
  return cuboid_mean(iv, c + f1.lo, c + f1.hi) + cuboid_mean(iv, c + f2.lo, c + f2.hi) -
         2.0 * cuboid_mean(iv, c + f3.lo, c + f3.hi);
}

int lbp_code(const Eigen::Ref<const Eigen::MatrixXf>& image)
{
  const Eigen::Index b = std::min(image.rows(), image.cols()) / 3;
  if (b < 1)
    throw ValidationError("LBP image must be at least 3x3");
  Eigen::Matrix3d means;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      means(r, c) = image.block(r * b, c * b, b, b).cast<double>().sum() / double(b * b);

  int code = 0;
  for (int k = 0; k < 8; ++k)
    if (means(kNeighborBlocks[std::size_t(k)][0], kNeighborBlocks[std::size_t(k)][1]) >= means(1, 1))
      code |= 1 << k;
  return code;
}

Eigen::MatrixXf plane_image(const FeatureVolume& fvol, const GridMap& map, const Patch& patch, PlaneAxis plane,
                            int channel)
{
  if (channel < 0 || channel >= fvol.channels())
    throw BoundsError("feature channel out of range");
  const int p = patch.size;
  const Vec3i corner = patch.corner();
  // (row axis, column axis) per plane
  int row_axis = 1, col_axis = 0;
  if (plane == PlaneAxis::Coronal)
    row_axis = 2;
  else if (plane == PlaneAxis::Sagittal)
  {
    row_axis = 2;
    col_axis = 1;
  }

  Eigen::MatrixXf image(p, p);
  Vec3i q = patch.center;
  for (int r = 0; r < p; ++r)
    for (int c = 0; c < p; ++c)
    {
      q[row_axis] = corner[row_axis] + r;
      q[col_axis] = corner[col_axis] + c;
      image(r, c) = fvol(map(q), channel);
    }
  return image;
}

int eval_lbp(const FeatureVolume& fvol, const GridMap& map, const Patch& patch, PlaneAxis plane, int channel)
{
  return lbp_code(plane_image(fvol, map, patch, plane, channel));
}

int eval_lbp(const FeatureVolume& fvol, const Patch& patch, PlaneAxis plane, int channel)
{
  check_patch(patch, fvol.dims());
  return eval_lbp(fvol, GridMap(fvol, fvol), patch, plane, channel);
}

double eval_likelihood(const FeatureVolume& lik, const Vec3i& v, int channel)
{
  if (channel < 0 || channel >= lik.channels())
    throw BoundsError("likelihood channel out of range");
  if (!lik.contains(v))
    throw BoundsError("likelihood lookup outside the volume");
  return lik(v, channel);
}

FeatureEvaluator::FeatureEvaluator(const ScalarVolume& ct, const FeatureVolume* deep,
                                   const FeatureVolume* likelihood)
  : ct_(ct), integral_(ct), deep_(deep), likelihood_(likelihood)
{
  if (deep_)
    deep_map_ = GridMap(ct, *deep_);
  if (likelihood_)
  {
    if (likelihood_->channels() != 8)
      throw ValidationError("likelihood volume must have 8 channels");
    lik_map_ = GridMap(ct, *likelihood_);
  }
}

void FeatureEvaluator::check_bank(const FeatureBank& bank) const
{
  if (bank.needs_deep())
  {
    if (!deep_)
      throw ValidationError("feature bank uses LBP features but no deep-feature volume was given");
    if (deep_->channels() != bank.channels)
      throw ValidationError("deep-feature channel count " + std::to_string(deep_->channels()) +
                            " does not match the bank's " + std::to_string(bank.channels));
  }
  if (bank.needs_likelihood() && !likelihood_)
    throw ValidationError("feature bank uses likelihood features but no likelihood volume was given");
}

double FeatureEvaluator::eval(const FeatureDescriptor& d, const Patch& patch) const
{
  return std::visit(
    [&](const auto& f) -> double {
      using T = std::decay_t<decltype(f)>;
      if constexpr (std::is_same_v<T, Diff1>)
        return eval_diff1(integral_, patch, f.f1, f.f2);
      else if constexpr (std::is_same_v<T, Diff2>)
        return eval_diff2(integral_, patch, f.f1, f.f2, f.f3);
      else if constexpr (std::is_same_v<T, Lbp>)
      {
        if (!deep_)
          throw ValidationError("no deep-feature volume");
        return eval_lbp(*deep_, deep_map_, patch, f.plane, f.channel);
      }
      else
      {
        if (!likelihood_)
          throw ValidationError("no likelihood volume");
        return eval_likelihood(*likelihood_, lik_map_(patch.center), f.channel);
      }
    },
    d);
}

Eigen::VectorXd FeatureEvaluator::feature_vector(const FeatureBank& bank, const Patch& patch) const
{
  check_bank(bank);
  Eigen::VectorXd out(Eigen::Index(bank.size()));
  fill(bank, patch, out);
  return out;
}

Eigen::VectorXd feature_vector(const ScalarVolume& ct, const FeatureVolume* deep, const FeatureVolume* likelihood,
                               const FeatureBank& bank, const Patch& patch)
{
  return FeatureEvaluator(ct, deep, likelihood).feature_vector(bank, patch);
}

} // namespace organloc
