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


#include "oracle.hpp"

#include "organloc/localize.hpp"
#include "organloc/pipeline.hpp"

#include <doctest.h>

#include <filesystem>

using namespace organloc;

namespace {

CaseData small_case(int index, int dims = 48)
{
  DatasetParams dp;
  dp.phantom.dims = Vec3i::Constant(dims);
  dp.channels = 8;
  return make_phantom_case(dp, index);
}

LocalizerParams small_params()
{
  LocalizerParams p;
  p.counts = {20, 20, 10, 4};
  p.patch_size = 17;
  p.stride = 6;
  p.channels = 8;
  p.forest.tree_count = 4;
  return p;
}

LocalizerCase as_localizer_case(const CaseData& c)
{
  return {&c.ct, c.deep_ptr(), c.likelihood_ptr(), c.box};
}

} // namespace

TEST_CASE("patch placement")
{
  const PatchGrid g = place_patches(Vec3i(64, 64, 64), 25, 16);
  CHECK(g.size() == 27);
  std::vector<int> xs;
  for (const auto& c : g.centers)
    if (c.y() == 12 && c.z() == 12)
      xs.push_back(c.x());
  CHECK(xs == std::vector<int>{12, 28, 44});
  for (const auto& c : g.centers)
    for (int a = 0; a < 3; ++a)
      CHECK((c[a] == 12 || c[a] == 28 || c[a] == 44));

  const PatchGrid one = place_patches(Vec3i(25, 25, 25), 25, 8);
  REQUIRE(one.size() == 1);
  CHECK(one.centers[0] == Vec3i(12, 12, 12));
  CHECK(place_patches(Vec3i(24, 24, 24), 25, 8).empty());
  CHECK(place_patches(Vec3i(64, 24, 64), 25, 8).empty());

  // enumeration oracle on an anisotropic volume
  const Vec3i dims(40, 31, 27);
  const PatchGrid h = place_patches(dims, 9, 5);
  std::size_t expect = 1;
  for (int a = 0; a < 3; ++a)
  {
    std::size_t n = 0;
    for (int c = 4; c <= dims[a] - 5; c += 5)
      ++n;
    expect *= n;
  }
  CHECK(h.size() == expect);
  CHECK_THROWS_AS(place_patches(dims, 8, 5), ValidationError);
  CHECK_THROWS_AS(place_patches(dims, 9, 0), ValidationError);
}

TEST_CASE("offset targets")
{
  ScalarVolume grid(Vec3i(30, 30, 30), Vec3d::Ones());
  grid.set_origin(Vec3d::Constant(4.5)); // voxel 0 sits at world 5
  PatchGrid g;
  g.patch_size = 1;
  g.centers = {Vec3i(0, 0, 0), Vec3i(5, 5, 5), Vec3i(3, 17, 9)};
  const BoundingBox box(10, 20, 10, 20, 10, 20);
  const auto d = extract_targets(g, box, grid);
  Vec6d e0;
  e0 << 5, 15, 5, 15, 5, 15;
  CHECK(d[0] == e0);
  Vec6d e1;
  e1 << 0, 10, 0, 10, 0, 10;
  CHECK(d[1] == e1);
  for (std::size_t i = 0; i < g.size(); ++i)
    CHECK(face_coordinates(grid.world(g.centers[i])) + d[i] == box.b);
}

TEST_CASE("face aggregation")
{
  Vec6d a, b;
  a << 10, 30, 0, 5, 1, 2;
  b << 12, 32, 2, 7, 3, 4;
  const std::vector<Vec6d> two{a, b};
  const BoundingBox m = aggregate_face_estimates(two);
  CHECK(m.b[0] == 11.0);
  CHECK(m.b[1] == 31.0);

  const std::vector<Vec6d> one{a};
  CHECK(aggregate_face_estimates(one).b == a);

  Vec6d crossed;
  crossed << 9, 3, 0, 1, 0, 1;
  const std::vector<Vec6d> c{crossed};
  const BoundingBox r = aggregate_face_estimates(c);
  CHECK(r.b[0] == 3.0);
  CHECK(r.b[1] == 9.0);
  CHECK_THROWS_AS(aggregate_face_estimates(std::vector<Vec6d>{}), LocalizationError);
}

TEST_CASE("face distance")
{
  const BoundingBox a(0, 10, 0, 10, 0, 10), b(1, 9, 0, 10, 0, 10);
  CHECK(face_distance(a, a).mean == 0.0);
  const FaceDistance d = face_distance(a, b);
  Vec6d e;
  e << 1, 1, 0, 0, 0, 0;
  CHECK(d.per_face == e);
  CHECK(d.mean == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(face_distance(b, a).mean == d.mean);
  CHECK(face_distance(b, a).per_face == d.per_face);
}

TEST_CASE("training-set recall on one phantom")
{
  DatasetParams dp;
  dp.channels = 64;
  const CaseData c = make_phantom_case(dp, 0);
  const LocalizerCase lc = as_localizer_case(c);
  const LocalizerModel model = train_localizer(std::span(&lc, 1), LocalizerParams{});
  const BoxEstimate est = estimate_box(model, c.ct, c.deep_ptr(), c.likelihood_ptr());
  const FaceDistance d = face_distance(est.box, c.box);
  for (int f = 0; f < 6; ++f)
    CHECK(d.per_face[f] <= 2.0 * c.ct.spacing()[f / 2]);

  // each face lies within the per-patch spread
  for (int f = 0; f < 6; ++f)
  {
    double lo = 1e300, hi = -1e300;
    for (const auto& p : est.per_patch)
    {
      lo = std::min(lo, p[f]);
      hi = std::max(hi, p[f]);
    }
    CHECK(est.box.b[f] >= lo);
    CHECK(est.box.b[f] <= hi);
  }
}

TEST_CASE("duplicating the only case leaves predictions unchanged")
{
  const CaseData c = small_case(3);
  LocalizerParams p = small_params();
  p.forest.bootstrap = false;
  p.forest.min_samples_leaf = 1;
  const LocalizerCase one[] = {as_localizer_case(c)};
  const LocalizerCase two[] = {as_localizer_case(c), as_localizer_case(c)};
  const LocalizerModel m1 = train_localizer(one, p);
  const LocalizerModel m2 = train_localizer(two, p);
  const BoxEstimate e1 = estimate_box(m1, c.ct, c.deep_ptr(), c.likelihood_ptr());
  const BoxEstimate e2 = estimate_box(m2, c.ct, c.deep_ptr(), c.likelihood_ptr());
  for (std::size_t i = 0; i < e1.per_patch.size(); ++i)
    CHECK((e1.per_patch[i] - e2.per_patch[i]).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("no training cases is a validation error")
{
  CHECK_THROWS_AS(train_localizer(std::span<const LocalizerCase>{}, LocalizerParams{}), ValidationError);
}

TEST_CASE("a model that predicts exact offsets recovers the box exactly")
{
  // likelihood channels 0..2 encode the voxel position, so an exhaustive
  // tree can separate every patch row, column and slice
  ScalarVolume ct(Vec3i(40, 36, 33), Vec3d(1.0, 1.5, 2.0));
  FeatureVolume lik(ct.dims(), ct.spacing(), 8);
  for (int z = 0; z < ct.nz(); ++z)
    for (int y = 0; y < ct.ny(); ++y)
      for (int x = 0; x < ct.nx(); ++x)
      {
        lik(x, y, z, 0) = float(x + 1) / 64.0f;
        lik(x, y, z, 1) = float(y + 1) / 64.0f;
        lik(x, y, z, 2) = float(z + 1) / 64.0f;
      }
  const BoundingBox box(11.0, 24.5, 13.25, 30.0, 20.0, 41.5);
  const LocalizerCase lc{&ct, nullptr, &lik, box};
  LocalizerParams p;
  p.counts = {0, 0, 0, 3};
  p.patch_size = 9;
  p.stride = 3;
  p.forest.tree_count = 2;
  p.forest.min_samples_leaf = 1;
  p.forest.bootstrap = false;
  p.forest.threshold_mode = ThresholdMode::Exhaustive;
  p.forest.candidate_features = 3;
  const LocalizerModel m = train_localizer(std::span(&lc, 1), p);
  const BoxEstimate est = estimate_box(m, ct, nullptr, &lik);
  for (const auto& e : est.per_patch)
    CHECK((e - box.b).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK((est.box.b - box.b).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("single-patch volume: box is the lone patch estimate")
{
  const CaseData c = small_case(1, 48);
  const LocalizerCase lc = as_localizer_case(c);
  LocalizerParams p = small_params();
  p.patch_size = 47;
  p.stride = 1;
  p.forest.min_samples_leaf = 1;
  const LocalizerModel m = train_localizer(std::span(&lc, 1), p);

  // crop to exactly one patch
  ScalarVolume crop(Vec3i::Constant(47), c.ct.spacing());
  for (int z = 0; z < 47; ++z)
    for (int y = 0; y < 47; ++y)
      for (int x = 0; x < 47; ++x)
        crop(x, y, z) = c.ct(x, y, z);
  const BoxEstimate est = estimate_box(m, crop, c.deep_ptr(), c.likelihood_ptr());
  REQUIRE(est.per_patch.size() == 1);
  CHECK(est.box == BoundingBox(est.per_patch[0]).ordered());

  const ScalarVolume tiny(Vec3i::Constant(46), c.ct.spacing());
  CHECK_THROWS_AS(estimate_box(m, tiny, c.deep_ptr(), c.likelihood_ptr()), LocalizationError);
}

TEST_CASE("shifting the world origin shifts the estimate by the same amount")
{
  std::vector<CaseData> cases{small_case(0), small_case(1)};
  const LocalizerParams p = small_params();
  std::vector<LocalizerCase> base;
  for (const auto& c : cases)
    base.push_back(as_localizer_case(c));
  const LocalizerModel m = train_localizer(base, p);
  const CaseData probe = small_case(2);
  const BoundingBox e0 = estimate_box(m, probe.ct, probe.deep_ptr(), probe.likelihood_ptr()).box;

  const Vec3d t(3.25, -7.5, 12.0);
  for (auto& c : cases)
  {
    c.ct.set_origin(c.ct.origin() + t);
    c.deep.set_origin(c.deep.origin() + t);
    c.likelihood.set_origin(c.likelihood.origin() + t);
    c.box = c.box.translated(t);
  }
  std::vector<LocalizerCase> moved;
  for (const auto& c : cases)
    moved.push_back(as_localizer_case(c));
  const LocalizerModel mt = train_localizer(moved, p);
  CaseData pt = small_case(2);
  pt.ct.set_origin(t);
  pt.deep.set_origin(t);
  pt.likelihood.set_origin(t);
  const BoundingBox e1 = estimate_box(mt, pt.ct, pt.deep_ptr(), pt.likelihood_ptr()).box;
  CHECK((e1.b - e0.translated(t).b).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("model bundle round trip")
{
  const CaseData c = small_case(4);
  const LocalizerCase lc = as_localizer_case(c);
  const LocalizerModel m = train_localizer(std::span(&lc, 1), small_params());
  const auto path = std::filesystem::temp_directory_path() / "organloc_unit_model.bin";
  m.save(path);
  const LocalizerModel back = LocalizerModel::load(path);
  CHECK(back.serialize() == m.serialize());
  const BoxEstimate a = estimate_box(m, c.ct, c.deep_ptr(), c.likelihood_ptr());
  const BoxEstimate b = estimate_box(back, c.ct, c.deep_ptr(), c.likelihood_ptr());
  CHECK(a.box == b.box);

  LocalizerModel broken = m;
  broken.bank = sample_bank(999, {20, 20, 10, 4}, 17, 8);
  CHECK_THROWS_AS(broken.validate(), ValidationError);
  std::string bytes = m.serialize();
  CHECK_THROWS(LocalizerModel::parse(bytes.substr(0, bytes.size() / 2)));

  // missing deep features for an LBP bank
  CHECK_THROWS_AS(estimate_box(m, c.ct, nullptr, c.likelihood_ptr()), ValidationError);
}
