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

#include "organloc/eval.hpp"

#include <doctest.h>

#include <map>
#include <set>
#include <sstream>

using namespace organloc;

namespace {

MaskVolume mask_of(std::initializer_list<int> on, int n = 8)
{
  MaskVolume m(Vec3i(n, 1, 1), Vec3d::Ones());
  for (int i : on)
    m(i, 0, 0) = 1;
  return m;
}

MaskVolume random_mask(Rng& rng, double density)
{
  MaskVolume m(Vec3i(6, 5, 4), Vec3d::Ones());
  for (Eigen::Index i = 0; i < m.data().size(); ++i)
    m.data()[i] = rng.uniform() < density ? 1 : 0;
  return m;
}

PipelineConfig small_pipeline()
{
  PipelineConfig cfg;
  cfg.localizer.counts = {16, 16, 8, 4};
  cfg.localizer.patch_size = 17;
  cfg.localizer.stride = 8;
  cfg.localizer.channels = 8;
  cfg.localizer.forest.tree_count = 3;
  cfg.atlas_resolution = 24;
  return cfg;
}

} // namespace

TEST_CASE("jaccard and dice examples")
{
  const MaskVolume a = mask_of({1, 2, 5});
  CHECK(jaccard(a, a) == 1.0);
  CHECK(dice(a, a) == 1.0);
  CHECK(jaccard(a, mask_of({0, 3})) == 0.0);
  CHECK(dice(a, mask_of({0, 3})) == 0.0);
  CHECK(jaccard(mask_of({1, 2}), mask_of({2, 3})) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(dice(mask_of({1, 2}), mask_of({2, 3})) == 0.5);
  CHECK(jaccard(mask_of({}), mask_of({})) == 1.0);
  CHECK(dice(mask_of({}), mask_of({})) == 1.0);
  CHECK_THROWS_AS(dice(mask_of({}, 8), mask_of({}, 9)), ValidationError);
}

TEST_CASE("metric identities, bounds and symmetry on random masks")
{
  Rng rng(77);
  for (int i = 0; i < 300; ++i)
  {
    const MaskVolume a = random_mask(rng, rng.uniform()), b = random_mask(rng, rng.uniform());
    const double ji = jaccard(a, b), d = dice(a, b);
    CHECK(ji >= 0.0);
    CHECK(d <= 1.0);
    CHECK(ji <= d);
    CHECK(std::abs(d - 2.0 * ji / (1.0 + ji)) <= 1e-12);
    CHECK(jaccard(b, a) == ji);
    CHECK(dice(b, a) == d);
  }
}

TEST_CASE("fold plans partition the cases")
{
  const FoldPlan p = make_fold_plan(10, 5, 3);
  REQUIRE(p.folds.size() == 5);
  std::multiset<std::size_t> seen;
  for (const auto& f : p.folds)
  {
    CHECK(f.size() == 2);
    seen.insert(f.begin(), f.end());
  }
  for (std::size_t i = 0; i < 10; ++i)
  {
    CHECK(seen.count(i) == 1);
    const int k = p.fold_of(i);
    CHECK(std::count(p.folds[std::size_t(k)].begin(), p.folds[std::size_t(k)].end(), i) == 1);
  }
  CHECK(make_fold_plan(10, 5, 3).folds == p.folds);
  CHECK(make_fold_plan(10, 5, 4).folds != p.folds);

  const FoldPlan uneven = make_fold_plan(13, 4, 1);
  std::size_t total = 0;
  for (const auto& f : uneven.folds)
  {
    CHECK((f.size() == 3 || f.size() == 4));
    total += f.size();
  }
  CHECK(total == 13);
  CHECK_THROWS_AS(make_fold_plan(3, 5, 1), ValidationError);
  CHECK_THROWS_AS(make_fold_plan(10, 1, 1), ValidationError);
}

TEST_CASE("mean and population deviation")
{
  const std::vector<double> v{2, 4, 4, 4, 5, 5, 7, 9};
  const MeanStd m = mean_std(v);
  CHECK(m.mean == 5.0);
  CHECK(m.stddev == 2.0);
  CHECK(mean_std(std::vector<double>{}).mean == 0.0);
}

TEST_CASE("report aggregates agree with the per-case lines")
{
  DatasetParams dp;
  dp.phantom.dims = Vec3i(40, 40, 40);
  dp.count = 10;
  dp.channels = 8;
  const std::vector<CaseData> cases = generate_dataset(dp);
  const CvReport rep = run_cv(cases, 5, small_pipeline(), 2);
  std::ostringstream out;
  rep.write(out);

  std::istringstream in(out.str());
  std::string line;
  std::vector<double> face, ji, dc;
  std::map<std::string, std::pair<double, double>> agg;
  std::set<std::string> ids;
  while (std::getline(in, line))
  {
    if (line.empty() || line[0] == '#')
      continue;
    std::istringstream ls(line);
    std::string head;
    ls >> head;
    if (head == "AGGREGATE")
    {
      std::string name, value;
      ls >> name >> value;
      const auto pm = value.find("±");
      REQUIRE(pm != std::string::npos);
      agg[name] = {std::stod(value.substr(0, pm)), std::stod(value.substr(pm + std::string("±").size()))};
      continue;
    }
    double f, j, d;
    ls >> f >> j >> d;
    ids.insert(head);
    face.push_back(f);
    ji.push_back(j);
    dc.push_back(d);
  }
  CHECK(ids.size() == 10);
  auto check = [&](const std::string& name, const std::vector<double>& v) {
    REQUIRE(agg.count(name));
    double mean = 0.0, var = 0.0;
    for (double x : v)
      mean += x;
    mean /= double(v.size());
    for (double x : v)
      var += (x - mean) * (x - mean);
    CHECK(std::abs(agg[name].first - mean) <= 2e-9);
    CHECK(std::abs(agg[name].second - std::sqrt(var / double(v.size()))) <= 2e-9);
  };
  check("face_mm", face);
  check("ji", ji);
  check("dice", dc);
  CHECK(agg.count("baseline_dice"));

  // every case is tested in exactly one fold
  std::vector<int> hits(cases.size(), 0);
  for (const auto& f : rep.plan.folds)
    for (std::size_t i : f)
      ++hits[i];
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  for (std::size_t i = 0; i < cases.size(); ++i)
    CHECK(rep.cases[i].id == cases[i].id);
}
