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

#include "organloc/eval.hpp"

#include "organloc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

namespace organloc {

namespace {

void check_same_dims(const MaskVolume& a, const MaskVolume& b)
{
  if (a.dims() != b.dims() || a.channels() != b.channels())
    throw ValidationError("mask dimensions differ");
}

struct Overlap
{
  double a = 0, b = 0, both = 0;
};

Overlap overlap(const MaskVolume& a, const MaskVolume& b)
{
  check_same_dims(a, b);
  const auto ma = a.data() != 0;
  const auto mb = b.data() != 0;
  return {double(ma.count()), double(mb.count()), double((ma && mb).count())};
}

} // namespace

double jaccard(const MaskVolume& a, const MaskVolume& b)
{
  const Overlap o = overlap(a, b);
  const double uni = o.a + o.b - o.both;
  return uni == 0.0 ? 1.0 : o.both / uni;
}

double dice(const MaskVolume& a, const MaskVolume& b)
{
  const Overlap o = overlap(a, b);
  return o.a + o.b == 0.0 ? 1.0 : 2.0 * o.both / (o.a + o.b);
}

int FoldPlan::fold_of(std::size_t i) const
{
  for (std::size_t f = 0; f < folds.size(); ++f)
    if (std::binary_search(folds[f].begin(), folds[f].end(), i))
      return int(f);
  return -1;
}

FoldPlan make_fold_plan(std::size_t case_count, int k, std::uint64_t seed)
{
  if (k < 2)
    throw ValidationError("need at least 2 folds");
  if (case_count < std::size_t(k))
    throw ValidationError("fewer cases than folds");
  std::vector<std::size_t> order(case_count);
  std::iota(order.begin(), order.end(), std::size_t(0));
  Rng rng(seed);
  for (std::size_t i = case_count; i > 1; --i)
    std::swap(order[i - 1], order[std::size_t(rng.uniform_int(0, std::int64_t(i) - 1))]);

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.folds.resize(std::size_t(k));
  for (std::size_t j = 0; j < case_count; ++j)
    plan.folds[j % std::size_t(k)].push_back(order[j]);
  for (auto& f : plan.folds)
    std::sort(f.begin(), f.end());
  return plan;
}

MeanStd mean_std(std::span<const double> values)
{
  MeanStd r;
  if (values.empty())
    return r;
  const double n = double(values.size());
  r.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values)
    ss += (v - r.mean) * (v - r.mean);
  r.stddev = std::sqrt(ss / n);
  return r;
}

namespace {

template <typename Get>
MeanStd collect(const std::vector<CaseReport>& cases, Get get)
{
  std::vector<double> v;
  v.reserve(cases.size());
  for (const auto& c : cases)
    v.push_back(get(c));
  return mean_std(v);
}

} // namespace

MeanStd CvReport::face_mm() const { return collect(cases, [](const CaseReport& c) { return c.face_mm; }); }
MeanStd CvReport::ji() const { return collect(cases, [](const CaseReport& c) { return c.ji; }); }
MeanStd CvReport::dice() const { return collect(cases, [](const CaseReport& c) { return c.dice; }); }
MeanStd CvReport::baseline_face_mm() const
{
  return collect(cases, [](const CaseReport& c) { return c.baseline_face_mm; });
}
MeanStd CvReport::baseline_ji() const { return collect(cases, [](const CaseReport& c) { return c.baseline_ji; }); }
MeanStd CvReport::baseline_dice() const
{
  return collect(cases, [](const CaseReport& c) { return c.baseline_dice; });
}

void CvReport::write(std::ostream& out, const CvOptions& opts) const
{
  char buf[256];
  std::snprintf(buf, sizeof buf, "# organloc cv k=%d seed=%llu cases=%zu\n", plan.k,
                static_cast<unsigned long long>(plan.seed), cases.size());
  out << buf << "# case_id face_mm ji dice\n";
  for (const auto& c : cases)
  {
    std::snprintf(buf, sizeof buf, "%s %.9f %.9f %.9f\n", c.id.c_str(), c.face_mm, c.ji, c.dice);
    out << buf;
  }
  auto line = [&](const char* name, MeanStd m) {
    std::snprintf(buf, sizeof buf, "AGGREGATE %s %.9f±%.9f\n", name, m.mean, m.stddev);
    out << buf;
  };
  line("face_mm", face_mm());
  if (opts.segment)
  {
    line("ji", ji());
    line("dice", dice());
  }
  if (opts.baseline)
  {
    line("baseline_face_mm", baseline_face_mm());
    if (opts.segment)
    {
      line("baseline_ji", baseline_ji());
      line("baseline_dice", baseline_dice());
    }
  }
}

CvReport run_cv(std::span<const CaseData> cases, int k, const PipelineConfig& cfg, std::uint64_t seed,
                const CvOptions& opts)
{
  CvReport report;
  report.plan = make_fold_plan(cases.size(), k, seed);
  report.cases.resize(cases.size());

  for (int f = 0; f < k; ++f)
  {
    const auto& test = report.plan.folds[std::size_t(f)];
    std::vector<const CaseData*> train;
    std::vector<BoundingBox> train_boxes;
    for (std::size_t i = 0; i < cases.size(); ++i)
      if (!std::binary_search(test.begin(), test.end(), i))
      {
        train.push_back(&cases[i]);
        train_boxes.push_back(cases[i].box);
      }

    TrainedPipeline model;
    if (opts.segment)
      model = train_pipeline(train, cfg);
    else
    {
      std::vector<LocalizerCase> loc;
      for (const CaseData* c : train)
        loc.push_back({&c->ct, c->deep_ptr(), c->likelihood_ptr(), c->box});
      model.localizer = train_localizer(loc, cfg.localizer);
    }

    for (const std::size_t i : test)
    {
      const CaseData& c = cases[i];
      CaseReport& r = report.cases[i];
      r.id = c.id;
      r.fold = f;
      const BoxEstimate est = estimate_box(model.localizer, c.ct, c.deep_ptr(), c.likelihood_ptr());
      r.face_mm = face_distance(est.box, c.box).mean;
      if (opts.segment)
      {
        const auto seg = segment_in_box(model.atlas, est.box, c.ct, cfg);
        r.ji = jaccard(seg.mask, c.mask);
        r.dice = dice(seg.mask, c.mask);
      }
      if (opts.baseline)
      {
        const BoundingBox base = centered_mean_box(train_boxes, c.ct);
        r.baseline_face_mm = face_distance(base, c.box).mean;
        if (opts.segment)
        {
          const auto seg = segment_in_box(model.atlas, base, c.ct, cfg);
          r.baseline_ji = jaccard(seg.mask, c.mask);
          r.baseline_dice = dice(seg.mask, c.mask);
        }
      }
    }
  }
  return report;
}

} // namespace organloc
