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

#include "organloc/pipeline.hpp"

#include "organloc/rng.hpp"

#include <cstdio>

namespace organloc {

CaseData make_phantom_case(const DatasetParams& params, int index)
{
  const std::uint64_t seed = derive_seed(params.seed, std::uint64_t(index));
  const Phantom ph = generate_phantom(random_phantom_config(params.phantom, seed));
  CaseData c;
  char id[32];
  std::snprintf(id, sizeof id, "case_%03d", index);
  c.id = id;
  c.ct = ph.ct;
  c.mask = ph.organ_mask(0);
  c.box = ph.boxes.front();
  if (params.channels > 0)
    c.deep = synth_feature_volume(ph.labels, params.channels, derive_seed(seed, 10), params.features);
  c.likelihood = synth_likelihood_volume(ph.labels, derive_seed(seed, 11), params.features);
  return c;
}

std::vector<CaseData> generate_dataset(const DatasetParams& params)
{
  if (params.count < 0)
    throw ConfigError("dataset count must be >= 0");
  std::vector<CaseData> cases(std::size_t(params.count));
  for (int i = 0; i < params.count; ++i)
    cases[std::size_t(i)] = make_phantom_case(params, i);
  return cases;
}

TrainedPipeline train_pipeline(std::span<const CaseData* const> cases, const PipelineConfig& cfg)
{
  if (cases.empty())
    throw ValidationError("pipeline training needs at least one case");
  std::vector<LocalizerCase> loc;
  std::vector<AtlasCase> atl;
  for (const CaseData* c : cases)
  {
    loc.push_back({&c->ct, c->deep_ptr(), c->likelihood_ptr(), c->box});
    atl.push_back({&c->mask, c->box, &c->ct});
  }
  TrainedPipeline model;
  model.localizer = train_localizer(loc, cfg.localizer);
  model.atlas = build_atlas(atl, cfg.atlas_resolution, cfg.atlas_padding);
  if (cfg.intensity_unary)
    model.atlas.intensity = fit_intensity_model(atl, cfg.margin_mm);
  return model;
}

SegmentationResult segment_in_box(const ProbAtlas& atlas, const BoundingBox& box, const ScalarVolume& ct,
                                  const PipelineConfig& cfg)
{
  SegmentationResult r;
  r.probability = project_atlas(atlas, box, cfg.margin_mm, ct);
  r.rough = rough_segment(r.probability, cfg.rough_threshold);
  const MaskVolume roi = box_region(ct, box.expanded(cfg.margin_mm));
  if (cfg.intensity_unary && atlas.intensity)
    apply_intensity_model(r.probability, ct, roi, *atlas.intensity, cfg.prior_floor);
  r.mask = segment_precise(ct, r.probability, roi, cfg.energy);
  return r;
}

CaseResult run_case(const TrainedPipeline& model, const ScalarVolume& ct, const FeatureVolume* deep,
                    const FeatureVolume* likelihood, const PipelineConfig& cfg)
{
  CaseResult r;
  r.estimate = estimate_box(model.localizer, ct, deep, likelihood);
  r.segmentation = segment_in_box(model.atlas, r.estimate.box, ct, cfg);
  return r;
}

BoundingBox centered_mean_box(std::span<const BoundingBox> training_boxes, const ScalarVolume& grid)
{
  if (training_boxes.empty())
    throw ValidationError("no training boxes");
  Vec3d extent = Vec3d::Zero();
  for (const auto& b : training_boxes)
    extent += b.extent();
  extent /= double(training_boxes.size());
  const Vec3d center = grid.origin() + 0.5 * grid.dims().cast<double>().cwiseProduct(grid.spacing());
  return BoundingBox::from_corners(center - 0.5 * extent, center + 0.5 * extent);
}

} // namespace organloc
