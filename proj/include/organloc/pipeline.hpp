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

#include "organloc/atlas.hpp"
#include "organloc/graphcut.hpp"
#include "organloc/localize.hpp"
#include "organloc/phantom.hpp"

#include <span>
#include <string>
#include <vector>

namespace organloc {

struct PipelineConfig
{
  LocalizerParams localizer;
  int atlas_resolution = 64;
  double atlas_padding = 0.25;
  double margin_mm = 10.0;
  double rough_threshold = 0.5;
  bool intensity_unary = true;
  double prior_floor = 0.01;
  EnergyConfig energy;
};

/// One case held in memory: CT, optional deep features and likelihoods,
/// the organ's binary mask and its ground-truth box.
struct CaseData
{
  std::string id;
  ScalarVolume ct;
  FeatureVolume deep;       ///< empty when absent
  FeatureVolume likelihood; ///< empty when absent
  MaskVolume mask;
  BoundingBox box;

  const FeatureVolume* deep_ptr() const { return deep.empty() ? nullptr : &deep; }
  const FeatureVolume* likelihood_ptr() const { return likelihood.empty() ? nullptr : &likelihood; }
};

struct DatasetParams
{
  PhantomSetParams phantom;
  int count = 40;
  int channels = 64;
  SynthFeatureOptions features;
  std::uint64_t seed = 1;
};

/// Case i uses phantom seed derive_seed(seed, i); organ 0 is the target.
CaseData make_phantom_case(const DatasetParams& params, int index);
std::vector<CaseData> generate_dataset(const DatasetParams& params);

struct TrainedPipeline
{
  LocalizerModel localizer;
  ProbAtlas atlas;
};

TrainedPipeline train_pipeline(std::span<const CaseData* const> cases, const PipelineConfig& cfg);

/// Atlas projection into `box` followed by graph-cut refinement on the
/// margin-grown box.
struct SegmentationResult
{
  ScalarVolume probability;
  MaskVolume rough;
  MaskVolume mask;
};

SegmentationResult segment_in_box(const ProbAtlas& atlas, const BoundingBox& box, const ScalarVolume& ct,
                                  const PipelineConfig& cfg);

struct CaseResult
{
  BoxEstimate estimate;
  SegmentationResult segmentation;
};

CaseResult run_case(const TrainedPipeline& model, const ScalarVolume& ct, const FeatureVolume* deep,
                    const FeatureVolume* likelihood, const PipelineConfig& cfg);

/// Mean training box extent, centered on the volume's world center.
BoundingBox centered_mean_box(std::span<const BoundingBox> training_boxes, const ScalarVolume& grid);

} // namespace organloc
