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

#include "organloc/pipeline.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace organloc {

/// |a ∩ b| / |a ∪ b| over nonzero voxels; 1 when both are empty.
double jaccard(const MaskVolume& a, const MaskVolume& b);

/// 2 |a ∩ b| / (|a| + |b|); 1 when both are empty.
double dice(const MaskVolume& a, const MaskVolume& b);

struct FoldPlan
{
  int k = 5;
  std::uint64_t seed = 1;
  std::vector<std::vector<std::size_t>> folds; ///< case indices, ascending within a fold

  /// Fold that tests case i.
  int fold_of(std::size_t i) const;
};

/// Seeded shuffle, then case j of the shuffled order goes to fold j mod k.
FoldPlan make_fold_plan(std::size_t case_count, int k, std::uint64_t seed);

struct MeanStd
{
  double mean = 0.0;
  double stddev = 0.0; ///< population
};

MeanStd mean_std(std::span<const double> values);

struct CaseReport
{
  std::string id;
  int fold = 0;
  double face_mm = 0.0;
  double ji = 0.0;
  double dice = 0.0;
  double baseline_face_mm = 0.0;
  double baseline_ji = 0.0;
  double baseline_dice = 0.0;
};

struct CvOptions
{
  bool segment = true;  ///< run atlas + graph cut; otherwise only localization
  bool baseline = true; ///< also score the centered mean-box baseline
};

struct CvReport
{
  FoldPlan plan;
  std::vector<CaseReport> cases; ///< in input order

  MeanStd face_mm() const;
  MeanStd ji() const;
  MeanStd dice() const;
  MeanStd baseline_face_mm() const;
  MeanStd baseline_ji() const;
  MeanStd baseline_dice() const;

  /// One line per case "case_id face_mm ji dice", then "AGGREGATE <metric> mean±sd"
  /// lines. '#' lines are comments.
  void write(std::ostream& out, const CvOptions& opts = {}) const;
};

/// k-fold cross-validation: each fold trains localizer and atlas on the
/// other folds and scores its own cases.
CvReport run_cv(std::span<const CaseData> cases, int k, const PipelineConfig& cfg, std::uint64_t seed,
                const CvOptions& opts = {});

} // namespace organloc
