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

#include "organloc/common.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace organloc {

enum class ThresholdMode : std::uint8_t
{
  Random = 0,    ///< uniform draws in [node min, node max)
  Exhaustive = 1 ///< every midpoint between consecutive distinct node values
};

struct TrainConfig
{
  int tree_count = 20;
  int max_depth = 15;
  int min_samples_leaf = 5;
  int candidate_features = 100;
  int candidate_thresholds = 10;
  std::uint64_t seed = 1;
  bool bootstrap = true;
  ThresholdMode threshold_mode = ThresholdMode::Random;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

/// Leaf when feature < 0. Samples with x[feature] < threshold go left.
struct TreeNode
{
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0; ///< mean training target (leaves)

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

class RegressionTree
{
public:
  std::vector<TreeNode> nodes;

  template <typename Vec>
  double predict(const Vec& x) const
  {
    std::size_t n = 0;
    while (!nodes[n].is_leaf())
      n = std::size_t(x[nodes[n].feature] < nodes[n].threshold ? nodes[n].left : nodes[n].right);
    return nodes[n].value;
  }

  int depth() const;
  bool operator==(const RegressionTree&) const = default;
};

class RegressionForest
{
public:
  std::vector<RegressionTree> trees;
  TrainConfig config;
  std::uint64_t bank_fingerprint = 0;
  Eigen::Index feature_count = 0;

  /// Mean of the tree outputs. Throws ValidationError on a length mismatch.
  double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// Binary section: "OLRF", version, config, fingerprint, node arrays.
  std::string serialize() const;
  static RegressionForest parse(std::string_view bytes);

  bool operator==(const RegressionForest&) const = default;
};

/// Population-variance reduction of splitting (left ∪ right) into the two
/// sides. Empty on an empty side (the split is rejected).
std::optional<double> variance_reduction(std::span<const double> left, std::span<const double> right);

/// Rows of `features` are samples. Each tree sees a bootstrap resample of
/// the rows (or all rows when cfg.bootstrap is false).
RegressionForest train_forest(const Eigen::Ref<const Eigen::MatrixXd>& features,
                              const Eigen::Ref<const Eigen::VectorXd>& targets, const TrainConfig& cfg,
                              std::uint64_t bank_fingerprint = 0);

/// One tree on an explicit multiset of row indices.
///
/// Samples are put into a canonical order (by target, then feature values)
/// before growing, so the tree depends on the multiset and not on row order.
/// Among equal gains the lowest feature index wins, then the lowest threshold.
RegressionTree train_tree(const Eigen::Ref<const Eigen::MatrixXd>& features,
                          const Eigen::Ref<const Eigen::VectorXd>& targets, std::vector<Eigen::Index> rows,
                          const TrainConfig& cfg, std::uint64_t tree_seed);

} // namespace organloc
