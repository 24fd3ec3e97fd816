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

#include "organloc/volume.hpp"

#include <optional>
#include <vector>

namespace organloc {

struct EnergyConfig
{
  double lambda = 1.0;          ///< pairwise weight, >= 0
  std::optional<double> sigma;  ///< contrast scale; empty = auto
  double epsilon = 1e-6;        ///< probability floor before the log, in (0, 0.5)

  void validate() const;
};

/// s-t network for a binary labeling energy. Node label 1 (foreground) is
/// the source side: a node on the sink side pays its source capacity, a node
/// on the source side pays its sink capacity, and a pairwise arc pair is paid
/// once when its ends are separated.
class FlowNetwork
{
public:
  struct Edge
  {
    int a = 0;
    int b = 0;
    double cap_ab = 0.0;
    double cap_ba = 0.0;
  };

  FlowNetwork() = default;
  explicit FlowNetwork(int nodes) : source_cap_(std::size_t(nodes), 0.0), sink_cap_(std::size_t(nodes), 0.0) {}

  int node_count() const { return int(source_cap_.size()); }
  int add_node()
  {
    source_cap_.push_back(0.0);
    sink_cap_.push_back(0.0);
    return node_count() - 1;
  }

  /// Accumulates terminal capacities; both must be >= 0.
  void add_terminal(int node, double to_source, double to_sink);
  void add_edge(int a, int b, double cap_ab, double cap_ba);

  double source_cap(int n) const { return source_cap_[std::size_t(n)]; }
  double sink_cap(int n) const { return sink_cap_[std::size_t(n)]; }
  const std::vector<Edge>& edges() const { return edges_; }

  /// Cut value of a labeling (1 = source side).
  double cut_cost(const std::vector<std::uint8_t>& labels) const;

private:
  std::vector<double> source_cap_;
  std::vector<double> sink_cap_;
  std::vector<Edge> edges_;
};

struct MinCut
{
  std::vector<std::uint8_t> labels; ///< 1 = source side (foreground)
  double value = 0.0;               ///< max-flow value = cut cost
};

/// Exact minimum cut by augmenting paths on two search trees that are kept
/// and repaired between augmentations. Nodes left in the source tree are
/// labeled 1; free nodes (reachable from neither terminal) are labeled 0.
MinCut min_cut(const FlowNetwork& net);

/// Unary and Potts pairwise terms over ROI voxels.
struct BinaryEnergy
{
  struct Pair
  {
    int a = 0;
    int b = 0;
    double weight = 0.0;
  };

  Eigen::VectorXd unary_fg;
  Eigen::VectorXd unary_bg;
  std::vector<Pair> pairs;

  int size() const { return int(unary_fg.size()); }
  double evaluate(const std::vector<std::uint8_t>& labels) const;
  /// Pairwise part only.
  double boundary(const std::vector<std::uint8_t>& labels) const;
  FlowNetwork network() const;
};

struct SegmentationEnergy
{
  BinaryEnergy energy;
  std::vector<Eigen::Index> voxels; ///< linear volume index of each node
  double sigma = 1.0;               ///< contrast scale actually used
};

/// U_fg = -log(max(p, eps)), U_bg = -log(max(1 - p, eps)); each 6-neighbor
/// pair inside the ROI gets lambda * exp(-(I_p - I_q)^2 / (2 sigma^2)).
/// Auto sigma is the mean absolute neighbor difference inside the ROI
/// (1 when that is zero).
SegmentationEnergy build_energy(const ScalarVolume& ct, const ScalarVolume& prob, const MaskVolume& roi,
                                const EnergyConfig& cfg);

/// Minimizing labeling on the ROI; voxels outside it are background.
MaskVolume segment_precise(const ScalarVolume& ct, const ScalarVolume& prob, const MaskVolume& roi,
                           const EnergyConfig& cfg);

/// Number of 6-neighbor voxel pairs with differing mask values.
Eigen::Index boundary_length(const MaskVolume& mask);

} // namespace organloc
