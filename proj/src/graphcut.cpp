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

#include "organloc/graphcut.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace organloc {

void EnergyConfig::validate() const
{
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw ValidationError("lambda must be finite and >= 0");
  if (sigma && !(*sigma > 0.0 && std::isfinite(*sigma)))
    throw ValidationError("sigma must be positive");
  if (!(epsilon > 0.0 && epsilon < 0.5))
    throw ValidationError("epsilon must lie in (0, 0.5)");
}

void FlowNetwork::add_terminal(int node, double to_source, double to_sink)
{
  if (!(to_source >= 0.0) || !(to_sink >= 0.0))
    throw ValidationError("terminal capacities must be >= 0");
  source_cap_[std::size_t(node)] += to_source;
  sink_cap_[std::size_t(node)] += to_sink;
}

void FlowNetwork::add_edge(int a, int b, double cap_ab, double cap_ba)
{
  if (a == b || a < 0 || b < 0 || a >= node_count() || b >= node_count())
    throw ValidationError("bad edge endpoints");
  if (!(cap_ab >= 0.0) || !(cap_ba >= 0.0))
    throw ValidationError("edge capacities must be >= 0");
  edges_.push_back({a, b, cap_ab, cap_ba});
}

double FlowNetwork::cut_cost(const std::vector<std::uint8_t>& labels) const
{
  double cost = 0.0;
  for (int n = 0; n < node_count(); ++n)
    cost += labels[std::size_t(n)] ? sink_cap(n) : source_cap(n);
  for (const auto& e : edges_)
  {
    if (labels[std::size_t(e.a)] && !labels[std::size_t(e.b)])
      cost += e.cap_ab;
    else if (!labels[std::size_t(e.a)] && labels[std::size_t(e.b)])
      cost += e.cap_ba;
  }
  return cost;
}

namespace {

/// Boykov-Kolmogorov max-flow with timestamp/distance heuristics for
/// orphan adoption.
class BkSolver
{
public:
  explicit BkSolver(const FlowNetwork& net) : nodes_(std::size_t(net.node_count()))
  {
    arcs_.reserve(net.edges().size() * 2);
    for (const auto& e : net.edges())
    {
      const int ab = int(arcs_.size());
      arcs_.push_back({e.b, nodes_[std::size_t(e.a)].first, ab + 1, e.cap_ab});
      nodes_[std::size_t(e.a)].first = ab;
      arcs_.push_back({e.a, nodes_[std::size_t(e.b)].first, ab, e.cap_ba});
      nodes_[std::size_t(e.b)].first = ab + 1;
    }
    for (int n = 0; n < net.node_count(); ++n)
    {
      const double s = net.source_cap(n), t = net.sink_cap(n);
      flow_ += std::min(s, t);
      nodes_[std::size_t(n)].tr_cap = s - t;
    }
  }

  double run()
  {
    for (std::size_t n = 0; n < nodes_.size(); ++n)
    {
      auto& node = nodes_[n];
      if (node.tr_cap > 0.0)
      {
        node.is_sink = false;
        node.parent = kTerminal;
        node.dist = 1;
        set_active(int(n));
      }
      else if (node.tr_cap < 0.0)
      {
        node.is_sink = true;
        node.parent = kTerminal;
        node.dist = 1;
        set_active(int(n));
      }
    }

    int current = -1;
    for (;;)
    {
      int i = current;
      if (i >= 0)
      {
        nodes_[std::size_t(i)].active = false;
        if (nodes_[std::size_t(i)].parent == kNone)
          i = -1;
      }
      if (i < 0)
      {
        i = next_active();
        if (i < 0)
          break;
      }

      const int middle = grow(i);
      ++time_;
      if (middle >= 0)
      {
        nodes_[std::size_t(i)].active = true; // keep i current without queueing it
        current = i;
        augment(middle);
        adopt_orphans();
      }
      else
        current = -1;
    }
    return flow_;
  }

  bool in_source_tree(int n) const
  {
    const auto& node = nodes_[std::size_t(n)];
    return node.parent != kNone && !node.is_sink;
  }

private:
  static constexpr int kNone = -1;
  static constexpr int kTerminal = -2;
  static constexpr int kOrphan = -3;
  static constexpr int kInfiniteDist = std::numeric_limits<int>::max();

  struct Arc
  {
    int head;
    int next;
    int sister;
    double r_cap;
  };

  struct Node
  {
    int first = -1;
    int parent = kNone; ///< arc toward the tree root, or kNone/kTerminal/kOrphan
    bool is_sink = false;
    bool active = false;
    double tr_cap = 0.0; ///< > 0: residual from source, < 0: residual to sink
    long ts = 0;
    int dist = 0;
  };

  void set_active(int n)
  {
    auto& node = nodes_[std::size_t(n)];
    if (!node.active)
    {
      node.active = true;
      queue_.push_back(n);
    }
  }

  int next_active()
  {
    while (!queue_.empty())
    {
      const int n = queue_.front();
      queue_.pop_front();
      nodes_[std::size_t(n)].active = false;
      if (nodes_[std::size_t(n)].parent != kNone)
        return n;
    }
    return -1;
  }

  /// Grows the tree of i by one layer. Returns an arc from the source tree to
  /// the sink tree when the trees touch, else -1.
  int grow(int i)
  {
    const Node& ni = nodes_[std::size_t(i)];
    for (int a = ni.first; a >= 0; a = arcs_[std::size_t(a)].next)
    {
      const Arc& arc = arcs_[std::size_t(a)];
      const double cap = ni.is_sink ? arcs_[std::size_t(arc.sister)].r_cap : arc.r_cap;
      if (!(cap > 0.0))
        continue;
      Node& nj = nodes_[std::size_t(arc.head)];
      if (nj.parent == kNone)
      {
        nj.is_sink = ni.is_sink;
        nj.parent = arc.sister;
        nj.ts = ni.ts;
        nj.dist = ni.dist + 1;
        set_active(arc.head);
      }
      else if (nj.is_sink != ni.is_sink)
        return ni.is_sink ? arc.sister : a;
      else if (nj.ts <= ni.ts && nj.dist > ni.dist)
      {
        // shorter path to the root through i
        nj.parent = arc.sister;
        nj.ts = ni.ts;
        nj.dist = ni.dist + 1;
      }
    }
    return -1;
  }

  void make_orphan_front(int n)
  {
    nodes_[std::size_t(n)].parent = kOrphan;
    orphans_.push_front(n);
  }

  void make_orphan_rear(int n)
  {
    nodes_[std::size_t(n)].parent = kOrphan;
    orphans_.push_back(n);
  }

  void augment(int middle)
  {
    const Arc& mid = arcs_[std::size_t(middle)];
    double bottleneck = mid.r_cap;

    int i = arcs_[std::size_t(mid.sister)].head;
    for (;;)
    {
      const int a = nodes_[std::size_t(i)].parent;
      if (a == kTerminal)
        break;
      bottleneck = std::min(bottleneck, arcs_[std::size_t(arcs_[std::size_t(a)].sister)].r_cap);
      i = arcs_[std::size_t(a)].head;
    }
    bottleneck = std::min(bottleneck, nodes_[std::size_t(i)].tr_cap);

    i = mid.head;
    for (;;)
    {
      const int a = nodes_[std::size_t(i)].parent;
      if (a == kTerminal)
        break;
      bottleneck = std::min(bottleneck, arcs_[std::size_t(a)].r_cap);
      i = arcs_[std::size_t(a)].head;
    }
    bottleneck = std::min(bottleneck, -nodes_[std::size_t(i)].tr_cap);

    arcs_[std::size_t(mid.sister)].r_cap += bottleneck;
    arcs_[std::size_t(middle)].r_cap -= bottleneck;

    i = arcs_[std::size_t(mid.sister)].head;
    for (;;)
    {
      const int a = nodes_[std::size_t(i)].parent;
      if (a == kTerminal)
        break;
      Arc& up = arcs_[std::size_t(a)];
      Arc& down = arcs_[std::size_t(up.sister)];
      up.r_cap += bottleneck;
      down.r_cap -= bottleneck;
      if (!(down.r_cap > 0.0))
        make_orphan_front(i);
      i = up.head;
    }
    nodes_[std::size_t(i)].tr_cap -= bottleneck;
    if (!(nodes_[std::size_t(i)].tr_cap > 0.0))
      make_orphan_front(i);

    i = mid.head;
    for (;;)
    {
      const int a = nodes_[std::size_t(i)].parent;
      if (a == kTerminal)
        break;
      Arc& up = arcs_[std::size_t(a)];
      arcs_[std::size_t(up.sister)].r_cap += bottleneck;
      up.r_cap -= bottleneck;
      if (!(up.r_cap > 0.0))
        make_orphan_front(i);
      i = up.head;
    }
    nodes_[std::size_t(i)].tr_cap += bottleneck;
    if (!(nodes_[std::size_t(i)].tr_cap < 0.0))
      make_orphan_front(i);

    flow_ += bottleneck;
  }

  void adopt_orphans()
  {
    while (!orphans_.empty())
    {
      const int n = orphans_.front();
      orphans_.pop_front();
      process_orphan(n);
    }
  }

  /// Distance from j to its terminal, or kInfiniteDist if its path hits an orphan.
  int root_distance(int j)
  {
    int d = 0;
    for (;;)
    {
      Node& nj = nodes_[std::size_t(j)];
      if (nj.ts == time_)
        return d + nj.dist;
      const int a = nj.parent;
      ++d;
      if (a == kTerminal)
      {
        nj.ts = time_;
        nj.dist = 1;
        return d;
      }
      if (a == kOrphan)
        return kInfiniteDist;
      j = arcs_[std::size_t(a)].head;
    }
  }

  void process_orphan(int i)
  {
    Node& ni = nodes_[std::size_t(i)];
    const bool sink = ni.is_sink;
    int best_arc = kNone;
    int best_dist = kInfiniteDist;

    for (int a = ni.first; a >= 0; a = arcs_[std::size_t(a)].next)
    {
      const Arc& arc = arcs_[std::size_t(a)];
      // residual capacity from the candidate parent toward i (source tree)
      // or from i toward the candidate parent (sink tree)
      const double cap = sink ? arc.r_cap : arcs_[std::size_t(arc.sister)].r_cap;
      if (!(cap > 0.0))
        continue;
      const Node& nj = nodes_[std::size_t(arc.head)];
      if (nj.is_sink != sink || nj.parent == kNone)
        continue;
      int d = root_distance(arc.head);
      if (d == kInfiniteDist)
        continue;
      if (d < best_dist)
      {
        best_arc = a;
        best_dist = d;
      }
      for (int j = arc.head; nodes_[std::size_t(j)].ts != time_;
           j = arcs_[std::size_t(nodes_[std::size_t(j)].parent)].head)
      {
        nodes_[std::size_t(j)].ts = time_;
        nodes_[std::size_t(j)].dist = d--;
      }
    }

    if (best_arc != kNone)
    {
      ni.parent = best_arc;
      ni.ts = time_;
      ni.dist = best_dist + 1;
      return;
    }

    // no valid parent: i becomes free; neighbors that could regrow into it
    // become active and children become orphans
    ni.parent = kNone;
    for (int a = ni.first; a >= 0; a = arcs_[std::size_t(a)].next)
    {
      const Arc& arc = arcs_[std::size_t(a)];
      const int j = arc.head;
      Node& nj = nodes_[std::size_t(j)];
      if (nj.is_sink != sink || nj.parent == kNone)
        continue;
      const double cap = sink ? arc.r_cap : arcs_[std::size_t(arc.sister)].r_cap;
      if (cap > 0.0)
        set_active(j);
      if (nj.parent != kTerminal && nj.parent != kOrphan && arcs_[std::size_t(nj.parent)].head == i)
        make_orphan_rear(j);
    }
  }

  std::vector<Node> nodes_;
  std::vector<Arc> arcs_;
  std::deque<int> queue_;
  std::deque<int> orphans_;
  double flow_ = 0.0;
  long time_ = 0;
};

} // namespace

MinCut min_cut(const FlowNetwork& net)
{
  BkSolver solver(net);
  MinCut result;
  result.value = solver.run();
  result.labels.resize(std::size_t(net.node_count()));
  for (int n = 0; n < net.node_count(); ++n)
    result.labels[std::size_t(n)] = solver.in_source_tree(n) ? 1 : 0;
  return result;
}

double BinaryEnergy::boundary(const std::vector<std::uint8_t>& labels) const
{
  double e = 0.0;
  for (const auto& p : pairs)
    if (labels[std::size_t(p.a)] != labels[std::size_t(p.b)])
      e += p.weight;
  return e;
}

double BinaryEnergy::evaluate(const std::vector<std::uint8_t>& labels) const
{
  double e = 0.0;
  for (int n = 0; n < size(); ++n)
    e += labels[std::size_t(n)] ? unary_fg[n] : unary_bg[n];
  return e + boundary(labels);
}

FlowNetwork BinaryEnergy::network() const
{
  FlowNetwork net(size());
  for (int n = 0; n < size(); ++n)
    net.add_terminal(n, unary_bg[n], unary_fg[n]);
  for (const auto& p : pairs)
    if (p.weight > 0.0)
      net.add_edge(p.a, p.b, p.weight, p.weight);
  return net;
}

SegmentationEnergy build_energy(const ScalarVolume& ct, const ScalarVolume& prob, const MaskVolume& roi,
                                const EnergyConfig& cfg)
{
  cfg.validate();
  if (!ct.same_grid(prob) || ct.dims() != roi.dims())
    throw ValidationError("CT, probability and ROI volumes must share a grid");
  if ((prob.data() < 0.0f).any() || (prob.data() > 1.0f).any())
    throw ValidationError("probabilities must lie in [0,1]");

  SegmentationEnergy out;
  std::vector<int> node_of(std::size_t(ct.voxel_count()), -1);
  for (Eigen::Index i = 0; i < roi.voxel_count(); ++i)
    if (roi.data()[i])
    {
      node_of[std::size_t(i)] = int(out.voxels.size());
      out.voxels.push_back(i);
    }
  if (out.voxels.empty())
    throw ValidationError("graph-cut ROI is empty");

  const auto n = Eigen::Index(out.voxels.size());
  out.energy.unary_fg.resize(n);
  out.energy.unary_bg.resize(n);
  for (Eigen::Index k = 0; k < n; ++k)
  {
    const double p = prob.data()[out.voxels[std::size_t(k)]];
    out.energy.unary_fg[k] = -std::log(std::max(p, cfg.epsilon));
    out.energy.unary_bg[k] = -std::log(std::max(1.0 - p, cfg.epsilon));
  }

  // forward 6-neighbors (+x, +y, +z) inside the ROI
  struct Link
  {
    int a, b;
    double diff;
  };
  std::vector<Link> links;
  const Eigen::Index steps[3] = {1, ct.nx(), Eigen::Index(ct.nx()) * ct.ny()};
  for (const Eigen::Index v : out.voxels)
  {
    const int x = int(v % ct.nx());
    const int y = int((v / ct.nx()) % ct.ny());
    const int z = int(v / (Eigen::Index(ct.nx()) * ct.ny()));
    const bool inside[3] = {x + 1 < ct.nx(), y + 1 < ct.ny(), z + 1 < ct.nz()};
    for (int a = 0; a < 3; ++a)
    {
      if (!inside[a])
        continue;
      const Eigen::Index w = v + steps[a];
      if (node_of[std::size_t(w)] < 0)
        continue;
      links.push_back({node_of[std::size_t(v)], node_of[std::size_t(w)], double(ct.data()[v]) - ct.data()[w]});
    }
  }

  if (cfg.sigma)
    out.sigma = *cfg.sigma;
  else
  {
    double total = 0.0;
    for (const auto& l : links)
      total += std::abs(l.diff);
    const double mean = links.empty() ? 0.0 : total / double(links.size());
    out.sigma = mean > 0.0 ? mean : 1.0;
  }

  out.energy.pairs.reserve(links.size());
  for (const auto& l : links)
    out.energy.pairs.push_back(
      {l.a, l.b, cfg.lambda * std::exp(-(l.diff * l.diff) / (2.0 * out.sigma * out.sigma))});
  return out;
}

MaskVolume segment_precise(const ScalarVolume& ct, const ScalarVolume& prob, const MaskVolume& roi,
                           const EnergyConfig& cfg)
{
  const SegmentationEnergy se = build_energy(ct, prob, roi, cfg);
  const MinCut cut = min_cut(se.energy.network());
  MaskVolume mask = volume_like<std::uint8_t>(ct);
  for (std::size_t k = 0; k < se.voxels.size(); ++k)
    mask.data()[se.voxels[k]] = cut.labels[k];
  return mask;
}

Eigen::Index boundary_length(const MaskVolume& m)
{
  Eigen::Index count = 0;
  for (int z = 0; z < m.nz(); ++z)
    for (int y = 0; y < m.ny(); ++y)
      for (int x = 0; x < m.nx(); ++x)
      {
        const bool v = m(x, y, z) != 0;
        if (x + 1 < m.nx() && v != (m(x + 1, y, z) != 0))
          ++count;
        if (y + 1 < m.ny() && v != (m(x, y + 1, z) != 0))
          ++count;
        if (z + 1 < m.nz() && v != (m(x, y, z + 1) != 0))
          ++count;
      }
  return count;
}

} // namespace organloc
