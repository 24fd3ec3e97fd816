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

#include "organloc/forest.hpp"

#include "organloc/parallel.hpp"
#include "organloc/rng.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>

namespace organloc {

void TrainConfig::validate() const
{
  if (tree_count < 1 || max_depth < 1 || min_samples_leaf < 1 || candidate_features < 1 ||
      candidate_thresholds < 1)
    throw ValidationError("forest config counts must all be >= 1");
}

int RegressionTree::depth() const
{
  if (nodes.empty())
    return 0;
  std::vector<int> d(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i)
  {
    deepest = std::max(deepest, d[i]);
    if (!nodes[i].is_leaf())
    {
      d[std::size_t(nodes[i].left)] = d[i] + 1;
      d[std::size_t(nodes[i].right)] = d[i] + 1;
    }
  }
  return deepest;
}

std::optional<double> variance_reduction(std::span<const double> left, std::span<const double> right)
{
  if (left.empty() || right.empty())
    return std::nullopt;
  auto sse = [](std::span<const double> v, double mean) {
    double s = 0.0;
    for (double x : v)
      s += (x - mean) * (x - mean);
    return s;
  };
  const double nl = double(left.size()), nr = double(right.size()), n = nl + nr;
  const double sl = std::accumulate(left.begin(), left.end(), 0.0);
  const double sr = std::accumulate(right.begin(), right.end(), 0.0);
  const double mean = (sl + sr) / n;
  const double var_all = (sse(left, mean) + sse(right, mean)) / n;
  const double var_l = sse(left, sl / nl) / nl;
  const double var_r = sse(right, sr / nr) / nr;
  return var_all - (nl / n) * var_l - (nr / n) * var_r;
}

namespace {

class TreeGrower
{
public:
  TreeGrower(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
             const TrainConfig& cfg, std::uint64_t seed, std::vector<Eigen::Index> rows)
    : x_(x), y_(y), cfg_(cfg), rng_(seed), rows_(std::move(rows)), weights_(std::size_t(x.rows()), 0.0),
      pool_(std::size_t(x.cols()))
  {}

  RegressionTree grow()
  {
    canonicalize();
    grow(0, rows_.size(), 0);
    return std::move(tree_);
  }

private:
  void canonicalize()
  {
    std::sort(rows_.begin(), rows_.end(), [&](Eigen::Index a, Eigen::Index b) {
      if (y_[a] != y_[b])
        return y_[a] < y_[b];
      for (Eigen::Index f = 0; f < x_.cols(); ++f)
        if (x_(a, f) != x_(b, f))
          return x_(a, f) < x_(b, f);
      return false;
    });
    // identical samples collapse into one weighted row, so a duplicated
    // training set scales every split statistic by exactly the same factor
    std::vector<Eigen::Index> unique;
    for (const Eigen::Index r : rows_)
    {
      if (!unique.empty() && same_sample(unique.back(), r))
        weights_[unique.back()] += 1.0;
      else
      {
        unique.push_back(r);
        weights_[r] = 1.0;
      }
    }
    rows_ = std::move(unique);
  }

  bool same_sample(Eigen::Index a, Eigen::Index b) const
  {
    return y_[a] == y_[b] && (x_.row(a).array() == x_.row(b).array()).all();
  }

  struct Split
  {
    double gain = 0.0;
    Eigen::Index feature = -1;
    double threshold = 0.0;
  };

  static bool better(double gain, Eigen::Index f, double t, const Split& best)
  {
    if (best.feature < 0)
      return true;
    if (gain != best.gain)
      return gain > best.gain;
    if (f != best.feature)
      return f < best.feature;
    return t < best.threshold;
  }

  void draw_thresholds(double lo, double hi)
  {
    thresholds_.clear();
    if (cfg_.threshold_mode == ThresholdMode::Random)
    {
      for (int i = 0; i < cfg_.candidate_thresholds; ++i)
        thresholds_.push_back(rng_.uniform(lo, hi));
    }
    else
    {
      sorted_ = values_;
      std::sort(sorted_.begin(), sorted_.end());
      for (std::size_t i = 1; i < sorted_.size(); ++i)
        if (sorted_[i] != sorted_[i - 1])
          thresholds_.push_back(0.5 * (sorted_[i - 1] + sorted_[i]));
    }
    std::sort(thresholds_.begin(), thresholds_.end());
  }

  Split best_split(std::size_t begin, std::size_t end, double mean)
  {
    const std::size_t n = end - begin;
    const auto nf = std::size_t(x_.cols());
    const std::size_t k = std::min<std::size_t>(std::size_t(cfg_.candidate_features), nf);
    std::iota(pool_.begin(), pool_.end(), Eigen::Index(0));
    for (std::size_t i = 0; i < k; ++i)
      std::swap(pool_[i], pool_[i + std::size_t(rng_.uniform_int(0, std::int64_t(nf - i) - 1))]);

    Split best;
    values_.resize(n);
    for (std::size_t c = 0; c < k; ++c)
    {
      const Eigen::Index f = pool_[c];
      double lo = x_(rows_[begin], f), hi = lo;
      for (std::size_t i = 0; i < n; ++i)
      {
        const double v = x_(rows_[begin + i], f);
        values_[i] = v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (!(lo < hi))
        continue;
      draw_thresholds(lo, hi);
      const std::size_t t = thresholds_.size();
      count_.assign(t + 1, 0.0);
      sum_.assign(t + 1, 0.0);
      sq_.assign(t + 1, 0.0);
      for (std::size_t i = 0; i < n; ++i)
      {
        // bucket b holds samples that go left for every threshold index >= b
        const auto b =
          std::size_t(std::upper_bound(thresholds_.begin(), thresholds_.end(), values_[i]) - thresholds_.begin());
        const Eigen::Index row = rows_[begin + i];
        const double w = weights_[row];
        const double r = y_[row] - mean;
        count_[b] += w;
        sum_[b] += w * r;
        sq_[b] += w * r * r;
      }
      double total_n = 0.0, total_s = 0.0, total_q = 0.0;
      for (std::size_t b = 0; b <= t; ++b)
      {
        total_n += count_[b];
        total_s += sum_[b];
        total_q += sq_[b];
      }
      const double sse_all = total_q - total_s * total_s / total_n;
      double ln = 0.0, ls = 0.0, lq = 0.0;
      for (std::size_t j = 0; j < t; ++j)
      {
        ln += count_[j];
        ls += sum_[j];
        lq += sq_[j];
        const double rn = total_n - ln;
        if (ln < cfg_.min_samples_leaf || rn < cfg_.min_samples_leaf)
          continue;
        const double rs = total_s - ls, rq = total_q - lq;
        const double gain = (sse_all - (lq - ls * ls / ln) - (rq - rs * rs / rn)) / total_n;
        if (better(gain, f, thresholds_[j], best))
          best = {gain, f, thresholds_[j]};
      }
    }
    return best;
  }

  std::int32_t grow(std::size_t begin, std::size_t end, int depth)
  {
    double sum = 0.0, count = 0.0;
    for (std::size_t i = begin; i < end; ++i)
    {
      count += weights_[rows_[i]];
      sum += weights_[rows_[i]] * y_[rows_[i]];
    }
    const double mean = sum / count;

    const auto id = std::int32_t(tree_.nodes.size());
    tree_.nodes.push_back(TreeNode{-1, 0.0, -1, -1, mean});

    if (depth >= cfg_.max_depth || count < 2.0 * cfg_.min_samples_leaf)
      return id;
    const double first = y_[rows_[begin]];
    bool constant = true;
    for (std::size_t i = begin + 1; i < end && constant; ++i)
      constant = y_[rows_[i]] == first;
    if (constant)
      return id;

    const Split split = best_split(begin, end, mean);
    if (split.feature < 0 || !(split.gain > 0.0))
      return id;

    const auto mid = std::size_t(
      std::stable_partition(rows_.begin() + std::ptrdiff_t(begin), rows_.begin() + std::ptrdiff_t(end),
                            [&](Eigen::Index r) { return x_(r, split.feature) < split.threshold; }) -
      rows_.begin());
    const std::int32_t left = grow(begin, mid, depth + 1);
    const std::int32_t right = grow(mid, end, depth + 1);
    auto& node = tree_.nodes[std::size_t(id)];
    node.feature = std::int32_t(split.feature);
    node.threshold = split.threshold;
    node.left = left;
    node.right = right;
    return id;
  }

  const Eigen::Ref<const Eigen::MatrixXd>& x_;
  const Eigen::Ref<const Eigen::VectorXd>& y_;
  const TrainConfig& cfg_;
  Rng rng_;
  std::vector<Eigen::Index> rows_;
  std::vector<double> weights_;
  std::vector<Eigen::Index> pool_;
  std::vector<double> values_, sorted_, thresholds_;
  std::vector<double> count_, sum_, sq_;
  RegressionTree tree_;
};

constexpr char kForestMagic[4] = {'O', 'L', 'R', 'F'};
constexpr std::uint32_t kForestVersion = 1;

template <typename T>
void put(std::string& out, T v)
{
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader
{
public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get()
  {
    if (pos_ + sizeof(T) > bytes_.size())
      throw CorruptionError("forest section truncated");
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  bool done() const { return pos_ == bytes_.size(); }

private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

} // namespace

RegressionTree train_tree(const Eigen::Ref<const Eigen::MatrixXd>& features,
                          const Eigen::Ref<const Eigen::VectorXd>& targets, std::vector<Eigen::Index> rows,
                          const TrainConfig& cfg, std::uint64_t tree_seed)
{
  cfg.validate();
  if (rows.empty())
    throw ValidationError("cannot grow a tree on zero samples");
  return TreeGrower(features, targets, cfg, tree_seed, std::move(rows)).grow();
}

RegressionForest train_forest(const Eigen::Ref<const Eigen::MatrixXd>& features,
                              const Eigen::Ref<const Eigen::VectorXd>& targets, const TrainConfig& cfg,
                              std::uint64_t bank_fingerprint)
{
  cfg.validate();
  if (features.rows() == 0 || targets.size() == 0)
    throw ValidationError("training set is empty");
  if (features.rows() != targets.size())
    throw ValidationError("feature rows and target count differ");
  if (features.rows() < 2 * cfg.min_samples_leaf)
    throw ValidationError("need at least 2 * min_samples_leaf training samples");
  if (!features.allFinite() || !targets.allFinite())
    throw ValidationError("training data contains non-finite values");

  RegressionForest forest;
  forest.config = cfg;
  forest.bank_fingerprint = bank_fingerprint;
  forest.feature_count = features.cols();
  forest.trees.resize(std::size_t(cfg.tree_count));

  const Eigen::Index n = features.rows();
  parallel_for(std::size_t(cfg.tree_count), [&](std::size_t t) {
    const std::uint64_t seed = derive_seed(cfg.seed, t);
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
    if (cfg.bootstrap)
    {
      Rng rng(seed);
      for (auto& r : rows)
        r = Eigen::Index(rng.uniform_int(0, n - 1));
    }
    else
      std::iota(rows.begin(), rows.end(), Eigen::Index(0));
    forest.trees[t] = train_tree(features, targets, std::move(rows), cfg, derive_seed(seed, 1));
  });
  return forest;
}

double RegressionForest::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const
{
  if (x.size() != feature_count)
    throw ValidationError("feature vector has " + std::to_string(x.size()) + " entries, forest expects " +
                          std::to_string(feature_count));
  if (trees.empty())
    throw ValidationError("forest has no trees");
  double sum = 0.0;
  for (const auto& t : trees)
    sum += t.predict(x);
  return sum / double(trees.size());
}

std::string RegressionForest::serialize() const
{
  std::string out(kForestMagic, 4);
  put<std::uint32_t>(out, kForestVersion);
  put<std::int32_t>(out, config.tree_count);
  put<std::int32_t>(out, config.max_depth);
  put<std::int32_t>(out, config.min_samples_leaf);
  put<std::int32_t>(out, config.candidate_features);
  put<std::int32_t>(out, config.candidate_thresholds);
  put<std::uint64_t>(out, config.seed);
  put<std::uint8_t>(out, config.bootstrap ? 1 : 0);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(config.threshold_mode));
  put<std::uint64_t>(out, bank_fingerprint);
  put<std::uint64_t>(out, std::uint64_t(feature_count));
  put<std::uint32_t>(out, std::uint32_t(trees.size()));
  for (const auto& t : trees)
  {
    put<std::uint32_t>(out, std::uint32_t(t.nodes.size()));
    for (const auto& n : t.nodes)
    {
      put<std::int32_t>(out, n.feature);
      put<double>(out, n.threshold);
      put<std::int32_t>(out, n.left);
      put<std::int32_t>(out, n.right);
      put<double>(out, n.value);
    }
  }
  return out;
}

RegressionForest RegressionForest::parse(std::string_view bytes)
{
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kForestMagic, 4) != 0)
    throw FormatError("not a forest section");
  Reader in(bytes.substr(4));
  if (const auto v = in.get<std::uint32_t>(); v != kForestVersion)
    throw FormatError("unsupported forest version " + std::to_string(v));

  RegressionForest f;
  f.config.tree_count = in.get<std::int32_t>();
  f.config.max_depth = in.get<std::int32_t>();
  f.config.min_samples_leaf = in.get<std::int32_t>();
  f.config.candidate_features = in.get<std::int32_t>();
  f.config.candidate_thresholds = in.get<std::int32_t>();
  f.config.seed = in.get<std::uint64_t>();
  f.config.bootstrap = in.get<std::uint8_t>() != 0;
  const auto mode = in.get<std::uint8_t>();
  if (mode > 1)
    throw FormatError("unknown threshold mode");
  f.config.threshold_mode = static_cast<ThresholdMode>(mode);
  f.bank_fingerprint = in.get<std::uint64_t>();
  f.feature_count = Eigen::Index(in.get<std::uint64_t>());
  const auto tree_count = in.get<std::uint32_t>();
  f.trees.resize(tree_count);
  for (auto& t : f.trees)
  {
    const auto count = in.get<std::uint32_t>();
    if (count == 0)
      throw CorruptionError("empty tree in forest section");
    t.nodes.resize(count);
    for (auto& n : t.nodes)
    {
      n.feature = in.get<std::int32_t>();
      n.threshold = in.get<double>();
      n.left = in.get<std::int32_t>();
      n.right = in.get<std::int32_t>();
      n.value = in.get<double>();
    }
    for (std::size_t i = 0; i < t.nodes.size(); ++i)
    {
      const auto& n = t.nodes[i];
      if (n.is_leaf())
        continue;
      // children are always stored after their parent
      if (n.feature >= f.feature_count || n.left <= std::int32_t(i) || n.right <= std::int32_t(i) ||
          n.left >= std::int32_t(count) || n.right >= std::int32_t(count))
        throw CorruptionError("forest node references out of range");
    }
  }
  if (!in.done())
    throw CorruptionError("trailing bytes after forest section");
  return f;
}

} // namespace organloc
