// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#include "lte/forest/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <thread>
#include <utility>

#include "lte/binio.hpp"

namespace lte::forest {
namespace {

constexpr std::uint32_t kMagic = 0x4652544cu;  // "LTRF"
constexpr std::uint32_t kVersion = 1;

struct Dataset {
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t n_classes = 0;
  std::vector<double> cols;            // feature-major, m * n
  std::vector<std::uint32_t> labels;   // dense class index per row

  double at(std::size_t feature, std::size_t row) const { return cols[feature * n + row]; }
};

struct Split {
  std::int32_t feature = -1;
  double threshold = 0.0;
  double score = -1.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, const ForestConfig& cfg, std::size_t mtry, std::uint64_t seed)
      : data_(data), cfg_(cfg), mtry_(mtry), rng_(seed) {}

  Tree build() {
    std::vector<std::uint32_t> idx(data_.n);
    if (cfg_.bootstrap) {
      std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(data_.n - 1));
      for (auto& i : idx) i = pick(rng_);
    } else {
      std::iota(idx.begin(), idx.end(), 0u);
    }
    idx_ = std::move(idx);
    features_.resize(data_.m);
    std::iota(features_.begin(), features_.end(), 0u);
    pairs_.reserve(data_.n);

    grow(0, idx_.size(), 0);
    return Tree(std::move(nodes_), std::move(leaf_probs_), data_.n_classes);
  }

 private:
  std::int32_t grow(std::size_t begin, std::size_t end, std::size_t depth) {
    const auto node_id = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();

    std::vector<std::size_t> counts(data_.n_classes, 0);
    for (std::size_t i = begin; i < end; ++i) ++counts[data_.labels[idx_[i]]];
    const std::size_t count = end - begin;
    const bool pure = std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }) <= 1;
    const bool depth_capped = cfg_.max_depth != 0 && depth >= cfg_.max_depth;

    Split split;
    if (!pure && !depth_capped && count >= 2 * cfg_.min_leaf) split = find_split(begin, end, counts);

    if (split.feature < 0) {
      make_leaf(node_id, counts, count);
      return node_id;
    }

    const auto f = static_cast<std::size_t>(split.feature);
    const auto mid_it = std::stable_partition(idx_.begin() + static_cast<std::ptrdiff_t>(begin),
                                              idx_.begin() + static_cast<std::ptrdiff_t>(end),
                                              [&](std::uint32_t r) { return data_.at(f, r) <= split.threshold; });
    const auto mid = static_cast<std::size_t>(mid_it - idx_.begin());
    const std::int32_t left = grow(begin, mid, depth + 1);
    const std::int32_t right = grow(mid, end, depth + 1);
    auto& node = nodes_[static_cast<std::size_t>(node_id)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = left;
    node.right = right;
    return node_id;
  }

  void make_leaf(std::int32_t node_id, const std::vector<std::size_t>& counts, std::size_t count) {
    auto& node = nodes_[static_cast<std::size_t>(node_id)];
    node.leaf = static_cast<std::int32_t>(leaf_probs_.size() / data_.n_classes);
    const double alpha = cfg_.laplace_alpha;
    const double denom = static_cast<double>(count) + alpha * static_cast<double>(data_.n_classes);
    for (std::size_t c : counts) leaf_probs_.push_back((static_cast<double>(c) + alpha) / denom);
  }

  Split find_split(std::size_t begin, std::size_t end, const std::vector<std::size_t>& counts) {
    // Partial Fisher-Yates draw of mtry candidate features.
    for (std::size_t i = 0; i < mtry_; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, data_.m - 1);
      std::swap(features_[i], features_[pick(rng_)]);
    }
    std::vector<std::uint32_t> drawn(features_.begin(), features_.begin() + static_cast<std::ptrdiff_t>(mtry_));
    std::sort(drawn.begin(), drawn.end());

    Split best;
    for (std::uint32_t f : drawn) evaluate(f, begin, end, counts, best);
    if (best.feature < 0 && mtry_ < data_.m) {
      std::vector<std::uint32_t> rest(features_.begin() + static_cast<std::ptrdiff_t>(mtry_), features_.end());
      std::sort(rest.begin(), rest.end());
      for (std::uint32_t f : rest) evaluate(f, begin, end, counts, best);
    }
    return best;
  }

  // Maximises sum_c L_c^2 / n_L + sum_c R_c^2 / n_R, i.e. minimises weighted
  // Gini impurity. Strict improvement keeps the lowest feature / threshold on ties.
  void evaluate(std::uint32_t f, std::size_t begin, std::size_t end, const std::vector<std::size_t>& counts,
                Split& best) {
    pairs_.clear();
    for (std::size_t i = begin; i < end; ++i) {
      const std::uint32_t r = idx_[i];
      pairs_.emplace_back(data_.at(f, r), data_.labels[r]);
    }
    // Order within a run of equal values does not affect any boundary count.
    std::sort(pairs_.begin(), pairs_.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    if (pairs_.front().first == pairs_.back().first) return;

    const std::size_t total = pairs_.size();
    std::vector<std::size_t> left(data_.n_classes, 0);
    std::vector<std::size_t> right = counts;
    double sq_left = 0.0;
    double sq_right = 0.0;
    for (std::size_t c : right) sq_right += static_cast<double>(c) * static_cast<double>(c);

    for (std::size_t i = 0; i + 1 < total; ++i) {
      const std::uint32_t c = pairs_[i].second;
      sq_left += 2.0 * static_cast<double>(left[c]) + 1.0;
      sq_right -= 2.0 * static_cast<double>(right[c]) - 1.0;
      ++left[c];
      --right[c];
      const std::size_t n_left = i + 1;
      const std::size_t n_right = total - n_left;
      if (pairs_[i].first == pairs_[i + 1].first) continue;
      if (n_left < cfg_.min_leaf || n_right < cfg_.min_leaf) continue;
      const double score = sq_left / static_cast<double>(n_left) + sq_right / static_cast<double>(n_right);
      if (score > best.score) {
        double thr = 0.5 * (pairs_[i].first + pairs_[i + 1].first);
        if (!(thr < pairs_[i + 1].first)) thr = pairs_[i].first;
        best = {static_cast<std::int32_t>(f), thr, score};
      }
    }
  }

  const Dataset& data_;
  const ForestConfig& cfg_;
  std::size_t mtry_;
  std::mt19937_64 rng_;
  std::vector<std::uint32_t> idx_;
  std::vector<std::uint32_t> features_;
  std::vector<std::pair<double, std::uint32_t>> pairs_;
  std::vector<Tree::Node> nodes_;
  std::vector<double> leaf_probs_;
};

}  // namespace

void ForestConfig::validate() const {
  if (n_trees < 1) throw Error("forest needs at least one tree");
  if (min_leaf < 1) throw Error("forest min_leaf must be >= 1");
  if (laplace_alpha < 0.0) throw Error("forest laplace_alpha must be >= 0");
}

Tree::Tree(std::vector<Node> nodes, std::vector<double> leaf_probs, std::size_t n_classes)
    : nodes_(std::move(nodes)), leaf_probs_(std::move(leaf_probs)), n_classes_(n_classes) {
  if (nodes_.empty() || n_classes_ == 0 || leaf_probs_.size() % n_classes_ != 0) throw Error("malformed tree");
  const auto n_nodes = static_cast<std::int32_t>(nodes_.size());
  const auto n_leaves = static_cast<std::int32_t>(leaf_probs_.size() / n_classes_);
  for (const Node& node : nodes_) {
    if (node.feature < 0) {
      if (node.leaf < 0 || node.leaf >= n_leaves) throw Error("malformed tree: bad leaf index");
    } else if (node.left <= 0 || node.left >= n_nodes || node.right <= 0 || node.right >= n_nodes) {
      throw Error("malformed tree: bad child index");
    }
  }
}

Tree Tree::constant(std::vector<double> probs) {
  const std::size_t c = probs.size();
  return Tree({Node{-1, 0.0, -1, -1, 0}}, std::move(probs), c);
}

Tree Tree::stump(std::int32_t feature, double threshold, std::vector<double> left_probs,
                 std::vector<double> right_probs) {
  if (left_probs.size() != right_probs.size()) throw Error("stump leaves disagree on class count");
  const std::size_t c = left_probs.size();
  std::vector<double> probs = std::move(left_probs);
  probs.insert(probs.end(), right_probs.begin(), right_probs.end());
  return Tree({Node{feature, threshold, 1, 2, -1}, Node{-1, 0.0, -1, -1, 0}, Node{-1, 0.0, -1, -1, 1}},
              std::move(probs), c);
}

std::span<const double> Tree::leaf_for(std::span<const double> x) const {
  std::size_t i = 0;
  while (nodes_[i].feature >= 0) {
    const Node& n = nodes_[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return {leaf_probs_.data() + static_cast<std::size_t>(nodes_[i].leaf) * n_classes_, n_classes_};
}

Forest::Forest(std::vector<Label> classes, std::size_t n_features, std::vector<Tree> trees)
    : classes_(std::move(classes)), n_features_(n_features), trees_(std::move(trees)) {
  if (trees_.empty()) throw Error("forest needs at least one tree");
  for (const Tree& t : trees_) {
    if (t.n_classes() != classes_.size()) throw Error("tree class count does not match forest");
    for (const auto& node : t.nodes()) {
      if (node.feature >= static_cast<std::int32_t>(n_features_)) throw Error("tree feature index out of range");
    }
  }
}

std::vector<double> Forest::predict_proba(std::span<const double> x) const {
  if (x.size() != n_features_) {
    throw Error("feature dimension mismatch: forest expects " + std::to_string(n_features_) + ", got " +
                std::to_string(x.size()));
  }
  std::vector<double> p(classes_.size(), 0.0);
  for (const Tree& t : trees_) {
    const auto leaf = t.leaf_for(x);
    for (std::size_t c = 0; c < p.size(); ++c) p[c] += leaf[c];
  }
  const double inv = 1.0 / static_cast<double>(trees_.size());
  for (double& v : p) v *= inv;
  return p;
}

Label Forest::predict(std::span<const double> x) const {
  const auto p = predict_proba(x);
  return classes_[static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin())];
}

std::size_t Forest::class_index(Label label) const {
  const auto it = std::find(classes_.begin(), classes_.end(), label);
  if (it == classes_.end()) throw Error("label " + std::to_string(label) + " not known to forest");
  return static_cast<std::size_t>(it - classes_.begin());
}

std::string Forest::serialize() const {
  ByteWriter w;
  w.u32(kMagic);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(classes_.size()));
  for (Label c : classes_) w.i32(c);
  w.u32(static_cast<std::uint32_t>(n_features_));
  w.u32(static_cast<std::uint32_t>(trees_.size()));
  for (const Tree& t : trees_) {
    w.u32(static_cast<std::uint32_t>(t.nodes().size()));
    for (const auto& n : t.nodes()) {
      w.i32(n.feature);
      w.f64(n.threshold);
      w.i32(n.left);
      w.i32(n.right);
      w.i32(n.leaf);
    }
    w.u32(static_cast<std::uint32_t>(t.n_leaves()));
    for (double p : t.leaf_probs()) w.f64(p);
  }
  return w.take();
}

Forest Forest::deserialize(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.u32() != kMagic) throw Error("not a forest record (bad magic)");
  if (const auto v = r.u32(); v != kVersion) throw Error("unsupported forest record version " + std::to_string(v));
  std::vector<Label> classes(r.u32());
  for (auto& c : classes) c = r.i32();
  const std::size_t n_features = r.u32();
  const std::size_t n_trees = r.u32();
  std::vector<Tree> trees;
  trees.reserve(n_trees);
  for (std::size_t t = 0; t < n_trees; ++t) {
    std::vector<Tree::Node> nodes(r.u32());
    for (auto& n : nodes) {
      n.feature = r.i32();
      n.threshold = r.f64();
      n.left = r.i32();
      n.right = r.i32();
      n.leaf = r.i32();
    }
    const std::size_t n_leaves = r.u32();
    std::vector<double> probs(n_leaves * classes.size());
    for (auto& p : probs) p = r.f64();
    trees.emplace_back(std::move(nodes), std::move(probs), classes.size());
  }
  if (r.remaining() != 0) throw Error("trailing bytes after forest record");
  return Forest(std::move(classes), n_features, std::move(trees));
}

Forest train_forest(const Matrix& x, std::span<const Label> y, const ForestConfig& cfg) {
  cfg.validate();
  if (x.rows() != y.size()) throw Error("sample/label count mismatch");
  if (x.rows() < 2) throw Error("forest needs at least two samples");
  if (x.cols() == 0) throw Error("forest needs at least one feature");

  std::vector<Label> classes(y.begin(), y.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2) throw Error("degenerate label set");

  Dataset data;
  data.n = x.rows();
  data.m = x.cols();
  data.n_classes = classes.size();
  data.cols.resize(data.n * data.m);
  data.labels.resize(data.n);
  for (std::size_t r = 0; r < data.n; ++r) {
    for (std::size_t c = 0; c < data.m; ++c) data.cols[c * data.n + r] = x(r, c);
    data.labels[r] = static_cast<std::uint32_t>(std::lower_bound(classes.begin(), classes.end(), y[r]) - classes.begin());
  }

  const std::size_t mtry =
      cfg.features_per_split == 0
          ? static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(data.m))))
          : std::min(cfg.features_per_split, data.m);

  std::vector<Tree> trees(cfg.n_trees);
  auto grow_one = [&](std::size_t t) {
    trees[t] = TreeBuilder(data, cfg, mtry, derive_seed(cfg.rng_seed, "forest.tree", t)).build();
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(cfg.jobs, cfg.n_trees));
  if (jobs == 1) {
    for (std::size_t t = 0; t < cfg.n_trees; ++t) grow_one(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) {
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < cfg.n_trees; t = next++) grow_one(t);
      });
    }
    for (auto& th : pool) th.join();
  }
  return Forest(std::move(classes), data.m, std::move(trees));
}

Forest train_forest(std::span<const Sample> samples, const ForestConfig& cfg) {
  if (samples.empty()) throw Error("forest needs at least two samples");
  const std::size_t m = samples.front().x.size();
  Matrix x(samples.size(), m);
  std::vector<Label> y(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].x.size() != m) throw Error("inconsistent sample dimensions");
    std::copy(samples[i].x.begin(), samples[i].x.end(), x.row(i).begin());
    y[i] = samples[i].label;
  }
  return train_forest(x, y, cfg);
}

}  // namespace lte::forest
