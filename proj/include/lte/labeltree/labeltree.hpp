// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lte/common.hpp"
#include "lte/forest/forest.hpp"

namespace lte::labeltree {

/// Row-stochastic matrix of averaged predicted probabilities: a(i, j) is the
/// mean probability of class labels[j] over evaluation samples of labels[i].
struct ConfusionMatrix {
  Matrix a;
  std::vector<Label> labels;
};

using ProbaFn = std::function<std::vector<double>(std::span<const double>)>;

/// Confusion from an arbitrary probabilistic classifier whose output is
/// ordered like `labels`.
ConfusionMatrix confusion_from_classifier(std::span<const Sample> eval, const std::vector<Label>& labels,
                                          const ProbaFn& proba);

/// Stratified seeded halving of the samples whose label is in `labels`, a
/// multi-class forest on one half, evaluated on the other.
ConfusionMatrix confusion_matrix(std::span<const Sample> samples, const std::vector<Label>& labels,
                                 const forest::ForestConfig& cfg, std::uint64_t seed);

/// (A + A^T) / 2
Matrix symmetrize(const Matrix& a);

/// Two disjoint, nonempty, sorted label lists covering the parent's set.
struct Partition {
  std::vector<Label> left;
  std::vector<Label> right;

  friend bool operator==(const Partition&, const Partition&) = default;
};

/// Within-part mass of the symmetrised confusion, counting ordered pairs and the diagonal.
double partition_objective(const Matrix& abar, const std::vector<Label>& labels, const Partition& part);

enum class PartitionMode { exact, spectral, automatic };

std::string_view mode_name(PartitionMode mode);
PartitionMode parse_mode(std::string_view name);

/// Largest label set handled by enumeration in automatic mode.
inline constexpr std::size_t kExactLimit = 12;

/// 2^(n-1) - 1
std::uint64_t candidate_count(std::size_t n);

/// Objective-maximising partition. Exact mode enumerates every candidate;
/// spectral mode rounds the normalised-affinity spectral embedding. Ties go to
/// the lexicographically smallest left part; the left part always holds the
/// smallest label.
Partition best_partition(const Matrix& abar, const std::vector<Label>& labels, PartitionMode mode);

/// Binary tree over class labels. Nodes are stored in pre-order, so split
/// nodes appear in the fixed split order used by the embedding.
class LabelTree {
 public:
  struct Node {
    std::vector<Label> labels;
    int left = -1;
    int right = -1;
    double objective = 0.0;  // E of the chosen partition, split nodes only

    bool is_leaf() const { return left < 0; }
  };

  LabelTree() = default;
  explicit LabelTree(std::vector<Node> nodes);

  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& root() const { return nodes_.front(); }
  const std::vector<Label>& classes() const { return nodes_.front().labels; }
  std::size_t n_classes() const { return classes().size(); }

  /// Node ids of the split nodes in pre-order; split i is nodes()[split_order()[i]].
  const std::vector<int>& split_order() const { return split_order_; }
  std::size_t n_splits() const { return split_order_.size(); }
  const Node& split(std::size_t i) const { return nodes_[static_cast<std::size_t>(split_order_[i])]; }
  const Node& left_of(const Node& n) const { return nodes_[static_cast<std::size_t>(n.left)]; }
  const Node& right_of(const Node& n) const { return nodes_[static_cast<std::size_t>(n.right)]; }

  /// JSON document: node id, label set, children.
  std::string to_text() const;
  static LabelTree from_text(std::string_view text);

  friend bool operator==(const LabelTree& a, const LabelTree& b);

 private:
  void validate() const;

  std::vector<Node> nodes_;
  std::vector<int> split_order_;
};

struct TreeBuildOptions {
  forest::ForestConfig forest;
  PartitionMode mode = PartitionMode::automatic;
  std::uint64_t seed = 0;
};

/// Recursive confusion -> symmetrise -> partition growth until single-label leaves.
LabelTree build_label_tree(std::span<const Sample> samples, const TreeBuildOptions& opts);

}  // namespace lte::labeltree
