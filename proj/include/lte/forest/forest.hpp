// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lte/common.hpp"

namespace lte::forest {

struct ForestConfig {
  std::size_t n_trees = 200;
  std::size_t max_depth = 0;           // 0 = unlimited
  std::size_t min_leaf = 1;
  std::size_t features_per_split = 0;  // 0 = ceil(sqrt(M))
  bool bootstrap = true;
  std::uint64_t rng_seed = 0;
  double laplace_alpha = 0.0;          // leaf smoothing, 0 = raw frequencies
  std::size_t jobs = 1;                // worker threads for tree growing

  void validate() const;
};

/// Axis-aligned binary decision tree whose leaves hold class distributions.
/// Node 0 is the root; x[feature] <= threshold goes left.
class Tree {
 public:
  struct Node {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::int32_t leaf = -1;     // row into the leaf distribution table

    friend bool operator==(const Node&, const Node&) = default;
  };

  Tree() = default;
  Tree(std::vector<Node> nodes, std::vector<double> leaf_probs, std::size_t n_classes);

  /// Single-leaf tree.
  static Tree constant(std::vector<double> probs);
  /// Depth-one tree on one feature.
  static Tree stump(std::int32_t feature, double threshold, std::vector<double> left_probs,
                    std::vector<double> right_probs);

  std::span<const double> leaf_for(std::span<const double> x) const;

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<double>& leaf_probs() const { return leaf_probs_; }
  std::size_t n_classes() const { return n_classes_; }
  std::size_t n_leaves() const { return n_classes_ == 0 ? 0 : leaf_probs_.size() / n_classes_; }

  friend bool operator==(const Tree&, const Tree&) = default;

 private:
  std::vector<Node> nodes_;
  std::vector<double> leaf_probs_;
  std::size_t n_classes_ = 0;
};

/// Probabilistic random forest. Immutable after training; prediction is reentrant.
class Forest {
 public:
  Forest() = default;
  Forest(std::vector<Label> classes, std::size_t n_features, std::vector<Tree> trees);

  const std::vector<Label>& classes() const { return classes_; }
  std::size_t n_features() const { return n_features_; }
  std::size_t n_trees() const { return trees_.size(); }
  const std::vector<Tree>& trees() const { return trees_; }

  /// Average of the leaf distributions reached in every tree, in classes() order.
  std::vector<double> predict_proba(std::span<const double> x) const;
  Label predict(std::span<const double> x) const;
  /// Position of `label` in classes(); throws if absent.
  std::size_t class_index(Label label) const;

  std::string serialize() const;
  static Forest deserialize(std::string_view bytes);

  friend bool operator==(const Forest&, const Forest&) = default;

 private:
  std::vector<Label> classes_;
  std::size_t n_features_ = 0;
  std::vector<Tree> trees_;
};

/// Rows of `x` are samples. Classes are the sorted distinct values of `y`.
Forest train_forest(const Matrix& x, std::span<const Label> y, const ForestConfig& cfg);
Forest train_forest(std::span<const Sample> samples, const ForestConfig& cfg);

}  // namespace lte::forest
