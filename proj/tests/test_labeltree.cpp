// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#include <map>
#include <random>

#include "doctest.h"
#include "lte/labeltree/labeltree.hpp"
#include "oracles.hpp"

using namespace lte;
using namespace lte::labeltree;

namespace {

// Gaussian clusters; `centre_of` maps a class to its cluster centre.
std::vector<Sample> clustered(const std::vector<Label>& classes, const std::map<Label, double>& centre_of,
                              std::size_t per_class, std::size_t dim, std::uint64_t seed, double spread = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, spread);
  std::vector<Sample> out;
  for (std::size_t k = 0; k < per_class; ++k) {
    for (Label c : classes) {
      Sample s;
      s.label = c;
      for (std::size_t d = 0; d < dim; ++d) s.x.push_back(g(rng) + (d % 2 == 0 ? centre_of.at(c) : -centre_of.at(c)));
      out.push_back(std::move(s));
    }
  }
  return out;
}

forest::ForestConfig small_forest() {
  forest::ForestConfig cfg;
  cfg.n_trees = 30;
  return cfg;
}

}  // namespace

TEST_CASE("confusion from stub classifiers") {
  std::vector<Sample> eval{{{0.0}, 0}, {{1.0}, 1}, {{0.0}, 0}, {{1.0}, 1}};
  const auto perfect = confusion_from_classifier(eval, {0, 1}, [](std::span<const double> x) {
    return x[0] < 0.5 ? std::vector<double>{1, 0} : std::vector<double>{0, 1};
  });
  CHECK(perfect.a(0, 0) == 1.0);
  CHECK(perfect.a(0, 1) == 0.0);
  CHECK(perfect.a(1, 1) == 1.0);

  std::vector<Sample> eval3{{{0.0}, 0}, {{1.0}, 1}, {{2.0}, 2}};
  const auto uniform = confusion_from_classifier(eval3, {0, 1, 2}, [](std::span<const double>) {
    return std::vector<double>(3, 1.0 / 3.0);
  });
  for (double v : uniform.a.data()) CHECK(v == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("forest confusion rows are distributions") {
  const auto data = clustered({0, 1, 2}, {{0, 0.0}, {1, 0.5}, {2, 3.0}}, 20, 4, 1);
  const auto cm = confusion_matrix(data, {0, 1, 2}, small_forest(), 9);
  for (std::size_t i = 0; i < 3; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(cm.a(i, j) >= 0.0);
      CHECK(cm.a(i, j) <= 1.0);
      s += cm.a(i, j);
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
  }
  std::vector<Sample> thin{{{0.0}, 0}, {{1.0}, 1}, {{1.5}, 1}};
  CHECK_THROWS_WITH_AS(confusion_matrix(thin, {0, 1}, small_forest(), 1),
                       "insufficient samples for stratified halving", Error);
}

TEST_CASE("symmetrize") {
  Matrix a(2, 2);
  a(0, 0) = 0.8;
  a(0, 1) = 0.2;
  a(1, 0) = 0.4;
  a(1, 1) = 0.6;
  const Matrix s = symmetrize(a);
  CHECK(s(0, 0) == doctest::Approx(0.8));
  CHECK(s(0, 1) == doctest::Approx(0.3));
  CHECK(s(1, 0) == doctest::Approx(0.3));
  CHECK(s(1, 1) == doctest::Approx(0.6));
  CHECK(s(0, 1) == s(1, 0));
  CHECK(symmetrize(s) == s);
  CHECK_THROWS_AS(symmetrize(Matrix(2, 3)), Error);
}

TEST_CASE("partition objective") {
  Matrix eye(3, 3);
  for (int i = 0; i < 3; ++i) eye(i, i) = 1.0;
  const std::vector<Label> l{1, 2, 3};
  CHECK(partition_objective(eye, l, {{1, 2}, {3}}) == doctest::Approx(3.0));

  Matrix block(3, 3);
  block(0, 0) = block(0, 1) = block(1, 0) = block(1, 1) = 0.5;
  block(2, 2) = 1.0;
  CHECK(partition_objective(block, l, {{1, 2}, {3}}) == doctest::Approx(3.0));
  CHECK(partition_objective(block, l, {{1, 3}, {2}}) == doctest::Approx(2.0));
  CHECK(partition_objective(block, l, {{1}, {2, 3}}) == doctest::Approx(2.0));

  Matrix two(2, 2);
  two(0, 0) = 0.7;
  two(0, 1) = two(1, 0) = 0.25;
  two(1, 1) = 0.9;
  CHECK(partition_objective(two, {4, 9}, {{4}, {9}}) == doctest::Approx(1.6));

  CHECK_THROWS_AS(partition_objective(block, l, {{1, 2}, {2, 3}}), Error);
  CHECK_THROWS_AS(partition_objective(block, l, {{}, {1, 2, 3}}), Error);
}

TEST_CASE("best partition") {
  CHECK(candidate_count(4) == 7);
  CHECK(candidate_count(12) == 2047);

  Matrix block(3, 3);
  block(0, 0) = block(0, 1) = block(1, 0) = block(1, 1) = 0.5;
  block(2, 2) = 1.0;
  const Partition want{{1, 2}, {3}};
  CHECK(best_partition(block, {1, 2, 3}, PartitionMode::exact) == want);
  CHECK(best_partition(block, {1, 2, 3}, PartitionMode::automatic) == want);

  Matrix two(2, 2, 0.5);
  for (auto mode : {PartitionMode::exact, PartitionMode::spectral}) {
    CHECK(best_partition(two, {5, 8}, mode) == Partition{{5}, {8}});
  }
  CHECK_THROWS_AS(best_partition(Matrix(1, 1, 1.0), {1}, PartitionMode::exact), Error);

  // Ties: identity matrix makes every candidate equal; smallest left part wins.
  Matrix eye(4, 4);
  for (int i = 0; i < 4; ++i) eye(i, i) = 1.0;
  CHECK(best_partition(eye, {0, 1, 2, 3}, PartitionMode::exact) == Partition{{0}, {1, 2, 3}});
}

TEST_CASE("exact attains the enumeration maximum and dominates spectral") {
  std::mt19937_64 rng(2024);
  const std::vector<Label> labels{0, 1, 2, 3, 4, 5, 6, 7};
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix abar = oracle::random_symmetrized_stochastic(8, rng);
    const double e_exact = partition_objective(abar, labels, best_partition(abar, labels, PartitionMode::exact));
    const double e_spec = partition_objective(abar, labels, best_partition(abar, labels, PartitionMode::spectral));
    CHECK(e_exact == doctest::Approx(oracle::max_partition_objective(abar)).epsilon(1e-12));
    CHECK(e_exact >= e_spec - 1e-12);
  }
}

TEST_CASE("label tree growth") {
  SUBCASE("two classes") {
    const auto data = clustered({0, 1}, {{0, 0.0}, {1, 2.0}}, 8, 3, 2);
    const LabelTree t = build_label_tree(data, {small_forest(), PartitionMode::automatic, 1});
    CHECK(t.nodes().size() == 3);
    CHECK(t.n_splits() == 1);
    CHECK(t.left_of(t.root()).labels == std::vector<Label>{0});
    CHECK(t.right_of(t.root()).labels == std::vector<Label>{1});
  }
  SUBCASE("fifteen classes") {
    std::vector<Label> classes;
    std::map<Label, double> centre;
    for (int c = 0; c < 15; ++c) {
      classes.push_back(c);
      centre[c] = 0.6 * c;
    }
    const auto data = clustered(classes, centre, 8, 4, 3);
    forest::ForestConfig cfg = small_forest();
    cfg.n_trees = 10;
    const LabelTree t = build_label_tree(data, {cfg, PartitionMode::automatic, 5});
    CHECK(t.n_splits() == 14);
    std::size_t leaves = 0;
    for (const auto& n : t.nodes()) {
      if (n.is_leaf()) {
        ++leaves;
        continue;
      }
      // Children are a disjoint nonempty cover of the parent.
      auto l = t.left_of(n).labels, r = t.right_of(n).labels;
      CHECK(!l.empty());
      CHECK(!r.empty());
      l.insert(l.end(), r.begin(), r.end());
      std::sort(l.begin(), l.end());
      CHECK(l == n.labels);
    }
    CHECK(leaves == 15);
  }
  SUBCASE("confusable pairs share the root side") {
    const auto data = clustered({1, 2, 3, 4}, {{1, 0.0}, {2, 0.2}, {3, 4.0}, {4, 4.2}}, 30, 4, 4);
    const LabelTree t = build_label_tree(data, {small_forest(), PartitionMode::exact, 11});
    CHECK(t.left_of(t.root()).labels == std::vector<Label>{1, 2});
    CHECK(t.right_of(t.root()).labels == std::vector<Label>{3, 4});
    // The measured confusion agrees under independent enumeration.
    const auto cm = confusion_matrix(data, {1, 2, 3, 4}, small_forest(), 0);
    const Matrix abar = symmetrize(cm.a);
    CHECK(partition_objective(abar, {1, 2, 3, 4}, {{1, 2}, {3, 4}}) ==
          doctest::Approx(oracle::max_partition_objective(abar)));
  }
  SUBCASE("errors carry the node label set") {
    std::vector<Sample> data{{{0.0}, 0}, {{1.0}, 1}, {{2.0}, 2}, {{0.1}, 0}, {{1.1}, 1}};
    CHECK_THROWS_WITH_AS(build_label_tree(data, {small_forest(), PartitionMode::exact, 1}),
                         doctest::Contains("node {0,1,2}"), Error);
  }
}

TEST_CASE("tree structure is invariant under relabelling") {
  const std::vector<Label> classes{0, 1, 2, 3, 4, 5};
  const auto data = clustered(classes, {{0, 0.0}, {1, 0.3}, {2, 2.0}, {3, 2.4}, {4, 5.0}, {5, 5.5}}, 12, 4, 6);
  const std::map<Label, Label> perm{{0, 4}, {1, 2}, {2, 5}, {3, 0}, {4, 1}, {5, 3}};
  std::map<Label, Label> inverse;
  for (auto [a, b] : perm) inverse[b] = a;
  auto relabelled = data;
  for (auto& s : relabelled) s.label = perm.at(s.label);

  const TreeBuildOptions opts{small_forest(), PartitionMode::exact, 77};
  const LabelTree a = build_label_tree(data, opts);
  const LabelTree b = build_label_tree(relabelled, opts);

  // Compare as sets of label sets after mapping b back.
  auto splits_of = [](const LabelTree& t, const std::map<Label, Label>* map) {
    std::vector<std::vector<Label>> out;
    for (const auto& n : t.nodes()) {
      std::vector<Label> l = n.labels;
      if (map) for (auto& x : l) x = map->at(x);
      std::sort(l.begin(), l.end());
      out.push_back(l);
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  CHECK(splits_of(a, nullptr) == splits_of(b, &inverse));
}

TEST_CASE("label tree text round trip") {
  const auto data = clustered({0, 1, 2, 3}, {{0, 0.0}, {1, 1.0}, {2, 2.0}, {3, 3.0}}, 10, 3, 8);
  const LabelTree t = build_label_tree(data, {small_forest(), PartitionMode::automatic, 3});
  const LabelTree back = LabelTree::from_text(t.to_text());
  CHECK(back == t);
  CHECK(back.split_order() == t.split_order());
  CHECK_THROWS_AS(LabelTree::from_text("{\"format\":\"lte-label-tree\",\"nodes\":[{\"labels\":[0,1]}]}"), Error);
  CHECK_THROWS_AS(LabelTree::from_text("not json"), Error);
}
