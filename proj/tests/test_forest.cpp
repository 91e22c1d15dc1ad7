// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "lte/forest/forest.hpp"

using namespace lte;
using namespace lte::forest;

namespace {

struct Blobs {
  Matrix x;
  std::vector<Label> y;
};

Blobs two_blobs(std::size_t n, std::uint64_t seed, double sep = 4.0, std::size_t dim = 2) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Blobs b{Matrix(n, dim), std::vector<Label>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const Label c = static_cast<Label>(i % 2);
    for (std::size_t d = 0; d < dim; ++d) b.x(i, d) = g(rng) + (c == 1 ? sep : 0.0);
    b.y[i] = c;
  }
  return b;
}

}  // namespace

TEST_CASE("separable blobs are learned") {
  const auto b = two_blobs(200, 7);
  ForestConfig cfg;
  cfg.rng_seed = 7;
  const Forest f = train_forest(b.x, b.y, cfg);
  CHECK(f.n_trees() == 200);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < b.y.size(); ++i) correct += f.predict(b.x.row(i)) == b.y[i];
  CHECK(static_cast<double>(correct) / b.y.size() >= 0.99);
}

TEST_CASE("training is seed deterministic and independent of thread count") {
  const auto b = two_blobs(120, 3, 1.0, 5);
  ForestConfig cfg;
  cfg.n_trees = 25;
  cfg.rng_seed = 99;
  const Forest a = train_forest(b.x, b.y, cfg);
  const Forest again = train_forest(b.x, b.y, cfg);
  cfg.jobs = 3;
  const Forest threaded = train_forest(b.x, b.y, cfg);
  CHECK(a.serialize() == again.serialize());
  CHECK(a.serialize() == threaded.serialize());
  cfg.rng_seed = 100;
  CHECK(train_forest(b.x, b.y, cfg).serialize() != a.serialize());
}

TEST_CASE("hand-built forests average their leaves") {
  const Forest one({0, 1}, 1, {Tree::constant({0.3, 0.7})});
  const std::vector<double> x{0.0};
  const auto p1 = one.predict_proba(x);
  CHECK(p1[0] == doctest::Approx(0.3));
  CHECK(p1[1] == doctest::Approx(0.7));

  const Forest three({0, 1}, 1, {Tree::constant({1, 0}), Tree::stump(0, 0.5, {1, 0}, {0, 1}), Tree::constant({0, 1})});
  const auto p3 = three.predict_proba(x);
  CHECK(p3[0] == doctest::Approx(2.0 / 3.0));
  CHECK(p3[1] == doctest::Approx(1.0 / 3.0));

  CHECK_THROWS_AS(one.predict_proba(std::vector<double>{1.0, 2.0}), Error);
}

TEST_CASE("probabilities are normalised on random inputs") {
  const auto b = two_blobs(150, 11, 1.5, 4);
  std::vector<Label> y3 = b.y;
  for (std::size_t i = 0; i < y3.size(); i += 3) y3[i] = 2;
  ForestConfig cfg;
  cfg.n_trees = 30;
  cfg.laplace_alpha = 0.5;
  const Forest f = train_forest(b.x, y3, cfg);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-5, 10);
  for (int i = 0; i < 10000; ++i) {
    std::vector<double> x{u(rng), u(rng), u(rng), u(rng)};
    const auto p = f.predict_proba(x);
    double s = 0.0;
    for (double v : p) {
      CHECK(v >= 0.0);
      s += v;
    }
    CHECK(std::abs(s - 1.0) <= 1e-9);
  }
}

TEST_CASE("fully grown forest reproduces training labels") {
  const auto b = two_blobs(80, 5, 0.5, 3);  // heavily overlapping
  ForestConfig cfg;
  cfg.n_trees = 5;
  cfg.bootstrap = false;
  cfg.features_per_split = 3;
  const Forest f = train_forest(b.x, b.y, cfg);
  for (std::size_t i = 0; i < b.y.size(); ++i) CHECK(f.predict(b.x.row(i)) == b.y[i]);
  // Every leaf histogram sums to one.
  for (const auto& t : f.trees()) {
    for (std::size_t l = 0; l < t.n_leaves(); ++l) {
      CHECK(t.leaf_probs()[2 * l] + t.leaf_probs()[2 * l + 1] == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("errors") {
  Matrix x(4, 2, 1.0);
  const std::vector<Label> same{3, 3, 3, 3};
  CHECK_THROWS_WITH_AS(train_forest(x, same, {}), "degenerate label set", Error);
  ForestConfig bad;
  bad.n_trees = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK_THROWS_AS(train_forest(Matrix(1, 2), std::vector<Label>{0}, {}), Error);
}

TEST_CASE("serialization round trip") {
  const auto b = two_blobs(60, 2);
  ForestConfig cfg;
  cfg.n_trees = 7;
  const Forest f = train_forest(b.x, b.y, cfg);
  const auto bytes = f.serialize();
  const Forest g = Forest::deserialize(bytes);
  CHECK(f == g);
  CHECK(g.serialize() == bytes);

  auto corrupt = bytes;
  corrupt[0] = 'X';
  CHECK_THROWS_AS(Forest::deserialize(corrupt), Error);
  CHECK_THROWS_AS(Forest::deserialize(bytes.substr(0, bytes.size() - 3)), Error);
}
