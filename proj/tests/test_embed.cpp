// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#include <random>
#include <set>

#include "doctest.h"
#include "lte/embed/embed.hpp"

using namespace lte;
using namespace lte::embed;

namespace {

// Pre-order chain: {a..z} -> {a} | {b..z}.
void chain(std::vector<labeltree::LabelTree::Node>& nodes, std::vector<Label> labels) {
  const auto id = nodes.size();
  nodes.push_back({labels, -1, -1, 0.0});
  if (labels.size() == 1) return;
  nodes[id].left = static_cast<int>(nodes.size());
  chain(nodes, {labels.front()});
  nodes[id].right = static_cast<int>(nodes.size());
  chain(nodes, std::vector<Label>(labels.begin() + 1, labels.end()));
}

labeltree::LabelTree chain_tree(int c) {
  std::vector<labeltree::LabelTree::Node> nodes;
  std::vector<Label> labels;
  for (int i = 0; i < c; ++i) labels.push_back(i);
  chain(nodes, labels);
  return labeltree::LabelTree(nodes);
}

std::vector<Sample> blobs(int classes, std::size_t per_class, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.5);
  std::vector<Sample> out;
  for (std::size_t k = 0; k < per_class; ++k) {
    for (int c = 0; c < classes; ++c) {
      Sample s{{}, c, -1};
      for (std::size_t d = 0; d < dim; ++d) s.x.push_back(g(rng) + (d == static_cast<std::size_t>(c) % dim ? 3.0 * (1 + c / static_cast<int>(dim)) : 0.0));
      out.push_back(std::move(s));
    }
  }
  return out;
}

forest::ForestConfig small_forest() {
  forest::ForestConfig cfg;
  cfg.n_trees = 20;
  return cfg;
}

const ChannelTag kGtccRaw{dsp::FeatureFamily::gtcc, false};

LteImage image_of(const Matrix& m) { return {m, kGtccRaw, m.cols()}; }

}  // namespace

TEST_CASE("channel tags") {
  const auto order = canonical_channels();
  CHECK(order[0].name() == "GTCC-raw");
  CHECK(order[1].name() == "MFCC-raw");
  CHECK(order[5].name() == "LOGFB-denoised");
  for (std::size_t i = 0; i < kChannels; ++i) {
    CHECK(order[i].canonical_index() == i);
    CHECK(ChannelTag::parse(order[i].name()) == order[i]);
  }
  CHECK_THROWS_AS(ChannelTag::parse("GTCC"), Error);
  CHECK_THROWS_AS(ChannelTag::parse("GTCC-clean"), Error);
}

TEST_CASE("embedding pairs are distributions and the length is 2(C-1)") {
  const int c = 15;
  const auto data = blobs(c, 6, 8, 3);
  const auto model = EmbeddingModel::train(chain_tree(c), data, small_forest(), kGtccRaw);
  CHECK(model.output_dim() == 28);
  for (std::size_t i = 0; i < data.size(); i += 7) {
    const auto psi = model.embed_segment(data[i].x);
    REQUIRE(psi.size() == 28);
    for (std::size_t j = 0; j < psi.size(); j += 2) {
      CHECK(psi[j] >= 0.0);
      CHECK(psi[j] + psi[j + 1] == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
  CHECK_THROWS_AS(model.embed_segment(std::vector<double>(3, 0.0)), Error);
}

TEST_CASE("stub node classifier passes its probabilities through") {
  forest::Forest stub({0, 1}, 2, {forest::Tree::constant({0.2, 0.8})});
  const EmbeddingModel model(chain_tree(2), {stub}, kGtccRaw);
  const auto psi = model.embed_segment(std::vector<double>{5.0, -1.0});
  REQUIRE(psi.size() == 2);
  CHECK(psi[0] == doctest::Approx(0.2));
  CHECK(psi[1] == doctest::Approx(0.8));

  CHECK_THROWS_AS(EmbeddingModel(chain_tree(3), {stub}, kGtccRaw), Error);
}

TEST_CASE("left meta-class is the negative output") {
  // Node 0 splits {0} from {1,2}; samples of class 0 must score high on the first entry.
  const auto data = blobs(3, 30, 3, 5);
  const auto model = EmbeddingModel::train(chain_tree(3), data, small_forest(), kGtccRaw);
  double neg = 0.0;
  int n = 0;
  for (const auto& s : data) {
    if (s.label != 0) continue;
    neg += model.embed_segment(s.x)[0];
    ++n;
  }
  CHECK(neg / n > 0.9);
}

TEST_CASE("average pooling") {
  Matrix m(2, 2);
  m(0, 1) = 1.0;
  m(1, 0) = 1.0;
  const auto pooled = average_pool(image_of(m));
  CHECK(pooled == std::vector<double>{0.5, 0.5});
}

TEST_CASE("circular padding") {
  Matrix m(2, 100);
  for (std::size_t t = 0; t < 100; ++t) {
    m(0, t) = static_cast<double>(t);
    m(1, t) = -static_cast<double>(t);
  }
  const auto padded = circular_pad(image_of(m));
  REQUIRE(padded.segments() == 118);
  CHECK(padded.original_segments == 100);
  for (std::size_t t = 0; t < 100; ++t) CHECK(padded.values(0, t) == m(0, t));
  for (std::size_t t = 100; t < 118; ++t) {
    CHECK(padded.values(0, t) == m(0, t - 100));
    CHECK(padded.values(1, t) == m(1, t - 100));
  }

  Matrix one(3, 1);
  one(0, 0) = 0.1;
  one(1, 0) = 0.2;
  one(2, 0) = 0.7;
  const auto rep = circular_pad(image_of(one));
  for (std::size_t t = 0; t < 118; ++t) CHECK(rep.values(2, t) == 0.7);

  CHECK_THROWS_WITH_AS(circular_pad(image_of(Matrix(2, 119))), "image longer than target", Error);
  CHECK(circular_pad(image_of(Matrix(2, 118))).values == Matrix(2, 118));
}

TEST_CASE("channel stacking") {
  std::vector<LteImage> images;
  for (const auto& tag : canonical_channels()) {
    Matrix m(28, 118, static_cast<double>(tag.canonical_index()));
    images.push_back({m, tag, 118});
  }
  const auto stacked = stack_channels(images);
  CHECK(stacked.p == 6);
  CHECK(stacked.f == 28);
  CHECK(stacked.t == 118);
  CHECK(stacked.values.size() == 6u * 28 * 118);
  CHECK(stacked.at(4, 27, 117) == 4.0);

  std::swap(images[0], images[1]);
  CHECK_THROWS_AS(stack_channels(images), Error);
  std::swap(images[0], images[1]);
  images[3].values = Matrix(28, 117);
  CHECK_THROWS_AS(stack_channels(images), Error);
  CHECK_THROWS_AS(stack_channels(std::span(images).first(5)), Error);
  CHECK(stack_any(std::span(images).first(1)).p == 1);
}

TEST_CASE("lte image rejects a foreign feature family") {
  forest::Forest stub({0, 1}, 2, {forest::Tree::constant({0.5, 0.5})});
  const EmbeddingModel model(chain_tree(2), {stub}, kGtccRaw);
  dsp::SegmentMatrix seg{Matrix(2, 4), dsp::FeatureFamily::mfcc};
  CHECK_THROWS_AS(lte_image(model, seg), Error);
  seg.family = dsp::FeatureFamily::gtcc;
  const auto img = lte_image(model, seg);
  CHECK(img.rows() == 2);
  CHECK(img.segments() == 4);
}

TEST_CASE("stratified folds") {
  std::vector<Label> labels;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 10; ++i) labels.push_back(c);
  const auto folds = stratified_folds(labels, 5, 1);
  std::vector<std::vector<int>> count(5, std::vector<int>(3, 0));
  for (std::size_t i = 0; i < labels.size(); ++i) ++count[folds[i]][static_cast<std::size_t>(labels[i])];
  for (const auto& f : count)
    for (int n : f) CHECK(n == 2);
  CHECK(stratified_folds(labels, 5, 1) == folds);

  const auto loo = stratified_folds(labels, labels.size(), 2);
  CHECK(std::set<std::size_t>(loo.begin(), loo.end()).size() == labels.size());
  CHECK_THROWS_AS(stratified_folds(labels, 1, 0), Error);
}

TEST_CASE("cross-validated embedding never sees the embedded recording") {
  const int c = 3;
  std::vector<RecordingSegments> recs;
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int r = 0; r < 12; ++r) {
    RecordingSegments rec{r, r % c, {Matrix(4, 5), dsp::FeatureFamily::gtcc}};
    for (double& v : rec.segments.values.data()) v = g(rng) + rec.label;
    recs.push_back(rec);
  }
  const auto cv = crossval_embed(chain_tree(c), recs, small_forest(), kGtccRaw, recs.size(), 4);
  REQUIRE(cv.images.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& ids = cv.provenance[i];
    CHECK(ids.size() == recs.size() - 1);
    CHECK(std::find(ids.begin(), ids.end(), recs[i].recording) == ids.end());
    CHECK(cv.images[i].rows() == 4);
    CHECK(cv.images[i].segments() == 5);
  }
  CHECK(!cv.warnings.empty());

  const auto again = crossval_embed(chain_tree(c), recs, small_forest(), kGtccRaw, recs.size(), 4);
  for (std::size_t i = 0; i < recs.size(); ++i) CHECK(again.images[i].values == cv.images[i].values);

  // A class with a single recording is absent from the training split of its own fold.
  std::vector<RecordingSegments> sparse;
  for (const auto& r : recs)
    if (r.label != 2 || r.recording == 2) sparse.push_back(r);
  CHECK_THROWS_AS(crossval_embed(chain_tree(c), sparse, small_forest(), kGtccRaw, 4, 1), Error);
}

TEST_CASE("serialized model reproduces the embedding bit for bit") {
  const auto data = blobs(4, 10, 5, 12);
  const ChannelTag tag{dsp::FeatureFamily::logfb, true};
  const auto model = EmbeddingModel::train(chain_tree(4), data, small_forest(), tag);
  const auto copy = EmbeddingModel::deserialize(model.serialize());
  CHECK(copy.channel() == tag);
  CHECK(copy.tree() == model.tree());
  for (const auto& s : data) CHECK(copy.embed_segment(s.x) == model.embed_segment(s.x));

  auto bytes = model.serialize();
  bytes[0] = 'X';
  CHECK_THROWS_AS(EmbeddingModel::deserialize(bytes), Error);
  CHECK_THROWS_AS(EmbeddingModel::deserialize(model.serialize().substr(0, 40)), Error);
}
