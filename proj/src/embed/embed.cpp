// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#include "lte/embed/embed.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "lte/binio.hpp"

namespace lte::embed {
namespace {

constexpr std::uint32_t kModelMagic = 0x4d45544cu;  // "LTEM"
constexpr std::uint32_t kModelVersion = 1;

bool contains(const std::vector<Label>& sorted, Label l) { return std::binary_search(sorted.begin(), sorted.end(), l); }

}  // namespace

std::string ChannelTag::name() const {
  return std::string(dsp::family_name(family)) + (denoised ? "-denoised" : "-raw");
}

ChannelTag ChannelTag::parse(std::string_view name) {
  const auto dash = name.find('-');
  if (dash == std::string_view::npos) throw Error("channel tag needs a -raw or -denoised suffix: " + std::string(name));
  const auto suffix = name.substr(dash + 1);
  if (suffix != "raw" && suffix != "denoised") throw Error("bad channel tag: " + std::string(name));
  return {dsp::parse_family(name.substr(0, dash)), suffix == "denoised"};
}

std::size_t ChannelTag::canonical_index() const {
  return static_cast<std::size_t>(family) + (denoised ? 3 : 0);
}

std::array<ChannelTag, kChannels> canonical_channels() {
  std::array<ChannelTag, kChannels> out;
  for (std::size_t i = 0; i < kChannels; ++i) out[i] = {dsp::kAllFamilies[i % 3], i >= 3};
  return out;
}

EmbeddingModel::EmbeddingModel(labeltree::LabelTree tree, std::vector<forest::Forest> node_classifiers,
                               ChannelTag channel)
    : tree_(std::move(tree)), classifiers_(std::move(node_classifiers)), channel_(channel) {
  if (classifiers_.size() != tree_.n_splits()) throw Error("embedding model needs one classifier per split node");
  if (classifiers_.empty()) throw Error("embedding model has no split nodes");
  input_dim_ = classifiers_.front().n_features();
  for (const auto& f : classifiers_) {
    if (f.n_features() != input_dim_) throw Error("node classifiers disagree on feature dimension");
    if (f.classes() != std::vector<Label>{0, 1}) throw Error("node classifier must be binary over {0,1}");
  }
}

EmbeddingModel EmbeddingModel::train(const labeltree::LabelTree& tree, std::span<const Sample> samples,
                                     const forest::ForestConfig& cfg, ChannelTag channel) {
  std::vector<forest::Forest> classifiers;
  classifiers.reserve(tree.n_splits());
  for (std::size_t i = 0; i < tree.n_splits(); ++i) {
    const auto& node = tree.split(i);
    std::vector<Label> left = tree.left_of(node).labels, right = tree.right_of(node).labels;
    std::sort(left.begin(), left.end());
    std::sort(right.begin(), right.end());
    std::vector<Sample> subset;
    for (const Sample& s : samples) {
      if (contains(left, s.label)) subset.push_back({s.x, 0, s.recording});
      else if (contains(right, s.label)) subset.push_back({s.x, 1, s.recording});
    }
    if (subset.empty()) throw Error("no training samples for split node " + std::to_string(i));
    forest::ForestConfig node_cfg = cfg;
    node_cfg.rng_seed = derive_seed(cfg.rng_seed, "embed.node", i);
    try {
      classifiers.push_back(forest::train_forest(subset, node_cfg));
    } catch (const Error& e) {
      throw Error("split node " + std::to_string(i) + ": " + e.what());
    }
  }
  return EmbeddingModel(tree, std::move(classifiers), channel);
}

std::vector<double> EmbeddingModel::embed_segment(std::span<const double> x) const {
  if (x.size() != input_dim_) {
    throw Error("segment dimension " + std::to_string(x.size()) + " does not match model input " +
                std::to_string(input_dim_));
  }
  std::vector<double> psi;
  psi.reserve(output_dim());
  for (const auto& f : classifiers_) {
    const auto p = f.predict_proba(x);
    psi.push_back(p[0]);
    psi.push_back(p[1]);
  }
  return psi;
}

std::string EmbeddingModel::serialize() const {
  ByteWriter w;
  w.u32(kModelMagic);
  w.u32(kModelVersion);
  w.str(channel_.name());
  w.str(tree_.to_text());
  w.u32(static_cast<std::uint32_t>(classifiers_.size()));
  for (const auto& f : classifiers_) w.str(f.serialize());
  return w.take();
}

EmbeddingModel EmbeddingModel::deserialize(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.u32() != kModelMagic) throw Error("not an embedding model record (bad magic)");
  if (const auto v = r.u32(); v != kModelVersion) throw Error("unsupported embedding model version " + std::to_string(v));
  const ChannelTag channel = ChannelTag::parse(r.str());
  auto tree = labeltree::LabelTree::from_text(r.str());
  std::vector<forest::Forest> classifiers(r.u32());
  for (auto& f : classifiers) f = forest::Forest::deserialize(r.str());
  if (r.remaining() != 0) throw Error("trailing bytes after embedding model record");
  return EmbeddingModel(std::move(tree), std::move(classifiers), channel);
}

LteImage lte_image(const EmbeddingModel& model, const dsp::SegmentMatrix& seg) {
  if (seg.family != model.channel().family) {
    throw Error("segment family " + std::string(dsp::family_name(seg.family)) + " does not match model channel " +
                model.channel().name());
  }
  LteImage img{Matrix(model.output_dim(), seg.segments()), model.channel(), seg.segments()};
  std::vector<double> col(seg.dim());
  for (std::size_t t = 0; t < seg.segments(); ++t) {
    for (std::size_t m = 0; m < seg.dim(); ++m) col[m] = seg.values(m, t);
    const auto psi = model.embed_segment(col);
    for (std::size_t r = 0; r < psi.size(); ++r) img.values(r, t) = psi[r];
  }
  return img;
}

std::vector<double> average_pool(const LteImage& img) {
  if (img.segments() == 0) throw Error("cannot pool an image with no segments");
  std::vector<double> out(img.rows(), 0.0);
  for (std::size_t r = 0; r < img.rows(); ++r) {
    const auto row = img.values.row(r);
    double s = 0.0;
    for (double v : row) s += v;
    out[r] = s / static_cast<double>(row.size());
  }
  return out;
}

LteImage circular_pad(const LteImage& img, std::size_t target_t) {
  const std::size_t t = img.segments();
  if (t == 0) throw Error("cannot pad an image with no segments");
  if (t > target_t) throw Error("image longer than target");
  LteImage out{Matrix(img.rows(), target_t), img.channel, img.original_segments};
  for (std::size_t r = 0; r < img.rows(); ++r) {
    for (std::size_t c = 0; c < target_t; ++c) out.values(r, c) = img.values(r, c % t);
  }
  return out;
}

MultiChannelImage stack_any(std::span<const LteImage> images) {
  if (images.empty()) throw Error("no images to stack");
  MultiChannelImage out;
  out.p = images.size();
  out.f = images.front().rows();
  out.t = images.front().segments();
  out.values.resize(out.p * out.f * out.t);
  for (std::size_t c = 0; c < images.size(); ++c) {
    const auto& img = images[c];
    if (img.rows() != out.f || img.segments() != out.t) {
      throw Error("channel " + img.channel.name() + " shape mismatch while stacking");
    }
    out.channels.push_back(img.channel);
    std::copy(img.values.data().begin(), img.values.data().end(),
              out.values.begin() + static_cast<std::ptrdiff_t>(c * out.f * out.t));
  }
  return out;
}

MultiChannelImage stack_channels(std::span<const LteImage> images) {
  if (images.size() != kChannels) {
    throw Error("expected " + std::to_string(kChannels) + " channels, got " + std::to_string(images.size()));
  }
  const auto order = canonical_channels();
  for (std::size_t c = 0; c < kChannels; ++c) {
    if (!(images[c].channel == order[c])) {
      throw Error("channel " + std::to_string(c) + " is " + images[c].channel.name() + ", expected " + order[c].name());
    }
  }
  return stack_any(images);
}

std::vector<Sample> segment_samples(std::span<const RecordingSegments> recordings) {
  std::vector<Sample> out;
  for (const auto& rec : recordings) {
    const auto& m = rec.segments.values;
    for (std::size_t t = 0; t < m.cols(); ++t) out.push_back({m.column(t), rec.label, rec.recording});
  }
  return out;
}

std::vector<std::size_t> stratified_folds(std::span<const Label> labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error("cross-validation needs k >= 2");
  if (k > labels.size()) throw Error("more folds than recordings");
  std::map<Label, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  std::vector<std::size_t> fold(labels.size(), 0);
  std::size_t next = 0;
  for (auto& [label, members] : by_class) {
    std::mt19937_64 rng(derive_seed(seed, "embed.folds", static_cast<std::uint64_t>(label)));
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t i : members) fold[i] = next++ % k;
  }
  return fold;
}

CrossvalEmbedding crossval_embed(const labeltree::LabelTree& tree, std::span<const RecordingSegments> recordings,
                                 const forest::ForestConfig& cfg, ChannelTag channel, std::size_t k,
                                 std::uint64_t seed) {
  std::vector<Label> labels;
  for (const auto& r : recordings) labels.push_back(r.label);
  CrossvalEmbedding out;
  out.fold_of = stratified_folds(labels, k, seed);
  out.images.resize(recordings.size());
  out.provenance.resize(recordings.size());

  std::map<Label, std::size_t> per_class;
  for (Label l : labels) ++per_class[l];
  for (auto [l, n] : per_class) {
    if (n < k) out.warnings.push_back("class " + std::to_string(l) + " has " + std::to_string(n) + " recordings < k=" + std::to_string(k));
  }

  for (std::size_t f = 0; f < k; ++f) {
    std::vector<RecordingSegments> train;
    std::vector<int> ids;
    std::set<Label> present;
    for (std::size_t i = 0; i < recordings.size(); ++i) {
      if (out.fold_of[i] == f) continue;
      train.push_back(recordings[i]);
      ids.push_back(recordings[i].recording);
      present.insert(recordings[i].label);
    }
    for (Label l : tree.classes()) {
      if (!present.contains(l)) {
        throw Error("class " + std::to_string(l) + " absent from training split of inner fold " + std::to_string(f));
      }
    }
    forest::ForestConfig fold_cfg = cfg;
    fold_cfg.rng_seed = derive_seed(seed, "embed.crossval", f);
    const auto samples = segment_samples(train);
    const EmbeddingModel model = EmbeddingModel::train(tree, samples, fold_cfg, channel);
    for (std::size_t i = 0; i < recordings.size(); ++i) {
      if (out.fold_of[i] != f) continue;
      out.images[i] = lte_image(model, recordings[i].segments);
      out.provenance[i] = ids;
    }
  }
  return out;
}

}  // namespace lte::embed
