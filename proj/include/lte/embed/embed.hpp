// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lte/common.hpp"
#include "lte/dsp/features.hpp"
#include "lte/forest/forest.hpp"
#include "lte/labeltree/labeltree.hpp"

namespace lte::embed {

/// Which feature family / denoise variant an image or model belongs to.
struct ChannelTag {
  dsp::FeatureFamily family = dsp::FeatureFamily::gtcc;
  bool denoised = false;

  std::string name() const;  // e.g. "GTCC-raw", "MFCC-denoised"
  static ChannelTag parse(std::string_view name);
  /// Position in the canonical stacking order.
  std::size_t canonical_index() const;

  friend bool operator==(const ChannelTag&, const ChannelTag&) = default;
};

inline constexpr std::size_t kChannels = 6;
/// [GTCC-raw, MFCC-raw, LOGFB-raw, GTCC-denoised, MFCC-denoised, LOGFB-denoised]
std::array<ChannelTag, kChannels> canonical_channels();

inline constexpr std::size_t kPaddedSegments = 118;

/// Label tree plus one binary forest per split node. Negative class is the
/// left meta-class, positive the right one.
class EmbeddingModel {
 public:
  EmbeddingModel() = default;
  EmbeddingModel(labeltree::LabelTree tree, std::vector<forest::Forest> node_classifiers, ChannelTag channel);

  static EmbeddingModel train(const labeltree::LabelTree& tree, std::span<const Sample> samples,
                              const forest::ForestConfig& cfg, ChannelTag channel);

  const labeltree::LabelTree& tree() const { return tree_; }
  const std::vector<forest::Forest>& node_classifiers() const { return classifiers_; }
  const ChannelTag& channel() const { return channel_; }
  std::size_t input_dim() const { return input_dim_; }
  /// F = 2 (C - 1)
  std::size_t output_dim() const { return 2 * classifiers_.size(); }

  /// (psi_1^L, psi_1^R, ..., psi_{C-1}^L, psi_{C-1}^R) in split order.
  std::vector<double> embed_segment(std::span<const double> x) const;

  std::string serialize() const;
  static EmbeddingModel deserialize(std::string_view bytes);

 private:
  labeltree::LabelTree tree_;
  std::vector<forest::Forest> classifiers_;
  ChannelTag channel_;
  std::size_t input_dim_ = 0;
};

/// F x T embedding matrix for one recording and channel.
struct LteImage {
  Matrix values;
  ChannelTag channel;
  std::size_t original_segments = 0;  // T before padding

  std::size_t rows() const { return values.rows(); }
  std::size_t segments() const { return values.cols(); }
};

/// Column t = embed_segment(column t of seg).
LteImage lte_image(const EmbeddingModel& model, const dsp::SegmentMatrix& seg);

/// Row-wise mean over time.
std::vector<double> average_pool(const LteImage& img);

/// Extends to target_t columns by repeating columns 1, 2, ... cyclically.
LteImage circular_pad(const LteImage& img, std::size_t target_t = kPaddedSegments);

/// P x F x T tensor, stored with T fastest.
struct MultiChannelImage {
  std::size_t p = 0, f = 0, t = 0;
  std::vector<double> values;
  std::vector<ChannelTag> channels;

  double at(std::size_t ch, std::size_t row, std::size_t col) const { return values[(ch * f + row) * t + col]; }
  double& at(std::size_t ch, std::size_t row, std::size_t col) { return values[(ch * f + row) * t + col]; }
};

/// Requires all six channels in canonical order with equal shapes.
MultiChannelImage stack_channels(std::span<const LteImage> images);
/// Same stacking without the six-channel requirement (single-channel experiments).
MultiChannelImage stack_any(std::span<const LteImage> images);

/// Segment matrices of one recording in one channel.
struct RecordingSegments {
  int recording = -1;
  Label label = 0;
  dsp::SegmentMatrix segments;
};

/// Every segment column becomes a sample labelled with its recording's label.
std::vector<Sample> segment_samples(std::span<const RecordingSegments> recordings);

struct CrossvalEmbedding {
  std::vector<LteImage> images;             // aligned with the input recordings
  std::vector<std::size_t> fold_of;         // inner fold per recording
  std::vector<std::vector<int>> provenance; // recordings that trained the embedding model
  std::vector<std::string> warnings;
};

/// k-fold descriptor extraction: recordings of inner fold f are embedded by
/// node classifiers trained on the other k-1 folds. The label tree is fixed.
CrossvalEmbedding crossval_embed(const labeltree::LabelTree& tree, std::span<const RecordingSegments> recordings,
                                 const forest::ForestConfig& cfg, ChannelTag channel, std::size_t k,
                                 std::uint64_t seed);

/// Stratified seeded fold assignment (classes dealt round-robin into k folds).
std::vector<std::size_t> stratified_folds(std::span<const Label> labels, std::size_t k, std::uint64_t seed);

}  // namespace lte::embed
