// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <vector>

#include "lte/dsp/audio.hpp"
#include "lte/dsp/denoise.hpp"
#include "lte/dsp/features.hpp"
#include "lte/dsp/frames.hpp"
#include "lte/embed/embed.hpp"

namespace lte::pipeline {

/// Samples at or above this magnitude count as clipped.
inline constexpr double kClipLevel = 0.999;
/// A clipped run must be at least this long to mark its segment erroneous.
inline constexpr std::size_t kClipRun = 3;

/// valid[t] is false when segment t holds a non-finite sample or a clipped run.
std::vector<bool> segment_validity(const dsp::AudioSignal& signal, const dsp::SegmentGrid& grid = {});

/// Keeps the columns with valid[t]; throws if none survive.
dsp::SegmentMatrix drop_segments(const dsp::SegmentMatrix& seg, const std::vector<bool>& valid);

struct FeatureSettings {
  dsp::FrameGrid frames;
  dsp::SegmentGrid segments;
  dsp::DenoiseConfig denoise;
  bool need_denoised = true;
};

/// Segment matrices of one recording in the canonical channel order. Entries
/// for denoised channels are empty when need_denoised is false.
struct RecordingFeatures {
  std::array<dsp::SegmentMatrix, embed::kChannels> channels;
  std::size_t segments_total = 0;
  std::size_t segments_dropped = 0;
};

/// Non-finite samples are zeroed before analysis; erroneous segments are
/// dropped from every channel.
RecordingFeatures extract_recording(const dsp::AudioSignal& signal, const FeatureSettings& settings);

}  // namespace lte::pipeline
