// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "lte/dsp/audio.hpp"

namespace lte::dsp {

enum class Window { hamming, rectangular };

struct FrameGrid {
  double frame_len = 0.050;  // seconds
  double hop = 0.025;        // seconds
  Window window = Window::hamming;

  void validate() const;
};

/// Segment grid the frame features are averaged over.
struct SegmentGrid {
  double length = 0.5;  // seconds
  double hop = 0.25;    // seconds
};

/// Frame length and start offsets in samples for `n_samples` at `rate`.
/// Only frames lying fully inside the signal are returned.
struct FramePlan {
  std::size_t frame_len = 0;
  std::vector<std::size_t> starts;
};
FramePlan plan_frames(std::size_t n_samples, double rate, double frame_len, double hop);

std::vector<double> make_window(Window window, std::size_t n);

/// Windowed frames; frame i starts at i*hop. Throws "signal too short" when
/// the signal does not hold one full frame.
std::vector<std::vector<double>> frame_signal(const AudioSignal& signal, const FrameGrid& grid);

/// Number of 500 ms / 250 ms segments in a signal of `n_samples`.
/// A final segment that ends exactly on the last sample is dropped unless it
/// is the only segment, so 30 s gives 118 and 0.5 s gives 1.
std::size_t segment_count(std::size_t n_samples, double rate, const SegmentGrid& grid = {});

}  // namespace lte::dsp
