// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#include "lte/pipeline/features.hpp"

#include <cmath>

namespace lte::pipeline {

std::vector<bool> segment_validity(const dsp::AudioSignal& signal, const dsp::SegmentGrid& grid) {
  const std::size_t n = signal.samples.size();
  const std::size_t t_count = dsp::segment_count(n, signal.sample_rate, grid);
  const auto seg_len = static_cast<std::size_t>(std::llround(grid.length * signal.sample_rate));
  const auto seg_hop = static_cast<std::size_t>(std::llround(grid.hop * signal.sample_rate));

  // Mark bad samples once, then test each segment's span.
  std::vector<char> bad(n, 0);
  std::size_t run = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = signal.samples[i];
    if (!std::isfinite(v)) {
      bad[i] = 1;
      run = 0;
      continue;
    }
    run = std::abs(v) >= kClipLevel ? run + 1 : 0;
    if (run >= kClipRun) {
      for (std::size_t k = i + 1 - run; k <= i; ++k) bad[k] = 1;
    }
  }
  std::vector<std::size_t> prefix(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + static_cast<std::size_t>(bad[i]);
  std::vector<bool> valid(t_count, true);
  for (std::size_t t = 0; t < t_count; ++t) {
    const std::size_t s0 = std::min(n, t * seg_hop), s1 = std::min(n, s0 + seg_len);
    valid[t] = prefix[s1] == prefix[s0];
  }
  return valid;
}

dsp::SegmentMatrix drop_segments(const dsp::SegmentMatrix& seg, const std::vector<bool>& valid) {
  if (valid.size() != seg.segments()) throw Error("validity mask does not match the segment count");
  std::size_t keep = 0;
  for (bool v : valid) keep += v;
  if (keep == 0) throw Error("every segment of the recording is erroneous");
  dsp::SegmentMatrix out{Matrix(seg.dim(), keep), seg.family};
  std::size_t col = 0;
  for (std::size_t t = 0; t < valid.size(); ++t) {
    if (!valid[t]) continue;
    for (std::size_t m = 0; m < seg.dim(); ++m) out.values(m, col) = seg.values(m, t);
    ++col;
  }
  return out;
}

RecordingFeatures extract_recording(const dsp::AudioSignal& signal, const FeatureSettings& settings) {
  const auto valid = segment_validity(signal, settings.segments);
  dsp::AudioSignal clean = signal;
  for (double& v : clean.samples)
    if (!std::isfinite(v)) v = 0.0;

  const dsp::FeatureExtractor fx(clean.sample_rate, settings.frames);
  RecordingFeatures out;
  out.segments_total = valid.size();
  for (bool v : valid) out.segments_dropped += !v;
  auto raw = fx.segment_features_all(clean, settings.segments);
  for (std::size_t k = 0; k < 3; ++k) out.channels[k] = drop_segments(raw[k], valid);
  if (settings.need_denoised) {
    auto den = fx.segment_features_all(dsp::spectral_subtract(clean, settings.denoise), settings.segments);
    for (std::size_t k = 0; k < 3; ++k) out.channels[3 + k] = drop_segments(den[k], valid);
  }
  return out;
}

}  // namespace lte::pipeline
