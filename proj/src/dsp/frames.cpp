// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#include "lte/dsp/frames.hpp"

#include <cmath>
#include <numbers>

#include "lte/common.hpp"

namespace lte::dsp {
namespace {

// Offsets are rounded to the nearest sample; hop*rate is snapped to 1e-6 so
// 25 ms at 44.1 kHz is exactly 1102.5 samples.
double samples_of(double seconds, double rate) { return std::round(seconds * rate * 1e6) / 1e6; }

std::size_t start_of(std::size_t i, double hop_samples) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(i) * hop_samples + 0.5));
}

}  // namespace

void FrameGrid::validate() const {
  if (!(frame_len > 0.0) || !(hop > 0.0) || hop > frame_len) {
    throw Error("frame grid requires 0 < hop <= frame_len");
  }
}

FramePlan plan_frames(std::size_t n_samples, double rate, double frame_len, double hop) {
  FramePlan plan;
  plan.frame_len = static_cast<std::size_t>(std::llround(frame_len * rate));
  const double hop_samples = samples_of(hop, rate);
  if (plan.frame_len == 0 || hop_samples <= 0.0) throw Error("frame grid rounds to zero samples");
  for (std::size_t i = 0;; ++i) {
    const std::size_t s = start_of(i, hop_samples);
    if (s + plan.frame_len > n_samples) break;
    plan.starts.push_back(s);
  }
  return plan;
}

std::vector<double> make_window(Window window, std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (window == Window::hamming && n > 1) {
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
    }
  }
  return w;
}

std::vector<std::vector<double>> frame_signal(const AudioSignal& signal, const FrameGrid& grid) {
  grid.validate();
  const FramePlan plan = plan_frames(signal.samples.size(), signal.sample_rate, grid.frame_len, grid.hop);
  if (plan.starts.empty()) throw Error("signal too short");
  const std::vector<double> w = make_window(grid.window, plan.frame_len);
  std::vector<std::vector<double>> frames;
  frames.reserve(plan.starts.size());
  for (std::size_t s : plan.starts) {
    std::vector<double> f(plan.frame_len);
    for (std::size_t i = 0; i < plan.frame_len; ++i) f[i] = signal.samples[s + i] * w[i];
    frames.push_back(std::move(f));
  }
  return frames;
}

std::size_t segment_count(std::size_t n_samples, double rate, const SegmentGrid& grid) {
  const auto len = static_cast<std::size_t>(std::llround(grid.length * rate));
  const auto hop = static_cast<std::size_t>(std::llround(grid.hop * rate));
  if (n_samples < len) return 0;
  const std::size_t excess = n_samples - len;
  const std::size_t t = (excess + hop - 1) / hop;
  return t == 0 ? 1 : t;
}

}  // namespace lte::dsp
