// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#include "lte/dsp/denoise.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <deque>
#include <numbers>

#include "lte/common.hpp"
#include "lte/dsp/spectrum.hpp"

namespace lte::dsp {

void DenoiseConfig::validate() const {
  if (fft_len < 4 || (fft_len & (fft_len - 1)) != 0) throw Error("denoise fft_len must be a power of two");
  if (min_window < 0.5) throw Error("denoise min_window must be >= 0.5 s");
  if (bias_comp < 1.0) throw Error("denoise bias_comp must be >= 1");
  if (!(floor_beta > 0.0 && floor_beta < 1.0)) throw Error("denoise floor_beta must lie in (0,1)");
  if (!(smoothing >= 0.0 && smoothing < 1.0)) throw Error("denoise smoothing must lie in [0,1)");
}

AudioSignal spectral_subtract(const AudioSignal& signal, const DenoiseConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.fft_len;
  const std::size_t hop = n / 2;
  AudioSignal out{std::vector<double>(signal.samples.size(), 0.0), signal.sample_rate};
  if (signal.samples.empty()) return out;

  // Periodic sqrt-Hann analysis/synthesis pair: squared windows at 50 % hop sum to one.
  std::vector<double> win(n);
  for (std::size_t i = 0; i < n; ++i) {
    win[i] = std::sqrt(0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n)));
  }

  std::vector<double> padded(hop, 0.0);
  padded.insert(padded.end(), signal.samples.begin(), signal.samples.end());
  const std::size_t frames = (padded.size() + hop - 1) / hop + 1;
  padded.resize((frames - 1) * hop + n, 0.0);

  const RealFft fft(n);
  const std::size_t bins = fft.bins();
  const auto span_frames =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(cfg.min_window * signal.sample_rate / hop)));

  std::vector<double> smoothed(bins, 0.0);
  // Per-bin monotone deques give the sliding minimum in O(1) amortised.
  std::vector<std::deque<std::pair<std::size_t, double>>> minima(bins);
  std::vector<double> acc(padded.size(), 0.0);
  std::vector<double> buf(n);
  std::vector<std::complex<double>> shaped(bins);

  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t off = f * hop;
    for (std::size_t i = 0; i < n; ++i) buf[i] = padded[off + i] * win[i];
    const auto spec = fft.forward(buf);
    for (std::size_t k = 0; k < bins; ++k) {
      const double mag = std::abs(spec[k]);
      const double p = mag * mag;
      smoothed[k] = f == 0 ? p : cfg.smoothing * smoothed[k] + (1.0 - cfg.smoothing) * p;
      auto& dq = minima[k];
      while (!dq.empty() && dq.back().second >= smoothed[k]) dq.pop_back();
      dq.emplace_back(f, smoothed[k]);
      while (dq.front().first + span_frames <= f) dq.pop_front();
      const double noise = std::sqrt(cfg.bias_comp * dq.front().second);
      const double kept = std::max(mag - noise, cfg.floor_beta * mag);
      shaped[k] = mag > 0.0 ? spec[k] * (kept / mag) : std::complex<double>(0.0, 0.0);
    }
    const auto frame = fft.inverse(shaped);
    for (std::size_t i = 0; i < n; ++i) acc[off + i] += frame[i] * win[i];
  }

  std::copy_n(acc.begin() + static_cast<std::ptrdiff_t>(hop), out.samples.size(), out.samples.begin());
  return out;
}

}  // namespace lte::dsp
