// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "lte/dsp/audio.hpp"

namespace lte::dsp {

/// Spectral subtraction with a sliding-minimum noise floor: per bin the noise
/// power is bias_comp times the minimum of the recursively smoothed
/// periodogram over the last min_window seconds.
struct DenoiseConfig {
  std::size_t fft_len = 1024;
  double min_window = 1.5;  // seconds
  double bias_comp = 4.0;
  double floor_beta = 0.01;
  double smoothing = 0.85;  // periodogram recursion constant

  void validate() const;
};

/// Output has the input's length and rate; phase is preserved.
AudioSignal spectral_subtract(const AudioSignal& signal, const DenoiseConfig& cfg = {});

}  // namespace lte::dsp
