// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <vector>

namespace lte::dsp {

inline constexpr double kSceneSampleRate = 44100.0;

struct AudioSignal {
  std::vector<double> samples;
  double sample_rate = kSceneSampleRate;

  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
  /// Throws lte::Error on a non-positive rate or non-finite samples.
  void validate() const;
};

enum class WavEncoding { pcm16, float32 };

/// Read a PCM WAV (16-bit integer or 32-bit float). Multi-channel input is
/// downmixed to mono by averaging. Files at a rate other than `expected_rate`
/// are linearly resampled when `resample` is set and rejected otherwise.
AudioSignal read_wav(const std::filesystem::path& path, bool resample = false,
                     double expected_rate = kSceneSampleRate);

void write_wav(const std::filesystem::path& path, const AudioSignal& signal,
               WavEncoding encoding = WavEncoding::pcm16);

AudioSignal resample_linear(const AudioSignal& signal, double target_rate);

}  // namespace lte::dsp
