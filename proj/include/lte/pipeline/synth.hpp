// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "lte/dsp/audio.hpp"
#include "lte/pipeline/manifest.hpp"

namespace lte::pipeline {

struct SynthConfig {
  std::size_t classes = 6;
  std::size_t per_class = 20;
  double duration = 10.0;  // seconds
  std::uint64_t seed = 42;
  double sample_rate = 44100.0;
  int folds = 4;

  void validate() const;
};

/// Class c belongs to similarity pair c/2. Both classes of a pair share a
/// band-limited background texture; they differ only in their tone-burst events.
std::string synth_class_name(std::size_t c);

/// One recording; deterministic in (cfg.seed, c, index).
dsp::AudioSignal synth_recording(const SynthConfig& cfg, std::size_t c, std::size_t index);

/// Writes audio/<class>_<nn>.wav and manifest.csv under `out_dir`. Recording
/// i of each class goes to fold (i mod folds) + 1.
DatasetManifest synth_corpus(const SynthConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace lte::pipeline
