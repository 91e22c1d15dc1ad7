// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#include "lte/pipeline/synth.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <random>

#include "lte/dsp/spectrum.hpp"
#include "lte/pipeline/tensor.hpp"

namespace lte::pipeline {
namespace {

struct EventRecipe {
  double freq;      // Hz
  double length;    // seconds
  double rate;      // events per second
  int harmonics;
};

// Pair k: background band centred on 250 * 2.4^k Hz, one octave and a half wide.
void background_band(std::size_t pair, double& lo, double& hi) {
  const double centre = 250.0 * std::pow(2.4, static_cast<double>(pair));
  lo = centre / 1.7;
  hi = centre * 1.7;
}

EventRecipe event_recipe(std::size_t c) {
  // Mates differ in pitch, length and harmonic content.
  const std::size_t pair = c / 2;
  const bool second = c % 2 == 1;
  const double base = 1800.0 + 700.0 * static_cast<double>(pair);
  return second ? EventRecipe{base * 1.9, 0.22, 1.6, 1} : EventRecipe{base, 0.12, 2.2, 3};
}

std::vector<double> band_noise(std::size_t n, double rate, double lo, double hi, std::mt19937_64& rng) {
  const dsp::RealFft fft(dsp::next_pow2(n));
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> white(fft.size());
  for (double& v : white) v = g(rng);
  auto spec = fft.forward(white);
  const double bin_hz = rate / static_cast<double>(fft.size());
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double f = static_cast<double>(k) * bin_hz;
    // Raised-cosine shoulders a quarter band wide.
    double gain = 0.0;
    if (f >= lo && f <= hi) {
      gain = 1.0;
    } else {
      const double edge = f < lo ? (lo - f) / (0.25 * lo) : (f - hi) / (0.25 * hi);
      if (edge < 1.0) gain = 0.5 * (1.0 + std::cos(std::numbers::pi * edge));
    }
    spec[k] *= gain;
  }
  auto out = fft.inverse(spec);
  out.resize(n);
  double ss = 0.0;
  for (double v : out) ss += v * v;
  const double rms = std::sqrt(ss / static_cast<double>(n));
  if (rms > 0.0)
    for (double& v : out) v /= rms;
  return out;
}

}  // namespace

void SynthConfig::validate() const {
  if (classes < 2) throw Error("synthetic corpus needs at least two classes");
  if (per_class < 1) throw Error("synthetic corpus needs at least one recording per class");
  if (!(duration >= 0.5)) throw Error("synthetic recordings must last at least 0.5 s");
  if (!(sample_rate > 8000.0)) throw Error("synthetic sample rate must exceed 8 kHz");
  if (folds < 1) throw Error("synthetic corpus needs at least one fold");
}

std::string synth_class_name(std::size_t c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene%zu%c", c / 2, c % 2 == 0 ? 'a' : 'b');
  return buf;
}

dsp::AudioSignal synth_recording(const SynthConfig& cfg, std::size_t c, std::size_t index) {
  cfg.validate();
  if (c >= cfg.classes) throw Error("class index out of range");
  std::mt19937_64 rng(derive_seed(cfg.seed, "synth.recording", (static_cast<std::uint64_t>(c) << 32) | index));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto n = static_cast<std::size_t>(std::llround(cfg.duration * cfg.sample_rate));
  const double fs = cfg.sample_rate;

  double lo = 0.0, hi = 0.0;
  background_band(c / 2, lo, hi);
  const double jitter = 1.0 + 0.06 * (u(rng) - 0.5);
  auto bg = band_noise(n, fs, lo * jitter, std::min(hi * jitter, 0.45 * fs), rng);
  // Shared broadband floor so that no class is silent outside its band.
  const auto floor = band_noise(n, fs, 60.0, 0.4 * fs, rng);
  const double mod_rate = 0.15 + 0.3 * u(rng), mod_phase = 2.0 * std::numbers::pi * u(rng);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    const double am = 1.0 + 0.3 * std::sin(2.0 * std::numbers::pi * mod_rate * t + mod_phase);
    x[i] = am * bg[i] + 0.15 * floor[i];
  }

  const EventRecipe ev = event_recipe(c);
  std::exponential_distribution<double> gap(ev.rate);
  const double amp = 0.9 * (0.8 + 0.4 * u(rng));
  for (double start = gap(rng) * 0.5; start + ev.length < cfg.duration; start += ev.length + gap(rng)) {
    const double f = ev.freq * (1.0 + 0.02 * (u(rng) - 0.5));
    const auto s0 = static_cast<std::size_t>(start * fs);
    const auto len = static_cast<std::size_t>(ev.length * fs);
    for (std::size_t k = 0; k < len && s0 + k < n; ++k) {
      const double t = static_cast<double>(k) / fs;
      const double env = std::sin(std::numbers::pi * static_cast<double>(k) / static_cast<double>(len));
      double tone = 0.0;
      for (int h = 1; h <= ev.harmonics; ++h) {
        if (f * h < 0.45 * fs) tone += std::sin(2.0 * std::numbers::pi * f * h * t) / h;
      }
      x[s0 + k] += amp * 2.0 * env * tone;
    }
  }

  double peak = 0.0, ss = 0.0;
  for (double v : x) {
    peak = std::max(peak, std::abs(v));
    ss += v * v;
  }
  const double rms = std::sqrt(ss / static_cast<double>(n));
  const double level = 0.08 * std::pow(10.0, (u(rng) - 0.5) * 4.0 / 20.0);  // +-2 dB
  const double scale = std::min(level / rms, 0.9 / peak);
  dsp::AudioSignal sig;
  sig.sample_rate = fs;
  sig.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) sig.samples[i] = x[i] * scale;
  return sig;
}

DatasetManifest synth_corpus(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  DatasetManifest m;
  m.root = out_dir;
  std::filesystem::create_directories(out_dir / "audio");
  for (std::size_t c = 0; c < cfg.classes; ++c) {
    for (std::size_t i = 0; i < cfg.per_class; ++i) {
      char name[64];
      std::snprintf(name, sizeof name, "%s_%03zu", synth_class_name(c).c_str(), i);
      ManifestEntry e;
      e.id = name;
      e.path = std::filesystem::path("audio") / (std::string(name) + ".wav");
      e.label = synth_class_name(c);
      e.fold = static_cast<int>(i % static_cast<std::size_t>(cfg.folds)) + 1;
      dsp::write_wav(out_dir / e.path, synth_recording(cfg, c, i), dsp::WavEncoding::pcm16);
      m.entries.push_back(std::move(e));
    }
  }
  for (std::size_t c = 0; c < cfg.classes; ++c) m.classes.push_back(synth_class_name(c));
  std::sort(m.classes.begin(), m.classes.end());
  write_file(out_dir / "manifest.csv", manifest_csv(m));
  return m;
}

}  // namespace lte::pipeline
