// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "lte/common.hpp"
#include "lte/dsp/audio.hpp"
#include "lte/dsp/denoise.hpp"
#include "lte/dsp/features.hpp"
#include "lte/dsp/frames.hpp"

using namespace lte::dsp;

namespace {

constexpr double kFs = 44100.0;

AudioSignal tone(double hz, double seconds, double amp = 0.5) {
  AudioSignal s;
  s.samples.resize(static_cast<std::size_t>(std::llround(seconds * kFs)));
  for (std::size_t i = 0; i < s.samples.size(); ++i) s.samples[i] = amp * std::sin(2.0 * std::numbers::pi * hz * i / kFs);
  return s;
}

AudioSignal noise(double seconds, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, sigma);
  AudioSignal s;
  s.samples.resize(static_cast<std::size_t>(std::llround(seconds * kFs)));
  for (auto& v : s.samples) v = d(rng);
  return s;
}

double rms(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s / static_cast<double>(v.size()));
}

// Independent MFCC reference: naive DFT, mel triangles built from the textbook
// definition, and a direct DCT-II sum.
std::vector<double> reference_mfcc(const std::vector<double>& frame, double fs) {
  const std::size_t nfft = 4096;
  const std::size_t bins = nfft / 2 + 1;
  std::vector<double> power(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t n = 0; n < frame.size(); ++n) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>((k * n) % nfft) / nfft;
      re += frame[n] * std::cos(ang);
      im += frame[n] * std::sin(ang);
    }
    power[k] = re * re + im * im;
  }
  auto mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
  auto imel = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  const std::size_t bands = 40;
  std::vector<double> logs(bands);
  for (std::size_t b = 0; b < bands; ++b) {
    const double lo = imel(mel(fs / 2) * b / (bands + 1));
    const double c = imel(mel(fs / 2) * (b + 1) / (bands + 1));
    const double hi = imel(mel(fs / 2) * (b + 2) / (bands + 1));
    double e = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = k * fs / nfft;
      double w = 0.0;
      if (f > lo && f <= c) w = (f - lo) / (c - lo);
      if (f > c && f < hi) w = (hi - f) / (hi - c);
      e += w * power[k];
    }
    logs[b] = std::log(std::max(e, 1e-10));
  }
  std::vector<double> out(20);
  for (std::size_t k = 0; k < 20; ++k) {
    double s = 0.0;
    for (std::size_t n = 0; n < bands; ++n) s += logs[n] * std::cos(std::numbers::pi * k * (n + 0.5) / bands);
    out[k] = s * (k == 0 ? std::sqrt(1.0 / bands) : std::sqrt(2.0 / bands));
  }
  return out;
}

}  // namespace

TEST_CASE("frame_signal counts and offsets") {
  const FrameGrid grid;
  CHECK(frame_signal(tone(100, 1.0), grid).size() == 39);
  CHECK(frame_signal(tone(100, 0.05), grid).size() == 1);
  CHECK_THROWS_WITH_AS(frame_signal(tone(100, 0.03), grid), "signal too short", lte::Error);

  const auto plan = plan_frames(44100, kFs, 0.05, 0.025);
  REQUIRE(plan.starts.size() == 39);
  CHECK(plan.frame_len == 2205);
  CHECK(plan.starts[1] == 1103);  // 1102.5 rounds half up
  CHECK(plan.starts[2] == 2205);
  CHECK(plan.starts.back() + plan.frame_len == 44100);

  FrameGrid bad;
  bad.hop = 0.06;
  CHECK_THROWS_AS(bad.validate(), lte::Error);
}

TEST_CASE("segment count") {
  CHECK(segment_count(static_cast<std::size_t>(30 * kFs), kFs) == 118);
  CHECK(segment_count(static_cast<std::size_t>(0.5 * kFs), kFs) == 1);
  CHECK(segment_count(static_cast<std::size_t>(0.49 * kFs), kFs) == 0);

  // Off the exact grid boundaries the count is floor((D - 0.5) / 0.25) + 1.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dur(0.5, 60.0);
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto n = static_cast<std::size_t>(std::llround(dur(rng) * kFs));
    if ((n - 22050) % 11025 == 0) continue;
    const double d = static_cast<double>(n) / kFs;
    CHECK(segment_count(n, kFs) == static_cast<std::size_t>(std::floor((d - 0.5) / 0.25)) + 1);
    ++checked;
  }
  CHECK(checked >= 990);
}

TEST_CASE("gammatone cepstra") {
  const FeatureExtractor fx;
  const auto centers = fx.gammatone_centers();
  CHECK(centers.front() == doctest::Approx(20.0));
  CHECK(centers.back() == doctest::Approx(22050.0));

  const std::vector<double> silent(2205, 0.0);
  const auto c = fx.gtcc_frame(silent);
  REQUIRE(c.size() == 64);
  CHECK(c[0] == doctest::Approx(8.0 * std::log(1e-10)));
  for (std::size_t k = 1; k < c.size(); ++k) CHECK(std::abs(c[k]) < 1e-9);

  const auto frames = frame_signal(tone(1000, 0.05), fx.grid());
  for (double v : fx.gtcc_frame(frames[0])) CHECK(std::isfinite(v));
}

TEST_CASE("MFCC matches an independent direct-formula reference") {
  const FeatureExtractor fx;
  const auto frames = frame_signal(tone(1000, 0.05), fx.grid());
  const auto got = fx.mfcc_frame(frames[0]);
  const auto want = reference_mfcc(frames[0], kFs);
  REQUIRE(got.size() == 20);
  for (std::size_t k = 0; k < 20; ++k) CHECK(std::abs(got[k] - want[k]) <= 1e-6);
}

TEST_CASE("deltas") {
  const std::vector<std::vector<double>> constant(5, {1.0, -2.0, 3.0});
  const auto full = add_deltas(constant);
  REQUIRE(full.size() == 5);
  REQUIRE(full[0].size() == 9);
  for (const auto& row : full) {
    for (std::size_t d = 3; d < 9; ++d) CHECK(row[d] == 0.0);
  }
  // A linear ramp away from the edges has delta equal to its slope.
  std::vector<std::vector<double>> ramp;
  for (int t = 0; t < 20; ++t) ramp.push_back({0.5 * t});
  const auto d = deltas(ramp);
  CHECK(d[10][0] == doctest::Approx(0.5));
  // Shorter than the window: edge replication, no failure.
  const auto single = add_deltas({{4.0, 5.0}});
  REQUIRE(single.size() == 1);
  CHECK(single[0] == std::vector<double>{4.0, 5.0, 0.0, 0.0, 0.0, 0.0});
}

TEST_CASE("log filterbank composite features") {
  const FeatureExtractor fx;
  CHECK(family_dim(FeatureFamily::logfb) == 68);
  CHECK(zero_crossing_rate(std::vector<double>(100, 0.3)) == 0.0);
  CHECK(short_time_energy(std::vector<double>(100, 0.0)) == 0.0);

  const auto frames = frame_signal(tone(1000, 0.2), fx.grid());
  const auto set = fx.logfb_frame_set(frames);
  REQUIRE(set.size() == frames.size());
  REQUIRE(set[0].size() == 68);
  const double centroid = set[2][66];
  CHECK(std::abs(centroid - 1000.0) <= fx.bin_hz());

  const auto zeros = fx.logfb_frame_set({std::vector<double>(2205, 0.0)});
  CHECK(zeros[0][60] == 0.0);  // ZCR of silence counts no crossings
  CHECK(zeros[0][61] == 0.0);
  for (double v : zeros[0]) CHECK(std::isfinite(v));
}

TEST_CASE("segment features") {
  const FeatureExtractor fx;
  SUBCASE("30 s gives 118 columns") {
    const auto seg = fx.segment_features(noise(30.0, 0.1, 1), FeatureFamily::gtcc);
    CHECK(seg.segments() == 118);
    CHECK(seg.dim() == 64);
  }
  SUBCASE("0.5 s gives one column, shorter fails") {
    CHECK(fx.segment_features(tone(440, 0.5), FeatureFamily::mfcc).segments() == 1);
    CHECK_THROWS_AS(fx.segment_features(tone(440, 0.4), FeatureFamily::mfcc), lte::Error);
  }
  SUBCASE("constant frames give identical columns equal to the frame vector") {
    AudioSignal dc;
    dc.samples.assign(static_cast<std::size_t>(2.0 * kFs), 0.25);
    const auto seg = fx.segment_features(dc, FeatureFamily::gtcc);
    const auto frames = frame_signal(dc, fx.grid());
    const auto frame_vec = fx.gtcc_frame(frames[0]);
    for (std::size_t t = 0; t < seg.segments(); ++t) {
      for (std::size_t m = 0; m < seg.dim(); ++m) CHECK(seg.values(m, t) == doctest::Approx(frame_vec[m]).epsilon(1e-12));
    }
  }
  SUBCASE("segment T matches segment_count on random durations") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> dur(0.5, 6.0);
    for (int i = 0; i < 5; ++i) {
      const auto sig = noise(dur(rng), 0.1, 100 + i);
      const auto all = fx.segment_features_all(sig);
      for (const auto& s : all) CHECK(s.segments() == segment_count(sig.samples.size(), kFs));
      CHECK(all[0].dim() == 64);
      CHECK(all[1].dim() == 60);
      CHECK(all[2].dim() == 68);
    }
  }
}

TEST_CASE("feature extraction is deterministic and finite on silence") {
  const FeatureExtractor fx;
  const auto sig = noise(1.3, 0.2, 77);
  const auto a = fx.segment_features_all(sig);
  const auto b = fx.segment_features_all(sig);
  for (std::size_t i = 0; i < 3; ++i) CHECK(a[i].values == b[i].values);

  AudioSignal silent;
  silent.samples.assign(static_cast<std::size_t>(kFs), 0.0);
  for (const auto& s : fx.segment_features_all(silent)) {
    for (double v : s.values.data()) CHECK(std::isfinite(v));
  }
}

TEST_CASE("spectral subtraction") {
  SUBCASE("stationary white noise is attenuated") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const auto in = noise(4.0, 0.1, seed);
      const auto out = spectral_subtract(in);
      REQUIRE(out.samples.size() == in.samples.size());
      CHECK(rms(out.samples) < 0.25 * rms(in.samples));
    }
  }
  SUBCASE("a tone burst over noise survives within 3 dB") {
    auto mix = noise(4.0, 0.1, 4);
    const std::size_t b0 = static_cast<std::size_t>(1.75 * kFs), b1 = static_cast<std::size_t>(2.25 * kFs);
    for (std::size_t i = b0; i < b1; ++i) mix.samples[i] += 0.5 * std::sin(2.0 * std::numbers::pi * 1000.0 * i / kFs);
    const auto out = spectral_subtract(mix);
    // Magnitude of the 1 kHz DFT bin over a 4096-sample window centred on the burst.
    auto tone_mag = [](const std::vector<double>& x) {
      const std::size_t start = static_cast<std::size_t>(2.0 * kFs) - 2048;
      double re = 0.0, im = 0.0;
      for (std::size_t n = 0; n < 4096; ++n) {
        const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / 4096.0);
        const double ang = 2.0 * std::numbers::pi * 1000.0 * n / kFs;
        re += w * x[start + n] * std::cos(ang);
        im -= w * x[start + n] * std::sin(ang);
      }
      return std::hypot(re, im);
    };
    const double db = 20.0 * std::log10(tone_mag(out.samples) / tone_mag(mix.samples));
    CHECK(std::abs(db) < 3.0);
  }
  SUBCASE("silence stays silent") {
    AudioSignal z;
    z.samples.assign(50000, 0.0);
    const auto out = spectral_subtract(z);
    CHECK(out.samples == z.samples);
  }
  SUBCASE("second pass never raises energy") {
    const auto in = noise(3.0, 0.1, 8);
    const auto once = spectral_subtract(in);
    const auto twice = spectral_subtract(once);
    CHECK(rms(twice.samples) <= rms(once.samples) * (1.0 + 1e-9));
  }
  SUBCASE("config validation") {
    DenoiseConfig cfg;
    cfg.fft_len = 1000;
    CHECK_THROWS_AS(cfg.validate(), lte::Error);
    cfg = {};
    cfg.min_window = 0.2;
    CHECK_THROWS_AS(cfg.validate(), lte::Error);
  }
}

TEST_CASE("WAV input and output") {
  const auto dir = std::filesystem::temp_directory_path() / "lte_test_wav";
  std::filesystem::create_directories(dir);
  const auto sig = noise(0.3, 0.2, 3);

  write_wav(dir / "f32.wav", sig, WavEncoding::float32);
  const auto f = read_wav(dir / "f32.wav");
  REQUIRE(f.samples.size() == sig.samples.size());
  for (std::size_t i = 0; i < sig.samples.size(); ++i) CHECK(f.samples[i] == static_cast<double>(static_cast<float>(sig.samples[i])));

  write_wav(dir / "i16.wav", sig, WavEncoding::pcm16);
  const auto p = read_wav(dir / "i16.wav");
  for (std::size_t i = 0; i < sig.samples.size(); ++i) CHECK(std::abs(p.samples[i] - sig.samples[i]) <= 1.0 / 32768.0);

  AudioSignal slow{sig.samples, 22050.0};
  write_wav(dir / "slow.wav", slow, WavEncoding::float32);
  CHECK_THROWS_AS(read_wav(dir / "slow.wav"), lte::Error);
  const auto up = read_wav(dir / "slow.wav", true);
  CHECK(up.sample_rate == kFs);
  CHECK(up.samples.size() == 2 * sig.samples.size());

  CHECK_THROWS_AS(read_wav(dir / "missing.wav"), lte::Error);
  std::filesystem::remove_all(dir);
}
