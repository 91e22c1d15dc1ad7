// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lte/common.hpp"
#include "lte/dsp/audio.hpp"
#include "lte/dsp/frames.hpp"
#include "lte/dsp/spectrum.hpp"

namespace lte::dsp {

enum class FeatureFamily { gtcc, mfcc, logfb };

inline constexpr std::array<FeatureFamily, 3> kAllFamilies{FeatureFamily::gtcc, FeatureFamily::mfcc,
                                                           FeatureFamily::logfb};

std::string_view family_name(FeatureFamily family);
FeatureFamily parse_family(std::string_view name);

inline constexpr double kLogFloor = 1e-10;
inline constexpr std::size_t kGtccDim = 64;
inline constexpr std::size_t kMfccStatic = 20;
inline constexpr std::size_t kMfccMelBands = 40;
inline constexpr std::size_t kLogfbBands = 20;
inline constexpr std::size_t kDeltaHalfWidth = 4;  // 9-frame regression window

/// M x T matrix of segment-level features, one column per segment.
struct SegmentMatrix {
  Matrix values;
  FeatureFamily family = FeatureFamily::gtcc;

  std::size_t dim() const { return values.rows(); }
  std::size_t segments() const { return values.cols(); }
};

std::size_t family_dim(FeatureFamily family);

/// Filterbanks and transforms for one sample rate. Construction precomputes
/// everything; all member functions are const and reentrant.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(double sample_rate = kSceneSampleRate, FrameGrid grid = {});

  double sample_rate() const { return rate_; }
  const FrameGrid& grid() const { return grid_; }
  std::size_t fft_len() const { return fft_.size(); }
  double bin_hz() const { return rate_ / static_cast<double>(fft_.size()); }

  /// Power spectrum of one windowed frame, zero-padded to fft_len().
  std::vector<double> power_spectrum(std::span<const double> frame) const;

  std::vector<double> gtcc_frame(std::span<const double> frame) const;
  std::vector<double> mfcc_frame(std::span<const double> frame) const;
  /// Per-frame composite: 20 log bands + deltas + accelerations, ZCR,
  /// short-time energy, 4 sub-band log energies, centroid, bandwidth.
  std::vector<std::vector<double>> logfb_frame_set(const std::vector<std::vector<double>>& frames) const;

  /// Frame-level feature vectors (rows = frames) for one family.
  Matrix frame_features(const AudioSignal& signal, FeatureFamily family) const;
  /// All three families from a single pass over the spectra.
  std::array<Matrix, 3> frame_features_all(const AudioSignal& signal) const;

  SegmentMatrix segment_features(const AudioSignal& signal, FeatureFamily family,
                                 const SegmentGrid& segments = {}) const;
  std::array<SegmentMatrix, 3> segment_features_all(const AudioSignal& signal,
                                                    const SegmentGrid& segments = {}) const;

  /// Exposed for tests.
  const Matrix& gammatone_weights() const { return gammatone_; }
  const Matrix& mel_weights() const { return mel_; }
  const Matrix& logfreq_weights() const { return logfreq_; }
  std::vector<double> gammatone_centers() const;

 private:
  std::vector<double> logfb_static(std::span<const double> power) const;
  SegmentMatrix average_segments(const Matrix& frames, std::size_t n_samples, FeatureFamily family,
                                 const SegmentGrid& segments) const;

  double rate_;
  FrameGrid grid_;
  RealFft fft_;
  std::vector<double> window_;
  Matrix gammatone_;  // bands x bins
  Matrix mel_;
  Matrix logfreq_;
  Matrix dct_gtcc_;  // 64 x 64
  Matrix dct_mfcc_;  // 20 x 40
};

/// Orthonormal DCT-II matrix keeping the first `keep` of `n` coefficients.
Matrix dct2_matrix(std::size_t keep, std::size_t n);

/// Regression deltas over +-half_width frames with edge replication.
std::vector<std::vector<double>> deltas(const std::vector<std::vector<double>>& seq,
                                        std::size_t half_width = kDeltaHalfWidth);

/// static (+) delta (+) acceleration.
std::vector<std::vector<double>> add_deltas(const std::vector<std::vector<double>>& seq,
                                            std::size_t half_width = kDeltaHalfWidth);

double zero_crossing_rate(std::span<const double> frame);
double short_time_energy(std::span<const double> frame);

/// ERB-rate scale (Glasberg & Moore).
double hz_to_erb_rate(double hz);
double erb_rate_to_hz(double erb);
double erb_bandwidth(double hz);
double hz_to_mel(double hz);
double mel_to_hz(double mel);

}  // namespace lte::dsp
