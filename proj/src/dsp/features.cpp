// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#include "lte/dsp/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace lte::dsp {
namespace {

constexpr double kGammatoneLowHz = 20.0;
constexpr double kGammatoneHighHz = 22050.0;
constexpr double kLogfbLowHz = 50.0;

double log_floor(double v) { return std::log(std::max(v, kLogFloor)); }

// Triangular filters between consecutive edges; edges.size() == bands + 2.
Matrix triangular_bank(const std::vector<double>& edges, std::size_t bins, double bin_hz) {
  const std::size_t bands = edges.size() - 2;
  Matrix w(bands, bins);
  for (std::size_t b = 0; b < bands; ++b) {
    const double lo = edges[b], mid = edges[b + 1], hi = edges[b + 2];
    bool any = false;
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      double v = 0.0;
      if (f > lo && f <= mid) {
        v = (f - lo) / (mid - lo);
      } else if (f > mid && f < hi) {
        v = (hi - f) / (hi - mid);
      }
      w(b, k) = v;
      any = any || v > 0.0;
    }
    // Bands narrower than a bin fall back to the bin nearest the centre.
    if (!any) {
      const auto k = std::min(bins - 1, static_cast<std::size_t>(std::lround(mid / bin_hz)));
      w(b, k) = 1.0;
    }
  }
  return w;
}

std::vector<double> apply_bank(const Matrix& bank, std::span<const double> power) {
  std::vector<double> out(bank.rows(), 0.0);
  for (std::size_t b = 0; b < bank.rows(); ++b) {
    const auto row = bank.row(b);
    double s = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) s += row[k] * power[k];
    out[b] = s;
  }
  return out;
}

std::vector<double> matvec(const Matrix& m, std::span<const double> x) {
  std::vector<double> out(m.rows(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    double s = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) s += row[c] * x[c];
    out[r] = s;
  }
  return out;
}

Matrix rows_to_matrix(const std::vector<std::vector<double>>& rows, std::size_t dim) {
  Matrix m(rows.size(), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  return m;
}

}  // namespace

std::string_view family_name(FeatureFamily family) {
  switch (family) {
    case FeatureFamily::gtcc: return "GTCC";
    case FeatureFamily::mfcc: return "MFCC";
    case FeatureFamily::logfb: return "LOGFB";
  }
  return "?";
}

FeatureFamily parse_family(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
  if (s == "GTCC" || s == "LTE1") return FeatureFamily::gtcc;
  if (s == "MFCC" || s == "LTE2") return FeatureFamily::mfcc;
  if (s == "LOGFB" || s == "LTE3") return FeatureFamily::logfb;
  throw Error("unknown feature family: " + std::string(name));
}

std::size_t family_dim(FeatureFamily family) {
  switch (family) {
    case FeatureFamily::gtcc: return kGtccDim;
    case FeatureFamily::mfcc: return 3 * kMfccStatic;
    case FeatureFamily::logfb: return 3 * kLogfbBands + 8;
  }
  return 0;
}

double hz_to_erb_rate(double hz) { return 21.4 * std::log10(1.0 + 0.00437 * hz); }
double erb_rate_to_hz(double erb) { return (std::pow(10.0, erb / 21.4) - 1.0) / 0.00437; }
double erb_bandwidth(double hz) { return 24.7 * (0.00437 * hz + 1.0); }
double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Matrix dct2_matrix(std::size_t keep, std::size_t n) {
  Matrix d(keep, n);
  for (std::size_t k = 0; k < keep; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (std::size_t i = 0; i < n; ++i) {
      d(k, i) = scale * std::cos(std::numbers::pi * (static_cast<double>(i) + 0.5) * static_cast<double>(k) / n);
    }
  }
  return d;
}

FeatureExtractor::FeatureExtractor(double sample_rate, FrameGrid grid)
    : rate_(sample_rate),
      grid_(grid),
      fft_(next_pow2(static_cast<std::size_t>(std::llround(grid.frame_len * sample_rate)))) {
  if (!(sample_rate > 0.0)) throw Error("sample rate must be positive");
  grid_.validate();
  window_ = make_window(grid_.window, static_cast<std::size_t>(std::llround(grid_.frame_len * rate_)));

  const std::size_t bins = fft_.bins();
  const double bin = bin_hz();
  const double nyquist = rate_ / 2.0;

  // Gammatone-like weighting of the power spectrum: squared magnitude of a
  // 4th-order gammatone response, normalised to unit sum per band.
  const std::vector<double> centers = gammatone_centers();
  gammatone_ = Matrix(kGtccDim, bins);
  for (std::size_t b = 0; b < kGtccDim; ++b) {
    const double bw = 1.019 * erb_bandwidth(centers[b]);
    double total = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
      const double x = (static_cast<double>(k) * bin - centers[b]) / bw;
      const double g = std::pow(1.0 + x * x, -4.0);
      gammatone_(b, k) = g;
      total += g;
    }
    for (std::size_t k = 0; k < bins; ++k) gammatone_(b, k) /= total;
  }

  std::vector<double> mel_edges(kMfccMelBands + 2);
  const double mel_hi = hz_to_mel(nyquist);
  for (std::size_t i = 0; i < mel_edges.size(); ++i) {
    mel_edges[i] = mel_to_hz(mel_hi * static_cast<double>(i) / static_cast<double>(kMfccMelBands + 1));
  }
  mel_ = triangular_bank(mel_edges, bins, bin);

  std::vector<double> log_edges(kLogfbBands + 2);
  const double ratio = std::log(nyquist / kLogfbLowHz);
  for (std::size_t i = 0; i < log_edges.size(); ++i) {
    log_edges[i] = kLogfbLowHz * std::exp(ratio * static_cast<double>(i) / static_cast<double>(kLogfbBands + 1));
  }
  logfreq_ = triangular_bank(log_edges, bins, bin);

  dct_gtcc_ = dct2_matrix(kGtccDim, kGtccDim);
  dct_mfcc_ = dct2_matrix(kMfccStatic, kMfccMelBands);
}

std::vector<double> FeatureExtractor::gammatone_centers() const {
  const double lo = hz_to_erb_rate(kGammatoneLowHz);
  const double hi = hz_to_erb_rate(std::min(kGammatoneHighHz, rate_ / 2.0));
  std::vector<double> c(kGtccDim);
  for (std::size_t b = 0; b < kGtccDim; ++b) {
    c[b] = erb_rate_to_hz(lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(kGtccDim - 1));
  }
  return c;
}

std::vector<double> FeatureExtractor::power_spectrum(std::span<const double> frame) const {
  return fft_.power(frame);
}

std::vector<double> FeatureExtractor::gtcc_frame(std::span<const double> frame) const {
  const auto p = power_spectrum(frame);
  auto e = apply_bank(gammatone_, p);
  for (double& v : e) v = log_floor(v);
  return matvec(dct_gtcc_, e);
}

std::vector<double> FeatureExtractor::mfcc_frame(std::span<const double> frame) const {
  const auto p = power_spectrum(frame);
  auto e = apply_bank(mel_, p);
  for (double& v : e) v = log_floor(v);
  return matvec(dct_mfcc_, e);
}

std::vector<double> FeatureExtractor::logfb_static(std::span<const double> power) const {
  auto e = apply_bank(logfreq_, power);
  for (double& v : e) v = log_floor(v);
  return e;
}

std::vector<std::vector<double>> FeatureExtractor::logfb_frame_set(
    const std::vector<std::vector<double>>& frames) const {
  const double bin = bin_hz();
  const double nyquist = rate_ / 2.0;
  // Sub-band edges: [0, fs/16), [fs/16, fs/8), [fs/8, fs/4), [fs/4, fs/2].
  const std::array<double, 5> sub_edges{0.0, nyquist / 8.0, nyquist / 4.0, nyquist / 2.0, nyquist + bin};

  std::vector<std::vector<double>> bands;
  std::vector<std::vector<double>> tail;
  bands.reserve(frames.size());
  tail.reserve(frames.size());
  for (const auto& frame : frames) {
    const auto p = power_spectrum(frame);
    bands.push_back(logfb_static(p));

    std::vector<double> extra;
    extra.reserve(8);
    extra.push_back(zero_crossing_rate(frame));
    extra.push_back(short_time_energy(frame));
    std::array<double, 4> sub{};
    double total = 0.0, weighted = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double f = static_cast<double>(k) * bin;
      for (std::size_t s = 0; s < 4; ++s) {
        if (f >= sub_edges[s] && f < sub_edges[s + 1]) {
          sub[s] += p[k];
          break;
        }
      }
      total += p[k];
      weighted += f * p[k];
    }
    for (double s : sub) extra.push_back(log_floor(s));
    const double centroid = total > 0.0 ? weighted / total : 0.0;
    double spread = 0.0;
    if (total > 0.0) {
      for (std::size_t k = 0; k < p.size(); ++k) {
        const double d = static_cast<double>(k) * bin - centroid;
        spread += d * d * p[k];
      }
      spread = std::sqrt(spread / total);
    }
    extra.push_back(centroid);
    extra.push_back(spread);
    tail.push_back(std::move(extra));
  }

  auto composite = add_deltas(bands);
  for (std::size_t i = 0; i < composite.size(); ++i) {
    composite[i].insert(composite[i].end(), tail[i].begin(), tail[i].end());
  }
  return composite;
}

Matrix FeatureExtractor::frame_features(const AudioSignal& signal, FeatureFamily family) const {
  auto all = frame_features_all(signal);
  return std::move(all[static_cast<std::size_t>(family)]);
}

std::array<Matrix, 3> FeatureExtractor::frame_features_all(const AudioSignal& signal) const {
  if (std::abs(signal.sample_rate - rate_) > 1e-9) throw Error("signal rate does not match extractor rate");
  const auto frames = frame_signal(signal, grid_);

  std::vector<std::vector<double>> gt, mf;
  gt.reserve(frames.size());
  mf.reserve(frames.size());
  for (const auto& frame : frames) {
    const auto p = power_spectrum(frame);
    auto eg = apply_bank(gammatone_, p);
    for (double& v : eg) v = log_floor(v);
    gt.push_back(matvec(dct_gtcc_, eg));
    auto em = apply_bank(mel_, p);
    for (double& v : em) v = log_floor(v);
    mf.push_back(matvec(dct_mfcc_, em));
  }
  const auto mf60 = add_deltas(mf);
  const auto lf = logfb_frame_set(frames);
  return {rows_to_matrix(gt, family_dim(FeatureFamily::gtcc)), rows_to_matrix(mf60, family_dim(FeatureFamily::mfcc)),
          rows_to_matrix(lf, family_dim(FeatureFamily::logfb))};
}

SegmentMatrix FeatureExtractor::average_segments(const Matrix& frames, std::size_t n_samples,
                                                 FeatureFamily family, const SegmentGrid& segments) const {
  const std::size_t t_count = segment_count(n_samples, rate_, segments);
  if (t_count == 0) throw Error("signal shorter than one segment");
  const FramePlan plan = plan_frames(n_samples, rate_, grid_.frame_len, grid_.hop);
  const auto seg_len = static_cast<std::size_t>(std::llround(segments.length * rate_));
  const auto seg_hop = static_cast<std::size_t>(std::llround(segments.hop * rate_));

  SegmentMatrix out;
  out.family = family;
  out.values = Matrix(frames.cols(), t_count);
  std::size_t first = 0;
  for (std::size_t t = 0; t < t_count; ++t) {
    const std::size_t s0 = t * seg_hop;
    const std::size_t s1 = s0 + seg_len;
    while (first < plan.starts.size() && plan.starts[first] < s0) ++first;
    std::size_t count = 0;
    for (std::size_t f = first; f < plan.starts.size() && plan.starts[f] + plan.frame_len <= s1; ++f, ++count) {
      const auto row = frames.row(f);
      for (std::size_t m = 0; m < row.size(); ++m) out.values(m, t) += row[m];
    }
    if (count == 0) throw Error("segment holds no complete frame");
    for (std::size_t m = 0; m < frames.cols(); ++m) out.values(m, t) /= static_cast<double>(count);
  }
  return out;
}

SegmentMatrix FeatureExtractor::segment_features(const AudioSignal& signal, FeatureFamily family,
                                                 const SegmentGrid& segments) const {
  if (segment_count(signal.samples.size(), signal.sample_rate, segments) == 0) {
    throw Error("signal shorter than one segment (0.5 s)");
  }
  return average_segments(frame_features(signal, family), signal.samples.size(), family, segments);
}

std::array<SegmentMatrix, 3> FeatureExtractor::segment_features_all(const AudioSignal& signal,
                                                                    const SegmentGrid& segments) const {
  if (segment_count(signal.samples.size(), signal.sample_rate, segments) == 0) {
    throw Error("signal shorter than one segment (0.5 s)");
  }
  const auto frames = frame_features_all(signal);
  std::array<SegmentMatrix, 3> out;
  for (std::size_t i = 0; i < 3; ++i) {
    out[i] = average_segments(frames[i], signal.samples.size(), kAllFamilies[i], segments);
  }
  return out;
}

std::vector<std::vector<double>> deltas(const std::vector<std::vector<double>>& seq, std::size_t half_width) {
  std::vector<std::vector<double>> out;
  if (seq.empty()) return out;
  const std::size_t dim = seq.front().size();
  const auto n = static_cast<long>(seq.size());
  double denom = 0.0;
  for (std::size_t k = 1; k <= half_width; ++k) denom += static_cast<double>(k * k);
  denom *= 2.0;
  out.assign(seq.size(), std::vector<double>(dim, 0.0));
  for (long t = 0; t < n; ++t) {
    for (std::size_t k = 1; k <= half_width; ++k) {
      const auto kk = static_cast<long>(k);
      const auto& ahead = seq[static_cast<std::size_t>(std::min(n - 1, t + kk))];
      const auto& behind = seq[static_cast<std::size_t>(std::max(0L, t - kk))];
      for (std::size_t d = 0; d < dim; ++d) out[t][d] += static_cast<double>(k) * (ahead[d] - behind[d]);
    }
    for (std::size_t d = 0; d < dim; ++d) out[t][d] /= denom;
  }
  return out;
}

std::vector<std::vector<double>> add_deltas(const std::vector<std::vector<double>>& seq, std::size_t half_width) {
  const auto d1 = deltas(seq, half_width);
  const auto d2 = deltas(d1, half_width);
  std::vector<std::vector<double>> out(seq.size());
  for (std::size_t t = 0; t < seq.size(); ++t) {
    out[t].reserve(seq[t].size() * 3);
    out[t].insert(out[t].end(), seq[t].begin(), seq[t].end());
    out[t].insert(out[t].end(), d1[t].begin(), d1[t].end());
    out[t].insert(out[t].end(), d2[t].begin(), d2[t].end());
  }
  return out;
}

double zero_crossing_rate(std::span<const double> frame) {
  if (frame.size() < 2) return 0.0;
  std::size_t crossings = 0;
  for (std::size_t i = 1; i < frame.size(); ++i) {
    if ((frame[i] >= 0.0) != (frame[i - 1] >= 0.0)) ++crossings;
  }
  return static_cast<double>(crossings) / static_cast<double>(frame.size() - 1);
}

double short_time_energy(std::span<const double> frame) {
  if (frame.empty()) return 0.0;
  double s = 0.0;
  for (double v : frame) s += v * v;
  return s / static_cast<double>(frame.size());
}

}  // namespace lte::dsp
