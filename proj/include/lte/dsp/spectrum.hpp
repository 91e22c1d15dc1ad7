// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace lte::dsp {

/// Real FFT of a fixed length, backed by FFTW. Instances are cheap to copy;
/// plans are shared and execution is reentrant.
class RealFft {
 public:
  explicit RealFft(std::size_t n);

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  /// Zero-pads (or truncates) `input` to size() and returns the half spectrum.
  std::vector<std::complex<double>> forward(std::span<const double> input) const;
  /// Inverse of forward(), scaled so inverse(forward(x)) == x.
  std::vector<double> inverse(std::span<const std::complex<double>> spectrum) const;
  /// |X_k|^2 for k = 0..n/2.
  std::vector<double> power(std::span<const double> input) const;

 private:
  std::size_t n_;
  void* forward_plan_;
  void* inverse_plan_;
};

std::size_t next_pow2(std::size_t n);

}  // namespace lte::dsp
