// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#include "lte/dsp/spectrum.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>
#include <utility>

#include "lte/common.hpp"

namespace lte::dsp {
namespace {

struct PlanPair {
  fftw_plan forward;
  fftw_plan inverse;
};

// FFTW planning is not thread-safe; execution with the new-array API is.
PlanPair plans_for(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, PlanPair> cache;
  std::lock_guard lock(mu);
  if (auto it = cache.find(n); it != cache.end()) return it->second;
  double* in = fftw_alloc_real(n);
  fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  PlanPair p{fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, flags),
             fftw_plan_dft_c2r_1d(static_cast<int>(n), out, in, flags)};
  fftw_free(in);
  fftw_free(out);
  if (p.forward == nullptr || p.inverse == nullptr) throw Error("FFTW planning failed");
  cache.emplace(n, p);
  return p;
}

}  // namespace

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

RealFft::RealFft(std::size_t n) : n_(n) {
  if (n < 2) throw Error("FFT length must be at least 2");
  const PlanPair p = plans_for(n);
  forward_plan_ = p.forward;
  inverse_plan_ = p.inverse;
}

std::vector<std::complex<double>> RealFft::forward(std::span<const double> input) const {
  std::vector<double> buf(n_, 0.0);
  std::copy_n(input.begin(), std::min(input.size(), n_), buf.begin());
  std::vector<std::complex<double>> out(bins());
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), buf.data(),
                       reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

std::vector<double> RealFft::inverse(std::span<const std::complex<double>> spectrum) const {
  if (spectrum.size() != bins()) throw Error("inverse FFT: wrong spectrum length");
  // c2r destroys its input.
  std::vector<std::complex<double>> tmp(spectrum.begin(), spectrum.end());
  std::vector<double> out(n_);
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_), reinterpret_cast<fftw_complex*>(tmp.data()),
                       out.data());
  const double scale = 1.0 / static_cast<double>(n_);
  for (double& v : out) v *= scale;
  return out;
}

std::vector<double> RealFft::power(std::span<const double> input) const {
  const auto spec = forward(input);
  std::vector<double> p(spec.size());
  for (std::size_t k = 0; k < spec.size(); ++k) p[k] = std::norm(spec[k]);
  return p;
}

}  // namespace lte::dsp
