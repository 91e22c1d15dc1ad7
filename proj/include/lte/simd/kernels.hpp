// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Data-parallel double-precision kernels used by the hot loops (convolution,
// CNN backward, chi-square Gram construction). Every kernel has a scalar
// reference; vector variants are selected once at runtime from CPU features.
//
// Set LTE_SIMD=scalar in the environment to force the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace lte::simd {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa);

struct KernelTable {
  Isa isa;
  /// sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  /// 0.5 * sum_i (u[i]-v[i])^2 / (u[i]+v[i]); terms with u[i]+v[i] == 0 are skipped
  double (*chi2)(const double* u, const double* v, std::size_t n);
  /// sum_i x[i]^2
  double (*sum_sq)(const double* x, std::size_t n);
};

const KernelTable& scalar_kernels();
/// nullptr when not compiled in or not supported by this CPU.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

/// Kernel table chosen for this process.
const KernelTable& active();
/// Override the dispatch (tests and benchmarks). Throws lte::Error if unavailable.
void force_isa(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}
inline double chi2(std::span<const double> u, std::span<const double> v) {
  return active().chi2(u.data(), v.data(), u.size());
}
inline double sum_sq(std::span<const double> x) { return active().sum_sq(x.data(), x.size()); }

}  // namespace lte::simd
