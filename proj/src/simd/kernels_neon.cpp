// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#include "lte/simd/kernels.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)
#include <arm_neon.h>

namespace lte::simd {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double chi2_neon(const double* u, const double* v, std::size_t n) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  const float64x2_t one = vdupq_n_f64(1.0);
  float64x2_t acc = zero;
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t a = vld1q_f64(u + i);
    const float64x2_t b = vld1q_f64(v + i);
    const float64x2_t den = vaddq_f64(a, b);
    const float64x2_t d = vsubq_f64(a, b);
    const uint64x2_t live = vcgtq_f64(den, zero);
    const float64x2_t term = vdivq_f64(vmulq_f64(d, d), vbslq_f64(live, den, one));
    acc = vaddq_f64(acc, vbslq_f64(live, term, zero));
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) {
    const double den = u[i] + v[i];
    if (den > 0.0) {
      const double d = u[i] - v[i];
      s += d * d / den;
    }
  }
  return 0.5 * s;
}

double sum_sq_neon(const double* x, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t a = vld1q_f64(x + i);
    acc = vfmaq_f64(acc, a, a);
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += x[i] * x[i];
  return s;
}

}  // namespace

const KernelTable* neon_kernels() {
  static const KernelTable table{Isa::neon, dot_neon, axpy_neon, chi2_neon, sum_sq_neon};
  return &table;
}

}  // namespace lte::simd

#else

namespace lte::simd {
const KernelTable* neon_kernels() { return nullptr; }
}  // namespace lte::simd

#endif
