// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdlib>
#include <string>

#include "lte/common.hpp"
#include "lte/simd/kernels.hpp"

namespace lte::simd {
namespace {

const KernelTable* pick_best() {
  if (const char* env = std::getenv("LTE_SIMD"); env != nullptr && std::string(env) == "scalar") {
    return &scalar_kernels();
  }
  if (const KernelTable* t = avx2_kernels()) return t;
  if (const KernelTable* t = neon_kernels()) return t;
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> current{pick_best()};
  return current;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

void force_isa(Isa isa) {
  const KernelTable* t = nullptr;
  switch (isa) {
    case Isa::scalar: t = &scalar_kernels(); break;
    case Isa::avx2: t = avx2_kernels(); break;
    case Isa::neon: t = neon_kernels(); break;
  }
  if (t == nullptr) throw Error("SIMD variant not available on this CPU: " + std::string(isa_name(isa)));
  slot().store(t, std::memory_order_release);
}

}  // namespace lte::simd
