// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace lte::pipeline {

enum class ElementType : std::uint32_t { f32 = 1, f64 = 2 };

/// N-d array, row-major (last dimension fastest). Values are held as double;
/// `type` decides the on-disk width.
struct Tensor {
  std::vector<std::uint64_t> dims;  // empty = scalar
  std::vector<double> values;
  ElementType type = ElementType::f64;
  nlohmann::json meta = nlohmann::json::object();

  std::size_t size() const;
  void validate() const;
};

// File layout, all integers little-endian:
//   "LTEB" | u32 version | u32 element type | u32 rank | u64 dims[rank]
//   | payload | u64 json length | json bytes
inline constexpr std::uint32_t kTensorVersion = 1;

std::string encode_tensor(const Tensor& t);
Tensor decode_tensor(std::string_view bytes);

void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

/// Whole-file helpers shared by the binary record writers.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace lte::pipeline
