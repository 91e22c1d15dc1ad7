// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#include "lte/pipeline/tensor.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "lte/binio.hpp"
#include "lte/common.hpp"

namespace lte::pipeline {
namespace {

constexpr char kMagic[4] = {'L', 'T', 'E', 'B'};

std::size_t element_size(ElementType t) { return t == ElementType::f32 ? 4 : 8; }

}  // namespace

std::size_t Tensor::size() const {
  std::size_t n = 1;
  for (auto d : dims) n *= static_cast<std::size_t>(d);
  return n;
}

void Tensor::validate() const {
  if (type != ElementType::f32 && type != ElementType::f64) throw Error("unknown tensor element type");
  if (values.size() != size()) {
    throw Error("tensor holds " + std::to_string(values.size()) + " values but its dims need " + std::to_string(size()));
  }
}

std::string encode_tensor(const Tensor& t) {
  t.validate();
  ByteWriter w;
  w.bytes(std::string_view(kMagic, 4));
  w.u32(kTensorVersion);
  w.u32(static_cast<std::uint32_t>(t.type));
  w.u32(static_cast<std::uint32_t>(t.dims.size()));
  for (auto d : t.dims) w.u64(d);
  if (t.type == ElementType::f32) {
    for (double v : t.values) w.f32(static_cast<float>(v));
  } else {
    for (double v : t.values) w.f64(v);
  }
  const std::string meta = t.meta.dump();
  w.u64(meta.size());
  w.bytes(meta);
  return w.take();
}

Tensor decode_tensor(std::string_view bytes) {
  if (bytes.size() < 4 || bytes.substr(0, 4) != std::string_view(kMagic, 4)) throw Error("not a tensor file (bad magic)");
  ByteReader r(bytes.substr(4));
  Tensor t;
  if (const auto v = r.u32(); v != kTensorVersion) throw Error("unsupported tensor version " + std::to_string(v));
  const auto type = r.u32();
  if (type != 1 && type != 2) throw Error("unknown tensor element type " + std::to_string(type));
  t.type = static_cast<ElementType>(type);
  const auto rank = r.u32();
  if (rank > 32) throw Error("tensor rank " + std::to_string(rank) + " is implausible");
  t.dims.resize(rank);
  for (auto& d : t.dims) d = r.u64();
  const std::size_t n = t.size();
  const std::size_t es = element_size(t.type);
  if (r.remaining() < 8 || (r.remaining() - 8) / es < n) throw Error("payload size mismatch");
  t.values.resize(n);
  for (auto& v : t.values) v = t.type == ElementType::f32 ? static_cast<double>(r.f32()) : r.f64();
  const auto len = r.u64();
  if (len != r.remaining()) throw Error("payload size mismatch");
  const std::string meta(r.bytes(len));
  try {
    t.meta = nlohmann::json::parse(meta);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("bad tensor metadata: ") + e.what());
  }
  return t;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("short write to " + path.string());
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) { write_file(path, encode_tensor(t)); }

Tensor read_tensor(const std::filesystem::path& path) {
  try {
    return decode_tensor(read_file(path));
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

}  // namespace lte::pipeline
