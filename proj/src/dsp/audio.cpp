// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#include "lte/dsp/audio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "lte/common.hpp"

namespace lte::dsp {
namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xfffe;

}  // namespace

void AudioSignal::validate() const {
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) throw Error("sample rate must be positive");
  for (double s : samples) {
    if (!std::isfinite(s)) throw Error("audio contains non-finite samples");
  }
}

AudioSignal read_wav(const std::filesystem::path& path, bool resample, double expected_rate) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open WAV file: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw Error("not a RIFF/WAVE file: " + path.string());
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t len = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = std::min<std::size_t>(len, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) throw Error("truncated fmt chunk: " + path.string());
      format = read_u16(bytes.data() + body);
      channels = read_u16(bytes.data() + body + 2);
      rate = read_u32(bytes.data() + body + 4);
      bits = read_u16(bytes.data() + body + 14);
      if (format == kFormatExtensible && avail >= 26) format = read_u16(bytes.data() + body + 24);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_len = avail;
    }
    pos = body + len + (len & 1u);
  }
  if (channels == 0 || rate == 0) throw Error("missing fmt chunk: " + path.string());
  if (data == nullptr) throw Error("missing data chunk: " + path.string());

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool f32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !f32) {
    throw Error("unsupported WAV encoding (need 16-bit PCM or 32-bit float): " + path.string());
  }
  const std::size_t frame_bytes = static_cast<std::size_t>(bits / 8) * channels;
  const std::size_t n = data_len / frame_bytes;

  AudioSignal sig;
  sig.sample_rate = rate;
  sig.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + i * frame_bytes + c * (bits / 8);
      if (pcm16) {
        acc += static_cast<std::int16_t>(read_u16(p)) / 32768.0;
      } else {
        acc += static_cast<double>(std::bit_cast<float>(read_u32(p)));
      }
    }
    sig.samples[i] = acc / channels;
  }

  if (std::abs(sig.sample_rate - expected_rate) > 1e-9) {
    if (!resample) {
      throw Error("sample rate " + std::to_string(rate) + " Hz differs from expected " +
                  std::to_string(static_cast<long>(expected_rate)) + " Hz (use --resample): " + path.string());
    }
    sig = resample_linear(sig, expected_rate);
  }
  return sig;
}

void write_wav(const std::filesystem::path& path, const AudioSignal& signal, WavEncoding encoding) {
  const bool pcm16 = encoding == WavEncoding::pcm16;
  const std::uint16_t bits = pcm16 ? 16 : 32;
  const std::uint32_t rate = static_cast<std::uint32_t>(std::lround(signal.sample_rate));
  const std::uint32_t data_len = static_cast<std::uint32_t>(signal.samples.size() * (bits / 8));

  std::string out;
  out.reserve(44 + data_len);
  out += "RIFF";
  put_u32(out, 36 + data_len);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, pcm16 ? kFormatPcm : kFormatFloat);
  put_u16(out, 1);
  put_u32(out, rate);
  put_u32(out, rate * (bits / 8));
  put_u16(out, bits / 8);
  put_u16(out, bits);
  out += "data";
  put_u32(out, data_len);
  for (double s : signal.samples) {
    if (pcm16) {
      const double clipped = std::clamp(s, -1.0, 32767.0 / 32768.0);
      put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(clipped * 32768.0))));
    } else {
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(s)));
    }
  }

  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write WAV file: " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error("write failed: " + path.string());
}

AudioSignal resample_linear(const AudioSignal& signal, double target_rate) {
  if (!(target_rate > 0.0)) throw Error("target rate must be positive");
  AudioSignal out;
  out.sample_rate = target_rate;
  if (signal.samples.empty()) return out;
  const double ratio = signal.sample_rate / target_rate;
  const auto n_out = static_cast<std::size_t>(std::floor(signal.samples.size() / ratio));
  out.samples.resize(n_out);
  const std::size_t last = signal.samples.size() - 1;
  for (std::size_t i = 0; i < n_out; ++i) {
    const double src = i * ratio;
    const auto j = std::min(static_cast<std::size_t>(src), last);
    const double frac = src - static_cast<double>(j);
    const double next = signal.samples[std::min(j + 1, last)];
    out.samples[i] = signal.samples[j] + frac * (next - signal.samples[j]);
  }
  return out;
}

}  // namespace lte::dsp
