// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "gense/error.hpp"

namespace gense::signal {

inline constexpr int kSampleRate = 16000;

// Mono audio at 16 kHz with samples nominally in [-1, 1].
struct Waveform {
  std::vector<float> samples;
  int sample_rate = kSampleRate;

  Waveform() = default;
  explicit Waveform(std::vector<float> s, int rate = kSampleRate) : samples(std::move(s)), sample_rate(rate) {}
  size_t size() const { return samples.size(); }
  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate; }
};

// WAV handling:
//  * Reading walks the RIFF chunk list, skipping unknown chunks (LIST, fact,
//    ...) and honoring the pad byte after odd-sized chunks. The "fmt " chunk
//    must declare PCM (format tag 1), 1 channel, 16000 Hz and 16 bits per
//    sample; anything else is rejected with a FormatError naming the field.
//    A data chunk whose size field overruns the file is truncated to the
//    bytes present.
//  * Samples map to floats as s / 32768.
//  * Writing emits the canonical 44-byte header (RIFF, fmt of size 16, data)
//    and rounds x * 32768 to the nearest integer, clamped to [-32768, 32767].
namespace detail {

inline uint32_t le32(const unsigned char* p) {
  return uint32_t(p[0]) | (uint32_t(p[1]) << 8) | (uint32_t(p[2]) << 16) | (uint32_t(p[3]) << 24);
}
inline uint16_t le16(const unsigned char* p) { return static_cast<uint16_t>(p[0] | (p[1] << 8)); }

inline void put32(std::vector<unsigned char>& b, uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>(v >> (8 * i)));
}
inline void put16(std::vector<unsigned char>& b, uint16_t v) {
  b.push_back(static_cast<unsigned char>(v));
  b.push_back(static_cast<unsigned char>(v >> 8));
}

}  // namespace detail

inline Waveform decode_wav(const std::vector<unsigned char>& bytes, const std::string& what = "wav") {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw FormatError(what + ": not a RIFF/WAVE file");
  size_t pos = 12;
  bool have_fmt = false;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* h = bytes.data() + pos;
    const uint32_t size = detail::le32(h + 4);
    const size_t body = pos + 8;
    if (std::memcmp(h, "fmt ", 4) == 0) {
      if (size < 16 || body + 16 > bytes.size()) throw FormatError(what + ": truncated fmt chunk");
      const unsigned char* f = bytes.data() + body;
      const uint16_t format = detail::le16(f);
      const uint16_t channels = detail::le16(f + 2);
      const uint32_t rate = detail::le32(f + 4);
      const uint16_t bits = detail::le16(f + 14);
      if (format != 1) throw FormatError(what + ": audio_format " + std::to_string(format) + " is not PCM (1)");
      if (channels != 1) throw FormatError(what + ": num_channels " + std::to_string(channels) + ", expected 1");
      if (rate != kSampleRate)
        throw FormatError(what + ": sample_rate " + std::to_string(rate) + ", expected " + std::to_string(kSampleRate));
      if (bits != 16) throw FormatError(what + ": bits_per_sample " + std::to_string(bits) + ", expected 16");
      have_fmt = true;
    } else if (std::memcmp(h, "data", 4) == 0) {
      if (!have_fmt) throw FormatError(what + ": data chunk before fmt chunk");
      const size_t n = std::min<size_t>(size, bytes.size() - body) / 2;
      Waveform w;
      w.samples.resize(n);
      for (size_t i = 0; i < n; ++i) {
        const auto s = static_cast<int16_t>(detail::le16(bytes.data() + body + 2 * i));
        w.samples[i] = static_cast<float>(s) / 32768.0f;
      }
      return w;
    }
    pos = body + size + (size & 1u);
  }
  throw FormatError(what + (have_fmt ? ": missing data chunk" : ": missing fmt chunk"));
}

inline std::vector<unsigned char> encode_wav(const Waveform& w) {
  if (w.sample_rate != kSampleRate)
    throw FormatError("sample_rate " + std::to_string(w.sample_rate) + ", expected " + std::to_string(kSampleRate));
  const uint32_t data_bytes = static_cast<uint32_t>(w.samples.size() * 2);
  std::vector<unsigned char> b;
  b.reserve(44 + data_bytes);
  b.insert(b.end(), {'R', 'I', 'F', 'F'});
  detail::put32(b, 36 + data_bytes);
  b.insert(b.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  detail::put32(b, 16);
  detail::put16(b, 1);
  detail::put16(b, 1);
  detail::put32(b, kSampleRate);
  detail::put32(b, kSampleRate * 2);
  detail::put16(b, 2);
  detail::put16(b, 16);
  b.insert(b.end(), {'d', 'a', 't', 'a'});
  detail::put32(b, data_bytes);
  for (float x : w.samples) {
    const double v = std::nearbyint(static_cast<double>(x) * 32768.0);
    detail::put16(b, static_cast<uint16_t>(static_cast<int16_t>(std::clamp(v, -32768.0, 32767.0))));
  }
  return b;
}

inline Waveform load_wav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open '" + path + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_wav(bytes, path);
}

inline void save_wav(const std::string& path, const Waveform& w) {
  const auto bytes = encode_wav(w);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot write '" + path + "'");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw FormatError("failed writing '" + path + "'");
}

}  // namespace gense::signal
