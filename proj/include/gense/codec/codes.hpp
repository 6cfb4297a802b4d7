// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "gense/error.hpp"

namespace gense::codec {

// Tc frames of K code indices each, frame-major. Frame t holds one index per
// quantizer group.
class CodeSequence {
 public:
  CodeSequence() = default;
  CodeSequence(int frames, int groups) : groups_(groups), data_(static_cast<size_t>(frames) * groups, 0) {
    if (groups <= 0) throw ConfigError("code sequence needs at least one group");
  }

  int frames() const { return groups_ ? static_cast<int>(data_.size() / groups_) : 0; }
  int groups() const { return groups_; }
  int& at(int t, int k) { return data_[static_cast<size_t>(t) * groups_ + k]; }
  int at(int t, int k) const { return data_[static_cast<size_t>(t) * groups_ + k]; }
  std::span<const int> frame(int t) const { return {data_.data() + static_cast<size_t>(t) * groups_, size_t(groups_)}; }
  std::span<int> frame(int t) { return {data_.data() + static_cast<size_t>(t) * groups_, size_t(groups_)}; }
  const std::vector<int>& data() const { return data_; }

  void push_frame(std::span<const int> codes) {
    if (static_cast<int>(codes.size()) != groups_)
      throw DimensionError("frame has " + std::to_string(codes.size()) + " codes, expected " + std::to_string(groups_));
    data_.insert(data_.end(), codes.begin(), codes.end());
  }

  // Range check against a codebook of `codewords` entries per group.
  void check_range(int codewords) const {
    for (size_t i = 0; i < data_.size(); ++i)
      if (data_[i] < 0 || data_[i] >= codewords)
        throw IndexError("code " + std::to_string(data_[i]) + " at frame " + std::to_string(i / groups_) +
                         " group " + std::to_string(i % groups_) + " outside [0," + std::to_string(codewords) + ")");
  }

  friend bool operator==(const CodeSequence&, const CodeSequence&) = default;

 private:
  int groups_ = 0;
  std::vector<int> data_;
};

// Code-stream dump, one utterance per file, little-endian:
//   u32 Tc, u32 K, then Tc*K u16 indices in frame-major order.
inline void write_code_stream(const std::string& path, const CodeSequence& c) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot write code stream '" + path + "'");
  auto put = [&](uint32_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xFF));
  };
  put(static_cast<uint32_t>(c.frames()), 4);
  put(static_cast<uint32_t>(c.groups()), 4);
  for (int v : c.data()) {
    if (v < 0 || v > 0xFFFF) throw IndexError("code " + std::to_string(v) + " does not fit 16 bits");
    put(static_cast<uint32_t>(v), 2);
  }
}

inline CodeSequence read_code_stream(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open code stream '" + path + "'");
  auto get = [&](int bytes) {
    uint32_t v = 0;
    for (int i = 0; i < bytes; ++i) {
      const int ch = is.get();
      if (ch == EOF) throw FormatError("truncated code stream '" + path + "'");
      v |= static_cast<uint32_t>(ch) << (8 * i);
    }
    return v;
  };
  const int tc = static_cast<int>(get(4));
  const int k = static_cast<int>(get(4));
  if (k <= 0) throw FormatError("code stream '" + path + "' declares K=" + std::to_string(k));
  CodeSequence c(tc, k);
  for (int t = 0; t < tc; ++t)
    for (int g = 0; g < k; ++g) c.at(t, g) = static_cast<int>(get(2));
  return c;
}

}  // namespace gense::codec
