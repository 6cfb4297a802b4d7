// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gense/nn/param.hpp"

// Checkpoint container layout (all integers little-endian):
//
//   bytes 0..7   magic "GNSCKPT1"
//   u32          header length H
//   H bytes      UTF-8 header text: "key = value" lines holding the full
//                configuration plus training state (step counters, seeds)
//   u32          number of arrays N
//   N times:     u32 name length, name bytes,
//                u32 rank R, R x u32 extents,
//                prod(extents) x f32 values
//
// Arrays are written in insertion order; readers look them up by name.
namespace gense::nn {

struct Checkpoint {
  std::string header;
  std::vector<std::pair<std::string, Tensor<float>>> arrays;

  void add(const std::string& name, const Tensor<float>& t) { arrays.emplace_back(name, t); }

  template <class T>
  void add_params(const ParamStore<T>& ps, const std::string& prefix = "") {
    for (const auto& p : ps.params()) add(prefix + p.name, p.value().template cast<float>());
  }

  const Tensor<float>* find(const std::string& name) const {
    for (const auto& [n, t] : arrays)
      if (n == name) return &t;
    return nullptr;
  }

  const Tensor<float>& get(const std::string& name) const {
    const auto* t = find(name);
    if (!t) throw FormatError("checkpoint has no array '" + name + "'");
    return *t;
  }

  // Copies every parameter of `ps` from arrays named prefix + param name.
  template <class T>
  void load_params(ParamStore<T>& ps, const std::string& prefix = "") const {
    for (auto& p : ps.params()) {
      const auto& t = get(prefix + p.name);
      if (t.shape() != p.value().shape())
        throw FormatError("checkpoint array '" + prefix + p.name + "' has shape " + shape_str(t.shape()) +
                          ", model expects " + shape_str(p.value().shape()));
      p.mutable_value() = t.template cast<T>();
    }
  }
};

namespace detail {

inline void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw FormatError("truncated checkpoint");
  return uint32_t(b[0]) | (uint32_t(b[1]) << 8) | (uint32_t(b[2]) << 16) | (uint32_t(b[3]) << 24);
}

}  // namespace detail

inline constexpr char kCheckpointMagic[9] = "GNSCKPT1";

inline void write_checkpoint(std::ostream& os, const Checkpoint& ck) {
  os.write(kCheckpointMagic, 8);
  detail::put_u32(os, static_cast<uint32_t>(ck.header.size()));
  os.write(ck.header.data(), static_cast<std::streamsize>(ck.header.size()));
  detail::put_u32(os, static_cast<uint32_t>(ck.arrays.size()));
  for (const auto& [name, t] : ck.arrays) {
    detail::put_u32(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::put_u32(os, static_cast<uint32_t>(t.ndim()));
    for (int d : t.shape()) detail::put_u32(os, static_cast<uint32_t>(d));
    for (float v : t.vec()) detail::put_u32(os, std::bit_cast<uint32_t>(v));
  }
}

inline Checkpoint read_checkpoint(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw FormatError("not a gense checkpoint (bad magic)");
  Checkpoint ck;
  const uint32_t hl = detail::get_u32(is);
  ck.header.resize(hl);
  if (!is.read(ck.header.data(), hl)) throw FormatError("truncated checkpoint header");
  const uint32_t n = detail::get_u32(is);
  for (uint32_t k = 0; k < n; ++k) {
    const uint32_t nl = detail::get_u32(is);
    std::string name(nl, '\0');
    if (!is.read(name.data(), nl)) throw FormatError("truncated checkpoint array name");
    const uint32_t rank = detail::get_u32(is);
    if (rank > 8) throw FormatError("array '" + name + "' has implausible rank " + std::to_string(rank));
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<int>(detail::get_u32(is));
    Tensor<float> t(shape);
    for (auto& v : t.vec()) v = std::bit_cast<float>(detail::get_u32(is));
    ck.arrays.emplace_back(std::move(name), std::move(t));
  }
  return ck;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("cannot write checkpoint '" + path + "'");
    write_checkpoint(os, ck);
    if (!os) throw FormatError("failed writing checkpoint '" + path + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw FormatError("cannot move checkpoint into '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open checkpoint '" + path + "'");
  return read_checkpoint(is);
}

}  // namespace gense::nn
