// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>

#include "gense/codec/config.hpp"
#include "gense/error.hpp"
#include "gense/nn/rng.hpp"
#include "gense/nn/tensor.hpp"

namespace gense::eval {

using nn::Tensor;

template <class T>
using System = std::function<Tensor<T>(const Tensor<T>&)>;

struct ProbeResult {
  bool pass = true;
  int t0 = 0;
  int checked_rows = 0;
  int first_mismatch = -1;  // output row, or -1
};

// Output rows that may depend only on input frames <= t0 when each output
// row consumes `rate` input frames (1 for frame-synchronous systems, the
// combine factor for token-rate ones).
inline std::function<int(int)> rows_at_rate(int rate) {
  return [rate](int t0) { return (t0 + 1) / rate; };
}

// Runs `system` on `input` and on a copy whose frames after t0 (dim 0) are
// replaced by Gaussian noise, then requires the first safe_rows(t0) output
// rows to be bit-identical.
template <class T>
ProbeResult causality_probe(const System<T>& system, const Tensor<T>& input, int t0,
                            const std::function<int(int)>& safe_rows, uint64_t seed) {
  if (input.ndim() < 1 || t0 < 0 || t0 >= input.dim(0))
    throw IndexError("causality probe: t0 " + std::to_string(t0) + " outside the input's frames");
  const size_t per_frame = input.numel() / static_cast<size_t>(input.dim(0));
  Tensor<T> pert = input;
  nn::Rng rng(nn::derive_seed(seed, "probe", static_cast<uint64_t>(t0)));
  for (size_t i = static_cast<size_t>(t0 + 1) * per_frame; i < pert.numel(); ++i)
    pert[i] = static_cast<T>(rng.normal());
  const Tensor<T> a = system(input);
  const Tensor<T> b = system(pert);
  ProbeResult r;
  r.t0 = t0;
  r.checked_rows = std::min(safe_rows(t0), a.ndim() ? a.dim(0) : 0);
  if (a.shape() != b.shape()) {
    r.pass = false;
    r.first_mismatch = 0;
    return r;
  }
  const size_t per_out = a.dim(0) ? a.numel() / static_cast<size_t>(a.dim(0)) : 0;
  for (int row = 0; row < r.checked_rows && r.pass; ++row)
    for (size_t j = 0; j < per_out; ++j) {
      const size_t i = static_cast<size_t>(row) * per_out + j;
      if (std::memcmp(&a[i], &b[i], sizeof(T)) != 0) {
        r.pass = false;
        r.first_mismatch = row;
        break;
      }
    }
  return r;
}

// Negative control: mixes frame t+shift into frame t before calling
// `system`, the effect of a look-ahead convolution tap. A shift of one token
// (combine frames) leaks into a checked row for every t0 >= combine - 1.
template <class T>
System<T> with_lookahead(System<T> system, int shift = 1) {
  return [system, shift](const Tensor<T>& x) {
    Tensor<T> y = x;
    const int frames = x.dim(0);
    const size_t per = frames ? x.numel() / static_cast<size_t>(frames) : 0;
    for (int t = 0; t + shift < frames; ++t)
      for (size_t j = 0; j < per; ++j) y[t * per + j] += T(0.5) * x[(t + shift) * per + j];
    return system(y);
  };
}

struct LatencyReport {
  double hop_ms = 0;
  double token_ms = 0;    // combine frames of hop each
  double overlap_ms = 0;  // synthesis window minus hop
  double total_ms = 0;

  std::string to_text() const {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "hop %.3g ms\ntoken granularity %.3g ms\nsynthesis overlap %.3g ms\nalgorithmic latency %.3g ms "
                  "(%.3g + %.3g)\n",
                  hop_ms, token_ms, overlap_ms, total_ms, token_ms, overlap_ms);
    return buf;
  }
};

// Algorithmic latency from the frame geometry: a token is emitted once its
// `combine` hops are in, and overlap-add finalizes a sample window-hop later.
inline LatencyReport latency_report(const codec::CodecConfig& c, double sample_rate = 16000.0) {
  LatencyReport r;
  r.hop_ms = 1000.0 * c.hop / sample_rate;
  r.token_ms = c.combine * r.hop_ms;
  r.overlap_ms = 1000.0 * (c.window - c.hop) / sample_rate;
  r.total_ms = r.token_ms + r.overlap_ms;
  return r;
}

}  // namespace gense::eval
