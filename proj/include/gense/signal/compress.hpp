// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "gense/nn/tensor.hpp"
#include "gense/signal/stft.hpp"

namespace gense::signal {

// Power-law compressed magnitude m^alpha plus phase in (-pi, pi].
struct CompressedSpectrum {
  int frames = 0;
  int bins = 0;
  std::vector<float> magnitude;
  std::vector<float> phase;

  CompressedSpectrum() = default;
  CompressedSpectrum(int t, int f)
      : frames(t), bins(f), magnitude(static_cast<size_t>(t) * f), phase(static_cast<size_t>(t) * f) {}
  size_t index(int t, int f) const { return static_cast<size_t>(t) * bins + f; }
};

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0)) throw ConfigError("compression exponent alpha must be > 0, got " + std::to_string(alpha));
}

inline CompressedSpectrum power_compress(const ComplexSpectrogram& s, double alpha = 0.3) {
  check_alpha(alpha);
  CompressedSpectrum c(s.frames, s.bins);
  for (size_t i = 0; i < s.data.size(); ++i) {
    const std::complex<double> z(s.data[i]);
    c.magnitude[i] = static_cast<float>(std::pow(std::abs(z), alpha));
    double ph = std::arg(z);
    if (ph <= -std::numbers::pi) ph = std::numbers::pi;
    c.phase[i] = static_cast<float>(ph);
  }
  return c;
}

inline ComplexSpectrogram power_decompress(const CompressedSpectrum& c, double alpha = 0.3) {
  check_alpha(alpha);
  ComplexSpectrogram s(c.frames, c.bins);
  for (size_t i = 0; i < s.data.size(); ++i) {
    const double m = std::pow(static_cast<double>(std::max(c.magnitude[i], 0.0f)), 1.0 / alpha);
    s.data[i] = std::complex<float>(std::polar(m, static_cast<double>(c.phase[i])));
  }
  return s;
}

// Model-facing layout: [T, F, 2] holding the compressed spectrum as
// (real, imag) = m^alpha * (cos phase, sin phase).
template <class T>
nn::Tensor<T> to_planes(const CompressedSpectrum& c) {
  nn::Tensor<T> out({c.frames, c.bins, 2});
  for (size_t i = 0; i < c.magnitude.size(); ++i) {
    out[2 * i] = static_cast<T>(c.magnitude[i] * std::cos(c.phase[i]));
    out[2 * i + 1] = static_cast<T>(c.magnitude[i] * std::sin(c.phase[i]));
  }
  return out;
}

template <class T>
CompressedSpectrum from_planes(const nn::Tensor<T>& planes) {
  if (planes.ndim() != 3 || planes.dim(2) != 2)
    throw DimensionError("compressed planes must be [T,F,2], got " + shape_str(planes.shape()));
  CompressedSpectrum c(planes.dim(0), planes.dim(1));
  for (size_t i = 0; i < c.magnitude.size(); ++i) {
    const double re = planes[2 * i], im = planes[2 * i + 1];
    c.magnitude[i] = static_cast<float>(std::hypot(re, im));
    double ph = std::atan2(im, re);
    if (ph <= -std::numbers::pi) ph = std::numbers::pi;
    c.phase[i] = static_cast<float>(ph);
  }
  return c;
}

// Waveform -> compressed planes, the input representation of every model.
template <class T>
nn::Tensor<T> analyze(const Waveform& w, double alpha = 0.3, const StftConfig& cfg = {}) {
  return to_planes<T>(power_compress(stft(w, cfg), alpha));
}

// Compressed planes -> waveform trimmed (or zero-padded) to `length`.
template <class T>
Waveform synthesize(const nn::Tensor<T>& planes, long length, double alpha = 0.3, const StftConfig& cfg = {}) {
  return istft(power_decompress(from_planes(planes), alpha), cfg, length);
}

}  // namespace gense::signal
