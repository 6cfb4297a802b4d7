// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "gense/error.hpp"
#include "gense/signal/wav.hpp"

namespace gense::signal {

// Mixed-radix decimation-in-time FFT for any length; small prime factors get
// a direct butterfly, so 320 = 2^6 * 5 is cheap.
class Fft {
 public:
  explicit Fft(int n) : n_(n), twiddle_(n) {
    if (n <= 0) throw ConfigError("FFT length must be positive");
    for (int k = 0; k < n; ++k) twiddle_[k] = std::polar(1.0, -2.0 * std::numbers::pi * k / n);
    int m = n;
    for (int p = 2; m > 1;) {
      if (m % p == 0) {
        factors_.push_back(p);
        m /= p;
      } else {
        ++p;
      }
    }
  }

  int size() const { return n_; }

  void forward(const std::complex<double>* in, std::complex<double>* out) const {
    if (n_ == 1) {
      out[0] = in[0];
      return;
    }
    rec(in, 1, out, n_, 0);
  }

 private:
  void rec(const std::complex<double>* in, int stride, std::complex<double>* out, int n, size_t fi) const {
    const int p = factors_[fi];
    const int m = n / p;
    if (m == 1) {
      for (int q = 0; q < p; ++q) out[q] = in[q * stride];
    } else {
      for (int q = 0; q < p; ++q) rec(in + q * stride, stride * p, out + q * m, m, fi + 1);
    }
    const int tw_step = n_ / n;
    if (p == 2) {
      for (int k = 0; k < m; ++k) {
        const std::complex<double> a = out[k];
        const std::complex<double> b = out[m + k] * twiddle_[k * tw_step];
        out[k] = a + b;
        out[m + k] = a - b;
      }
      return;
    }
    // Generic radix-p butterfly; roots of unity of order p come from the
    // main table at stride n_/p.
    const int root_step = n_ / p;
    std::complex<double> tmp[16];
    std::vector<std::complex<double>> big;
    std::complex<double>* x = tmp;
    if (p > 16) {
      big.resize(p);
      x = big.data();
    }
    for (int k = 0; k < m; ++k) {
      x[0] = out[k];
      for (int q = 1; q < p; ++q) x[q] = out[q * m + k] * twiddle_[q * k * tw_step];
      for (int s = 0; s < p; ++s) {
        std::complex<double> acc = x[0];
        for (int q = 1; q < p; ++q) acc += x[q] * twiddle_[((q * s) % p) * root_step];
        out[s * m + k] = acc;
      }
    }
  }

  int n_;
  std::vector<std::complex<double>> twiddle_;
  std::vector<int> factors_;
};

struct StftConfig {
  int window = 320;  // 20 ms at 16 kHz
  int hop = 80;      // 5 ms
  int bins() const { return window / 2 + 1; }
  // Causal framing: frame t covers samples [t*hop + hop - window, t*hop + hop).
  int left_pad() const { return window - hop; }
  int frames_for(size_t samples) const { return static_cast<int>((samples + hop - 1) / hop); }
};

// T x F complex frames, row-major by frame.
struct ComplexSpectrogram {
  int frames = 0;
  int bins = 0;
  std::vector<std::complex<float>> data;

  ComplexSpectrogram() = default;
  ComplexSpectrogram(int t, int f) : frames(t), bins(f), data(static_cast<size_t>(t) * f) {}
  std::complex<float>& at(int t, int f) { return data[static_cast<size_t>(t) * bins + f]; }
  const std::complex<float>& at(int t, int f) const { return data[static_cast<size_t>(t) * bins + f]; }
};

// Square-root periodic Hann window; its square sums to window/(2*hop) under
// hop-spaced overlap, i.e. 2 at 75% overlap.
inline std::vector<double> sqrt_hann(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = std::sin(std::numbers::pi * i / n);
  return w;
}

// Short-time Fourier transform with left-only zero padding of window - hop
// samples, so frame t uses no sample later than (t+1)*hop - 1. The last
// partial frame is zero-padded on the right inside its own window only.
inline ComplexSpectrogram stft(const Waveform& w, const StftConfig& cfg = {}) {
  const int T = cfg.frames_for(w.size());
  const int F = cfg.bins();
  ComplexSpectrogram s(T, F);
  if (T == 0) return s;
  const Fft fft(cfg.window);
  const auto win = sqrt_hann(cfg.window);
  std::vector<std::complex<double>> buf(cfg.window), out(cfg.window);
  const long n = static_cast<long>(w.size());
  for (int t = 0; t < T; ++t) {
    const long start = static_cast<long>(t) * cfg.hop + cfg.hop - cfg.window;
    for (int i = 0; i < cfg.window; ++i) {
      const long idx = start + i;
      buf[i] = (idx >= 0 && idx < n) ? win[i] * static_cast<double>(w.samples[idx]) : 0.0;
    }
    fft.forward(buf.data(), out.data());
    for (int f = 0; f < F; ++f) s.at(t, f) = std::complex<float>(out[f]);
  }
  return s;
}

// Weighted overlap-add with the square-root Hann synthesis window, normalized
// by the summed analysis*synthesis window at every sample. Returns
// (T-1)*hop + window samples; sample 0 of the result sits window - hop
// samples before the start of the analyzed signal.
inline Waveform istft_full(const ComplexSpectrogram& s, const StftConfig& cfg = {}) {
  if (s.bins != cfg.bins())
    throw DimensionError("istft: spectrogram has " + std::to_string(s.bins) + " bins, window " +
                         std::to_string(cfg.window) + " needs " + std::to_string(cfg.bins()));
  if (s.frames == 0) return Waveform{};
  const int N = cfg.window;
  const size_t len = static_cast<size_t>(s.frames - 1) * cfg.hop + N;
  std::vector<double> acc(len, 0.0), norm(len, 0.0);
  const Fft fft(N);
  const auto win = sqrt_hann(N);
  std::vector<std::complex<double>> buf(N), out(N);
  for (int t = 0; t < s.frames; ++t) {
    // Inverse DFT of a Hermitian spectrum via conj(FFT(conj(X))) / N.
    for (int f = 0; f < s.bins; ++f) buf[f] = std::conj(std::complex<double>(s.at(t, f)));
    for (int f = s.bins; f < N; ++f) buf[f] = std::complex<double>(s.at(t, N - f));
    fft.forward(buf.data(), out.data());
    const size_t off = static_cast<size_t>(t) * cfg.hop;
    for (int i = 0; i < N; ++i) {
      acc[off + i] += win[i] * out[i].real() / N;
      norm[off + i] += win[i] * win[i];
    }
  }
  Waveform w;
  w.samples.resize(len);
  for (size_t i = 0; i < len; ++i) w.samples[i] = static_cast<float>(norm[i] > 1e-10 ? acc[i] / norm[i] : 0.0);
  return w;
}

// Inverse aligned with the analyzed signal: T*hop samples, trimmed to
// `length` when given.
inline Waveform istft(const ComplexSpectrogram& s, const StftConfig& cfg = {}, long length = -1) {
  Waveform full = istft_full(s, cfg);
  Waveform w;
  const size_t aligned = static_cast<size_t>(s.frames) * cfg.hop;
  if (s.frames > 0)
    w.samples.assign(full.samples.begin() + cfg.left_pad(), full.samples.begin() + cfg.left_pad() + aligned);
  if (length >= 0) w.samples.resize(static_cast<size_t>(length), 0.0f);
  return w;
}

}  // namespace gense::signal
