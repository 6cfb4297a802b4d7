// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "gense/codec/codes.hpp"
#include "gense/signal/stft.hpp"

namespace gense::eval {

inline constexpr double kSiSnrCapDb = 60.0;

// Scale-invariant SNR in dB, capped at +60. Returns NaN when the reference
// is silent (after mean removal).
inline double si_snr(const signal::Waveform& est, const signal::Waveform& ref) {
  if (est.size() != ref.size())
    throw DimensionError("si_snr: lengths " + std::to_string(est.size()) + " and " + std::to_string(ref.size()));
  const size_t n = ref.size();
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  double me = 0.0, mr = 0.0;
  for (size_t i = 0; i < n; ++i) {
    me += est.samples[i];
    mr += ref.samples[i];
  }
  me /= n;
  mr /= n;
  double dot = 0.0, rr = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double r = ref.samples[i] - mr;
    dot += (est.samples[i] - me) * r;
    rr += r * r;
  }
  if (rr <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double a = dot / rr;
  double ts = 0.0, es = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double s = a * (ref.samples[i] - mr);
    const double e = (est.samples[i] - me) - s;
    ts += s * s;
    es += e * e;
  }
  if (es <= 0.0) return kSiSnrCapDb;
  return std::min(kSiSnrCapDb, 10.0 * std::log10(ts / es));
}

// Log-spectral distance in dB: mean over frames of the RMS over bins of
// 20*log10(|S_est| + eps) - 20*log10(|S_ref| + eps), on the front-end STFT.
inline double lsd(const signal::Waveform& est, const signal::Waveform& ref, double eps = 1e-8) {
  if (est.size() != ref.size())
    throw DimensionError("lsd: lengths " + std::to_string(est.size()) + " and " + std::to_string(ref.size()));
  const auto se = signal::stft(est);
  const auto sr = signal::stft(ref);
  if (se.frames == 0) return 0.0;
  double total = 0.0;
  for (int t = 0; t < se.frames; ++t) {
    double acc = 0.0;
    for (int f = 0; f < se.bins; ++f) {
      const double d = 20.0 * std::log10(std::abs(std::complex<double>(se.at(t, f))) + eps) -
                       20.0 * std::log10(std::abs(std::complex<double>(sr.at(t, f))) + eps);
      acc += d * d;
    }
    total += std::sqrt(acc / se.bins);
  }
  return total / se.frames;
}

// Mean absolute frame-to-frame change of the log spectrum, in dB. Used as a
// temporal-coherence proxy: jumpy frame sequences score high.
inline double spectral_flux_db(const signal::Waveform& w, double eps = 1e-8) {
  const auto s = signal::stft(w);
  if (s.frames < 2) return 0.0;
  double total = 0.0;
  for (int t = 1; t < s.frames; ++t) {
    double acc = 0.0;
    for (int f = 0; f < s.bins; ++f) {
      const double d = 20.0 * std::log10(std::abs(std::complex<double>(s.at(t, f))) + eps) -
                       20.0 * std::log10(std::abs(std::complex<double>(s.at(t - 1, f))) + eps);
      acc += d * d;
    }
    total += std::sqrt(acc / s.bins);
  }
  return total / (s.frames - 1);
}

// Fraction of (frame, group) positions where the indices agree.
inline double token_accuracy(const codec::CodeSequence& pred, const codec::CodeSequence& gt) {
  if (pred.frames() != gt.frames() || pred.groups() != gt.groups())
    throw DimensionError("token_accuracy: " + std::to_string(pred.frames()) + "x" + std::to_string(pred.groups()) +
                         " vs " + std::to_string(gt.frames()) + "x" + std::to_string(gt.groups()));
  if (gt.data().empty()) return 1.0;
  size_t hit = 0;
  for (size_t i = 0; i < gt.data().size(); ++i) hit += pred.data()[i] == gt.data()[i];
  return static_cast<double>(hit) / gt.data().size();
}

}  // namespace gense::eval
