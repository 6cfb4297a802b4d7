// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "gense/error.hpp"
#include "gense/nn/rng.hpp"
#include "gense/signal/wav.hpp"

namespace gense::data {

using signal::Waveform;

inline double rms(const std::vector<float>& x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (float v : x) s += double(v) * v;
  return std::sqrt(s / x.size());
}

inline double power(const std::vector<float>& x) {
  const double r = rms(x);
  return r * r;
}

inline double db_to_amp(double db) { return std::pow(10.0, db / 20.0); }

struct ToySpeechOptions {
  double f0_min = 80.0;
  double f0_max = 300.0;
  double syllable_rate_min = 3.0;  // Hz
  double syllable_rate_max = 6.0;
  double gap_probability = 0.2;    // chance that a pause follows a syllable
  double gap_floor_db = -40.0;     // envelope level inside pauses
  double max_harmonic_hz = 7000.0;
  double rms_dbfs = -25.0;
  // When positive: F0 held at this value and formants disabled.
  double constant_f0 = 0.0;
};

// Source-filter toy speech. A harmonic source (amplitudes 1/k) follows a
// smooth random F0 contour inside [f0_min, f0_max]; 2 or 3 formant
// resonators shape the harmonic amplitudes; each syllable has a sine-shaped
// amplitude envelope at a 3-6 Hz rate, and occasional pauses drop the
// envelope to gap_floor_db. The result is RMS-normalized to rms_dbfs.
inline Waveform gen_toy_speech(uint64_t seed, double duration_s, const ToySpeechOptions& opt = {}) {
  if (!(duration_s > 0.0)) throw ConfigError("toy speech duration must be > 0");
  const int fs = signal::kSampleRate;
  const size_t n = static_cast<size_t>(std::llround(duration_s * fs));
  nn::Rng rng(seed);

  struct Target {
    double f0;
    double formant[3];
    double bandwidth[3];
  };
  struct Segment {
    size_t start, len;
    bool gap;
    Target target;
  };

  const double base_f0 = std::exp(rng.uniform(std::log(opt.f0_min * 1.15), std::log(opt.f0_max / 1.15)));
  const int num_formants = rng.uniform() < 0.5 ? 2 : 3;
  auto draw_target = [&] {
    Target t{};
    t.f0 = std::clamp(base_f0 * std::pow(2.0, rng.uniform(-0.25, 0.25)), opt.f0_min, opt.f0_max);
    t.formant[0] = rng.uniform(300, 850);
    t.formant[1] = rng.uniform(900, 2300);
    t.formant[2] = rng.uniform(2400, 3400);
    for (int i = 0; i < 3; ++i) t.bandwidth[i] = rng.uniform(60, 150) * (1.0 + 0.5 * i);
    return t;
  };

  std::vector<Segment> plan;
  size_t pos = 0;
  Target prev = draw_target();
  while (pos < n) {
    const double rate = rng.uniform(opt.syllable_rate_min, opt.syllable_rate_max);
    const size_t len = static_cast<size_t>(fs / rate);
    Target tgt = draw_target();
    plan.push_back({pos, len, false, tgt});
    pos += len;
    if (rng.uniform() < opt.gap_probability) {
      const size_t glen = static_cast<size_t>(rng.uniform(0.08, 0.25) * fs);
      plan.push_back({pos, glen, true, tgt});
      pos += glen;
    }
  }

  // Parameters are refreshed every `block` samples and held in between.
  const int block = 16;
  const double floor = db_to_amp(opt.gap_floor_db);
  std::vector<double> amps;
  std::vector<float> out(n, 0.0f);
  double phase = 0.0;
  for (const auto& seg : plan) {
    const Target from = prev;
    const Target to = seg.target;
    for (size_t i = 0; i < seg.len && seg.start + i < n; i += block) {
      const double u = double(i) / seg.len;
      // Targets glide over the first 40% of a syllable, then hold.
      const double g = seg.gap ? 1.0 : 0.5 - 0.5 * std::cos(std::numbers::pi * std::min(1.0, u / 0.4));
      double f0 = from.f0 + (to.f0 - from.f0) * g;
      double fc[3], bw[3];
      for (int k = 0; k < 3; ++k) {
        fc[k] = from.formant[k] + (to.formant[k] - from.formant[k]) * g;
        bw[k] = from.bandwidth[k] + (to.bandwidth[k] - from.bandwidth[k]) * g;
      }
      if (opt.constant_f0 > 0.0) f0 = opt.constant_f0;
      const double env = seg.gap ? floor : floor + (1.0 - floor) * std::sin(std::numbers::pi * u);
      const int harmonics = std::max(1, static_cast<int>(opt.max_harmonic_hz / f0));
      amps.assign(harmonics, 0.0);
      for (int h = 1; h <= harmonics; ++h) {
        const double f = h * f0;
        double gain = 1.0;
        if (opt.constant_f0 <= 0.0)
          for (int k = 0; k < num_formants; ++k) {
            const double b2 = 0.25 * bw[k] * bw[k];
            gain *= (fc[k] * fc[k] + b2) /
                    std::sqrt(((f - fc[k]) * (f - fc[k]) + b2) * ((f + fc[k]) * (f + fc[k]) + b2));
          }
        amps[h - 1] = env * gain / h;
      }
      const size_t end = std::min({seg.start + i + block, seg.start + seg.len, n});
      for (size_t s = seg.start + i; s < end; ++s) {
        phase += 2.0 * std::numbers::pi * f0 / fs;
        if (phase > 2.0 * std::numbers::pi) phase -= 2.0 * std::numbers::pi;
        double acc = 0.0;
        for (int h = 0; h < harmonics; ++h) acc += amps[h] * std::sin((h + 1) * phase);
        out[s] = static_cast<float>(acc);
      }
    }
    if (!seg.gap) prev = seg.target;
  }
  const double r = rms(out);
  if (r > 0.0) {
    const double gain = db_to_amp(opt.rms_dbfs) / r;
    for (auto& v : out) v = static_cast<float>(v * gain);
  }
  return Waveform(std::move(out));
}

enum class NoiseKind { kWhite, kPink, kBabble };

inline std::string to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::kWhite: return "white";
    case NoiseKind::kPink: return "pink";
    case NoiseKind::kBabble: return "babble";
  }
  return "?";
}

inline NoiseKind parse_noise_kind(const std::string& s) {
  if (s == "white") return NoiseKind::kWhite;
  if (s == "pink") return NoiseKind::kPink;
  if (s == "babble") return NoiseKind::kBabble;
  throw ConfigError("unknown noise kind '" + s + "' (white|pink|babble)");
}

// White: Gaussian. Pink: white noise through Kellet's refined 1/f filter.
// Babble: sum of 8 independent toy-speech streams.
inline Waveform gen_noise(NoiseKind kind, uint64_t seed, double duration_s) {
  if (!(duration_s > 0.0)) throw ConfigError("noise duration must be > 0");
  const size_t n = static_cast<size_t>(std::llround(duration_s * signal::kSampleRate));
  std::vector<float> out(n, 0.0f);
  nn::Rng rng(seed);
  switch (kind) {
    case NoiseKind::kWhite:
      for (auto& v : out) v = static_cast<float>(0.1 * rng.normal());
      break;
    case NoiseKind::kPink: {
      double b0 = 0, b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0, b6 = 0;
      for (auto& v : out) {
        const double w = rng.normal();
        b0 = 0.99886 * b0 + w * 0.0555179;
        b1 = 0.99332 * b1 + w * 0.0750759;
        b2 = 0.96900 * b2 + w * 0.1538520;
        b3 = 0.86650 * b3 + w * 0.3104856;
        b4 = 0.55000 * b4 + w * 0.5329522;
        b5 = -0.7616 * b5 - w * 0.0168980;
        v = static_cast<float>(0.03 * (b0 + b1 + b2 + b3 + b4 + b5 + b6 + w * 0.5362));
        b6 = w * 0.115926;
      }
      break;
    }
    case NoiseKind::kBabble:
      for (int s = 0; s < 8; ++s) {
        const auto talker = gen_toy_speech(nn::derive_seed(seed, "babble", s), duration_s);
        for (size_t i = 0; i < n; ++i) out[i] += talker.samples[i];
      }
      break;
  }
  return Waveform(std::move(out));
}

// y = h * x (causal, direct form), trimmed to the length of x.
inline Waveform convolve_rir(const Waveform& x, const Waveform& rir) {
  std::vector<float> y(x.size(), 0.0f);
  for (size_t i = 0; i < x.size(); ++i) {
    double acc = 0.0;
    const size_t taps = std::min(rir.size(), i + 1);
    for (size_t m = 0; m < taps; ++m) acc += double(rir.samples[m]) * x.samples[i - m];
    y[i] = static_cast<float>(acc);
  }
  return Waveform(std::move(y));
}

struct MixSpec {
  double snr_db = 5.0;
  double speech_level_dbfs = -25.0;
  double duration_s = 10.0;
  uint64_t seed = 0;

  static constexpr double kSnrMin = -5.0, kSnrMax = 20.0;
  static constexpr double kLevelMin = -35.0, kLevelMax = -15.0;

  void validate() const {
    if (!(snr_db >= kSnrMin && snr_db <= kSnrMax))
      throw ConfigError("snr_db " + std::to_string(snr_db) + " outside [-5, 20]");
    if (!(speech_level_dbfs >= kLevelMin && speech_level_dbfs <= kLevelMax))
      throw ConfigError("speech_level_dbfs " + std::to_string(speech_level_dbfs) + " outside [-35, -15]");
    if (!(duration_s > 0.0)) throw ConfigError("duration_s must be > 0");
  }

  static MixSpec draw(uint64_t seed, double duration_s) {
    nn::Rng rng(nn::derive_seed(seed, "mixspec"));
    MixSpec m;
    m.snr_db = rng.uniform(kSnrMin, kSnrMax);
    m.speech_level_dbfs = rng.uniform(kLevelMin, kLevelMax);
    m.duration_s = duration_s;
    m.seed = seed;
    return m;
  }
};

struct PairedExample {
  Waveform clean;  // leveled clean speech
  Waveform noisy;  // clean + noise
  Waveform noise;  // noisy - clean, exactly
  double snr_db = 0.0;
  double level_dbfs = 0.0;
  double clip_rescale = 1.0;  // joint gain applied by clip protection
};

inline double measured_snr_db(const PairedExample& p) {
  return 10.0 * std::log10(power(p.clean.samples) / power(p.noise.samples));
}

// Levels clean speech to `level_dbfs` RMS and adds noise (looped or cropped
// to the clean length) scaled to `snr_db`. If the mixture would exceed 0.99
// in magnitude, speech and noise are rescaled jointly, which keeps the SNR.
inline PairedExample mix_at_snr(const Waveform& clean, const Waveform& noise, double snr_db, double level_dbfs) {
  const double pc = power(clean.samples);
  if (clean.size() == 0 || pc <= 0.0) throw DataError("clean signal has zero power");
  if (noise.size() == 0 || power(noise.samples) <= 0.0) throw DataError("noise signal has zero power");
  const size_t n = clean.size();
  std::vector<double> c(n), v(n);
  const double cg = db_to_amp(level_dbfs) / std::sqrt(pc);
  for (size_t i = 0; i < n; ++i) {
    c[i] = clean.samples[i] * cg;
    v[i] = noise.samples[i % noise.size()];
  }
  double pn = 0.0, pcs = 0.0;
  for (size_t i = 0; i < n; ++i) {
    pn += v[i] * v[i];
    pcs += c[i] * c[i];
  }
  const double ng = std::sqrt(pcs / pn / std::pow(10.0, snr_db / 10.0));
  double peak = 0.0;
  for (size_t i = 0; i < n; ++i) {
    v[i] *= ng;
    peak = std::max(peak, std::abs(c[i] + v[i]));
  }
  PairedExample p;
  p.clip_rescale = peak > 0.99 ? 0.99 / peak : 1.0;
  p.clean.samples.resize(n);
  p.noisy.samples.resize(n);
  p.noise.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    p.clean.samples[i] = static_cast<float>(c[i] * p.clip_rescale);
    p.noisy.samples[i] = static_cast<float>((c[i] + v[i]) * p.clip_rescale);
    p.noise.samples[i] = p.noisy.samples[i] - p.clean.samples[i];
  }
  p.snr_db = measured_snr_db(p);
  p.level_dbfs = 20.0 * std::log10(rms(p.clean.samples));
  return p;
}

}  // namespace gense::data
