// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <numbers>

#include "gense/data/corpus.hpp"
#include "gense/signal/stft.hpp"

namespace gense::data {
namespace {

// Band power density from a long averaged periodogram (Welch, 4096-point
// Hann segments, 50% overlap). Returns power per Hz for [lo, hi).
class Welch {
 public:
  explicit Welch(const std::vector<float>& x) : psd_(kN / 2 + 1, 0.0) {
    signal::Fft fft(kN);
    std::vector<std::complex<double>> buf(kN), out(kN);
    int segs = 0;
    for (size_t s = 0; s + kN <= x.size(); s += kN / 2, ++segs) {
      for (int i = 0; i < kN; ++i) buf[i] = x[s + i] * (0.5 - 0.5 * std::cos(2 * std::numbers::pi * i / kN));
      fft.forward(buf.data(), out.data());
      for (int k = 0; k <= kN / 2; ++k) psd_[k] += std::norm(out[k]);
    }
    for (auto& v : psd_) v /= segs;
  }
  double band(double lo, double hi) const {
    const double df = double(signal::kSampleRate) / kN;
    double acc = 0;
    int cnt = 0;
    for (int k = 0; k <= kN / 2; ++k)
      if (k * df >= lo && k * df < hi) acc += psd_[k], ++cnt;
    return acc / cnt;
  }

 private:
  static constexpr int kN = 4096;
  std::vector<double> psd_;
};

double db(double p) { return 10 * std::log10(p); }

TEST(ToySpeech, DeterministicAndSized) {
  const auto a = gen_toy_speech(7, 10.0);
  const auto b = gen_toy_speech(7, 10.0);
  EXPECT_EQ(a.size(), 160000u);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_NE(a.samples, gen_toy_speech(8, 10.0).samples);
  EXPECT_NEAR(20 * std::log10(rms(a.samples)), -25.0, 1e-3);
}

TEST(ToySpeech, ConstantF0PeakOracle) {
  for (double f0 : {100.0, 157.0, 240.0}) {
    ToySpeechOptions opt;
    opt.constant_f0 = f0;
    const auto w = gen_toy_speech(3, 4.0, opt);
    // Peak of the averaged spectrum below 1.5*F0 must sit at F0.
    const Welch p(w.samples);
    double best = -1, arg = 0;
    for (double f = 40; f < 1.5 * f0; f += 1.0) {
      const double v = p.band(f, f + 4.0);
      if (v > best) best = v, arg = f + 2.0;
    }
    EXPECT_NEAR(arg, f0, 6.0) << f0;
  }
}

TEST(ToySpeech, HasPausesAndSyllables) {
  const auto w = gen_toy_speech(11, 10.0);
  // 10 ms frame energies: strong modulation (pauses) must be present.
  std::vector<double> e;
  for (size_t s = 0; s + 160 <= w.size(); s += 160) {
    double acc = 0;
    for (size_t i = s; i < s + 160; ++i) acc += double(w.samples[i]) * w.samples[i];
    e.push_back(acc);
  }
  const double mx = *std::max_element(e.begin(), e.end());
  const auto quiet = std::count_if(e.begin(), e.end(), [&](double v) { return v < mx * 1e-3; });
  EXPECT_GT(quiet, 5);
  EXPECT_LT(quiet, static_cast<long>(e.size() / 2));
}

TEST(Noise, WhiteIsFlatAcrossBands) {
  const auto w = gen_noise(NoiseKind::kWhite, 1, 20.0);
  const Welch p(w.samples);
  std::vector<double> bands;
  for (double lo = 100; lo < 7000; lo += 500) bands.push_back(db(p.band(lo, std::min(lo + 500, 7000.0))));
  const double mean = std::accumulate(bands.begin(), bands.end(), 0.0) / bands.size();
  for (double b : bands) EXPECT_NEAR(b, mean, 3.0);
}

TEST(Noise, PinkSlopeMinusThreeDbPerOctave) {
  const auto w = gen_noise(NoiseKind::kPink, 2, 30.0);
  const Welch p(w.samples);
  // Least-squares slope of band density vs log2(frequency) over octave bands.
  std::vector<double> xs, ys;
  for (double lo = 100; lo * 2 <= 6400; lo *= 2) {
    xs.push_back(std::log2(lo * std::sqrt(2.0)));
    ys.push_back(db(p.band(lo, 2 * lo)));
  }
  const double n = xs.size();
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0, sxx = 0;
  for (size_t i = 0; i < xs.size(); ++i) sxy += (xs[i] - mx) * (ys[i] - my), sxx += (xs[i] - mx) * (xs[i] - mx);
  EXPECT_NEAR(sxy / sxx, -3.0, 0.5);
}

TEST(Noise, SeedDeterminism) {
  for (auto k : {NoiseKind::kWhite, NoiseKind::kPink, NoiseKind::kBabble}) {
    EXPECT_EQ(gen_noise(k, 5, 1.0).samples, gen_noise(k, 5, 1.0).samples);
    EXPECT_NE(gen_noise(k, 5, 1.0).samples, gen_noise(k, 6, 1.0).samples);
  }
  EXPECT_EQ(parse_noise_kind("pink"), NoiseKind::kPink);
  EXPECT_THROW(parse_noise_kind("brown"), ConfigError);
}

TEST(Mix, EqualPowerAtZeroDbKeepsNoiseScale) {
  // Both inputs already have the target RMS, so neither is rescaled.
  std::vector<float> c(1000), n(1000);
  for (int i = 0; i < 1000; ++i) {
    c[i] = (i % 2 ? 0.1f : -0.1f);
    n[i] = (i % 4 < 2 ? 0.1f : -0.1f);
  }
  const auto p = mix_at_snr(Waveform(c), Waveform(n), 0.0, -20.0);
  EXPECT_EQ(p.clip_rescale, 1.0);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_NEAR(p.clean.samples[i], c[i], 1e-7);
    EXPECT_NEAR(p.noise.samples[i], n[i], 1e-7);
  }
}

TEST(Mix, HighSnrLimitApproachesClean) {
  const auto c = gen_toy_speech(1, 1.0);
  const auto n = gen_noise(NoiseKind::kWhite, 1, 1.0);
  const auto p = mix_at_snr(c, n, 100.0, -25.0);
  double worst = 0;
  for (size_t i = 0; i < c.size(); ++i) worst = std::max(worst, double(std::abs(p.noisy.samples[i] - p.clean.samples[i])));
  EXPECT_LT(worst, 1e-4);
}

TEST(Mix, RemeasuredSnrOracle) {
  nn::Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = gen_toy_speech(100 + trial, 1.0);
    const auto n = gen_noise(trial % 2 ? NoiseKind::kPink : NoiseKind::kWhite, trial, 0.7);
    const double snr = rng.uniform(-5, 20), level = rng.uniform(-35, -15);
    const auto p = mix_at_snr(c, n, snr, level);
    ASSERT_EQ(p.noisy.size(), c.size());
    ASSERT_EQ(p.clean.size(), c.size());
    // Independent re-measurement in double from the returned pair.
    double pc = 0, pn = 0;
    for (size_t i = 0; i < c.size(); ++i) {
      const double d = double(p.noisy.samples[i]) - p.clean.samples[i];
      pc += double(p.clean.samples[i]) * p.clean.samples[i];
      pn += d * d;
    }
    EXPECT_NEAR(10 * std::log10(pc / pn), snr, 0.01);
    if (p.clip_rescale == 1.0) {
      EXPECT_NEAR(p.level_dbfs, level, 1e-3);
    }
    for (float v : p.noisy.samples) EXPECT_LE(std::abs(v), 0.99f + 1e-6f);
    for (size_t i = 0; i < c.size(); ++i) EXPECT_EQ(p.noisy.samples[i] - p.clean.samples[i], p.noise.samples[i]);
  }
}

TEST(Mix, ClipProtectionPreservesSnr) {
  const auto c = gen_toy_speech(4, 1.0);
  const auto n = gen_noise(NoiseKind::kWhite, 4, 1.0);
  const auto p = mix_at_snr(c, n, -5.0, -15.0);
  EXPECT_LT(p.clip_rescale, 1.0);
  EXPECT_NEAR(measured_snr_db(p), -5.0, 0.01);
  EXPECT_LT(p.level_dbfs, -15.0);
}

TEST(Mix, ZeroPowerIsDataError) {
  const Waveform z(std::vector<float>(100, 0.f));
  const Waveform o(std::vector<float>(100, 0.1f));
  EXPECT_THROW(mix_at_snr(z, o, 0, -20), DataError);
  EXPECT_THROW(mix_at_snr(o, z, 0, -20), DataError);
}

TEST(MixSpec, RangesEnforced) {
  MixSpec m;
  EXPECT_NO_THROW(m.validate());
  m.snr_db = 21;
  EXPECT_THROW(m.validate(), ConfigError);
  m = MixSpec{};
  m.speech_level_dbfs = -40;
  EXPECT_THROW(m.validate(), ConfigError);
  m = MixSpec{};
  m.duration_s = 0;
  EXPECT_THROW(m.validate(), ConfigError);
  for (uint64_t s = 0; s < 50; ++s) EXPECT_NO_THROW(MixSpec::draw(s, 10).validate());
}

TEST(Rir, DeltaShiftAndEnergyBound) {
  nn::Rng rng(2);
  std::vector<float> x(500);
  for (auto& v : x) v = static_cast<float>(rng.normal());
  const Waveform w(x);
  EXPECT_EQ(convolve_rir(w, Waveform(std::vector<float>{1.f})).samples, x);
  const auto shifted = convolve_rir(w, Waveform(std::vector<float>{0.f, 0.f, 0.f, 1.f}));
  for (size_t i = 0; i < x.size(); ++i) EXPECT_EQ(shifted.samples[i], i < 3 ? 0.f : x[i - 3]);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<float> h(1 + rng.below(64));
    double l1 = 0;
    for (auto& v : h) v = static_cast<float>(rng.normal() * std::exp(-0.05 * (&v - h.data()))), l1 += std::abs(v);
    const auto y = convolve_rir(w, Waveform(h));
    EXPECT_LE(rms(y.samples), l1 * rms(x) * (1 + 1e-6));
  }
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

TEST(Corpus, ReproducibleManifestAndWavs) {
  const auto root = fs::temp_directory_path() / "gense_corpus_test";
  fs::remove_all(root);
  CorpusOptions opt;
  opt.duration_s = 0.5;
  const auto a = build_corpus(6, 42, root / "a", opt);
  const auto b = build_corpus(6, 42, root / "b", opt);
  EXPECT_EQ(slurp(root / "a" / "manifest.tsv"), slurp(root / "b" / "manifest.tsv"));
  ASSERT_EQ(a.size(), 6u);
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(slurp(root / "a" / a[i].noisy_path), slurp(root / "b" / b[i].noisy_path));
    EXPECT_EQ(slurp(root / "a" / a[i].clean_path), slurp(root / "b" / b[i].clean_path));
    EXPECT_GE(a[i].snr_db, -5.0 - 0.01);
    EXPECT_LE(a[i].snr_db, 20.0 + 0.01);
  }
  const auto rows = read_manifest(root / "a" / "manifest.tsv");
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[3].seed, example_seed(42, 3));
  const auto loaded = load_corpus(root / "a" / "manifest.tsv");
  EXPECT_EQ(loaded.size(), 6u);
  EXPECT_EQ(loaded[0].clean.size(), 8000u);

  // Examples are independent of generation order.
  const auto ex = make_example(42, 4, opt);
  EXPECT_EQ(ex.snr_db, a[4].snr_db);

  std::ofstream(root / "bad.tsv") << "only\tthree\tfields\n";
  EXPECT_THROW(read_manifest(root / "bad.tsv"), DataError);
  fs::remove_all(root);
}

TEST(Corpus, WavDirectoryIngestion) {
  const auto dir = fs::temp_directory_path() / "gense_speech_dir";
  fs::remove_all(dir);
  fs::create_directories(dir);
  signal::save_wav(dir / "b.wav", gen_toy_speech(1, 0.3));
  signal::save_wav(dir / "a.wav", gen_toy_speech(2, 0.2));
  const SpeechSource src(dir);
  EXPECT_EQ(src.size(), 2u);
  CorpusOptions opt;
  opt.duration_s = 0.5;
  opt.speech = &src;
  const auto ex = make_example(1, 0, opt);
  EXPECT_EQ(ex.clean.size(), 8000u);
  EXPECT_THROW(SpeechSource(dir / "missing"), DataError);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace gense::data
