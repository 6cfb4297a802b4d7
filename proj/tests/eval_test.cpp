// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>

#include "gense/codec/codec.hpp"
#include "gense/eval/harness.hpp"
#include "gense/eval/metrics.hpp"
#include "gense/eval/report.hpp"

namespace gense::eval {
namespace {

using signal::Waveform;

Waveform random_wave(uint64_t seed, size_t n, double scale = 0.1) {
  nn::Rng rng(seed);
  std::vector<float> s(n);
  for (auto& v : s) v = static_cast<float>(scale * rng.normal());
  return Waveform(std::move(s));
}

TEST(SiSnr, CapAndScaleInvariance) {
  const auto ref = random_wave(1, 4000);
  EXPECT_EQ(si_snr(ref, ref), kSiSnrCapDb);
  Waveform twice = ref;
  for (auto& v : twice.samples) v *= 2;
  EXPECT_EQ(si_snr(twice, ref), kSiSnrCapDb);
  const auto est = random_wave(2, 4000);
  Waveform scaled = est;
  for (auto& v : scaled.samples) v *= 3.5f;
  EXPECT_NEAR(si_snr(scaled, ref), si_snr(est, ref), 1e-4);
}

TEST(SiSnr, OrthogonalEqualPowerNoiseIsZeroDb) {
  // Build zero-mean ref and noise, orthogonalize in double, match powers.
  const size_t n = 8000;
  nn::Rng rng(5);
  std::vector<double> r(n), e(n);
  for (size_t i = 0; i < n; ++i) r[i] = std::sin(0.01 * i) + 0.3 * rng.normal(), e[i] = rng.normal();
  auto center = [](std::vector<double>& v) {
    double m = 0;
    for (double x : v) m += x;
    for (double& x : v) x -= m / v.size();
  };
  center(r);
  center(e);
  double re = 0, rr = 0, ee = 0;
  for (size_t i = 0; i < n; ++i) re += r[i] * e[i], rr += r[i] * r[i];
  for (size_t i = 0; i < n; ++i) e[i] -= re / rr * r[i];
  for (size_t i = 0; i < n; ++i) ee += e[i] * e[i];
  std::vector<float> ref(n), est(n);
  for (size_t i = 0; i < n; ++i) {
    ref[i] = static_cast<float>(0.1 * r[i]);
    est[i] = static_cast<float>(0.1 * (r[i] + std::sqrt(rr / ee) * e[i]));
  }
  EXPECT_NEAR(si_snr(Waveform(est), Waveform(ref)), 0.0, 1e-3);
}

TEST(SiSnr, SilentReferenceIsNan) {
  EXPECT_TRUE(std::isnan(si_snr(random_wave(1, 100), Waveform(std::vector<float>(100, 0.25f)))));
  EXPECT_THROW(si_snr(random_wave(1, 100), random_wave(1, 99)), DimensionError);
}

TEST(Lsd, IdentityOffsetAndSymmetry) {
  const auto a = random_wave(3, 16000);
  const auto b = random_wave(4, 16000);
  EXPECT_EQ(lsd(a, a), 0.0);
  EXPECT_NEAR(lsd(a, b), lsd(b, a), 1e-9);
  Waveform twice = a;
  for (auto& v : twice.samples) v *= 2;
  EXPECT_NEAR(lsd(twice, a), 20 * std::log10(2.0), 1e-3);
}

// Brute-force recomputation with a direct DFT of each windowed frame.
TEST(Lsd, MatchesDirectDftRecomputation) {
  const auto a = random_wave(6, 1600);
  const auto b = random_wave(7, 1600);
  const int win = 320, hop = 80, bins = win / 2 + 1;
  const int frames = static_cast<int>(a.size()) / hop;
  std::vector<double> w(win);
  for (int i = 0; i < win; ++i) w[i] = std::sqrt(0.5 - 0.5 * std::cos(2 * std::numbers::pi * i / win));
  auto frame_mag = [&](const Waveform& x, int t, int f) {
    std::complex<double> acc = 0;
    for (int i = 0; i < win; ++i) {
      const long s = static_cast<long>(t) * hop - (win - hop) + i;
      const double v = (s >= 0 && s < static_cast<long>(x.size())) ? x.samples[s] : 0.0;
      acc += v * w[i] * std::polar(1.0, -2 * std::numbers::pi * f * i / win);
    }
    return std::abs(acc);
  };
  double total = 0;
  for (int t = 0; t < frames; ++t) {
    double acc = 0;
    for (int f = 0; f < bins; ++f) {
      const double d = 20 * std::log10(frame_mag(a, t, f) + 1e-8) - 20 * std::log10(frame_mag(b, t, f) + 1e-8);
      acc += d * d;
    }
    total += std::sqrt(acc / bins);
  }
  EXPECT_NEAR(lsd(a, b), total / frames, 1e-3);
}

TEST(TokenAccuracy, IdentityDisjointAndHalf) {
  codec::CodeSequence a(4, 2), b(4, 2);
  for (int t = 0; t < 4; ++t)
    for (int k = 0; k < 2; ++k) a.at(t, k) = t + k, b.at(t, k) = t + k + 1;
  EXPECT_EQ(token_accuracy(a, a), 1.0);
  EXPECT_EQ(token_accuracy(a, b), 0.0);
  auto h = a;
  for (int t = 0; t < 2; ++t)
    for (int k = 0; k < 2; ++k) h.at(t, k) = b.at(t, k);
  EXPECT_EQ(token_accuracy(h, a), 0.5);
  EXPECT_THROW(token_accuracy(a, codec::CodeSequence(3, 2)), DimensionError);
}

TEST(MetricReport, RoundTripAndRecomputableAggregates) {
  MetricReport r;
  r.variant = "aligned";
  r.seed = 9;
  nn::Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    UtteranceMetrics u;
    u.id = "utt" + std::to_string(i);
    u.si_snr_db = rng.uniform(-5, 20);
    u.lsd_db = rng.uniform(0, 10);
    u.token_accuracy = i == 3 ? std::nan("") : rng.uniform();
    u.chosen = i % 3;
    u.candidate_scores = {rng.normal(), rng.normal(), rng.normal()};
    r.rows.push_back(u);
  }
  r.rows[5].candidate_scores.clear();
  const auto path = std::filesystem::temp_directory_path() / "gense_report_test.tsv";
  r.write(path.string());
  const auto back = MetricReport::read(path.string());
  std::filesystem::remove(path);
  ASSERT_EQ(back.rows.size(), 20u);
  EXPECT_EQ(back.variant, "aligned");
  EXPECT_EQ(back.seed, 9u);
  EXPECT_EQ(back.to_text(), r.to_text());
  double s = 0;
  for (const auto& u : back.rows) s += u.si_snr_db;
  EXPECT_DOUBLE_EQ(back.aggregate().si_snr_db, s / 20);
  double t = 0;
  for (int i = 0; i < 20; ++i)
    if (i != 3) t += back.rows[i].token_accuracy;
  EXPECT_DOUBLE_EQ(back.aggregate().token_accuracy, t / 19);
  EXPECT_THROW(MetricReport::parse("bad header\n"), FormatError);
}

TEST(CausalityProbe, CodecEncoderPassesAndLookaheadFails) {
  codec::CodecConfig c;
  c.channels = {4, 4, 4, 4};
  c.tcm_mid = 16;
  codec::Codec<float> cd(c, 3);
  System<float> enc = [&](const nn::Tensor<float>& x) {
    nn::NoGradGuard ng;
    return cd.encode(nn::constant(x)).value();
  };
  nn::Rng rng(4);
  nn::Tensor<float> planes({64, c.bins(), 2});
  for (auto& v : planes.vec()) v = static_cast<float>(0.3 * rng.normal());
  const auto safe = rows_at_rate(c.combine);
  for (int i = 0; i < 20; ++i) {
    const int t0 = static_cast<int>(rng.below(64));
    const auto r = causality_probe(enc, planes, t0, safe, 1);
    EXPECT_TRUE(r.pass) << "t0 " << t0 << " row " << r.first_mismatch;
    EXPECT_EQ(r.checked_rows, (t0 + 1) / 4);
  }
  const auto mutant = with_lookahead(enc);
  int failures = 0;
  for (int t0 : {11, 23, 39})  // last frame of a token, so the leak lands in a checked row
    failures += !causality_probe(mutant, planes, t0, safe, 1).pass;
  EXPECT_EQ(failures, 3);
  const auto token_mutant = with_lookahead(enc, c.combine);
  for (int t0 = 3; t0 < 63; t0 += 5)  // t0 = 63 perturbs nothing EXPECT_FALSE(causality_probe(token_mutant, planes, t0, safe, 1).pass) << t0;
  EXPECT_THROW(causality_probe(enc, planes, 64, safe, 1), IndexError);
}

TEST(Latency, DefaultGeometryAndCombineEight) {
  codec::CodecConfig c;
  const auto r = latency_report(c);
  EXPECT_DOUBLE_EQ(r.hop_ms, 5.0);
  EXPECT_DOUBLE_EQ(r.token_ms, 20.0);
  EXPECT_DOUBLE_EQ(r.overlap_ms, 15.0);
  EXPECT_DOUBLE_EQ(r.total_ms, 35.0);
  c.combine = 8;
  const auto r8 = latency_report(c);
  EXPECT_DOUBLE_EQ(r8.token_ms, 40.0);
  EXPECT_DOUBLE_EQ(r8.total_ms, 55.0);
  EXPECT_NE(r.to_text().find("35 ms"), std::string::npos);
}

}  // namespace
}  // namespace gense::eval
