// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>
#include <tuple>
#include <vector>

#include "gense/gen/generator.hpp"
#include "gense/gen/train.hpp"

namespace gense::ablate {

using codec::CodeSequence;
using gen::GeneratorConfig;
using gen::LossOut;
using gen::StepLogits;
using nn::Tensor;
using nn::Var;

enum class VariantKind { kAligned, kPrefix, kNar, kMask };

inline const std::vector<VariantKind>& all_variants() {
  static const std::vector<VariantKind> v = {VariantKind::kAligned, VariantKind::kPrefix, VariantKind::kNar,
                                             VariantKind::kMask};
  return v;
}

inline std::string variant_name(VariantKind k) {
  switch (k) {
    case VariantKind::kAligned: return "aligned";
    case VariantKind::kPrefix: return "prefix";
    case VariantKind::kNar: return "nar";
    case VariantKind::kMask: return "mask";
  }
  return "?";
}

inline VariantKind parse_variant(const std::string& s) {
  for (auto k : all_variants())
    if (variant_name(k) == s) return k;
  throw ConfigError("unknown variant '" + s + "' (expected aligned, prefix, nar or mask)");
}

// Conditions on the whole noisy sequence placed in front of the tokens:
// [N_1..N_T, START, C_1..C_T]. The noisy part attends to itself without a
// causal restriction; the token part is causal. Position T+t predicts C_{t+1}
// and position 2T predicts EOS, so logits line up with the aligned model.
template <class T>
class PrefixGenerator {
 public:
  PrefixGenerator(const GeneratorConfig& cfg, const codec::CodecConfig& geometry, uint64_t seed = 0)
      : cfg_(cfg), geom_(geometry), ps_(seed) {
    cfg_.validate();
    geom_.validate();
    extractor_ = gen::NoisyExtractor<T>(ps_, "prefix.extractor", geom_, cfg_.feature_dim, cfg_.extractor_mid);
    embed_ = gen::TokenEmbedding<T>(ps_, "prefix.embed", cfg_.groups, cfg_.classes(), cfg_.group_embed_dim());
    noise_proj_ = nn::Linear<T>(ps_, "prefix.noise_proj", cfg_.feature_dim, cfg_.d_token);
    body_ = nn::TransformerBody<T>(ps_, "prefix.body", cfg_.layers, cfg_.d_token, cfg_.heads, cfg_.ff_dim);
    for (int k = 0; k < cfg_.groups; ++k)
      heads_.emplace_back(ps_, "prefix.head" + std::to_string(k), cfg_.d_token, cfg_.classes(), true);
  }

  const GeneratorConfig& config() const { return cfg_; }
  const codec::CodecConfig& geometry() const { return geom_; }
  nn::ParamStore<T>& params() { return ps_; }
  const nn::ParamStore<T>& params() const { return ps_; }

  Var<T> features(const Var<T>& planes) const { return extractor_(planes); }

  // Hidden states of the whole 2T+1 sequence.
  Var<T> hidden(const Var<T>& feats, const CodeSequence& codes, bool training, nn::Rng& rng) const {
    const int Tn = feats.rows();
    check_codes(codes, Tn);
    const Var<T> x = nn::add(input_rows(feats, codes, Tn), nn::constant(nn::sinusoidal_positions<T>(0, 2 * Tn + 1, cfg_.d_token)));
    return body_(x, nn::AttentionMask::prefix_lm(Tn), T(cfg_.dropout), training, rng);
  }

  StepLogits<T> teacher_forcing(const Var<T>& feats, const CodeSequence& codes, bool training = false,
                                nn::Rng* rng = nullptr) const {
    nn::Rng local;
    const int Tn = feats.rows();
    return project(nn::slice_rows(hidden(feats, codes, training, rng ? *rng : local), Tn, Tn + 1));
  }

  std::vector<std::vector<int>> targets(const CodeSequence& codes) const {
    std::vector<std::vector<int>> tg(cfg_.groups, std::vector<int>(codes.frames() + 1, cfg_.codewords));
    for (int t = 0; t < codes.frames(); ++t)
      for (int k = 0; k < cfg_.groups; ++k) tg[k][t] = codes.at(t, k);
    return tg;
  }

  LossOut<T> train_loss(const Tensor<T>& noisy, const CodeSequence& codes, bool training, nn::Rng& rng) const {
    const auto lg = teacher_forcing(features(nn::constant(noisy)), codes, training, &rng);
    LossOut<T> out;
    out.loss = gen::heads_cross_entropy(lg, targets(codes));
    std::tie(out.correct, out.total) = gen::argmax_matches(lg, codes, 0, cfg_.codewords);
    return out;
  }

  CodeSequence generate(const Tensor<T>& feats, double temperature, uint64_t seed, double* logprob = nullptr,
                        bool use_cache = true) const {
    nn::NoGradGuard ng;
    const int Tn = feats.rows(), K = cfg_.groups;
    if (feats.ndim() != 2 || feats.cols() != cfg_.feature_dim)
      throw DimensionError("prefix generator features must be [T, " + std::to_string(cfg_.feature_dim) + "], got " +
                           shape_str(feats.shape()));
    nn::Rng rng(nn::derive_seed(seed, "gen.sample"));
    const auto mask = nn::AttentionMask::prefix_lm(Tn);
    auto cache = body_.new_cache();
    CodeSequence out(0, K);
    std::vector<int> prev(K, cfg_.start_index());
    double lp = 0;
    Var<T> h;
    if (use_cache) {
      const CodeSequence none(0, K);
      const Var<T> x = nn::add(input_rows(nn::constant(feats), none, Tn),
                               nn::constant(nn::sinusoidal_positions<T>(0, Tn + 1, cfg_.d_token)));
      h = nn::slice_rows(body_.extend(x, cache, mask), Tn, 1);
    }
    for (int t = 0; t < Tn; ++t) {
      if (!use_cache) {
        h = nn::slice_rows(hidden_prefix(nn::constant(feats), out), Tn + t, 1);
      }
      for (int k = 0; k < K; ++k) {
        const Tensor<T> row = heads_[k](h).value();
        prev[k] = gen::sample_index(row.data(), cfg_.codewords, temperature, rng);
        lp += gen::log_softmax_at(row.data(), cfg_.classes(), prev[k]);
      }
      out.push_frame(prev);
      if (use_cache && t + 1 < Tn) {
        const Var<T> x = nn::add(embed_(prev), nn::constant(nn::sinusoidal_positions<T>(Tn + 1 + t, 1, cfg_.d_token)));
        h = body_.extend(x, cache, mask);
      }
    }
    if (logprob) *logprob = lp;
    return out;
  }

  double sequence_logprob(const Tensor<T>& feats, const CodeSequence& codes) const {
    nn::NoGradGuard ng;
    const auto lg = teacher_forcing(nn::constant(feats), codes);
    double lp = 0;
    for (int t = 0; t < codes.frames(); ++t)
      for (int k = 0; k < cfg_.groups; ++k)
        lp += gen::log_softmax_at(lg.heads[k].value().row(t), cfg_.classes(), codes.at(t, k));
    return lp;
  }

  gen::BestOfN best_of_n(const Tensor<T>& feats, int n, double temperature, uint64_t seed) const {
    return gen::select_best(*this, feats, n, temperature, seed);
  }

  void save(nn::Checkpoint& ck) const { ck.add_params(ps_); }
  void load(const nn::Checkpoint& ck) { ck.load_params(ps_); }

 private:
  // Noisy rows, START and the given code frames (unpositioned).
  Var<T> input_rows(const Var<T>& feats, const CodeSequence& codes, int Tn) const {
    std::vector<int> idx(static_cast<size_t>(codes.frames() + 1) * cfg_.groups, cfg_.start_index());
    for (int t = 0; t < codes.frames(); ++t)
      for (int k = 0; k < cfg_.groups; ++k) idx[static_cast<size_t>(t + 1) * cfg_.groups + k] = codes.at(t, k);
    const Var<T> tok = embed_(idx);
    return Tn > 0 ? nn::concat_rows<T>({noise_proj_(feats), tok}) : tok;
  }

  // Full pass over noisy rows, START and a partial code prefix.
  Var<T> hidden_prefix(const Var<T>& feats, const CodeSequence& partial) const {
    const int Tn = feats.rows();
    const int S = Tn + 1 + partial.frames();
    const Var<T> x = nn::add(input_rows(feats, partial, Tn), nn::constant(nn::sinusoidal_positions<T>(0, S, cfg_.d_token)));
    return body_(x, nn::AttentionMask::prefix_lm(Tn));
  }

  StepLogits<T> project(const Var<T>& h) const {
    StepLogits<T> lg;
    for (const auto& head : heads_) lg.heads.push_back(head(h));
    return lg;
  }

  void check_codes(const CodeSequence& codes, int frames) const {
    if (codes.frames() != frames)
      throw DimensionError("prefix generator got " + std::to_string(frames) + " feature frames but " +
                           std::to_string(codes.frames()) + " code frames");
    if (codes.frames() > 0 && codes.groups() != cfg_.groups)
      throw DimensionError("codes have " + std::to_string(codes.groups()) + " groups, model has " +
                           std::to_string(cfg_.groups));
    codes.check_range(cfg_.codewords);
  }

  GeneratorConfig cfg_;
  codec::CodecConfig geom_;
  nn::ParamStore<T> ps_;
  gen::NoisyExtractor<T> extractor_;
  gen::TokenEmbedding<T> embed_;
  nn::Linear<T> noise_proj_;
  nn::TransformerBody<T> body_;
  std::vector<nn::Linear<T>> heads_;
};

// Non-autoregressive predictor: one causal pass over the noisy features,
// V-way logits per group at every frame, no token feedback.
template <class T>
class NarPredictor {
 public:
  NarPredictor(const GeneratorConfig& cfg, const codec::CodecConfig& geometry, uint64_t seed = 0)
      : cfg_(cfg), geom_(geometry), ps_(seed) {
    cfg_.validate();
    geom_.validate();
    extractor_ = gen::NoisyExtractor<T>(ps_, "nar.extractor", geom_, cfg_.feature_dim, cfg_.extractor_mid);
    noise_proj_ = nn::Linear<T>(ps_, "nar.noise_proj", cfg_.feature_dim, cfg_.d_token);
    body_ = nn::TransformerBody<T>(ps_, "nar.body", cfg_.layers, cfg_.d_token, cfg_.heads, cfg_.ff_dim);
    for (int k = 0; k < cfg_.groups; ++k)
      heads_.emplace_back(ps_, "nar.head" + std::to_string(k), cfg_.d_token, cfg_.codewords, true);
  }

  const GeneratorConfig& config() const { return cfg_; }
  const codec::CodecConfig& geometry() const { return geom_; }
  nn::ParamStore<T>& params() { return ps_; }
  const nn::ParamStore<T>& params() const { return ps_; }

  Var<T> features(const Var<T>& planes) const { return extractor_(planes); }

  StepLogits<T> logits(const Var<T>& feats, bool training = false, nn::Rng* rng = nullptr) const {
    StepLogits<T> lg;
    const int Tn = feats.rows();
    if (Tn == 0) {
      for (int k = 0; k < cfg_.groups; ++k) lg.heads.push_back(nn::constant(Tensor<T>({0, cfg_.codewords})));
      return lg;
    }
    nn::Rng local;
    const Var<T> x = nn::add(noise_proj_(feats), nn::constant(nn::sinusoidal_positions<T>(0, Tn, cfg_.d_token)));
    const Var<T> h = body_(x, nn::AttentionMask::causal(), T(cfg_.dropout), training, rng ? *rng : local);
    for (const auto& head : heads_) lg.heads.push_back(head(h));
    return lg;
  }

  LossOut<T> train_loss(const Tensor<T>& noisy, const CodeSequence& codes, bool training, nn::Rng& rng) const {
    const Var<T> feats = features(nn::constant(noisy));
    if (codes.frames() != feats.rows())
      throw DimensionError("NAR predictor got " + std::to_string(feats.rows()) + " feature frames but " +
                           std::to_string(codes.frames()) + " code frames");
    codes.check_range(cfg_.codewords);
    LossOut<T> out;
    if (codes.frames() == 0) {
      out.loss = nn::constant(Tensor<T>::scalar(T(0)));
      return out;
    }
    const auto lg = logits(feats, training, &rng);
    std::vector<std::vector<int>> tg(cfg_.groups, std::vector<int>(codes.frames()));
    for (int t = 0; t < codes.frames(); ++t)
      for (int k = 0; k < cfg_.groups; ++k) tg[k][t] = codes.at(t, k);
    out.loss = gen::heads_cross_entropy(lg, tg);
    std::tie(out.correct, out.total) = gen::argmax_matches(lg, codes, 0, cfg_.codewords);
    return out;
  }

  // Argmax codes from a single pass.
  CodeSequence predict(const Tensor<T>& feats) const {
    nn::NoGradGuard ng;
    const auto lg = logits(nn::constant(feats));
    CodeSequence out(0, cfg_.groups);
    std::vector<int> frame(cfg_.groups);
    nn::Rng unused;
    for (int t = 0; t < feats.rows(); ++t) {
      for (int k = 0; k < cfg_.groups; ++k)
        frame[k] = gen::sample_index(lg.heads[k].value().row(t), cfg_.codewords, 0.0, unused);
      out.push_frame(frame);
    }
    return out;
  }

  void save(nn::Checkpoint& ck) const { ck.add_params(ps_); }
  void load(const nn::Checkpoint& ck) { ck.load_params(ps_); }

 private:
  GeneratorConfig cfg_;
  codec::CodecConfig geom_;
  nn::ParamStore<T> ps_;
  gen::NoisyExtractor<T> extractor_;
  nn::Linear<T> noise_proj_;
  nn::TransformerBody<T> body_;
  std::vector<nn::Linear<T>> heads_;
};

// Noisy and clean compressed planes of one utterance, for the regression
// baseline (no codec involved).
template <class T>
struct SpectralExample {
  Tensor<T> noisy, clean;
};

template <class T>
SpectralExample<T> make_spectral_example(const data::PairedExample& p, const codec::CodecConfig& geom) {
  if (p.clean.size() != p.noisy.size())
    throw DataError("paired waveforms differ in length: clean " + std::to_string(p.clean.size()) + ", noisy " +
                    std::to_string(p.noisy.size()));
  const signal::StftConfig sc{geom.window, geom.hop};
  return {signal::analyze<T>(p.noisy, geom.alpha, sc), signal::analyze<T>(p.clean, geom.alpha, sc)};
}

template <class T>
int example_tokens(const SpectralExample<T>& ex) {
  return (ex.noisy.dim(0) + 3) / 4;
}

template <class T>
SpectralExample<T> crop_example(const SpectralExample<T>& ex, int start, int tokens, int combine) {
  const int frames = ex.noisy.dim(0), F = ex.noisy.dim(1);
  const int f0 = start * combine, f1 = std::min(frames, (start + tokens) * combine);
  SpectralExample<T> out{Tensor<T>({f1 - f0, F, 2}), Tensor<T>({f1 - f0, F, 2})};
  const size_t a = static_cast<size_t>(f0) * F * 2, b = static_cast<size_t>(f1) * F * 2;
  std::copy(ex.noisy.data() + a, ex.noisy.data() + b, out.noisy.data());
  std::copy(ex.clean.data() + a, ex.clean.data() + b, out.clean.data());
  return out;
}

template <class Model, class T>
auto example_loss(const Model& m, const SpectralExample<T>& ex, bool training, nn::Rng& rng) {
  return m.train_loss(ex.noisy, ex.clean, training, rng);
}

// Causal magnitude-mask regression: the extractor's conv/TCM stack, a
// per-frame linear layer and a sigmoid give a [T, F] mask in [0, 1] that
// scales the noisy compressed spectrum (its phase is kept).
template <class T>
class MaskRegressor {
 public:
  MaskRegressor(const GeneratorConfig& cfg, const codec::CodecConfig& geometry, uint64_t seed = 0)
      : cfg_(cfg), geom_(geometry), ps_(seed) {
    cfg_.validate();
    geom_.validate();
    const int width = cfg_.feature_dim / geom_.combine;
    stack_ = codec::CausalFeatureStack<T>(ps_, "mask.stack", geom_, width, cfg_.extractor_mid, false, 0);
    head_ = nn::Linear<T>(ps_, "mask.head", width, geom_.bins());
  }

  const GeneratorConfig& config() const { return cfg_; }
  const codec::CodecConfig& geometry() const { return geom_; }
  nn::ParamStore<T>& params() { return ps_; }
  const nn::ParamStore<T>& params() const { return ps_; }

  Var<T> mask(const Var<T>& planes) const {
    check_planes(planes.value());
    if (planes.value().dim(0) == 0) return nn::constant(Tensor<T>({0, geom_.bins()}));
    return nn::sigmoid(head_(stack_(planes)));
  }

  // Applies a [T, F] mask to both planes.
  static Var<T> apply_mask(const Var<T>& planes, const Var<T>& m) {
    const int Tn = planes.value().dim(0), F = planes.value().dim(1);
    if (m.rows() != Tn || (Tn > 0 && m.cols() != F))
      throw DimensionError("mask " + shape_str(m.value().shape()) + " does not fit planes " +
                           shape_str(planes.value().shape()));
    if (Tn == 0) return planes;
    const Var<T> flat = nn::reshape(planes, {Tn * F, 2});
    const Var<T> mf = nn::reshape(m, {Tn * F, 1});
    const Var<T> re = nn::mul(nn::slice_cols(flat, 0, 1), mf);
    const Var<T> im = nn::mul(nn::slice_cols(flat, 1, 1), mf);
    return nn::reshape(nn::concat_cols<T>({re, im}), {Tn, F, 2});
  }

  Var<T> enhance_planes(const Var<T>& planes) const { return apply_mask(planes, mask(planes)); }

  // Mean squared error between masked and clean compressed magnitudes.
  LossOut<T> train_loss(const Tensor<T>& noisy, const Tensor<T>& clean, bool, nn::Rng&) const {
    if (noisy.shape() != clean.shape())
      throw DimensionError("mask regression: noisy " + shape_str(noisy.shape()) + " vs clean " +
                           shape_str(clean.shape()));
    LossOut<T> out;
    const int Tn = noisy.dim(0), F = noisy.dim(1);
    if (Tn == 0) {
      out.loss = nn::constant(Tensor<T>::scalar(T(0)));
      return out;
    }
    const Var<T> est = nn::reshape(enhance_planes(nn::constant(noisy)), {Tn * F, 2});
    const Var<T> mag = nn::magnitude(nn::slice_cols(est, 0, 1), nn::slice_cols(est, 1, 1), T(1e-8));
    Tensor<T> ref({Tn * F, 1});
    for (int i = 0; i < Tn * F; ++i)
      ref[i] = static_cast<T>(std::hypot(double(clean[2 * static_cast<size_t>(i)]), double(clean[2 * static_cast<size_t>(i) + 1])));
    out.loss = nn::mse(mag, nn::constant(ref));
    return out;
  }

  signal::Waveform enhance(const signal::Waveform& noisy) const {
    nn::NoGradGuard ng;
    const signal::StftConfig sc{geom_.window, geom_.hop};
    const Tensor<T> planes = signal::analyze<T>(noisy, geom_.alpha, sc);
    return signal::synthesize(enhance_planes(nn::constant(planes)).value(), static_cast<long>(noisy.size()),
                              geom_.alpha, sc);
  }

  void save(nn::Checkpoint& ck) const { ck.add_params(ps_); }
  void load(const nn::Checkpoint& ck) { ck.load_params(ps_); }

 private:
  void check_planes(const Tensor<T>& p) const {
    if (p.ndim() != 3 || p.dim(1) != geom_.bins() || p.dim(2) != 2)
      throw DimensionError("mask regression needs [T, " + std::to_string(geom_.bins()) + ", 2] planes, got " +
                           shape_str(p.shape()));
  }

  GeneratorConfig cfg_;
  codec::CodecConfig geom_;
  nn::ParamStore<T> ps_;
  codec::CausalFeatureStack<T> stack_;
  nn::Linear<T> head_;
};

}  // namespace gense::ablate
