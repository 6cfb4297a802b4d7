// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <tuple>
#include <vector>

#include "gense/codec/codec.hpp"
#include "gense/gen/config.hpp"
#include "gense/nn/transformer.hpp"

namespace gense::gen {

using codec::CodeSequence;
using nn::Tensor;
using nn::Var;

// Causal noisy-feature extractor: the codec encoder's conv/TCM front half
// (fresh weights, no GRU) followed by 4-frame concatenation, so feature tau
// sees spectral frames <= 4*tau + 3.
template <class T>
class NoisyExtractor {
 public:
  NoisyExtractor() = default;
  NoisyExtractor(nn::ParamStore<T>& ps, const std::string& name, const codec::CodecConfig& geometry, int feature_dim,
                 int mid)
      : geom_(geometry),
        dim_(feature_dim),
        stack_(ps, name, geometry, feature_dim / geometry.combine, mid, false, 0) {}

  int dim() const { return dim_; }

  Var<T> operator()(const Var<T>& planes) const {
    const auto& p = planes.value();
    if (p.ndim() != 3 || p.dim(1) != geom_.bins() || p.dim(2) != 2)
      throw DimensionError("noisy features need [T, " + std::to_string(geom_.bins()) + ", 2] planes, got " +
                           shape_str(p.shape()));
    if (p.dim(0) == 0) return nn::constant(Tensor<T>({0, dim_}));
    return codec::combine_frames(stack_(planes), geom_.combine);
  }

 private:
  codec::CodecConfig geom_;
  int dim_ = 0;
  codec::CausalFeatureStack<T> stack_;
};

// K per-group embedding tables of V+1 rows (row V is START), concatenated.
template <class T>
class TokenEmbedding {
 public:
  TokenEmbedding() = default;
  TokenEmbedding(nn::ParamStore<T>& ps, const std::string& name, int groups, int rows, int dim) {
    for (int k = 0; k < groups; ++k)
      tables_.push_back(ps.add(name + ".g" + std::to_string(k), {rows, dim}, nn::Init::normal(1.0)));
  }

  int groups() const { return static_cast<int>(tables_.size()); }
  const Var<T>& table(int k) const { return tables_[k]; }

  // idx holds S rows of K indices, row-major.
  Var<T> operator()(const std::vector<int>& idx) const {
    const int K = groups();
    const int S = static_cast<int>(idx.size()) / K;
    std::vector<Var<T>> parts;
    for (int k = 0; k < K; ++k) {
      std::vector<int> col(S);
      for (int s = 0; s < S; ++s) col[s] = idx[static_cast<size_t>(s) * K + k];
      parts.push_back(nn::gather_rows(tables_[k], col));
    }
    return nn::concat_cols(parts);
  }

 private:
  std::vector<Var<T>> tables_;
};

// Log-probability of `target` under softmax(row), accumulated in double.
template <class T>
double log_softmax_at(const T* row, int n, int target) {
  double mx = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < n; ++j) mx = std::max(mx, double(row[j]));
  double s = 0;
  for (int j = 0; j < n; ++j) s += std::exp(double(row[j]) - mx);
  return double(row[target]) - mx - std::log(s);
}

// Draws from softmax(row[0..n) / temperature); temperature 0 is argmax with
// ties to the lowest index.
template <class T>
int sample_index(const T* row, int n, double temperature, nn::Rng& rng) {
  int arg = 0;
  for (int j = 1; j < n; ++j)
    if (row[j] > row[arg]) arg = j;
  if (temperature <= 0) return arg;
  const double mx = row[arg];
  std::vector<double> p(n);
  double tot = 0;
  for (int j = 0; j < n; ++j) tot += p[j] = std::exp((double(row[j]) - mx) / temperature);
  double u = rng.uniform() * tot;
  for (int j = 0; j < n; ++j) {
    u -= p[j];
    if (u < 0) return j;
  }
  return arg;
}

// Per-head logits, each [positions, classes].
template <class T>
struct StepLogits {
  std::vector<Var<T>> heads;
  int positions() const { return heads.empty() ? 0 : heads.front().rows(); }
};

// Summed cross-entropy over heads, averaged over positions; targets[k][t]
// of -1 skips a position.
template <class T>
Var<T> heads_cross_entropy(const StepLogits<T>& lg, const std::vector<std::vector<int>>& targets) {
  std::vector<Var<T>> per_head;
  for (size_t k = 0; k < lg.heads.size(); ++k) per_head.push_back(nn::softmax_cross_entropy(lg.heads[k], targets[k]));
  int counted = 0;
  for (int t = 0; t < lg.positions(); ++t) counted += targets[0][t] >= 0;
  return nn::scale(nn::add_scalars(per_head), T(1) / T(std::max(counted, 1)));
}

// Argmax matches over the first `frames` positions of each head, restricted
// to the first `classes` logits.
template <class T>
std::pair<long, long> argmax_matches(const StepLogits<T>& lg, const CodeSequence& codes, int offset, int classes) {
  long hit = 0, total = 0;
  for (int t = 0; t < codes.frames(); ++t)
    for (size_t k = 0; k < lg.heads.size(); ++k) {
      const T* row = lg.heads[k].value().row(t + offset);
      int arg = 0;
      for (int j = 1; j < classes; ++j)
        if (row[j] > row[arg]) arg = j;
      hit += arg == codes.at(t, static_cast<int>(k));
      ++total;
    }
  return {hit, total};
}

template <class T>
struct LossOut {
  Var<T> loss;
  long correct = 0;  // teacher-forced argmax hits
  long total = 0;
};

struct BestOfN {
  CodeSequence codes;
  std::vector<double> scores;  // mean per-frame log-probability per candidate
  int chosen = 0;
};

// n seeded candidates from model.generate (the first uses `seed` itself),
// ranked by mean per-frame log-probability under teacher-forced re-scoring.
template <class Model, class T>
BestOfN select_best(const Model& model, const Tensor<T>& feats, int n, double temperature, uint64_t seed) {
  if (n <= 0) throw ConfigError("num_inferences must be positive, got " + std::to_string(n));
  BestOfN r;
  const double frames = std::max(feats.rows(), 1);
  for (int i = 0; i < n; ++i) {
    const uint64_t s = i == 0 ? seed : nn::derive_seed(seed, "candidate", static_cast<uint64_t>(i));
    CodeSequence c = model.generate(feats, temperature, s);
    const double score = model.sequence_logprob(feats, c) / frames;
    r.scores.push_back(score);
    if (i == 0 || score > r.scores[r.chosen]) {
      r.chosen = i;
      r.codes = std::move(c);
    }
  }
  return r;
}

// Decoder-only generator over explicitly aligned pairs. Position t (0-based)
// holds (C_t, N_{t+1}) with C_0 = START and a learned NULL feature after the
// last frame; it predicts C_{t+1}, and position T predicts EOS.
template <class T>
class Generator {
 public:
  Generator(const GeneratorConfig& cfg, const codec::CodecConfig& geometry, uint64_t seed = 0)
      : cfg_(cfg), geom_(geometry), ps_(seed) {
    cfg_.validate();
    geom_.validate();
    if (cfg_.feature_dim % geom_.combine != 0)
      throw ConfigError("generator.feature_dim must be divisible by codec.combine");
    extractor_ = NoisyExtractor<T>(ps_, "gen.extractor", geom_, cfg_.feature_dim, cfg_.extractor_mid);
    embed_ = TokenEmbedding<T>(ps_, "gen.embed", cfg_.groups, cfg_.classes(), cfg_.group_embed_dim());
    noise_proj_ = nn::Linear<T>(ps_, "gen.noise_proj", cfg_.feature_dim, cfg_.d_token);
    null_ = ps_.add("gen.null", {1, cfg_.d_token}, nn::Init::normal(0.02));
    merge_ = nn::Linear<T>(ps_, "gen.merge", 2 * cfg_.d_token, cfg_.d_token);
    body_ = nn::TransformerBody<T>(ps_, "gen.body", cfg_.layers, cfg_.d_token, cfg_.heads, cfg_.ff_dim);
    for (int k = 0; k < cfg_.groups; ++k)
      heads_.emplace_back(ps_, "gen.head" + std::to_string(k), cfg_.d_token, cfg_.classes(), true);
  }

  const GeneratorConfig& config() const { return cfg_; }
  const codec::CodecConfig& geometry() const { return geom_; }
  nn::ParamStore<T>& params() { return ps_; }
  const nn::ParamStore<T>& params() const { return ps_; }
  const TokenEmbedding<T>& embedding() const { return embed_; }

  Var<T> features(const Var<T>& planes) const { return extractor_(planes); }

  // Embedded rows for positions start..start+S-1. `idx` holds S rows of K
  // token indices; `noisy` holds S rows, or S-1 when the last row is NULL.
  Var<T> embed_rows(const std::vector<int>& idx, const Var<T>& noisy, int start, bool null_last) const {
    const int S = static_cast<int>(idx.size()) / cfg_.groups;
    Var<T> side = noisy.rows() > 0 ? noise_proj_(noisy) : Var<T>();
    if (null_last) side = side.defined() ? nn::concat_rows<T>({side, null_}) : null_;
    if (!side.defined() || side.rows() != S)
      throw DimensionError("generator step rows: " + std::to_string(S) + " token rows vs " +
                           std::to_string(side.defined() ? side.rows() : 0) + " feature rows");
    const Var<T> x = merge_(nn::concat_cols<T>({embed_(idx), side}));
    return nn::add(x, nn::constant(nn::sinusoidal_positions<T>(start, S, cfg_.d_token)));
  }

  // Logits at all T+1 positions given features [T, D] and clean codes C_1..C_T.
  StepLogits<T> teacher_forcing(const Var<T>& feats, const CodeSequence& codes, bool training = false,
                                nn::Rng* rng = nullptr) const {
    const int Tn = feats.rows();
    check_codes(codes, Tn);
    std::vector<int> idx(static_cast<size_t>(Tn + 1) * cfg_.groups, cfg_.start_index());
    for (int t = 0; t < Tn; ++t)
      for (int k = 0; k < cfg_.groups; ++k) idx[static_cast<size_t>(t + 1) * cfg_.groups + k] = codes.at(t, k);
    const Var<T> x = embed_rows(idx, feats, 0, true);
    nn::Rng local;
    const Var<T> h = body_(x, nn::AttentionMask::causal(), T(cfg_.dropout), training, rng ? *rng : local);
    return project(h);
  }

  // Targets per head: C_t at positions 0..T-1, EOS at position T.
  std::vector<std::vector<int>> targets(const CodeSequence& codes) const {
    std::vector<std::vector<int>> tg(cfg_.groups, std::vector<int>(codes.frames() + 1, cfg_.codewords));
    for (int t = 0; t < codes.frames(); ++t)
      for (int k = 0; k < cfg_.groups; ++k) tg[k][t] = codes.at(t, k);
    return tg;
  }

  // Training objective on one utterance: noisy planes + clean codes.
  LossOut<T> train_loss(const Tensor<T>& noisy, const CodeSequence& codes, bool training, nn::Rng& rng) const {
    const auto lg = teacher_forcing(features(nn::constant(noisy)), codes, training, &rng);
    LossOut<T> out;
    out.loss = heads_cross_entropy(lg, targets(codes));
    std::tie(out.correct, out.total) = argmax_matches(lg, codes, 0, cfg_.codewords);
    return out;
  }

  // Samples T frames autoregressively; EOS is never emitted. With use_cache
  // false every step re-runs the full prefix (reference path). `logprob`
  // receives the summed log-probability of the chosen codes under the
  // untempered model.
  CodeSequence generate(const Tensor<T>& feats, double temperature, uint64_t seed, double* logprob = nullptr,
                        bool use_cache = true) const {
    nn::NoGradGuard ng;
    const int Tn = feats.rows(), K = cfg_.groups;
    if (feats.ndim() != 2 || feats.cols() != cfg_.feature_dim)
      throw DimensionError("generator features must be [T, " + std::to_string(cfg_.feature_dim) + "], got " +
                           shape_str(feats.shape()));
    nn::Rng rng(nn::derive_seed(seed, "gen.sample"));
    CodeSequence out(0, K);
    auto cache = body_.new_cache();
    std::vector<int> prev(K, cfg_.start_index());
    std::vector<int> all_idx;
    double lp = 0;
    for (int t = 0; t < Tn; ++t) {
      Var<T> h;
      if (use_cache) {
        const Var<T> x = embed_rows(prev, nn::constant(slice_row(feats, t)), t, false);
        h = body_.extend(x, cache, nn::AttentionMask::causal());
      } else {
        all_idx.insert(all_idx.end(), prev.begin(), prev.end());
        Tensor<T> head_rows({t + 1, cfg_.feature_dim});
        std::copy(feats.data(), feats.data() + static_cast<size_t>(t + 1) * cfg_.feature_dim, head_rows.data());
        const Var<T> full = body_(embed_rows(all_idx, nn::constant(head_rows), 0, false), nn::AttentionMask::causal());
        h = nn::slice_rows(full, t, 1);
      }
      for (int k = 0; k < K; ++k) {
        const Tensor<T> row = heads_[k](h).value();
        prev[k] = sample_index(row.data(), cfg_.codewords, temperature, rng);
        lp += log_softmax_at(row.data(), cfg_.classes(), prev[k]);
      }
      out.push_frame(prev);
    }
    if (logprob) *logprob = lp;
    return out;
  }

  // Teacher-forced log-probability of `codes`, summed over frames and heads
  // in the same order generate() accumulates it.
  double sequence_logprob(const Tensor<T>& feats, const CodeSequence& codes) const {
    nn::NoGradGuard ng;
    const auto lg = teacher_forcing(nn::constant(feats), codes);
    double lp = 0;
    for (int t = 0; t < codes.frames(); ++t)
      for (int k = 0; k < cfg_.groups; ++k)
        lp += log_softmax_at(lg.heads[k].value().row(t), cfg_.classes(), codes.at(t, k));
    return lp;
  }

  BestOfN best_of_n(const Tensor<T>& feats, int n, double temperature, uint64_t seed) const {
    return select_best(*this, feats, n, temperature, seed);
  }

  void save(nn::Checkpoint& ck) const { ck.add_params(ps_); }
  void load(const nn::Checkpoint& ck) { ck.load_params(ps_); }

  std::string header() const { return "[generator]\n" + cfg_.to_text() + "[extractor]\n" + geom_.to_text(); }

 private:
  StepLogits<T> project(const Var<T>& h) const {
    StepLogits<T> lg;
    for (const auto& head : heads_) lg.heads.push_back(head(h));
    return lg;
  }

  static Tensor<T> slice_row(const Tensor<T>& x, int r) {
    Tensor<T> row({1, x.cols()});
    std::copy(x.row(r), x.row(r) + x.cols(), row.data());
    return row;
  }

  void check_codes(const CodeSequence& codes, int frames) const {
    if (codes.frames() != frames)
      throw DimensionError("generator got " + std::to_string(frames) + " feature frames but " +
                           std::to_string(codes.frames()) + " code frames");
    if (codes.frames() > 0 && codes.groups() != cfg_.groups)
      throw DimensionError("codes have " + std::to_string(codes.groups()) + " groups, generator has " +
                           std::to_string(cfg_.groups));
    codes.check_range(cfg_.codewords);
  }

  GeneratorConfig cfg_;
  codec::CodecConfig geom_;
  nn::ParamStore<T> ps_;
  NoisyExtractor<T> extractor_;
  TokenEmbedding<T> embed_;
  nn::Linear<T> noise_proj_;
  Var<T> null_;
  nn::Linear<T> merge_;
  nn::TransformerBody<T> body_;
  std::vector<nn::Linear<T>> heads_;
};

}  // namespace gense::gen
