// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "gense/codec/codec.hpp"
#include "gense/data/synth.hpp"
#include "gense/nn/adam.hpp"

namespace gense::gen {

using codec::CodeSequence;
using nn::Tensor;

// One training utterance: compressed noisy planes [T, F, 2] and the frozen
// codec's clean codes [ceil(T/4), K].
template <class T>
struct TokenExample {
  Tensor<T> noisy;
  CodeSequence codes;
};

template <class T>
TokenExample<T> make_token_example(const codec::Codec<T>& codec, const data::PairedExample& p) {
  if (p.clean.size() != p.noisy.size())
    throw DataError("paired waveforms differ in length: clean " + std::to_string(p.clean.size()) + ", noisy " +
                    std::to_string(p.noisy.size()));
  return {codec.analyze(p.noisy), codec.encode_codes(p.clean)};
}

template <class T>
std::vector<TokenExample<T>> make_token_examples(const codec::Codec<T>& codec,
                                                 const std::vector<data::PairedExample>& pairs) {
  std::vector<TokenExample<T>> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(make_token_example(codec, p));
  return out;
}

// Crop of `tokens` code frames starting at token `start`, with the matching
// spectral frames (the last token may cover fewer than 4 frames).
template <class T>
TokenExample<T> crop_example(const TokenExample<T>& ex, int start, int tokens, int combine) {
  const int frames = ex.noisy.dim(0), F = ex.noisy.dim(1);
  const int f0 = start * combine;
  const int f1 = std::min(frames, (start + tokens) * combine);
  TokenExample<T> out;
  out.noisy = Tensor<T>({f1 - f0, F, 2});
  std::copy(ex.noisy.data() + static_cast<size_t>(f0) * F * 2, ex.noisy.data() + static_cast<size_t>(f1) * F * 2,
            out.noisy.data());
  out.codes = CodeSequence(tokens, ex.codes.groups());
  for (int t = 0; t < tokens; ++t)
    for (int k = 0; k < ex.codes.groups(); ++k) out.codes.at(t, k) = ex.codes.at(start + t, k);
  return out;
}

// Example protocol used by SeqTrainer (found by argument-dependent lookup):
// example_tokens(ex), crop_example(ex, start, tokens, combine) and
// example_loss(model, ex, training, rng).
template <class T>
int example_tokens(const TokenExample<T>& ex) {
  return ex.codes.frames();
}

template <class Model, class T>
auto example_loss(const Model& m, const TokenExample<T>& ex, bool training, nn::Rng& rng) {
  return m.train_loss(ex.noisy, ex.codes, training, rng);
}

struct SeqTrainOptions {
  int batch_size = 8;
  int segment_tokens = 50;  // 1 s crops at 50 Hz
  nn::AdamOptions adam{};
  uint64_t seed = 0;
};

struct SeqLosses {
  double loss = 0;
  double accuracy = 0;  // teacher-forced argmax accuracy; NaN for models without tokens
  double grad_norm = 0;
};

// Deterministic trainer for the aligned generator and the ablation
// variants. A model provides params(); examples follow the protocol above.
// Crops are segment_tokens long (in 4-frame token units).
template <class T, class Model, class Example = TokenExample<T>>
class SeqTrainer {
 public:
  SeqTrainer(Model& model, SeqTrainOptions opt, int combine = 4)
      : model_(&model), opt_(opt), combine_(combine), adam_(model.params(), opt.adam) {
    if (opt_.batch_size <= 0 || opt_.segment_tokens <= 0)
      throw ConfigError("training needs positive batch_size and segment_tokens");
  }

  int64_t steps() const { return adam_.steps(); }
  nn::Adam<T>& optimizer() { return adam_; }

  std::vector<Example> draw_batch(const std::vector<Example>& data) const {
    if (data.empty()) throw DataError("training set is empty");
    nn::Rng rng(nn::derive_seed(opt_.seed, "seq.batch", static_cast<uint64_t>(steps())));
    std::vector<Example> batch;
    for (int b = 0; b < opt_.batch_size; ++b) {
      const auto& ex = data[rng.below(data.size())];
      const int tc = example_tokens(ex);
      const int len = std::min(tc, opt_.segment_tokens);
      const int start = static_cast<int>(rng.below(static_cast<uint64_t>(tc - len + 1)));
      batch.push_back(crop_example(ex, start, len, combine_));
    }
    return batch;
  }

  SeqLosses step(const std::vector<Example>& data) { return step_on(draw_batch(data)); }

  SeqLosses step_on(const std::vector<Example>& batch) {
    const uint64_t s = static_cast<uint64_t>(steps());
    nn::Rng rng(nn::derive_seed(opt_.seed, "seq.dropout", s));
    std::vector<nn::Var<T>> terms;
    long hit = 0, total = 0;
    for (const auto& ex : batch) {
      auto out = example_loss(*model_, ex, true, rng);
      terms.push_back(nn::scale(out.loss, T(1) / T(batch.size())));
      hit += out.correct;
      total += out.total;
    }
    const nn::Var<T> loss = nn::add_scalars(terms);
    SeqLosses r;
    r.loss = loss.value()[0];
    r.accuracy = total ? double(hit) / total : std::numeric_limits<double>::quiet_NaN();
    if (!std::isfinite(r.loss)) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "loss is not finite at step %llu", static_cast<unsigned long long>(s));
      throw TrainingError(buf);
    }
    nn::backward(loss);
    r.grad_norm = adam_.step();
    return r;
  }

  // Teacher-forced loss and accuracy over whole utterances, dropout off.
  SeqLosses evaluate(const std::vector<Example>& data) const {
    nn::NoGradGuard ng;
    nn::Rng rng;
    SeqLosses r;
    long hit = 0, total = 0;
    for (const auto& ex : data) {
      auto out = example_loss(*model_, ex, false, rng);
      r.loss += out.loss.value()[0] / data.size();
      hit += out.correct;
      total += out.total;
    }
    r.accuracy = total ? double(hit) / total : std::numeric_limits<double>::quiet_NaN();
    return r;
  }

  void save_state(nn::Checkpoint& ck) const {
    for (size_t i = 0; i < adam_.first_moments().size(); ++i) {
      ck.add("adam.m." + std::to_string(i), adam_.first_moments()[i].template cast<float>());
      ck.add("adam.v." + std::to_string(i), adam_.second_moments()[i].template cast<float>());
    }
    ck.add("adam.step", Tensor<float>::scalar(static_cast<float>(steps())));
  }
  void load_state(const nn::Checkpoint& ck) {
    for (size_t i = 0; i < adam_.first_moments().size(); ++i) {
      adam_.first_moments()[i] = ck.get("adam.m." + std::to_string(i)).template cast<T>();
      adam_.second_moments()[i] = ck.get("adam.v." + std::to_string(i)).template cast<T>();
    }
    adam_.set_steps(static_cast<int64_t>(ck.get("adam.step")[0]));
  }

 private:
  Model* model_;
  SeqTrainOptions opt_;
  int combine_;
  nn::Adam<T> adam_;
};

}  // namespace gense::gen
