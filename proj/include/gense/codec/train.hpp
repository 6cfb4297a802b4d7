// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "gense/codec/codec.hpp"
#include "gense/nn/adam.hpp"

namespace gense::codec {

struct CodecLosses {
  double total = 0;
  double magnitude = 0;  // MSE on compressed magnitude
  double complex = 0;    // MSE on compressed (re, im)
  double vq = 0;         // codebook + beta * commitment
  double commitment = 0;
  double grad_norm = 0;
};

// Reconstruction terms between predicted and target [T, F, 2] planes.
template <class T>
std::pair<Var<T>, Var<T>> reconstruction_losses(const Var<T>& pred, const Tensor<T>& target) {
  const int n = static_cast<int>(target.numel() / 2);
  const Var<T> p = nn::reshape(pred, {n, 2});
  const Var<T> tgt = nn::constant(target.reshaped({n, 2}));
  const Var<T> pm = nn::magnitude(nn::slice_cols(p, 0, 1), nn::slice_cols(p, 1, 1), T(1e-10));
  Tensor<T> tm({n, 1});
  for (int i = 0; i < n; ++i) tm[i] = std::hypot(target[2 * i], target[2 * i + 1]);
  return {nn::mse(pm, nn::constant(tm)), nn::mse(p, tgt)};
}

struct CodecTrainOptions {
  int batch_size = 8;
  int segment_frames = 200;  // 1 s crops
  nn::AdamOptions adam{};
  uint64_t seed = 0;
};

// Deterministic trainer: the batch drawn at step s depends only on
// (seed, s), so resuming from a checkpoint continues bit-identically.
template <class T>
class CodecTrainer {
 public:
  CodecTrainer(Codec<T>& codec, CodecTrainOptions opt) : codec_(&codec), opt_(opt), adam_(codec.params(), opt.adam) {
    if (opt_.batch_size <= 0 || opt_.segment_frames <= 0)
      throw ConfigError("codec training needs positive batch_size and segment_frames");
  }

  int64_t steps() const { return adam_.steps(); }
  nn::Adam<T>& optimizer() { return adam_; }

  // Crops a batch from `data` ([T, F, 2] planes per utterance).
  std::vector<Tensor<T>> draw_batch(const std::vector<Tensor<T>>& data) const {
    if (data.empty()) throw DataError("codec training set is empty");
    nn::Rng rng(nn::derive_seed(opt_.seed, "codec.batch", static_cast<uint64_t>(steps())));
    std::vector<Tensor<T>> batch;
    for (int b = 0; b < opt_.batch_size; ++b) {
      const auto& u = data[rng.below(data.size())];
      const int frames = u.dim(0), F = u.dim(1);
      const int len = std::min(frames, opt_.segment_frames);
      const int off = static_cast<int>(rng.below(static_cast<uint64_t>(frames - len + 1)));
      Tensor<T> crop({len, F, 2});
      std::copy(u.data() + static_cast<size_t>(off) * F * 2, u.data() + static_cast<size_t>(off + len) * F * 2,
                crop.data());
      batch.push_back(std::move(crop));
    }
    return batch;
  }

  CodecLosses step(const std::vector<Tensor<T>>& data) { return step_on(draw_batch(data)); }

  CodecLosses step_on(const std::vector<Tensor<T>>& batch) {
    const auto& cfg = codec_->config();
    auto& vq = codec_->quantizer();
    const uint64_t s = static_cast<uint64_t>(steps());
    if (!vq.initialized() && vq.ema()) {
      nn::NoGradGuard ng;
      std::vector<Tensor<T>> lat;
      for (const auto& x : batch) lat.push_back(codec_->encode(nn::constant(x)).value());
      std::vector<const Tensor<T>*> ptrs;
      for (const auto& l : lat) ptrs.push_back(&l);
      nn::Rng rng(nn::derive_seed(opt_.seed, "codec.init"));
      vq.init_from(ptrs, rng);
    }
    CodecLosses out;
    std::vector<Var<T>> terms;
    std::vector<Tensor<T>> latents;
    std::vector<CodeSequence> codes;
    const T inv = T(1) / T(batch.size());
    for (const auto& x : batch) {
      const auto f = codec_->forward(nn::constant(x));
      const auto [mag, cplx] = reconstruction_losses(f.planes, x);
      const Var<T> total = nn::add_scalars<T>({mag, nn::scale(cplx, T(cfg.lambda_p)), f.q.loss});
      terms.push_back(nn::scale(total, inv));
      out.magnitude += mag.value()[0] / batch.size();
      out.complex += cplx.value()[0] / batch.size();
      out.vq += f.q.loss.value()[0] / batch.size();
      out.commitment += f.q.commitment / batch.size();
      latents.push_back(f.latent.value());
      codes.push_back(f.q.codes);
    }
    const Var<T> loss = nn::add_scalars(terms);
    out.total = loss.value()[0];
    if (!std::isfinite(out.total)) {
      char buf[256];
      std::snprintf(buf, sizeof buf, "codec loss is not finite at step %lld (magnitude %g, complex %g, vq %g)",
                    static_cast<long long>(s), out.magnitude, out.complex, out.vq);
      throw TrainingError(buf);
    }
    nn::backward(loss);
    out.grad_norm = adam_.step();
    std::vector<const Tensor<T>*> lp;
    std::vector<const CodeSequence*> cp;
    for (size_t i = 0; i < latents.size(); ++i) lp.push_back(&latents[i]), cp.push_back(&codes[i]);
    nn::Rng rng(nn::derive_seed(opt_.seed, "codec.ema", s));
    vq.ema_update(lp, cp, cfg.ema_decay, cfg.dead_after, rng);
    return out;
  }

  // Mean reconstruction losses on held-out planes without updating anything.
  CodecLosses evaluate(const std::vector<Tensor<T>>& data) const {
    nn::NoGradGuard ng;
    CodecLosses out;
    for (const auto& x : data) {
      const auto f = codec_->forward(nn::constant(x));
      const auto [mag, cplx] = reconstruction_losses(f.planes, x);
      out.magnitude += mag.value()[0] / data.size();
      out.complex += cplx.value()[0] / data.size();
      out.vq += f.q.loss.value()[0] / data.size();
      out.commitment += f.q.commitment / data.size();
    }
    out.total = out.magnitude + codec_->config().lambda_p * out.complex + out.vq;
    return out;
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
  Codec<T>* codec_;
  CodecTrainOptions opt_;
  nn::Adam<T> adam_;
};

}  // namespace gense::codec
