// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstring>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "gense/ablate/variants.hpp"
#include "gense/eval/harness.hpp"

namespace gense::eval {

struct ProbeSummary {
  std::string system;
  int passed = 0;
  int total = 0;
  bool ok() const { return passed == total; }
};

inline bool all_ok(const std::vector<ProbeSummary>& s) {
  for (const auto& p : s)
    if (!p.ok()) return false;
  return true;
}

inline std::string probes_tsv(const std::vector<ProbeSummary>& s) {
  std::ostringstream os;
  os << "system\tpassed\ttotal\tresult\n";
  for (const auto& p : s) os << p.system << "\t" << p.passed << "\t" << p.total << "\t" << (p.ok() ? "pass" : "FAIL") << "\n";
  return os.str();
}

// `count` probes of `system` at t0 drawn uniformly from the input's frames.
template <class T>
ProbeSummary probe_many(const std::string& name, const System<T>& system, const Tensor<T>& input,
                        const std::function<int(int)>& safe_rows, int count, uint64_t seed) {
  ProbeSummary s{name, 0, count};
  nn::Rng rng(nn::derive_seed(seed, name));
  for (int i = 0; i < count; ++i) {
    const int t0 = static_cast<int>(rng.below(static_cast<uint64_t>(input.dim(0))));
    s.passed += causality_probe(system, input, t0, safe_rows, nn::derive_seed(seed, name, i)).pass;
  }
  return s;
}

// Token-level probe: code frames from t0 on are redrawn; the first t0 + 1
// output rows (positions that predict C_1..C_{t0+1}) must not change.
template <class T>
ProbeSummary token_probe_many(const std::string& name,
                              const std::function<Tensor<T>(const codec::CodeSequence&)>& system,
                              const codec::CodeSequence& codes, int codewords, int count, uint64_t seed) {
  ProbeSummary s{name, 0, count};
  nn::Rng rng(nn::derive_seed(seed, name));
  const Tensor<T> base = system(codes);
  for (int i = 0; i < count; ++i) {
    const int t0 = static_cast<int>(rng.below(static_cast<uint64_t>(codes.frames())));
    auto pert = codes;
    for (int t = t0; t < codes.frames(); ++t)
      for (int k = 0; k < codes.groups(); ++k) pert.at(t, k) = static_cast<int>(rng.below(codewords));
    const Tensor<T> out = system(pert);
    const size_t n = static_cast<size_t>(t0 + 1) * out.cols();
    s.passed += std::memcmp(base.data(), out.data(), n * sizeof(T)) == 0;
  }
  return s;
}

// Causality suite over the codec and whichever token models are given.
// `planes` is a [T, F, 2] noisy input; with inject_mutant the encoder probe
// runs on a one-token look-ahead mutant and is expected to fail.
template <class T>
std::vector<ProbeSummary> run_probe_suite(const codec::Codec<T>& codec, const Tensor<T>& planes, int count,
                                          uint64_t seed, bool inject_mutant,
                                          const gen::Generator<T>* aligned = nullptr,
                                          const ablate::PrefixGenerator<T>* prefix = nullptr,
                                          const ablate::NarPredictor<T>* nar = nullptr,
                                          const ablate::MaskRegressor<T>* mask = nullptr) {
  std::vector<ProbeSummary> out;
  const int combine = codec.config().combine;
  System<T> enc = [&](const Tensor<T>& x) {
    nn::NoGradGuard ng;
    return codec.encode(nn::constant(x)).value();
  };
  if (inject_mutant) enc = with_lookahead(enc, combine);
  out.push_back(probe_many<T>(inject_mutant ? "codec_encoder(mutant)" : "codec_encoder", enc, planes,
                              rows_at_rate(combine), count, seed));

  const Tensor<T> latent = codec.dequantize(codec.encode_codes_from_planes(planes));
  const int frames = planes.dim(0);
  System<T> dec = [&](const Tensor<T>& z) {
    nn::NoGradGuard ng;
    return codec.decode(nn::constant(z), frames).value();
  };
  out.push_back(probe_many<T>("codec_decoder", dec, latent, [combine](int t0) { return combine * (t0 + 1); }, count,
                              seed));

  const auto features_of = [&](const auto& model) {
    nn::NoGradGuard ng;
    return model.features(nn::constant(planes)).value();
  };
  if (aligned) {
    System<T> ex = [&](const Tensor<T>& x) {
      nn::NoGradGuard ng;
      return aligned->features(nn::constant(x)).value();
    };
    out.push_back(probe_many<T>("noisy_extractor", ex, planes, rows_at_rate(combine), count, seed));
    const Tensor<T> feats = features_of(*aligned);
    const auto codes = codec.encode_codes_from_planes(planes);
    System<T> tf = [&](const Tensor<T>& f) {
      nn::NoGradGuard ng;
      return aligned->teacher_forcing(nn::constant(f), codes).heads[0].value();
    };
    out.push_back(probe_many<T>("generator_features", tf, feats, rows_at_rate(1), count, seed));
    std::function<Tensor<T>(const codec::CodeSequence&)> tok = [&](const codec::CodeSequence& c) {
      nn::NoGradGuard ng;
      return aligned->teacher_forcing(nn::constant(feats), c).heads[0].value();
    };
    out.push_back(token_probe_many<T>("generator_tokens", tok, codes, aligned->config().codewords, count, seed));
  }
  if (prefix) {
    const Tensor<T> feats = features_of(*prefix);
    const auto codes = codec.encode_codes_from_planes(planes);
    std::function<Tensor<T>(const codec::CodeSequence&)> tok = [&](const codec::CodeSequence& c) {
      nn::NoGradGuard ng;
      return prefix->teacher_forcing(nn::constant(feats), c).heads[0].value();
    };
    out.push_back(token_probe_many<T>("prefix_tokens", tok, codes, prefix->config().codewords, count, seed));
  }
  if (nar) {
    const Tensor<T> feats = features_of(*nar);
    System<T> f = [&](const Tensor<T>& x) {
      nn::NoGradGuard ng;
      return nar->logits(nn::constant(x)).heads[0].value();
    };
    out.push_back(probe_many<T>("nar_features", f, feats, rows_at_rate(1), count, seed));
  }
  if (mask) {
    System<T> f = [&](const Tensor<T>& x) {
      nn::NoGradGuard ng;
      return mask->enhance_planes(nn::constant(x)).value();
    };
    out.push_back(probe_many<T>("mask_regression", f, planes, rows_at_rate(1), count, seed));
  }
  return out;
}

}  // namespace gense::eval
