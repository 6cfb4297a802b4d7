// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "gense/ablate/variants.hpp"
#include "gense/data/corpus.hpp"
#include "gense/eval/metrics.hpp"
#include "gense/eval/report.hpp"
#include "gense/gen/enhance.hpp"

namespace gense::ablate {

// One trained model per variant kind; unused slots stay empty.
template <class T>
struct VariantModels {
  std::unique_ptr<gen::Generator<T>> aligned;
  std::unique_ptr<PrefixGenerator<T>> prefix;
  std::unique_ptr<NarPredictor<T>> nar;
  std::unique_ptr<MaskRegressor<T>> mask;

  bool has(VariantKind k) const {
    switch (k) {
      case VariantKind::kAligned: return aligned != nullptr;
      case VariantKind::kPrefix: return prefix != nullptr;
      case VariantKind::kNar: return nar != nullptr;
      case VariantKind::kMask: return mask != nullptr;
    }
    return false;
  }

  nn::ParamStore<T>& params(VariantKind k) {
    switch (k) {
      case VariantKind::kAligned: return aligned->params();
      case VariantKind::kPrefix: return prefix->params();
      case VariantKind::kNar: return nar->params();
      case VariantKind::kMask: return mask->params();
    }
    throw ConfigError("unknown variant");
  }

  // Fresh model; each variant gets its own seed derived from `seed`.
  void create(VariantKind k, const GeneratorConfig& cfg, const codec::CodecConfig& geom, uint64_t seed) {
    const uint64_t s = nn::derive_seed(seed, "variant." + variant_name(k));
    switch (k) {
      case VariantKind::kAligned: aligned = std::make_unique<gen::Generator<T>>(cfg, geom, s); break;
      case VariantKind::kPrefix: prefix = std::make_unique<PrefixGenerator<T>>(cfg, geom, s); break;
      case VariantKind::kNar: nar = std::make_unique<NarPredictor<T>>(cfg, geom, s); break;
      case VariantKind::kMask: mask = std::make_unique<MaskRegressor<T>>(cfg, geom, s); break;
    }
  }
};

inline std::string variant_header(VariantKind k, const GeneratorConfig& cfg, const codec::CodecConfig& geom,
                                  uint64_t codec_fingerprint) {
  return "[variant]\nkind = " + variant_name(k) + "\ncodec_fingerprint = " + std::to_string(codec_fingerprint) +
         "\n[generator]\n" + cfg.to_text() + "[extractor]\n" + geom.to_text();
}

struct VariantHeader {
  VariantKind kind = VariantKind::kAligned;
  uint64_t codec_fingerprint = 0;
  GeneratorConfig cfg;
  codec::CodecConfig geom;
};

inline VariantHeader parse_variant_header(const std::string& header) {
  const auto secs = config::parse_sections(header, "checkpoint header");
  const auto* v = config::find_section(secs, "variant");
  if (!v) throw FormatError("checkpoint header lacks a [variant] section");
  VariantHeader h;
  for (const auto& [k, val] : v->values) {
    if (k == "kind") h.kind = parse_variant(val);
    else if (k == "codec_fingerprint") h.codec_fingerprint = config::to_u64("variant.codec_fingerprint", val);
    else throw FormatError("unknown key 'variant." + k + "' in checkpoint header");
  }
  std::tie(h.cfg, h.geom) = gen::generator_configs_from_header(header);
  return h;
}

// Model parameters plus the training state of one variant.
template <class T>
void save_variant(const std::string& path, VariantModels<T>& m, VariantKind k, const GeneratorConfig& cfg,
                  const codec::CodecConfig& geom, uint64_t codec_fingerprint,
                  const std::function<void(nn::Checkpoint&)>& extra = {}) {
  nn::Checkpoint ck;
  ck.header = variant_header(k, cfg, geom, codec_fingerprint);
  ck.add_params(m.params(k));
  if (extra) extra(ck);
  nn::save_checkpoint(path, ck);
}

template <class T>
VariantHeader load_variant(const std::string& path, VariantModels<T>& m, nn::Checkpoint* ck_out = nullptr) {
  if (!std::filesystem::exists(path)) throw DataError("checkpoint '" + path + "' not found");
  auto ck = nn::load_checkpoint(path);
  const auto h = parse_variant_header(ck.header);
  m.create(h.kind, h.cfg, h.geom, 0);
  ck.load_params(m.params(h.kind));
  if (ck_out) *ck_out = std::move(ck);
  return h;
}

// Enhancement output of one variant on one utterance.
template <class T>
struct VariantOutput {
  signal::Waveform audio;
  CodeSequence codes;
  double tf_accuracy = std::nan("");  // teacher-forced argmax accuracy
  std::vector<double> scores;
  int chosen = 0;
};

template <class T>
VariantOutput<T> run_variant(const VariantModels<T>& m, VariantKind k, const codec::Codec<T>& codec,
                             const signal::Waveform& noisy, const CodeSequence& clean_codes, int n,
                             double temperature, uint64_t seed) {
  nn::NoGradGuard ng;
  VariantOutput<T> out;
  const long len = static_cast<long>(noisy.size());
  auto autoregressive = [&](const auto& model) {
    const Tensor<T> feats = model.features(nn::constant(codec.analyze(noisy))).value();
    const auto lg = model.teacher_forcing(nn::constant(feats), clean_codes);
    const auto [hit, total] = gen::argmax_matches(lg, clean_codes, 0, model.config().codewords);
    out.tf_accuracy = total ? double(hit) / total : std::nan("");
    gen::BestOfN b = model.best_of_n(feats, n, temperature, seed);
    out.codes = std::move(b.codes);
    out.scores = std::move(b.scores);
    out.chosen = b.chosen;
    out.audio = codec.decode_codes(out.codes, len);
  };
  switch (k) {
    case VariantKind::kAligned: autoregressive(*m.aligned); break;
    case VariantKind::kPrefix: autoregressive(*m.prefix); break;
    case VariantKind::kNar: {
      const Tensor<T> feats = m.nar->features(nn::constant(codec.analyze(noisy))).value();
      const auto lg = m.nar->logits(nn::constant(feats));
      const auto [hit, total] = gen::argmax_matches(lg, clean_codes, 0, m.nar->config().codewords);
      out.tf_accuracy = total ? double(hit) / total : std::nan("");
      out.codes = m.nar->predict(feats);
      out.audio = codec.decode_codes(out.codes, len);
      break;
    }
    case VariantKind::kMask:
      out.audio = m.mask->enhance(noisy);
      out.codes = codec.encode_codes(out.audio);
      break;
  }
  return out;
}

// Enhancement by any variant. The mask variant ignores `codec` (it may be
// null) and the NAR variant makes a single deterministic prediction.
template <class T>
gen::Enhanced enhance_variant(const VariantModels<T>& m, VariantKind k, const codec::Codec<T>* codec,
                              const signal::Waveform& noisy, int n, double temperature, uint64_t seed) {
  if (!m.has(k)) throw ConfigError("variant '" + variant_name(k) + "' is not loaded");
  if (k == VariantKind::kMask) {
    gen::Enhanced e;
    e.audio = m.mask->enhance(noisy);
    if (codec) e.codes = codec->encode_codes(e.audio);
    return e;
  }
  if (!codec) throw ConfigError("variant '" + variant_name(k) + "' needs a codec");
  if (k == VariantKind::kAligned) return gen::enhance(*codec, *m.aligned, noisy, n, temperature, seed);
  nn::NoGradGuard ng;
  const long len = static_cast<long>(noisy.size());
  gen::Enhanced e;
  if (k == VariantKind::kPrefix) {
    gen::check_compatible(*codec, *m.prefix);
    const Tensor<T> feats = m.prefix->features(nn::constant(codec->analyze(noisy))).value();
    gen::BestOfN b = m.prefix->best_of_n(feats, n, temperature, seed);
    e.codes = std::move(b.codes);
    e.scores = std::move(b.scores);
    e.chosen = b.chosen;
  } else {
    gen::check_compatible(*codec, *m.nar);
    const Tensor<T> feats = m.nar->features(nn::constant(codec->analyze(noisy))).value();
    e.codes = m.nar->predict(feats);
  }
  e.audio = codec->decode_codes(e.codes, len);
  return e;
}

struct SuiteOptions {
  GeneratorConfig model;
  gen::SeqTrainOptions train;  // segment_tokens is the training length
  int64_t steps = 300;
  uint64_t data_seed = 1;
  int train_utterances = 40;
  int heldout_utterances = 10;
  data::CorpusOptions corpus;  // duration is set from the token lengths
  std::vector<int> length_factors = {1, 2, 4};
  double temperature = 0.8;
  int num_inferences = 1;
  uint64_t infer_seed = 7;
  std::vector<VariantKind> variants = all_variants();

  int train_tokens() const { return train.segment_tokens; }
  double seconds_for(int tokens, const codec::CodecConfig& g) const {
    return static_cast<double>(tokens) * g.combine * g.hop / 16000.0;
  }
};

struct LengthRow {
  int factor = 1;
  int tokens = 0;
  double tf_accuracy = 0, token_accuracy = 0, si_snr_db = 0, lsd_db = 0;
};

struct VariantRow {
  VariantKind kind = VariantKind::kAligned;
  double si_snr_db = 0, lsd_db = 0, token_accuracy = 0, tf_accuracy = 0, flux_db = 0;
  std::vector<LengthRow> lengths;
  eval::MetricReport report;  // per-utterance rows at the first length factor

  const LengthRow* at_factor(int f) const {
    for (const auto& l : lengths)
      if (l.factor == f) return &l;
    return nullptr;
  }
};

struct SuiteResult {
  int train_tokens = 0;
  double noisy_si_snr_db = 0, noisy_lsd_db = 0, clean_flux_db = 0, noisy_flux_db = 0;
  std::vector<VariantRow> rows;

  const VariantRow* find(VariantKind k) const {
    for (const auto& r : rows)
      if (r.kind == k) return &r;
    return nullptr;
  }

  // One row per variant; the length-factor columns hold teacher-forced
  // token accuracy and SI-SNR.
  std::string table_tsv() const {
    std::ostringstream os;
    os << "variant\tsi_snr_db\tlsd_db\ttoken_accuracy\ttf_accuracy\tflux_db";
    if (!rows.empty())
      for (const auto& l : rows.front().lengths) os << "\ttf_accuracy_" << l.factor << "x\tsi_snr_db_" << l.factor << "x";
    os << "\n";
    for (const auto& r : rows) {
      os << variant_name(r.kind) << "\t" << eval::format_double(r.si_snr_db) << "\t" << eval::format_double(r.lsd_db)
         << "\t" << eval::format_double(r.token_accuracy) << "\t" << eval::format_double(r.tf_accuracy) << "\t"
         << eval::format_double(r.flux_db);
      for (const auto& l : r.lengths)
        os << "\t" << eval::format_double(l.tf_accuracy) << "\t" << eval::format_double(l.si_snr_db);
      os << "\n";
    }
    return os.str();
  }

  std::string lengths_tsv() const {
    std::ostringstream os;
    os << "variant\tfactor\ttokens\ttf_accuracy\ttoken_accuracy\tsi_snr_db\tlsd_db\n";
    for (const auto& r : rows)
      for (const auto& l : r.lengths)
        os << variant_name(r.kind) << "\t" << l.factor << "\t" << l.tokens << "\t"
           << eval::format_double(l.tf_accuracy) << "\t" << eval::format_double(l.token_accuracy) << "\t"
           << eval::format_double(l.si_snr_db) << "\t" << eval::format_double(l.lsd_db) << "\n";
    return os.str();
  }

  std::string summary() const {
    std::ostringstream os;
    char buf[256];
    os << "training length " << train_tokens << " tokens\n";
    std::snprintf(buf, sizeof buf, "noisy input: SI-SNR %.2f dB, LSD %.2f dB, flux %.2f dB (clean flux %.2f dB)\n",
                  noisy_si_snr_db, noisy_lsd_db, noisy_flux_db, clean_flux_db);
    os << buf;
    std::snprintf(buf, sizeof buf, "%-8s %9s %8s %9s %9s %8s\n", "variant", "SI-SNR", "LSD", "tok.acc", "tf.acc",
                  "flux");
    os << buf;
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof buf, "%-8s %9.2f %8.2f %9.3f %9.3f %8.2f\n", variant_name(r.kind).c_str(),
                    r.si_snr_db, r.lsd_db, r.token_accuracy, r.tf_accuracy, r.flux_db);
      os << buf;
    }
    os << "teacher-forced accuracy by length:\n";
    for (const auto& r : rows) {
      os << "  " << variant_name(r.kind);
      for (const auto& l : r.lengths) {
        std::snprintf(buf, sizeof buf, "  %dx=%.3f", l.factor, l.tf_accuracy);
        os << buf;
      }
      os << "\n";
    }
    return os.str();
  }
};

// Held-out pairs long enough for the largest length factor.
inline std::vector<data::PairedExample> heldout_pairs(const SuiteOptions& o, const codec::CodecConfig& g) {
  int maxf = 1;
  for (int f : o.length_factors) maxf = std::max(maxf, f);
  data::CorpusOptions co = o.corpus;
  co.duration_s = o.seconds_for(maxf * o.train_tokens(), g);
  return data::make_examples(nn::derive_seed(o.data_seed, "heldout"), static_cast<size_t>(o.heldout_utterances), co);
}

// Training pairs exactly one training length long, so no variant sees a
// position beyond it.
inline std::vector<data::PairedExample> training_pairs(const SuiteOptions& o, const codec::CodecConfig& g) {
  data::CorpusOptions co = o.corpus;
  co.duration_s = o.seconds_for(o.train_tokens(), g);
  return data::make_examples(nn::derive_seed(o.data_seed, "train"), static_cast<size_t>(o.train_utterances), co);
}

inline data::PairedExample crop_pair(const data::PairedExample& p, size_t samples) {
  data::PairedExample c = p;
  samples = std::min(samples, p.clean.size());
  c.clean.samples.resize(samples);
  c.noisy.samples.resize(samples);
  c.noise.samples.resize(samples);
  return c;
}

// Trains one variant from scratch for o.steps on the training pairs.
template <class T>
void train_variant(VariantModels<T>& m, VariantKind k, const codec::Codec<T>& codec,
                   const std::vector<data::PairedExample>& pairs, const SuiteOptions& o) {
  m.create(k, o.model, codec.config(), o.train.seed);
  auto loop = [&](auto& model, const auto& examples) {
    using Model = std::decay_t<decltype(model)>;
    using Ex = typename std::decay_t<decltype(examples)>::value_type;
    gen::SeqTrainer<T, Model, Ex> tr(model, o.train, codec.config().combine);
    while (tr.steps() < o.steps) tr.step(examples);
  };
  if (k == VariantKind::kMask) {
    std::vector<SpectralExample<T>> ex;
    for (const auto& p : pairs) ex.push_back(make_spectral_example<T>(p, codec.config()));
    loop(*m.mask, ex);
    return;
  }
  const auto ex = gen::make_token_examples(codec, pairs);
  if (k == VariantKind::kAligned) loop(*m.aligned, ex);
  if (k == VariantKind::kPrefix) loop(*m.prefix, ex);
  if (k == VariantKind::kNar) loop(*m.nar, ex);
}

// Evaluates one variant on the held-out pairs at every length factor.
template <class T>
VariantRow evaluate_variant(const VariantModels<T>& m, VariantKind k, const codec::Codec<T>& codec,
                            const std::vector<data::PairedExample>& heldout, const SuiteOptions& o) {
  VariantRow row;
  row.kind = k;
  row.report.variant = variant_name(k);
  row.report.seed = o.infer_seed;
  const auto& g = codec.config();
  for (size_t fi = 0; fi < o.length_factors.size(); ++fi) {
    const int factor = o.length_factors[fi];
    LengthRow lr;
    lr.factor = factor;
    lr.tokens = factor * o.train_tokens();
    const size_t samples = static_cast<size_t>(lr.tokens) * g.combine * g.hop;
    double flux = 0;
    int n_tf = 0;
    for (size_t i = 0; i < heldout.size(); ++i) {
      const auto p = crop_pair(heldout[i], samples);
      const CodeSequence clean_codes = codec.encode_codes(p.clean);
      const auto out = run_variant(m, k, codec, p.noisy, clean_codes, o.num_inferences, o.temperature,
                                   nn::derive_seed(o.infer_seed, "utterance", i));
      eval::UtteranceMetrics u;
      u.id = "heldout" + std::to_string(i);
      u.si_snr_db = eval::si_snr(out.audio, p.clean);
      u.lsd_db = eval::lsd(out.audio, p.clean);
      u.token_accuracy = eval::token_accuracy(out.codes, clean_codes);
      u.candidate_scores = out.scores;
      u.chosen = out.chosen;
      if (!std::isnan(out.tf_accuracy)) {
        lr.tf_accuracy += out.tf_accuracy;
        ++n_tf;
      }
      if (fi == 0) {
        flux += eval::spectral_flux_db(out.audio);
        row.report.rows.push_back(u);
      }
      lr.token_accuracy += u.token_accuracy / heldout.size();
      lr.si_snr_db += u.si_snr_db / heldout.size();
      lr.lsd_db += u.lsd_db / heldout.size();
    }
    lr.tf_accuracy = n_tf ? lr.tf_accuracy / n_tf : std::nan("");
    if (fi == 0) {
      const auto a = row.report.aggregate();
      row.si_snr_db = a.si_snr_db;
      row.lsd_db = a.lsd_db;
      row.token_accuracy = a.token_accuracy;
      row.tf_accuracy = lr.tf_accuracy;
      row.flux_db = heldout.empty() ? 0 : flux / heldout.size();
    }
    row.lengths.push_back(lr);
  }
  return row;
}

// Noisy-input reference numbers at the first length factor.
template <class T>
void fill_reference(SuiteResult& r, const codec::Codec<T>& codec, const std::vector<data::PairedExample>& heldout,
                    const SuiteOptions& o) {
  const auto& g = codec.config();
  const size_t samples = static_cast<size_t>(o.length_factors.front() * o.train_tokens()) * g.combine * g.hop;
  r.train_tokens = o.train_tokens();
  for (const auto& full : heldout) {
    const auto p = crop_pair(full, samples);
    const double n = static_cast<double>(heldout.size());
    r.noisy_si_snr_db += eval::si_snr(p.noisy, p.clean) / n;
    r.noisy_lsd_db += eval::lsd(p.noisy, p.clean) / n;
    r.noisy_flux_db += eval::spectral_flux_db(p.noisy) / n;
    r.clean_flux_db += eval::spectral_flux_db(p.clean) / n;
  }
}

// Trains (when `models` lacks a variant) and evaluates every requested
// variant on the same corpus and seeds.
template <class T>
SuiteResult run_ablation_suite(const codec::Codec<T>& codec, const SuiteOptions& o, VariantModels<T>& models) {
  if (o.length_factors.empty()) throw ConfigError("ablation.length_factors must not be empty");
  for (int f : o.length_factors)
    if (f <= 0) throw ConfigError("ablation.length_factors must be positive");
  const auto heldout = heldout_pairs(o, codec.config());
  std::vector<data::PairedExample> train;
  SuiteResult r;
  fill_reference(r, codec, heldout, o);
  for (auto k : o.variants) {
    if (!models.has(k)) {
      if (train.empty()) train = training_pairs(o, codec.config());
      train_variant(models, k, codec, train, o);
    }
    r.rows.push_back(evaluate_variant(models, k, codec, heldout, o));
  }
  return r;
}

}  // namespace gense::ablate
