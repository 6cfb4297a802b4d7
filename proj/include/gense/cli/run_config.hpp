// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "gense/ablate/variants.hpp"
#include "gense/codec/config.hpp"
#include "gense/config_text.hpp"
#include "gense/data/corpus.hpp"
#include "gense/gen/config.hpp"

// Run configuration shared by every command. Schema (all keys optional):
//
//   [paths]      corpus, checkpoints, reports
//   [data]       n, seed, duration_s, snr_min, snr_max, level_min, level_max,
//                noise_kinds, speech_dir
//   [codec]      codec hyperparameters (see CodecConfig)
//   [generator]  token-model hyperparameters (see GeneratorConfig)
//   [training]   epochs, steps, batch_size, segment_tokens,
//                codec_segment_frames, lr, codec_lr, clip_norm, seed,
//                log_every, checkpoint_every, heldout
//   [inference]  temperature, num_inferences, seed, variant
//   [evaluate]   probes, probe_frames, inject_mutant, manifest
//   [ablation]   variants, length_factors, train_utterances,
//                heldout_utterances, steps, num_inferences, source
//
// Relative paths are resolved against the config file's directory. The
// environment variables GENSE_CORPUS, GENSE_CHECKPOINTS and GENSE_REPORTS
// override the three [paths] entries.
namespace gense::cli {

namespace fs = std::filesystem;
using ablate::VariantKind;

struct PathsSection {
  fs::path corpus = "corpus";
  fs::path checkpoints = "checkpoints";
  fs::path reports = "reports";
};

struct DataSection {
  int n = 50;
  uint64_t seed = 1;
  data::CorpusOptions corpus;
  fs::path speech_dir;  // empty: synthetic toy speech
};

struct TrainingSection {
  double epochs = 10;
  int64_t steps = 0;  // > 0 overrides epochs
  int batch_size = 8;
  int segment_tokens = 50;
  int codec_segment_frames = 200;
  double lr = 2e-4;
  double codec_lr = 2e-3;
  double clip_norm = 5.0;
  uint64_t seed = 0;
  int log_every = 50;
  int checkpoint_every = 200;
  int heldout = 4;  // trailing manifest rows kept out of training

  // Steps for `units` of training material when every step consumes
  // batch_size * per_item units.
  int64_t steps_for(int64_t units, int per_item) const {
    if (steps > 0) return steps;
    const double per_step = static_cast<double>(batch_size) * per_item;
    return std::max<int64_t>(1, static_cast<int64_t>(std::ceil(epochs * static_cast<double>(units) / per_step)));
  }
};

struct InferenceSection {
  gen::InferenceConfig cfg;
  VariantKind variant = VariantKind::kAligned;
};

struct EvaluateSection {
  int probes = 20;
  int probe_frames = 200;
  bool inject_mutant = false;
  fs::path manifest;  // empty: the corpus manifest
};

struct AblationSection {
  std::vector<VariantKind> variants = ablate::all_variants();
  std::vector<int> length_factors = {1, 2, 4};
  int train_utterances = 40;
  int heldout_utterances = 10;
  int64_t steps = 300;
  int num_inferences = 1;
  std::string source = "train";  // train | checkpoints
};

using EnvLookup = std::function<const char*(const char*)>;

inline const char* process_env(const char* name) { return std::getenv(name); }

struct RunConfig {
  std::string text;    // file contents, echoed verbatim into outputs
  fs::path origin;     // the file it was read from
  std::vector<std::string> overrides;  // "GENSE_X=value" lines applied from the environment
  PathsSection paths;
  DataSection data;
  codec::CodecConfig codec;
  gen::GeneratorConfig generator;
  TrainingSection training;
  InferenceSection inference;
  EvaluateSection evaluate;
  AblationSection ablation;

  fs::path corpus_manifest() const { return paths.corpus / "manifest.tsv"; }
  fs::path eval_manifest() const { return evaluate.manifest.empty() ? corpus_manifest() : evaluate.manifest; }
  fs::path codec_dir() const { return paths.checkpoints / "codec"; }
  fs::path codec_checkpoint() const { return codec_dir() / "codec.ckpt"; }
  fs::path variant_dir(VariantKind k) const { return paths.checkpoints / ablate::variant_name(k); }
  fs::path variant_checkpoint(VariantKind k) const { return variant_dir(k) / "model.ckpt"; }

  std::string config_hint() const { return origin.empty() ? "<file>" : origin.string(); }

  void validate() const;

  static RunConfig parse(const std::string& text, const fs::path& origin = {}, const EnvLookup& env = process_env);
  static RunConfig load(const fs::path& path, const EnvLookup& env = process_env);
};

namespace detail {

inline void apply_paths(PathsSection& p, const config::Section& s, const fs::path& base) {
  for (const auto& [k, v] : s.values) {
    const fs::path value = v.empty() ? fs::path() : base / v;
    if (k == "corpus") p.corpus = value;
    else if (k == "checkpoints") p.checkpoints = value;
    else if (k == "reports") p.reports = value;
    else throw ConfigError("unknown key 'paths." + k + "'");
  }
}

inline void apply_data(DataSection& d, const config::Section& s, const fs::path& base) {
  for (const auto& [k, v] : s.values) {
    const std::string key = "data." + k;
    if (k == "n") d.n = config::to_int(key, v);
    else if (k == "seed") d.seed = config::to_u64(key, v);
    else if (k == "duration_s") d.corpus.duration_s = config::to_double(key, v);
    else if (k == "snr_min") d.corpus.snr_min = config::to_double(key, v);
    else if (k == "snr_max") d.corpus.snr_max = config::to_double(key, v);
    else if (k == "level_min") d.corpus.level_min = config::to_double(key, v);
    else if (k == "level_max") d.corpus.level_max = config::to_double(key, v);
    else if (k == "speech_dir") d.speech_dir = v.empty() ? fs::path() : base / v;
    else if (k == "noise_kinds") {
      d.corpus.noise_kinds.clear();
      for (const auto& tok : config::split(v)) {
        try {
          d.corpus.noise_kinds.push_back(data::parse_noise_kind(tok));
        } catch (const ConfigError&) {
          throw ConfigError(key + ": unknown noise kind '" + tok + "' (white|pink|babble)");
        }
      }
    } else throw ConfigError("unknown key '" + key + "'");
  }
}

inline void apply_training(TrainingSection& t, const config::Section& s) {
  for (const auto& [k, v] : s.values) {
    const std::string key = "training." + k;
    if (k == "epochs") t.epochs = config::to_double(key, v);
    else if (k == "steps") t.steps = config::to_int(key, v);
    else if (k == "batch_size") t.batch_size = config::to_int(key, v);
    else if (k == "segment_tokens") t.segment_tokens = config::to_int(key, v);
    else if (k == "codec_segment_frames") t.codec_segment_frames = config::to_int(key, v);
    else if (k == "lr") t.lr = config::to_double(key, v);
    else if (k == "codec_lr") t.codec_lr = config::to_double(key, v);
    else if (k == "clip_norm") t.clip_norm = config::to_double(key, v);
    else if (k == "seed") t.seed = config::to_u64(key, v);
    else if (k == "log_every") t.log_every = config::to_int(key, v);
    else if (k == "checkpoint_every") t.checkpoint_every = config::to_int(key, v);
    else if (k == "heldout") t.heldout = config::to_int(key, v);
    else throw ConfigError("unknown key '" + key + "'");
  }
}

inline void apply_inference(InferenceSection& i, const config::Section& s) {
  for (const auto& [k, v] : s.values) {
    const std::string key = "inference." + k;
    if (k == "temperature") i.cfg.temperature = config::to_double(key, v);
    else if (k == "num_inferences") i.cfg.num_inferences = config::to_int(key, v);
    else if (k == "seed") i.cfg.seed = config::to_u64(key, v);
    else if (k == "variant") i.variant = ablate::parse_variant(v);
    else throw ConfigError("unknown key '" + key + "'");
  }
}

inline void apply_evaluate(EvaluateSection& e, const config::Section& s, const fs::path& base) {
  for (const auto& [k, v] : s.values) {
    const std::string key = "evaluate." + k;
    if (k == "probes") e.probes = config::to_int(key, v);
    else if (k == "probe_frames") e.probe_frames = config::to_int(key, v);
    else if (k == "inject_mutant") e.inject_mutant = config::to_bool(key, v);
    else if (k == "manifest") e.manifest = v.empty() ? fs::path() : base / v;
    else throw ConfigError("unknown key '" + key + "'");
  }
}

inline void apply_ablation(AblationSection& a, const config::Section& s) {
  for (const auto& [k, v] : s.values) {
    const std::string key = "ablation." + k;
    if (k == "variants") {
      a.variants.clear();
      for (const auto& tok : config::split(v)) a.variants.push_back(ablate::parse_variant(tok));
    } else if (k == "length_factors") a.length_factors = config::to_ints(key, v);
    else if (k == "train_utterances") a.train_utterances = config::to_int(key, v);
    else if (k == "heldout_utterances") a.heldout_utterances = config::to_int(key, v);
    else if (k == "steps") a.steps = config::to_int(key, v);
    else if (k == "num_inferences") a.num_inferences = config::to_int(key, v);
    else if (k == "source") a.source = v;
    else throw ConfigError("unknown key '" + key + "'");
  }
}

}  // namespace detail

inline void RunConfig::validate() const {
  auto positive = [](const std::string& key, long v) {
    if (v <= 0) throw ConfigError(key + " must be positive, got " + std::to_string(v));
  };
  positive("data.n", data.n);
  if (!(data.corpus.duration_s > 0)) throw ConfigError("data.duration_s must be > 0");
  const double smin = data::MixSpec::kSnrMin, smax = data::MixSpec::kSnrMax;
  if (!(data.corpus.snr_min >= smin && data.corpus.snr_min <= smax))
    throw ConfigError("data.snr_min must lie in [-5, 20], got " + std::to_string(data.corpus.snr_min));
  if (!(data.corpus.snr_max >= smin && data.corpus.snr_max <= smax))
    throw ConfigError("data.snr_max must lie in [-5, 20], got " + std::to_string(data.corpus.snr_max));
  if (data.corpus.snr_min > data.corpus.snr_max) throw ConfigError("data.snr_min exceeds data.snr_max");
  const double lmin = data::MixSpec::kLevelMin, lmax = data::MixSpec::kLevelMax;
  if (!(data.corpus.level_min >= lmin && data.corpus.level_min <= lmax))
    throw ConfigError("data.level_min must lie in [-35, -15], got " + std::to_string(data.corpus.level_min));
  if (!(data.corpus.level_max >= lmin && data.corpus.level_max <= lmax))
    throw ConfigError("data.level_max must lie in [-35, -15], got " + std::to_string(data.corpus.level_max));
  if (data.corpus.level_min > data.corpus.level_max) throw ConfigError("data.level_min exceeds data.level_max");
  if (data.corpus.noise_kinds.empty()) throw ConfigError("data.noise_kinds must not be empty");

  codec.validate();
  generator.validate();

  if (!(training.epochs > 0)) throw ConfigError("training.epochs must be > 0");
  if (training.steps < 0) throw ConfigError("training.steps must be >= 0");
  positive("training.batch_size", training.batch_size);
  positive("training.segment_tokens", training.segment_tokens);
  positive("training.codec_segment_frames", training.codec_segment_frames);
  if (!(training.lr > 0)) throw ConfigError("training.lr must be > 0");
  if (!(training.codec_lr > 0)) throw ConfigError("training.codec_lr must be > 0");
  if (!(training.clip_norm >= 0)) throw ConfigError("training.clip_norm must be >= 0");
  if (training.log_every < 0) throw ConfigError("training.log_every must be >= 0");
  if (training.checkpoint_every < 0) throw ConfigError("training.checkpoint_every must be >= 0");
  if (training.heldout < 0) throw ConfigError("training.heldout must be >= 0");

  inference.cfg.validate();

  if (evaluate.probes < 0) throw ConfigError("evaluate.probes must be >= 0");
  positive("evaluate.probe_frames", evaluate.probe_frames);

  if (ablation.variants.empty()) throw ConfigError("ablation.variants must not be empty");
  if (ablation.length_factors.empty()) throw ConfigError("ablation.length_factors must not be empty");
  for (int f : ablation.length_factors) positive("ablation.length_factors", f);
  positive("ablation.train_utterances", ablation.train_utterances);
  positive("ablation.heldout_utterances", ablation.heldout_utterances);
  positive("ablation.steps", static_cast<long>(ablation.steps));
  positive("ablation.num_inferences", ablation.num_inferences);
  if (ablation.source != "train" && ablation.source != "checkpoints")
    throw ConfigError("ablation.source must be 'train' or 'checkpoints', got '" + ablation.source + "'");
}

inline RunConfig RunConfig::parse(const std::string& text, const fs::path& origin, const EnvLookup& env) {
  RunConfig c;
  c.text = text;
  c.origin = origin;
  const fs::path base = origin.empty() ? fs::path() : origin.parent_path();
  c.paths.corpus = base / c.paths.corpus;
  c.paths.checkpoints = base / c.paths.checkpoints;
  c.paths.reports = base / c.paths.reports;
  for (const auto& s : config::parse_sections(text, origin.empty() ? "config" : origin.string())) {
    if (s.name.empty()) throw ConfigError("key '" + s.order.front().first + "' appears before any [section]");
    else if (s.name == "paths") detail::apply_paths(c.paths, s, base);
    else if (s.name == "data") detail::apply_data(c.data, s, base);
    else if (s.name == "codec") {
      for (const auto& [k, v] : s.values)
        if (!c.codec.set(k, v)) throw ConfigError("unknown key 'codec." + k + "'");
    } else if (s.name == "generator") {
      for (const auto& [k, v] : s.values)
        if (!c.generator.set(k, v)) throw ConfigError("unknown key 'generator." + k + "'");
    } else if (s.name == "training") detail::apply_training(c.training, s);
    else if (s.name == "inference") detail::apply_inference(c.inference, s);
    else if (s.name == "evaluate") detail::apply_evaluate(c.evaluate, s, base);
    else if (s.name == "ablation") detail::apply_ablation(c.ablation, s);
    else throw ConfigError("unknown section [" + s.name + "]");
  }
  const std::pair<const char*, fs::path*> vars[] = {
      {"GENSE_CORPUS", &c.paths.corpus}, {"GENSE_CHECKPOINTS", &c.paths.checkpoints}, {"GENSE_REPORTS", &c.paths.reports}};
  for (const auto& [name, target] : vars) {
    const char* v = env ? env(name) : nullptr;
    if (v && *v) {
      *target = fs::path(v);
      c.overrides.push_back(std::string(name) + "=" + v);
    }
  }
  c.validate();
  return c;
}

inline RunConfig RunConfig::load(const fs::path& path, const EnvLookup& env) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("config file '" + path.string() + "' not found");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path, env);
}

}  // namespace gense::cli
