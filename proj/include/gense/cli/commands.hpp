// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gense/ablate/suite.hpp"
#include "gense/cli/run_config.hpp"
#include "gense/codec/train.hpp"
#include "gense/eval/harness.hpp"
#include "gense/eval/probes.hpp"
#include "gense/gen/train.hpp"
#include "gense/train_loop.hpp"

// Command implementations behind the `gense` executable. Each returns the
// process exit code or throws a gense::Error whose code() is the exit code.
namespace gense::cli {

using Real = float;

struct TrainFlags {
  bool resume = false;
  bool force = false;
};

struct EnhanceFlags {
  fs::path in, out;
  std::optional<double> temperature;
  std::optional<int> n;
  std::optional<uint64_t> seed;
  std::optional<VariantKind> variant;
  bool force = false;
};

struct EvalFlags {
  std::optional<VariantKind> variant;  // evaluate only
  std::optional<bool> inject_mutant;
  bool force = false;
};

// ---------------------------------------------------------------- helpers

inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline void write_file(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os || !(os << text)) throw DataError("cannot write " + p.string());
}

// Config text verbatim, plus any environment overrides next to it.
inline void echo_config(const fs::path& dir, const RunConfig& c) {
  write_file(dir / "config.txt", c.text);
  if (!c.overrides.empty()) {
    std::string s;
    for (const auto& o : c.overrides) s += o + "\n";
    write_file(dir / "overrides.txt", s);
  }
}

inline void refuse_overwrite(const std::vector<fs::path>& outputs, bool force) {
  if (force) return;
  for (const auto& p : outputs)
    if (fs::exists(p)) throw ConfigError(p.string() + " already exists; pass --force to overwrite it");
}

// Exclusive advisory lock on <dir>/.lock for the lifetime of the object.
class DirLock {
 public:
  explicit DirLock(const fs::path& dir) : path_(dir / ".lock") {
    fs::create_directories(dir);
    fd_ = ::open(path_.c_str(), O_CREAT | O_RDWR, 0644);
    if (fd_ < 0) throw DataError("cannot open lock file " + path_.string());
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      throw DataError("another gense process holds " + path_.string());
    }
  }
  ~DirLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  fs::path path_;
  int fd_ = -1;
};

struct CorpusSplit {
  std::vector<data::PairedExample> train, heldout;
};

// The corpus manifest's rows; the last training.heldout rows are held out.
inline CorpusSplit load_training_corpus(const RunConfig& c) {
  const fs::path manifest = c.corpus_manifest();
  if (!fs::exists(manifest))
    throw DataError("no corpus manifest at " + manifest.string() + "; create one with `gense synth-data --config " +
                    c.config_hint() + "`");
  auto all = data::load_corpus(manifest);
  if (static_cast<int>(all.size()) <= c.training.heldout)
    throw ConfigError("training.heldout (" + std::to_string(c.training.heldout) +
                      ") leaves no training utterances in a corpus of " + std::to_string(all.size()));
  CorpusSplit s;
  const size_t cut = all.size() - static_cast<size_t>(c.training.heldout);
  s.train.assign(std::make_move_iterator(all.begin()), std::make_move_iterator(all.begin() + cut));
  s.heldout.assign(std::make_move_iterator(all.begin() + cut), std::make_move_iterator(all.end()));
  return s;
}

inline std::unique_ptr<codec::Codec<Real>> require_codec(const RunConfig& c) {
  const fs::path p = c.codec_checkpoint();
  if (!fs::exists(p))
    throw DataError("no codec checkpoint at " + p.string() + "; train the codec first with `gense train-codec --config " +
                    c.config_hint() + "`");
  return codec::load_codec<Real>(p.string());
}

inline void check_generator_matches(const gen::GeneratorConfig& g, const codec::CodecConfig& c) {
  if (g.groups != c.groups || g.codewords != c.codewords)
    throw ConfigError("generator.groups/codewords (" + std::to_string(g.groups) + "/" + std::to_string(g.codewords) +
                      ") must match the codec (" + std::to_string(c.groups) + "/" + std::to_string(c.codewords) + ")");
}

inline uint64_t codec_fingerprint(const codec::Codec<Real>* codec) { return codec ? codec->params().fingerprint() : 0; }

// Loads a trained variant, checking that it was trained against `codec`.
inline void require_variant(const RunConfig& c, VariantKind k, const codec::Codec<Real>* codec,
                            ablate::VariantModels<Real>& m) {
  const fs::path p = c.variant_checkpoint(k);
  const std::string name = ablate::variant_name(k);
  if (!fs::exists(p))
    throw DataError("no checkpoint for variant '" + name + "' at " + p.string() + "; train it with `gense train-gen --variant " +
                    name + " --config " + c.config_hint() + "`");
  const auto h = ablate::load_variant(p.string(), m);
  if (h.kind != k) throw DataError(p.string() + " holds variant '" + ablate::variant_name(h.kind) + "', not '" + name + "'");
  if (k != VariantKind::kMask && h.codec_fingerprint != codec_fingerprint(codec))
    throw DataError(p.string() + " was trained against a different codec checkpoint; retrain it with `gense train-gen --variant " +
                    name + " --config " + c.config_hint() + "`");
}

inline nn::Tensor<Real> first_frames(const nn::Tensor<Real>& planes, int frames) {
  const int n = std::min(frames, planes.dim(0));
  nn::Tensor<Real> out({n, planes.dim(1), 2});
  std::copy(planes.data(), planes.data() + out.numel(), out.data());
  return out;
}

inline std::string snr_histogram(const std::vector<data::ManifestRow>& rows) {
  std::vector<int> counts(5, 0);
  double sum = 0, lo = INFINITY, hi = -INFINITY;
  for (const auto& r : rows) {
    const int b = std::clamp(static_cast<int>(std::floor((r.snr_db + 5.0) / 5.0)), 0, 4);
    ++counts[b];
    sum += r.snr_db;
    lo = std::min(lo, r.snr_db);
    hi = std::max(hi, r.snr_db);
  }
  std::string s;
  char buf[128];
  std::snprintf(buf, sizeof buf, "realized SNR over %zu pairs: mean %.2f dB, min %.2f dB, max %.2f dB\n", rows.size(),
                rows.empty() ? 0.0 : sum / rows.size(), rows.empty() ? 0.0 : lo, rows.empty() ? 0.0 : hi);
  s += buf;
  for (int b = 0; b < 5; ++b) {
    std::snprintf(buf, sizeof buf, "  [%3d, %3d%c %4d  ", -5 + 5 * b, 5 * b, b == 4 ? ']' : ')', counts[b]);
    s += buf + std::string(static_cast<size_t>(counts[b]), '#') + "\n";
  }
  return s;
}

// ---------------------------------------------------------------- commands

inline int synth_data(const RunConfig& c, bool force, std::ostream& out) {
  const fs::path dir = c.paths.corpus;
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!force) throw ConfigError("corpus directory " + dir.string() + " is not empty; pass --force to regenerate it");
    for (const char* name : {"clean", "noisy", "manifest.tsv", "snr_histogram.txt", "config.txt", "overrides.txt"})
      fs::remove_all(dir / name);
  }
  std::optional<data::SpeechSource> speech;
  data::CorpusOptions opt = c.data.corpus;
  if (!c.data.speech_dir.empty()) {
    speech.emplace(c.data.speech_dir);
    opt.speech = &*speech;
  }
  fs::create_directories(dir);
  const auto rows = data::build_corpus(static_cast<size_t>(c.data.n), c.data.seed, dir, opt);
  const std::string hist = snr_histogram(rows);
  write_file(dir / "snr_histogram.txt", hist);
  echo_config(dir, c);
  out << "wrote " << rows.size() << " pairs to " << dir.string() << "\n" << hist;
  return 0;
}

inline int train_codec(const RunConfig& c, const TrainFlags& f, std::ostream& out) {
  const auto split = load_training_corpus(c);
  const fs::path dir = c.codec_dir(), ckpt = c.codec_checkpoint(), log = dir / "loss.tsv";
  if (fs::exists(ckpt) && !f.resume && !f.force)
    throw ConfigError(ckpt.string() + " already exists; pass --resume to continue training or --force to start over");
  DirLock lock(dir);

  codec::Codec<Real> model(c.codec, nn::derive_seed(c.training.seed, "codec.init"));
  codec::CodecTrainOptions o;
  o.batch_size = c.training.batch_size;
  o.segment_frames = c.training.codec_segment_frames;
  o.adam.lr = c.training.codec_lr;
  o.adam.clip_norm = c.training.clip_norm;
  o.seed = c.training.seed;
  codec::CodecTrainer<Real> tr(model, o);

  std::vector<nn::Tensor<Real>> planes;
  int64_t frames = 0;
  for (const auto& p : split.train) {
    planes.push_back(model.analyze(p.clean));
    frames += planes.back().dim(0);
  }
  const std::string header = "[codec]\n" + c.codec.to_text();
  const std::string log_header = "step\ttotal\tmagnitude\tcomplex\tvq\tgrad_norm\theldout_si_snr_db\theldout_lsd_db";
  if (f.resume && fs::exists(ckpt)) {
    const auto ck = nn::load_checkpoint(ckpt.string());
    if (ck.header != header)
      throw ConfigError(ckpt.string() + " was trained with a different [codec] config; pass --force to start over");
    model.load(ck);
    tr.load_state(ck);
    truncate_log(log, log_header, tr.steps());
    out << "resuming codec training at step " << tr.steps() << "\n";
  } else {
    write_file(log, log_header + "\n");
  }
  echo_config(dir, c);

  TrainingLoop loop;
  loop.opt = {c.training.steps_for(frames, c.training.codec_segment_frames), c.training.log_every,
              c.training.checkpoint_every};
  loop.steps_done = [&] { return tr.steps(); };
  loop.step = [&] {
    const auto l = tr.step(planes);
    return fmt(l.total) + "\t" + fmt(l.magnitude) + "\t" + fmt(l.complex) + "\t" + fmt(l.vq) + "\t" + fmt(l.grad_norm);
  };
  loop.heldout = [&] {
    if (split.heldout.empty()) return std::string("nan\tnan");
    double si = 0, ls = 0;
    for (const auto& p : split.heldout) {
      const auto y = model.roundtrip(p.clean);
      si += eval::si_snr(y, p.clean) / split.heldout.size();
      ls += eval::lsd(y, p.clean) / split.heldout.size();
    }
    return fmt(si) + "\t" + fmt(ls);
  };
  loop.save = [&] {
    nn::Checkpoint ck;
    ck.header = header;
    model.save(ck);
    tr.save_state(ck);
    nn::save_checkpoint(ckpt.string(), ck);
  };
  std::ofstream logf(log, std::ios::app);
  out << log_header << "\n";
  loop.run(logf, &out);
  out << "codec checkpoint: " << ckpt.string() << " (" << tr.steps() << " steps)\n";
  return 0;
}

inline int train_gen(const RunConfig& c, VariantKind kind, const TrainFlags& f, std::ostream& out) {
  const auto split = load_training_corpus(c);
  std::unique_ptr<codec::Codec<Real>> codec;
  if (kind != VariantKind::kMask) {
    codec = require_codec(c);
    check_generator_matches(c.generator, codec->config());
  }
  const codec::CodecConfig geom = codec ? codec->config() : c.codec;
  const uint64_t fp = codec_fingerprint(codec.get());
  const fs::path dir = c.variant_dir(kind), ckpt = c.variant_checkpoint(kind), log = dir / "loss.tsv";
  if (fs::exists(ckpt) && !f.resume && !f.force)
    throw ConfigError(ckpt.string() + " already exists; pass --resume to continue training or --force to start over");
  DirLock lock(dir);

  ablate::VariantModels<Real> m;
  m.create(kind, c.generator, geom, c.training.seed);
  gen::SeqTrainOptions so;
  so.batch_size = c.training.batch_size;
  so.segment_tokens = c.training.segment_tokens;
  so.adam.lr = c.training.lr;
  so.adam.clip_norm = c.training.clip_norm;
  so.seed = c.training.seed;
  const std::string header = ablate::variant_header(kind, c.generator, geom, fp);
  const std::string log_header = "step\tloss\taccuracy\tgrad_norm\theldout_loss\theldout_accuracy";

  auto train = [&](auto& model, const auto& train_ex, const auto& all_held) {
    using Model = std::decay_t<decltype(model)>;
    using Ex = typename std::decay_t<decltype(train_ex)>::value_type;
    gen::SeqTrainer<Real, Model, Ex> tr(model, so, geom.combine);
    // Held-out micro-set: the first training length of each held-out utterance.
    std::vector<Ex> held;
    for (const auto& ex : all_held)
      held.push_back(crop_example(ex, 0, std::min(example_tokens(ex), so.segment_tokens), geom.combine));
    if (f.resume && fs::exists(ckpt)) {
      const auto ck = nn::load_checkpoint(ckpt.string());
      if (ck.header != header)
        throw ConfigError(ckpt.string() + " was trained with a different model config or codec; pass --force to start over");
      ck.load_params(model.params());
      tr.load_state(ck);
      truncate_log(log, log_header, tr.steps());
      out << "resuming " << ablate::variant_name(kind) << " training at step " << tr.steps() << "\n";
    } else {
      write_file(log, log_header + "\n");
    }
    echo_config(dir, c);
    int64_t tokens = 0;
    for (const auto& ex : train_ex) tokens += example_tokens(ex);
    TrainingLoop loop;
    loop.opt = {c.training.steps_for(tokens, so.segment_tokens), c.training.log_every, c.training.checkpoint_every};
    loop.steps_done = [&] { return tr.steps(); };
    loop.step = [&] {
      const auto r = tr.step(train_ex);
      return fmt(r.loss) + "\t" + fmt(r.accuracy) + "\t" + fmt(r.grad_norm);
    };
    loop.heldout = [&] {
      if (held.empty()) return std::string("nan\tnan");
      const auto r = tr.evaluate(held);
      return fmt(r.loss) + "\t" + fmt(r.accuracy);
    };
    loop.save = [&] {
      ablate::save_variant<Real>(ckpt.string(), m, kind, c.generator, geom, fp,
                                 [&](nn::Checkpoint& ck) { tr.save_state(ck); });
    };
    std::ofstream logf(log, std::ios::app);
    out << log_header << "\n";
    loop.run(logf, &out);
    out << ablate::variant_name(kind) << " checkpoint: " << ckpt.string() << " (" << tr.steps() << " steps)\n";
  };

  if (kind == VariantKind::kMask) {
    std::vector<ablate::SpectralExample<Real>> tr_ex, held_ex;
    for (const auto& p : split.train) tr_ex.push_back(ablate::make_spectral_example<Real>(p, geom));
    for (const auto& p : split.heldout) held_ex.push_back(ablate::make_spectral_example<Real>(p, geom));
    train(*m.mask, tr_ex, held_ex);
    return 0;
  }
  const auto tr_ex = gen::make_token_examples(*codec, split.train);
  const auto held_ex = gen::make_token_examples(*codec, split.heldout);
  switch (kind) {
    case VariantKind::kAligned: train(*m.aligned, tr_ex, held_ex); break;
    case VariantKind::kPrefix: train(*m.prefix, tr_ex, held_ex); break;
    case VariantKind::kNar: train(*m.nar, tr_ex, held_ex); break;
    case VariantKind::kMask: break;
  }
  return 0;
}

inline int enhance(const RunConfig& c, const EnhanceFlags& f, std::ostream& out, std::ostream& err) {
  if (f.in.empty() || !fs::exists(f.in)) throw DataError("input '" + f.in.string() + "' not found");
  if (f.out.empty()) throw ConfigError("--out is required");
  gen::InferenceConfig inf = c.inference.cfg;
  if (f.temperature) inf.temperature = *f.temperature;
  if (f.n) inf.num_inferences = *f.n;
  if (f.seed) inf.seed = *f.seed;
  inf.validate();
  const VariantKind kind = f.variant.value_or(c.inference.variant);

  std::vector<fs::path> inputs;
  if (fs::is_directory(f.in)) {
    if (fs::exists(f.out) && fs::equivalent(f.in, f.out)) throw ConfigError("--out must differ from the input directory");
    for (const auto& e : fs::directory_iterator(f.in))
      if (e.is_regular_file() && e.path().extension() == ".wav") inputs.push_back(e.path());
    std::sort(inputs.begin(), inputs.end());
    if (inputs.empty()) throw DataError("no .wav files in " + f.in.string());
  } else {
    inputs.push_back(f.in);
  }

  std::unique_ptr<codec::Codec<Real>> codec;
  if (kind != VariantKind::kMask) codec = require_codec(c);
  ablate::VariantModels<Real> m;
  require_variant(c, kind, codec.get(), m);

  std::vector<fs::path> outputs = {f.out / "enhance.log", f.out / "config.txt"};
  for (const auto& p : inputs) outputs.push_back(f.out / p.filename());
  refuse_overwrite(outputs, f.force);
  fs::create_directories(f.out);

  std::string log = "file\tstatus\tchosen\tcandidate_scores\tdetail\n";
  int failed = 0;
  for (const auto& p : inputs) {
    const std::string name = p.filename().string();
    try {
      const auto w = signal::load_wav(p.string());
      const auto e = ablate::enhance_variant(m, kind, codec.get(), w, inf.num_inferences, inf.temperature,
                                             nn::derive_seed(inf.seed, "file:" + name));
      signal::save_wav((f.out / name).string(), e.audio);
      std::string scores;
      for (size_t i = 0; i < e.scores.size(); ++i) scores += (i ? "," : "") + eval::format_double(e.scores[i]);
      char dur[64];
      std::snprintf(dur, sizeof dur, "%.3f s", static_cast<double>(w.size()) / signal::kSampleRate);
      log += name + "\tok\t" + std::to_string(e.chosen) + "\t" + scores + "\t" + dur + "\n";
    } catch (const Error& e) {
      ++failed;
      err << name << ": " << e.what() << "\n";
      log += name + "\terror\t\t\t" + e.what() + "\n";
    }
  }
  write_file(f.out / "enhance.log", log);
  echo_config(f.out, c);
  out << "enhanced " << inputs.size() - failed << " of " << inputs.size() << " files with variant "
      << ablate::variant_name(kind) << " into " << f.out.string() << "\n";
  return failed ? static_cast<int>(ExitCode::kData) : 0;
}

// Range checks on enhancement outputs, reported alongside the probes.
struct RangeTally {
  eval::ProbeSummary finite{"output_finite", 0, 0};
  eval::ProbeSummary codes{"codes_in_range", 0, 0};

  void add(const gen::Enhanced& e, int codewords) {
    ++finite.total;
    finite.passed += std::all_of(e.audio.samples.begin(), e.audio.samples.end(), [](float v) { return std::isfinite(v); });
    ++codes.total;
    bool ok = true;
    for (int t = 0; t < e.codes.frames(); ++t)
      for (int k = 0; k < e.codes.groups(); ++k) ok &= e.codes.at(t, k) >= 0 && e.codes.at(t, k) < codewords;
    codes.passed += ok;
  }
};

inline int report_probes(const std::vector<eval::ProbeSummary>& probes, std::ostream& out, std::ostream& err) {
  out << eval::probes_tsv(probes);
  if (eval::all_ok(probes)) return 0;
  err << "invariant probes failed\n";
  return static_cast<int>(ExitCode::kValidation);
}

inline int evaluate(const RunConfig& c, const EvalFlags& f, std::ostream& out, std::ostream& err) {
  const VariantKind kind = f.variant.value_or(c.inference.variant);
  const bool mutant = f.inject_mutant.value_or(c.evaluate.inject_mutant);
  const fs::path manifest = c.eval_manifest();
  if (!fs::exists(manifest)) throw DataError("evaluation manifest " + manifest.string() + " not found");
  const auto codec = require_codec(c);
  ablate::VariantModels<Real> m;
  require_variant(c, kind, codec.get(), m);
  const auto rows = data::read_manifest(manifest);
  const auto pairs = data::load_corpus(manifest);
  if (pairs.empty()) throw DataError("evaluation manifest " + manifest.string() + " has no rows");

  const fs::path dir = c.paths.reports / "evaluate" / ablate::variant_name(kind);
  refuse_overwrite({dir / "report.tsv", dir / "probes.tsv", dir / "latency.txt", dir / "config.txt"}, f.force);
  fs::create_directories(dir);

  const auto& inf = c.inference.cfg;
  eval::MetricReport report;
  report.variant = ablate::variant_name(kind);
  report.seed = inf.seed;
  RangeTally range;
  for (size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    const auto e = ablate::enhance_variant(m, kind, codec.get(), p.noisy, inf.num_inferences, inf.temperature,
                                           nn::derive_seed(inf.seed, "utterance", i));
    eval::UtteranceMetrics u;
    u.id = fs::path(rows[i].noisy_path).stem().string();
    u.si_snr_db = eval::si_snr(e.audio, p.clean);
    u.lsd_db = eval::lsd(e.audio, p.clean);
    u.token_accuracy = eval::token_accuracy(e.codes, codec->encode_codes(p.clean));
    u.chosen = e.chosen;
    u.candidate_scores = e.scores;
    report.rows.push_back(u);
    range.add(e, codec->config().codewords);
  }

  const auto planes = first_frames(codec->analyze(pairs.front().noisy), c.evaluate.probe_frames);
  auto probes = eval::run_probe_suite<Real>(*codec, planes, c.evaluate.probes, nn::derive_seed(inf.seed, "probes"),
                                            mutant, m.aligned.get(), m.prefix.get(), m.nar.get(), m.mask.get());
  probes.push_back(range.finite);
  probes.push_back(range.codes);

  report.write((dir / "report.tsv").string());
  write_file(dir / "probes.tsv", eval::probes_tsv(probes));
  write_file(dir / "latency.txt", eval::latency_report(codec->config()).to_text());
  echo_config(dir, c);
  const auto a = report.aggregate();
  char buf[192];
  std::snprintf(buf, sizeof buf, "%s on %zu pairs: SI-SNR %.2f dB, LSD %.2f dB, token accuracy %.3f\n",
                report.variant.c_str(), report.rows.size(), a.si_snr_db, a.lsd_db, a.token_accuracy);
  out << buf << "report: " << (dir / "report.tsv").string() << "\n";
  return report_probes(probes, out, err);
}

inline ablate::SuiteOptions suite_options(const RunConfig& c) {
  ablate::SuiteOptions o;
  o.model = c.generator;
  o.train.batch_size = c.training.batch_size;
  o.train.segment_tokens = c.training.segment_tokens;
  o.train.adam.lr = c.training.lr;
  o.train.adam.clip_norm = c.training.clip_norm;
  o.train.seed = c.training.seed;
  o.steps = c.ablation.steps;
  o.data_seed = c.data.seed;
  o.train_utterances = c.ablation.train_utterances;
  o.heldout_utterances = c.ablation.heldout_utterances;
  o.corpus = c.data.corpus;
  o.length_factors = c.ablation.length_factors;
  o.temperature = c.inference.cfg.temperature;
  o.num_inferences = c.ablation.num_inferences;
  o.infer_seed = c.inference.cfg.seed;
  o.variants = c.ablation.variants;
  return o;
}

inline int ablate_cmd(const RunConfig& c, const EvalFlags& f, std::ostream& out, std::ostream& err) {
  const bool mutant = f.inject_mutant.value_or(c.evaluate.inject_mutant);
  const auto codec = require_codec(c);
  check_generator_matches(c.generator, codec->config());
  ablate::VariantModels<Real> m;
  if (c.ablation.source == "checkpoints")
    for (auto k : c.ablation.variants) require_variant(c, k, codec.get(), m);

  const fs::path dir = c.paths.reports / "ablation";
  std::vector<fs::path> outputs = {dir / "ablation.tsv", dir / "ablation_lengths.tsv", dir / "ablation_summary.txt",
                                   dir / "probes.tsv", dir / "config.txt"};
  for (auto k : c.ablation.variants) outputs.push_back(dir / ("report_" + ablate::variant_name(k) + ".tsv"));
  refuse_overwrite(outputs, f.force);
  fs::create_directories(dir);

  const auto o = suite_options(c);
  const auto result = ablate::run_ablation_suite(*codec, o, m);
  const auto held = ablate::heldout_pairs(o, codec->config());
  const auto planes = first_frames(codec->analyze(held.front().noisy), c.evaluate.probe_frames);
  const auto probes = eval::run_probe_suite<Real>(*codec, planes, c.evaluate.probes,
                                                  nn::derive_seed(o.infer_seed, "probes"), mutant, m.aligned.get(),
                                                  m.prefix.get(), m.nar.get(), m.mask.get());

  write_file(dir / "ablation.tsv", result.table_tsv());
  write_file(dir / "ablation_lengths.tsv", result.lengths_tsv());
  write_file(dir / "ablation_summary.txt", result.summary());
  write_file(dir / "probes.tsv", eval::probes_tsv(probes));
  for (const auto& r : result.rows) r.report.write((dir / ("report_" + ablate::variant_name(r.kind) + ".tsv")).string());
  echo_config(dir, c);
  out << result.summary();
  return report_probes(probes, out, err);
}

}  // namespace gense::cli
