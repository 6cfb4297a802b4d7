// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gense/data/synth.hpp"

namespace gense::data {

namespace fs = std::filesystem;

// Optional real-speech source: every *.wav under a directory, sorted by path.
class SpeechSource {
 public:
  SpeechSource() = default;
  explicit SpeechSource(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw DataError("speech directory not found: " + dir.string());
    for (const auto& e : fs::recursive_directory_iterator(dir))
      if (e.is_regular_file() && e.path().extension() == ".wav") files_.push_back(e.path());
    std::sort(files_.begin(), files_.end());
    if (files_.empty()) throw DataError("no .wav files in " + dir.string());
  }

  bool empty() const { return files_.empty(); }
  size_t size() const { return files_.size(); }

  // Utterance `index` (modulo the file count), looped or cropped to duration.
  Waveform utterance(size_t index, double duration_s) const {
    const auto w = signal::load_wav(files_[index % files_.size()]);
    if (w.size() == 0) throw DataError("empty speech file " + files_[index % files_.size()].string());
    const size_t n = static_cast<size_t>(std::llround(duration_s * signal::kSampleRate));
    std::vector<float> out(n);
    for (size_t i = 0; i < n; ++i) out[i] = w.samples[i % w.size()];
    return Waveform(std::move(out));
  }

 private:
  std::vector<fs::path> files_;
};

struct CorpusOptions {
  double duration_s = 10.0;
  std::vector<NoiseKind> noise_kinds = {NoiseKind::kWhite, NoiseKind::kPink, NoiseKind::kBabble};
  double snr_min = MixSpec::kSnrMin, snr_max = MixSpec::kSnrMax;
  double level_min = MixSpec::kLevelMin, level_max = MixSpec::kLevelMax;
  const SpeechSource* speech = nullptr;

  void validate() const {
    if (!(duration_s > 0.0)) throw ConfigError("duration_s must be > 0");
    if (noise_kinds.empty()) throw ConfigError("noise_kinds must not be empty");
    if (!(snr_min >= MixSpec::kSnrMin && snr_max <= MixSpec::kSnrMax && snr_min <= snr_max))
      throw ConfigError("snr range [" + std::to_string(snr_min) + ", " + std::to_string(snr_max) +
                        "] must lie inside [-5, 20]");
    if (!(level_min >= MixSpec::kLevelMin && level_max <= MixSpec::kLevelMax && level_min <= level_max))
      throw ConfigError("level range [" + std::to_string(level_min) + ", " + std::to_string(level_max) +
                        "] must lie inside [-35, -15]");
  }
};

// Example i of a corpus with root seed s uses seed derive_seed(s, "example", i);
// every random choice for that example is derived from it, so examples can be
// produced independently and in any order.
inline uint64_t example_seed(uint64_t root, size_t index) { return nn::derive_seed(root, "example", index); }

inline PairedExample make_example(uint64_t root, size_t index, const CorpusOptions& opt = {}) {
  opt.validate();
  const uint64_t s = example_seed(root, index);
  nn::Rng rng(nn::derive_seed(s, "mix"));
  MixSpec spec;
  spec.snr_db = rng.uniform(opt.snr_min, opt.snr_max);
  spec.speech_level_dbfs = rng.uniform(opt.level_min, opt.level_max);
  spec.duration_s = opt.duration_s;
  spec.seed = s;
  spec.validate();
  const NoiseKind kind = opt.noise_kinds[rng.below(opt.noise_kinds.size())];
  const Waveform clean = opt.speech ? opt.speech->utterance(index, opt.duration_s)
                                    : gen_toy_speech(nn::derive_seed(s, "speech"), opt.duration_s);
  const Waveform noise = gen_noise(kind, nn::derive_seed(s, "noise"), opt.duration_s);
  return mix_at_snr(clean, noise, spec.snr_db, spec.speech_level_dbfs);
}

struct ManifestRow {
  std::string clean_path;
  std::string noisy_path;
  double snr_db = 0.0;
  double level_dbfs = 0.0;
  uint64_t seed = 0;
};

inline std::string format_manifest_row(const ManifestRow& r) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "\t%.6f\t%.6f\t", r.snr_db, r.level_dbfs);
  return r.clean_path + "\t" + r.noisy_path + buf + std::to_string(r.seed);
}

inline std::vector<ManifestRow> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  std::vector<ManifestRow> rows;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, '\t')) f.push_back(tok);
    if (f.size() != 5)
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected 5 tab-separated fields, got " +
                      std::to_string(f.size()));
    try {
      rows.push_back({f[0], f[1], std::stod(f[2]), std::stod(f[3]), std::stoull(f[4])});
    } catch (const std::logic_error&) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": malformed numeric field");
    }
  }
  return rows;
}

// Manifest paths are relative to the manifest's directory.
inline std::vector<PairedExample> load_corpus(const fs::path& manifest) {
  const auto base = manifest.parent_path();
  std::vector<PairedExample> out;
  for (const auto& r : read_manifest(manifest)) {
    PairedExample p;
    p.clean = signal::load_wav(base / r.clean_path);
    p.noisy = signal::load_wav(base / r.noisy_path);
    if (p.clean.size() != p.noisy.size())
      throw DataError("manifest pair " + r.clean_path + " / " + r.noisy_path + " has mismatched lengths");
    p.noise.samples.resize(p.clean.size());
    for (size_t i = 0; i < p.clean.size(); ++i) p.noise.samples[i] = p.noisy.samples[i] - p.clean.samples[i];
    p.snr_db = r.snr_db;
    p.level_dbfs = r.level_dbfs;
    out.push_back(std::move(p));
  }
  return out;
}

inline std::vector<PairedExample> make_examples(uint64_t root, size_t n, const CorpusOptions& opt = {}) {
  std::vector<PairedExample> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) out.push_back(make_example(root, i, opt));
  return out;
}

// Writes clean/NNNNN.wav, noisy/NNNNN.wav and manifest.tsv under out_dir.
inline std::vector<ManifestRow> build_corpus(size_t n, uint64_t seed, const fs::path& out_dir,
                                             const CorpusOptions& opt = {}) {
  opt.validate();
  fs::create_directories(out_dir / "clean");
  fs::create_directories(out_dir / "noisy");
  std::vector<ManifestRow> rows;
  std::ofstream manifest(out_dir / "manifest.tsv", std::ios::binary);
  if (!manifest) throw DataError("cannot write manifest under " + out_dir.string());
  for (size_t i = 0; i < n; ++i) {
    const auto ex = make_example(seed, i, opt);
    char name[32];
    std::snprintf(name, sizeof name, "%05zu.wav", i);
    ManifestRow r{std::string("clean/") + name, std::string("noisy/") + name, ex.snr_db, ex.level_dbfs,
                  example_seed(seed, i)};
    signal::save_wav(out_dir / r.clean_path, ex.clean);
    signal::save_wav(out_dir / r.noisy_path, ex.noisy);
    manifest << format_manifest_row(r) << '\n';
    rows.push_back(r);
  }
  return rows;
}

}  // namespace gense::data
