// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <memory>
#include <string>

#include "gense/codec/codec.hpp"
#include "gense/gen/generator.hpp"

namespace gense::gen {

struct Enhanced {
  signal::Waveform audio;
  CodeSequence codes;
  std::vector<double> scores;  // per candidate
  int chosen = 0;
};

// Any token model with config() and geometry() accessors.
template <class T, class Model>
void check_compatible(const codec::Codec<T>& codec, const Model& gen) {
  const auto& c = codec.config();
  const auto& g = gen.config();
  if (c.groups != g.groups || c.codewords != g.codewords)
    throw ConfigError("generator expects K=" + std::to_string(g.groups) + ", V=" + std::to_string(g.codewords) +
                      " but the codec has K=" + std::to_string(c.groups) + ", V=" + std::to_string(c.codewords));
  if (c.bins() != gen.geometry().bins() || c.combine != gen.geometry().combine)
    throw ConfigError("generator extractor geometry does not match the codec front end");
}

// noisy -> compressed planes -> features -> best-of-n codes -> codec decode.
// The output has exactly the input's length.
template <class T>
Enhanced enhance(const codec::Codec<T>& codec, const Generator<T>& gen, const signal::Waveform& noisy, int n,
                 double temperature, uint64_t seed) {
  check_compatible(codec, gen);
  nn::NoGradGuard ng;
  const Tensor<T> feats = gen.features(nn::constant(codec.analyze(noisy))).value();
  BestOfN b = gen.best_of_n(feats, n, temperature, seed);
  Enhanced e;
  e.audio = codec.decode_codes(b.codes, static_cast<long>(noisy.size()));
  e.codes = std::move(b.codes);
  e.scores = std::move(b.scores);
  e.chosen = b.chosen;
  return e;
}

template <class T>
void save_generator(const std::string& path, const Generator<T>& gen, const std::string& extra_header = "") {
  nn::Checkpoint ck;
  ck.header = gen.header() + extra_header;
  gen.save(ck);
  nn::save_checkpoint(path, ck);
}

inline std::pair<GeneratorConfig, codec::CodecConfig> generator_configs_from_header(const std::string& header) {
  const auto secs = config::parse_sections(header, "checkpoint header");
  const auto* g = config::find_section(secs, "generator");
  const auto* x = config::find_section(secs, "extractor");
  if (!g || !x) throw FormatError("checkpoint header lacks [generator] or [extractor] section");
  return {GeneratorConfig::from_values(g->values), codec::CodecConfig::from_values(x->values)};
}

template <class T>
std::unique_ptr<Generator<T>> load_generator(const std::string& path) {
  const auto ck = nn::load_checkpoint(path);
  const auto [gc, geom] = generator_configs_from_header(ck.header);
  auto gen = std::make_unique<Generator<T>>(gc, geom);
  gen->load(ck);
  return gen;
}

}  // namespace gense::gen
