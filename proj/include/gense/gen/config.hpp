// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <sstream>
#include <string>

#include "gense/config_text.hpp"
#include "gense/error.hpp"

namespace gense::gen {

// Token generator hyperparameters. Desk-scale defaults; the extractor reuses
// the codec's conv/TCM geometry with its own width.
struct GeneratorConfig {
  int layers = 4;
  int heads = 4;
  int d_token = 128;
  int ff_dim = 512;
  double dropout = 0.1;
  int groups = 4;          // K, must match the codec
  int codewords = 64;      // V, must match the codec
  int feature_dim = 256;   // noisy feature width D (4 concatenated frames)
  int extractor_mid = 128; // TCM hidden width inside the extractor

  int group_embed_dim() const { return d_token / groups; }
  int classes() const { return codewords + 1; }  // index V is EOS
  int start_index() const { return codewords; }

  void validate() const {
    auto positive = [](const char* key, int v) {
      if (v <= 0) throw ConfigError(std::string("generator.") + key + " must be positive, got " + std::to_string(v));
    };
    positive("layers", layers);
    positive("heads", heads);
    positive("d_token", d_token);
    positive("ff_dim", ff_dim);
    positive("groups", groups);
    positive("codewords", codewords);
    positive("feature_dim", feature_dim);
    positive("extractor_mid", extractor_mid);
    if (d_token % groups != 0)
      throw ConfigError("generator.d_token (" + std::to_string(d_token) + ") must be divisible by groups (" +
                        std::to_string(groups) + ")");
    if (d_token % heads != 0)
      throw ConfigError("generator.d_token (" + std::to_string(d_token) + ") must be divisible by heads (" +
                        std::to_string(heads) + ")");
    if (d_token % 2 != 0) throw ConfigError("generator.d_token must be even for sinusoidal positions");
    if (feature_dim % 4 != 0) throw ConfigError("generator.feature_dim must be a multiple of 4");
    if (!(dropout >= 0 && dropout < 1)) throw ConfigError("generator.dropout must lie in [0, 1)");
  }

  std::string to_text() const {
    std::ostringstream os;
    os.precision(17);
    os << "layers = " << layers << "\nheads = " << heads << "\nd_token = " << d_token << "\nff_dim = " << ff_dim
       << "\ndropout = " << dropout << "\ngroups = " << groups << "\ncodewords = " << codewords
       << "\nfeature_dim = " << feature_dim << "\nextractor_mid = " << extractor_mid << "\n";
    return os.str();
  }

  bool set(const std::string& key, const std::string& value) {
    const std::string full = "generator." + key;
    if (key == "layers") layers = config::to_int(full, value);
    else if (key == "heads") heads = config::to_int(full, value);
    else if (key == "d_token") d_token = config::to_int(full, value);
    else if (key == "ff_dim") ff_dim = config::to_int(full, value);
    else if (key == "dropout") dropout = config::to_double(full, value);
    else if (key == "groups") groups = config::to_int(full, value);
    else if (key == "codewords") codewords = config::to_int(full, value);
    else if (key == "feature_dim") feature_dim = config::to_int(full, value);
    else if (key == "extractor_mid") extractor_mid = config::to_int(full, value);
    else return false;
    return true;
  }

  static GeneratorConfig from_values(const config::KeyValues& kv) {
    GeneratorConfig c;
    for (const auto& [k, v] : kv)
      if (!c.set(k, v)) throw ConfigError("unknown key 'generator." + k + "'");
    c.validate();
    return c;
  }
};

// Sampling settings for enhancement: best of `num_inferences` candidates
// drawn at `temperature`.
struct InferenceConfig {
  double temperature = 0.8;
  int num_inferences = 3;
  uint64_t seed = 0;

  void validate() const {
    if (!(temperature >= 0)) throw ConfigError("inference.temperature must be >= 0");
    if (num_inferences <= 0) throw ConfigError("inference.num_inferences must be positive");
  }
};

}  // namespace gense::gen
