// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "gense/config_text.hpp"
#include "gense/error.hpp"
#include "gense/nn/ops.hpp"

namespace gense::codec {


struct CodecConfig {
  int groups = 4;       // K
  int codewords = 64;   // V
  int code_dim = 16;
  std::vector<int> channels = {8, 16, 24, 24};
  std::vector<int> strides = {1, 4, 4, 2};
  int kernel_t = 2;
  int kernel_f = 5;
  int tcm_channels = 64;
  int tcm_mid = 128;
  int tcm_kernel = 3;
  std::vector<int> dilations = {1, 2, 4, 8};
  int gru_width = 64;
  int combine = 4;
  double beta = 0.25;       // commitment weight
  double lambda_p = 0.1;    // complex (phase-aware) loss weight
  double ema_decay = 0.99;  // 0 selects gradient-trained codebooks
  int dead_after = 200;     // steps without use before a codeword is re-seeded
  double alpha = 0.3;
  int window = 320;
  int hop = 80;

  int latent_dim() const { return groups * code_dim; }
  int bins() const { return window / 2 + 1; }

  // Frequency widths along the encoder: bins, then after each conv.
  std::vector<int> widths() const {
    std::vector<int> w = {bins()};
    for (int s : strides) w.push_back(nn::detail::conv_out_width(w.back(), s));
    return w;
  }
  int flat_dim() const { return widths().back() * channels.back(); }
  int token_frames(int frames) const { return (frames + combine - 1) / combine; }

  void validate() const {
    auto positive = [](const char* key, int v) {
      if (v <= 0) throw ConfigError(std::string("codec.") + key + " must be positive, got " + std::to_string(v));
    };
    positive("groups", groups);
    positive("codewords", codewords);
    positive("code_dim", code_dim);
    positive("kernel_t", kernel_t);
    positive("kernel_f", kernel_f);
    positive("tcm_channels", tcm_channels);
    positive("tcm_mid", tcm_mid);
    positive("tcm_kernel", tcm_kernel);
    positive("gru_width", gru_width);
    positive("window", window);
    positive("hop", hop);
    if (combine != 4) throw ConfigError("codec.combine is fixed at 4, got " + std::to_string(combine));
    if (codewords > 65535) throw ConfigError("codec.codewords must fit 16-bit code streams");
    if (channels.empty() || channels.size() != strides.size())
      throw ConfigError("codec.channels and codec.strides must be non-empty and equally long");
    for (int c : channels) positive("channels", c);
    for (int s : strides) positive("strides", s);
    for (int d : dilations) positive("dilations", d);
    if (!(beta >= 0)) throw ConfigError("codec.beta must be >= 0");
    if (!(lambda_p >= 0)) throw ConfigError("codec.lambda_p must be >= 0");
    if (!(ema_decay >= 0 && ema_decay <= 1)) throw ConfigError("codec.ema_decay must lie in [0, 1]");
    if (!(alpha > 0)) throw ConfigError("codec.alpha must be > 0");
    if (window <= hop) throw ConfigError("codec.window must exceed codec.hop");
  }

  std::string to_text() const {
    std::ostringstream os;
    os.precision(17);
    os << "groups = " << groups << "\ncodewords = " << codewords << "\ncode_dim = " << code_dim
       << "\nchannels = " << config::join(channels) << "\nstrides = " << config::join(strides)
       << "\nkernel_t = " << kernel_t << "\nkernel_f = " << kernel_f << "\ntcm_channels = " << tcm_channels
       << "\ntcm_mid = " << tcm_mid << "\ntcm_kernel = " << tcm_kernel << "\ndilations = " << config::join(dilations)
       << "\ngru_width = " << gru_width << "\ncombine = " << combine << "\nbeta = " << beta
       << "\nlambda_p = " << lambda_p << "\nema_decay = " << ema_decay << "\ndead_after = " << dead_after
       << "\nalpha = " << alpha << "\nwindow = " << window << "\nhop = " << hop << "\n";
    return os.str();
  }

  // Applies one key; returns false when the key is unknown.
  bool set(const std::string& key, const std::string& value) {
    auto as_int = [&] { return config::to_int("codec." + key, value); };
    auto as_double = [&] { return config::to_double("codec." + key, value); };
    if (key == "groups") groups = as_int();
    else if (key == "codewords") codewords = as_int();
    else if (key == "code_dim") code_dim = as_int();
    else if (key == "channels") channels = config::to_ints("codec.channels", value);
    else if (key == "strides") strides = config::to_ints("codec.strides", value);
    else if (key == "kernel_t") kernel_t = as_int();
    else if (key == "kernel_f") kernel_f = as_int();
    else if (key == "tcm_channels") tcm_channels = as_int();
    else if (key == "tcm_mid") tcm_mid = as_int();
    else if (key == "tcm_kernel") tcm_kernel = as_int();
    else if (key == "dilations") dilations = config::to_ints("codec.dilations", value);
    else if (key == "gru_width") gru_width = as_int();
    else if (key == "combine") combine = as_int();
    else if (key == "beta") beta = as_double();
    else if (key == "lambda_p") lambda_p = as_double();
    else if (key == "ema_decay") ema_decay = as_double();
    else if (key == "dead_after") dead_after = as_int();
    else if (key == "alpha") alpha = as_double();
    else if (key == "window") window = as_int();
    else if (key == "hop") hop = as_int();
    else return false;
    return true;
  }

  static CodecConfig from_values(const config::KeyValues& kv) {
    CodecConfig c;
    for (const auto& [k, v] : kv)
      if (!c.set(k, v)) throw ConfigError("unknown key 'codec." + k + "'");
    c.validate();
    return c;
  }

  // Parses the body written by to_text().
  static CodecConfig from_text(const std::string& text) {
    const auto secs = config::parse_sections(text, "codec config");
    if (secs.size() > 1 || (secs.size() == 1 && !secs[0].name.empty()))
      throw FormatError("codec config text must not contain sections");
    return from_values(secs.empty() ? config::KeyValues{} : secs[0].values);
  }
};

}  // namespace gense::codec
