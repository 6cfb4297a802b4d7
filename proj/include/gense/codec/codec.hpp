// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gense/codec/config.hpp"
#include "gense/codec/quantizer.hpp"
#include "gense/nn/checkpoint.hpp"
#include "gense/nn/layers.hpp"
#include "gense/signal/compress.hpp"

namespace gense::codec {

// Causal conv stack + TCM + GRU front half shared by the codec encoder and
// the generator's noisy-feature extractor: [T, F, 2] planes -> [T, width].
template <class T>
class CausalFeatureStack {
 public:
  CausalFeatureStack() = default;
  CausalFeatureStack(nn::ParamStore<T>& ps, const std::string& name, const CodecConfig& c, int tcm_channels,
                     int tcm_mid, bool with_gru, int gru_width)
      : cfg_(c), width_(with_gru ? gru_width : tcm_channels) {
    int cin = 2;
    for (size_t i = 0; i < c.channels.size(); ++i) {
      convs_.emplace_back(ps, name + ".conv" + std::to_string(i), cin, c.channels[i], c.kernel_t, c.kernel_f,
                          c.strides[i]);
      cin = c.channels[i];
    }
    proj_ = nn::Linear<T>(ps, name + ".proj", c.flat_dim(), tcm_channels);
    for (size_t i = 0; i < c.dilations.size(); ++i)
      tcms_.emplace_back(ps, name + ".tcm" + std::to_string(i), tcm_channels, tcm_mid, c.tcm_kernel, c.dilations[i]);
    if (with_gru) gru_ = std::make_shared<nn::Gru<T>>(ps, name + ".gru", tcm_channels, gru_width);
  }

  int width() const { return width_; }

  Var<T> operator()(const Var<T>& planes) const {
    const int frames = planes.value().dim(0);
    Var<T> x = planes;
    for (const auto& conv : convs_) x = nn::elu(conv(x));
    Var<T> h = proj_(nn::reshape(x, {frames, cfg_.flat_dim()}));
    for (const auto& tcm : tcms_) h = tcm(h);
    if (gru_) h = (*gru_)(h);
    return h;
  }

 private:
  CodecConfig cfg_;
  int width_ = 0;
  std::vector<nn::CausalConv2d<T>> convs_;
  nn::Linear<T> proj_;
  std::vector<nn::TcmBlock<T>> tcms_;
  std::shared_ptr<nn::Gru<T>> gru_;
};

// Groups `combine` consecutive frames into one row (zero-padded tail):
// [T, C] -> [ceil(T/combine), combine*C].
template <class T>
Var<T> combine_frames(const Var<T>& x, int combine) {
  const int frames = x.rows(), C = x.cols();
  const int tc = (frames + combine - 1) / combine;
  Var<T> padded = x;
  if (tc * combine != frames)
    padded = nn::concat_rows<T>({x, nn::constant(Tensor<T>({tc * combine - frames, C}))});
  return nn::reshape(padded, {tc, combine * C});
}

template <class T>
struct CodecForward {
  Var<T> latent;     // [Tc, K*code_dim]
  QuantizeResult<T> q;
  Var<T> planes;     // [T, F, 2] reconstruction
};

// Scaled-down time-frequency codec: causal encoder, K-group VQ at one token
// per `combine` frames, mirrored causal decoder.
template <class T>
class Codec {
 public:
  explicit Codec(const CodecConfig& cfg, uint64_t seed = 0) : cfg_(cfg), ps_(seed) {
    cfg_.validate();
    const auto& c = cfg_;
    enc_ = CausalFeatureStack<T>(ps_, "enc", c, c.tcm_channels, c.tcm_mid, true, c.gru_width);
    enc_out_ = nn::Linear<T>(ps_, "enc.out", c.combine * c.gru_width, c.latent_dim());
    vq_ = GroupQuantizer<T>(ps_, "vq", c.groups, c.codewords, c.code_dim, c.ema_decay > 0.0);
    dec_in_ = nn::Linear<T>(ps_, "dec.in", c.latent_dim(), c.combine * c.gru_width);
    dec_gru_ = nn::Gru<T>(ps_, "dec.gru", c.gru_width, c.tcm_channels);
    for (size_t i = 0; i < c.dilations.size(); ++i)
      dec_tcms_.emplace_back(ps_, "dec.tcm" + std::to_string(i), c.tcm_channels, c.tcm_mid, c.tcm_kernel,
                             c.dilations[i]);
    dec_proj_ = nn::Linear<T>(ps_, "dec.proj", c.tcm_channels, c.flat_dim());
    const int L = static_cast<int>(c.channels.size());
    for (int i = L - 1; i >= 0; --i) {
      const int cout = i == 0 ? 2 : c.channels[i - 1];
      dec_convs_.emplace_back(ps_, "dec.deconv" + std::to_string(i), c.channels[i], cout, c.kernel_t, c.kernel_f,
                              c.strides[i]);
    }
  }

  const CodecConfig& config() const { return cfg_; }
  nn::ParamStore<T>& params() { return ps_; }
  const nn::ParamStore<T>& params() const { return ps_; }
  GroupQuantizer<T>& quantizer() { return vq_; }
  const GroupQuantizer<T>& quantizer() const { return vq_; }

  // [T, F, 2] compressed planes -> [ceil(T/4), K*code_dim] latent. Latent
  // frame tau depends on spectral frames <= 4*tau + 3 only.
  Var<T> encode(const Var<T>& planes) const {
    check_planes(planes.value());
    const int frames = planes.value().dim(0);
    if (frames == 0) return nn::constant(Tensor<T>({0, cfg_.latent_dim()}));
    return enc_out_(combine_frames(enc_(planes), cfg_.combine));
  }

  // [Tc, K*code_dim] -> [4*Tc, F, 2] planes, cropped to `frames` if >= 0.
  Var<T> decode(const Var<T>& latent, int frames = -1) const {
    const int tc = latent.rows();
    if (latent.value().ndim() != 2 || latent.cols() != cfg_.latent_dim())
      throw DimensionError("decoder latent must be [Tc, " + std::to_string(cfg_.latent_dim()) + "], got " +
                           shape_str(latent.shape()));
    const int full = tc * cfg_.combine;
    if (frames < 0) frames = full;
    if (frames > full) throw DimensionError("cannot crop " + std::to_string(full) + " frames to " + std::to_string(frames));
    const auto widths = cfg_.widths();
    if (tc == 0) return nn::constant(Tensor<T>({0, widths.front(), 2}));
    Var<T> h = nn::reshape(dec_in_(latent), {full, cfg_.gru_width});
    h = dec_gru_(h);
    for (const auto& tcm : dec_tcms_) h = tcm(h);
    const int L = static_cast<int>(cfg_.channels.size());
    Var<T> x = nn::reshape(dec_proj_(h), {full, widths.back(), cfg_.channels.back()});
    for (int j = 0; j < L; ++j) {
      const int i = L - 1 - j;
      x = dec_convs_[j](nn::elu(x), widths[i]);
    }
    if (frames == full) return x;
    return nn::reshape(nn::slice_rows(nn::reshape(x, {full, widths.front() * 2}), 0, frames),
                       {frames, widths.front(), 2});
  }

  CodecForward<T> forward(const Var<T>& planes) const {
    CodecForward<T> f;
    f.latent = encode(planes);
    f.q = vq_.quantize(f.latent, T(cfg_.beta));
    f.planes = decode(f.q.quantized, planes.value().dim(0));
    return f;
  }

  Tensor<T> analyze(const signal::Waveform& w) const {
    return signal::analyze<T>(w, cfg_.alpha, {cfg_.window, cfg_.hop});
  }
  signal::Waveform synthesize(const Tensor<T>& planes, long length) const {
    return signal::synthesize(planes, length, cfg_.alpha, {cfg_.window, cfg_.hop});
  }

  CodeSequence encode_codes_from_planes(const Tensor<T>& planes) const {
    nn::NoGradGuard ng;
    return vq_.assign(encode(nn::constant(planes)).value());
  }
  CodeSequence encode_codes(const signal::Waveform& w) const {
    nn::NoGradGuard ng;
    return vq_.assign(encode(nn::constant(analyze(w))).value());
  }

  Tensor<T> dequantize(const CodeSequence& codes) const { return vq_.lookup(codes); }

  // Codes -> waveform of 4*Tc*hop samples, or `length` samples when given.
  signal::Waveform decode_codes(const CodeSequence& codes, long length = -1) const {
    nn::NoGradGuard ng;
    const Tensor<T> planes = decode(nn::constant(dequantize(codes))).value();
    if (length < 0) length = static_cast<long>(planes.dim(0)) * cfg_.hop;
    return synthesize(planes, length);
  }

  // Copy synthesis: encode -> quantize -> dequantize -> decode.
  signal::Waveform roundtrip(const signal::Waveform& w) const {
    return decode_codes(encode_codes(w), static_cast<long>(w.size()));
  }

  void save(nn::Checkpoint& ck, const std::string& prefix = "codec.") const {
    ck.add_params(ps_, prefix);
    vq_.save_state(ck, prefix + "vq.");
  }
  void load(const nn::Checkpoint& ck, const std::string& prefix = "codec.") {
    ck.load_params(ps_, prefix);
    vq_.load_state(ck, prefix + "vq.");
  }

 private:
  void check_planes(const Tensor<T>& p) const {
    if (p.ndim() != 3 || p.dim(1) != cfg_.bins() || p.dim(2) != 2)
      throw DimensionError("codec input must be [T, " + std::to_string(cfg_.bins()) + ", 2], got " +
                           shape_str(p.shape()));
  }

  CodecConfig cfg_;
  nn::ParamStore<T> ps_;
  CausalFeatureStack<T> enc_;
  nn::Linear<T> enc_out_;
  GroupQuantizer<T> vq_;
  nn::Linear<T> dec_in_;
  nn::Gru<T> dec_gru_;
  std::vector<nn::TcmBlock<T>> dec_tcms_;
  nn::Linear<T> dec_proj_;
  std::vector<nn::CausalConvTranspose2d<T>> dec_convs_;
};

// Standalone codec checkpoint: header holds the config text.
template <class T>
void save_codec(const std::string& path, const Codec<T>& codec, const std::string& extra_header = "") {
  nn::Checkpoint ck;
  ck.header = "[codec]\n" + codec.config().to_text() + extra_header;
  codec.save(ck);
  nn::save_checkpoint(path, ck);
}

inline CodecConfig codec_config_from_header(const std::string& header) {
  const auto secs = config::parse_sections(header, "checkpoint header");
  const auto* sec = config::find_section(secs, "codec");
  if (!sec) throw FormatError("checkpoint header has no [codec] section");
  return CodecConfig::from_values(sec->values);
}

template <class T>
std::unique_ptr<Codec<T>> load_codec(const std::string& path) {
  const auto ck = nn::load_checkpoint(path);
  auto codec = std::make_unique<Codec<T>>(codec_config_from_header(ck.header));
  codec->load(ck);
  return codec;
}

}  // namespace gense::codec
