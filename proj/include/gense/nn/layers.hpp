// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>
#include <vector>

#include "gense/nn/ops.hpp"
#include "gense/nn/param.hpp"

namespace gense::nn {

template <class T>
class Linear {
 public:
  Linear() = default;
  Linear(ParamStore<T>& ps, const std::string& name, int in, int out, bool zero_init = false)
      : W_(ps.add(name + ".weight", {in, out}, zero_init ? Init::zeros() : Init::glorot(in, out))),
        b_(ps.add(name + ".bias", {out}, Init::zeros())) {}

  Var<T> operator()(const Var<T>& x) const { return linear(x, W_, b_); }
  const Var<T>& weight() const { return W_; }
  const Var<T>& bias() const { return b_; }
  int in_features() const { return W_.value().dim(0); }
  int out_features() const { return W_.value().dim(1); }

 private:
  Var<T> W_, b_;
};

template <class T>
class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParamStore<T>& ps, const std::string& name, int dim)
      : g_(ps.add(name + ".gamma", {dim}, Init::ones())), b_(ps.add(name + ".beta", {dim}, Init::zeros())) {}

  Var<T> operator()(const Var<T>& x) const { return layer_norm(x, g_, b_, T(1e-5)); }

 private:
  Var<T> g_, b_;
};

// Causal 2-D convolution layer over [T, F, C] maps.
template <class T>
class CausalConv2d {
 public:
  CausalConv2d() = default;
  CausalConv2d(ParamStore<T>& ps, const std::string& name, int cin, int cout, int kt, int kf, int stride_f)
      : stride_(stride_f),
        W_(ps.add(name + ".kernel", {kt, kf, cin, cout}, Init::glorot(kt * kf * cin, kt * kf * cout))),
        b_(ps.add(name + ".bias", {cout}, Init::zeros())) {
    if (stride_f <= 0) throw ConfigError(name + ": stride must be positive");
  }

  Var<T> operator()(const Var<T>& x) const { return causal_conv2d(x, W_, b_, stride_); }
  int stride() const { return stride_; }
  int time_context() const { return W_.value().dim(0) - 1; }

 private:
  int stride_ = 1;
  Var<T> W_, b_;
};

// Frequency-upsampling causal transposed convolution.
template <class T>
class CausalConvTranspose2d {
 public:
  CausalConvTranspose2d() = default;
  CausalConvTranspose2d(ParamStore<T>& ps, const std::string& name, int cin, int cout, int kt, int kf, int stride_f)
      : stride_(stride_f),
        W_(ps.add(name + ".kernel", {kt, kf, cin, cout}, Init::glorot(kt * kf * cin, kt * kf * cout))),
        b_(ps.add(name + ".bias", {cout}, Init::zeros())) {
    if (stride_f <= 0) throw ConfigError(name + ": stride must be positive");
  }

  Var<T> operator()(const Var<T>& x, int out_f) const { return causal_conv_transpose2d(x, W_, b_, stride_, out_f); }

 private:
  int stride_ = 1;
  Var<T> W_, b_;
};

// Temporal convolutional module: pointwise expansion to mid channels, causal
// dilated depthwise convolution, pointwise projection back, residual add.
// The receptive field grows by dilation * (kernel - 1) frames per block.
template <class T>
class TcmBlock {
 public:
  TcmBlock() = default;
  TcmBlock(ParamStore<T>& ps, const std::string& name, int channels, int mid, int kernel, int dilation)
      : dilation_(dilation),
        in_(ps, name + ".in", channels, mid),
        dw_(ps.add(name + ".dw.kernel", {kernel, mid}, Init::glorot(kernel, kernel))),
        dwb_(ps.add(name + ".dw.bias", {mid}, Init::zeros())),
        out_(ps, name + ".out", mid, channels) {
    if (dilation <= 0 || kernel <= 0) throw ConfigError(name + ": kernel and dilation must be positive");
  }

  Var<T> operator()(const Var<T>& x) const {
    Var<T> h = elu(in_(x));
    h = elu(causal_depthwise_conv1d(h, dw_, dwb_, dilation_));
    return add(x, out_(h));
  }

  int receptive_growth() const { return dilation_ * (dw_.value().dim(0) - 1); }

 private:
  int dilation_ = 1;
  Linear<T> in_;
  Var<T> dw_, dwb_;
  Linear<T> out_;
};

template <class T>
class Gru {
 public:
  Gru() = default;
  Gru(ParamStore<T>& ps, const std::string& name, int in, int hidden)
      : hidden_(hidden),
        Wx_(ps.add(name + ".wx", {in, 3 * hidden}, Init::glorot(in, hidden))),
        Wh_(ps.add(name + ".wh", {hidden, 3 * hidden}, Init::glorot(hidden, hidden))),
        bx_(ps.add(name + ".bx", {3 * hidden}, Init::zeros())),
        bh_(ps.add(name + ".bh", {3 * hidden}, Init::zeros())) {}

  // Hidden states for every frame, starting from h0 (zeros when undefined).
  Var<T> operator()(const Var<T>& x, Var<T> h0 = {}) const {
    if (!h0.defined()) h0 = constant(Tensor<T>({hidden_}));
    return gru(x, h0, Wx_, Wh_, bx_, bh_);
  }

  int hidden() const { return hidden_; }

 private:
  int hidden_ = 0;
  Var<T> Wx_, Wh_, bx_, bh_;
};

// Returns (all states, final state). The final state of an empty sequence is
// the initial state.
template <class T>
std::pair<Var<T>, Var<T>> gru_sequence(const Gru<T>& cell, const Var<T>& x, Var<T> h0 = {}) {
  if (!h0.defined()) h0 = constant(Tensor<T>({cell.hidden()}));
  Var<T> states = cell(x, h0);
  if (x.rows() == 0) return {states, h0};
  return {states, reshape(slice_rows(states, x.rows() - 1, 1), {cell.hidden()})};
}

}  // namespace gense::nn
