// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gense/nn/layers.hpp"

namespace gense::nn {

// Sinusoidal positions for rows start..start+count: sin on even columns,
// cos on odd ones, frequencies 10000^(-2i/dim). Not learned, so any length
// is valid.
template <class T>
Tensor<T> sinusoidal_positions(int start, int count, int dim) {
  Tensor<T> pe({count, dim});
  for (int r = 0; r < count; ++r)
    for (int i = 0; i < dim / 2; ++i) {
      const double w = std::pow(10000.0, -2.0 * i / dim);
      const double a = static_cast<double>(start + r) * w;
      pe.at(r, 2 * i) = static_cast<T>(std::sin(a));
      pe.at(r, 2 * i + 1) = static_cast<T>(std::cos(a));
    }
  return pe;
}

// Keys and values of every position processed so far, per layer.
template <class T>
struct AttentionCache {
  Tensor<T> k, v;
  int length() const { return k.ndim() == 2 ? k.rows() : 0; }
};

namespace detail {

template <class T>
Tensor<T> append_rows(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.ndim() != 2 || a.rows() == 0) return b;
  Tensor<T> out({a.rows() + b.rows(), a.cols()});
  std::copy(a.data(), a.data() + a.numel(), out.data());
  std::copy(b.data(), b.data() + b.numel(), out.data() + a.numel());
  return out;
}

}  // namespace detail

// Pre-norm transformer layer: x + Attn(LN(x)), then + FF(LN(.)) with GELU.
template <class T>
class TransformerLayer {
 public:
  TransformerLayer() = default;
  TransformerLayer(ParamStore<T>& ps, const std::string& name, int dim, int heads, int ff)
      : heads_(heads),
        ln1_(ps, name + ".ln1", dim),
        ln2_(ps, name + ".ln2", dim),
        q_(ps, name + ".q", dim, dim),
        k_(ps, name + ".k", dim, dim),
        v_(ps, name + ".v", dim, dim),
        o_(ps, name + ".o", dim, dim),
        ff1_(ps, name + ".ff1", dim, ff),
        ff2_(ps, name + ".ff2", ff, dim) {
    if (dim % heads != 0) throw ConfigError(name + ": width not divisible by heads");
  }

  Var<T> operator()(const Var<T>& x, AttentionMask mask, T p, bool training, Rng& rng) const {
    const Var<T> h = ln1_(x);
    const Var<T> a = o_(attention(q_(h), k_(h), v_(h), heads_, mask));
    return feed_forward(add(x, dropout(a, p, training, rng)), p, training, rng);
  }

  // Processes rows that follow the cached positions; the mask's query offset
  // is taken from the cache. Rows come out identical to a full pass.
  Var<T> extend(const Var<T>& x, AttentionCache<T>& cache, AttentionMask mask) const {
    mask.query_offset = cache.length();
    const Var<T> h = ln1_(x);
    cache.k = detail::append_rows(cache.k, k_(h).value());
    cache.v = detail::append_rows(cache.v, v_(h).value());
    const Var<T> a = o_(attention(q_(h), constant(cache.k), constant(cache.v), heads_, mask));
    Rng unused;
    return feed_forward(add(x, a), T(0), false, unused);
  }

 private:
  Var<T> feed_forward(const Var<T>& y, T p, bool training, Rng& rng) const {
    const Var<T> f = ff2_(gelu(ff1_(ln2_(y))));
    return add(y, dropout(f, p, training, rng));
  }

  int heads_ = 1;
  LayerNorm<T> ln1_, ln2_;
  Linear<T> q_, k_, v_, o_, ff1_, ff2_;
};

template <class T>
class TransformerBody {
 public:
  TransformerBody() = default;
  TransformerBody(ParamStore<T>& ps, const std::string& name, int layers, int dim, int heads, int ff) : dim_(dim) {
    for (int i = 0; i < layers; ++i) layers_.emplace_back(ps, name + ".layer" + std::to_string(i), dim, heads, ff);
    ln_ = LayerNorm<T>(ps, name + ".ln", dim);
  }

  int dim() const { return dim_; }
  int depth() const { return static_cast<int>(layers_.size()); }

  Var<T> operator()(const Var<T>& x, AttentionMask mask, T p = T(0), bool training = false) const {
    Rng rng;
    return (*this)(x, mask, p, training, rng);
  }
  Var<T> operator()(const Var<T>& x, AttentionMask mask, T p, bool training, Rng& rng) const {
    Var<T> h = x;
    for (const auto& l : layers_) h = l(h, mask, p, training, rng);
    return ln_(h);
  }

  std::vector<AttentionCache<T>> new_cache() const { return std::vector<AttentionCache<T>>(layers_.size()); }

  Var<T> extend(const Var<T>& x, std::vector<AttentionCache<T>>& caches, AttentionMask mask) const {
    if (caches.size() != layers_.size()) throw DimensionError("attention cache has wrong depth");
    Var<T> h = x;
    for (size_t i = 0; i < layers_.size(); ++i) h = layers_[i].extend(h, caches[i], mask);
    return ln_(h);
  }

 private:
  int dim_ = 0;
  std::vector<TransformerLayer<T>> layers_;
  LayerNorm<T> ln_;
};

}  // namespace gense::nn
