// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "gense/nn/autograd.hpp"

// Fused differentiable layers: normalization, losses, attention, causal
// convolutions and the GRU recurrence. Time is always the leading axis and
// every time-axis op reads only current and past frames.
namespace gense::nn {

template <class T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps = T(1e-5)) {
  const int M = x.rows(), N = x.cols();
  if (gamma.value().numel() != static_cast<size_t>(N) || beta.value().numel() != static_cast<size_t>(N))
    throw DimensionError("layer_norm: x " + shape_str(x.shape()) + ", gamma " + shape_str(gamma.shape()));
  Tensor<T> y(x.shape());
  Tensor<T> xhat(x.shape());
  std::vector<T> inv_std(M);
  for (int i = 0; i < M; ++i) {
    const T* xr = x.value().row(i);
    T mu = T(0);
    for (int j = 0; j < N; ++j) mu += xr[j];
    mu /= static_cast<T>(N);
    T var = T(0);
    for (int j = 0; j < N; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= static_cast<T>(N);
    inv_std[i] = T(1) / std::sqrt(var + eps);
    for (int j = 0; j < N; ++j) {
      xhat.at(i, j) = (xr[j] - mu) * inv_std[i];
      y.at(i, j) = gamma.value()[j] * xhat.at(i, j) + beta.value()[j];
    }
  }
  return make_result<T>(std::move(y), {x, gamma, beta},
                        [M, N, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node<T>& n) {
                          const auto& gv = n.parent(1).value;
                          if (detail::wants(n, 0)) {
                            auto& dx = n.parent(0).grad_buf();
                            for (int i = 0; i < M; ++i) {
                              T m1 = T(0), m2 = T(0);
                              for (int j = 0; j < N; ++j) {
                                const T d = n.grad.at(i, j) * gv[j];
                                m1 += d;
                                m2 += d * xhat.at(i, j);
                              }
                              m1 /= static_cast<T>(N);
                              m2 /= static_cast<T>(N);
                              for (int j = 0; j < N; ++j)
                                dx.at(i, j) += inv_std[i] * (n.grad.at(i, j) * gv[j] - m1 - xhat.at(i, j) * m2);
                            }
                          }
                          if (detail::wants(n, 1)) {
                            auto& dg = n.parent(1).grad_buf();
                            for (int i = 0; i < M; ++i)
                              for (int j = 0; j < N; ++j) dg[j] += n.grad.at(i, j) * xhat.at(i, j);
                          }
                          if (detail::wants(n, 2)) {
                            auto& db = n.parent(2).grad_buf();
                            for (int i = 0; i < M; ++i)
                              for (int j = 0; j < N; ++j) db[j] += n.grad.at(i, j);
                          }
                        });
}

// Sum over rows of logsumexp(logits[r]) - logits[r][target[r]]. A target of
// -1 skips the row.
template <class T>
Var<T> softmax_cross_entropy(const Var<T>& logits, const std::vector<int>& targets) {
  const int R = logits.rows(), V = logits.cols();
  if (targets.size() != static_cast<size_t>(R))
    throw DimensionError("cross entropy: " + std::to_string(targets.size()) + " targets for " + std::to_string(R) +
                         " rows");
  Tensor<T> prob(logits.shape());
  T loss = T(0);
  for (int r = 0; r < R; ++r) {
    const int tgt = targets[r];
    if (tgt == -1) continue;
    if (tgt < 0 || tgt >= V)
      throw IndexError("cross entropy target " + std::to_string(tgt) + " outside [0," + std::to_string(V) + ")");
    const T* l = logits.value().row(r);
    T mx = *std::max_element(l, l + V);
    T s = T(0);
    for (int j = 0; j < V; ++j) s += std::exp(l[j] - mx);
    const T lse = mx + std::log(s);
    loss += lse - l[tgt];
    for (int j = 0; j < V; ++j) prob.at(r, j) = std::exp(l[j] - lse);
  }
  return make_result<T>(Tensor<T>::scalar(loss), {logits}, [targets, R, V, prob = std::move(prob)](Node<T>& n) {
    auto& g = n.parent(0).grad_buf();
    const T g0 = n.grad[0];
    for (int r = 0; r < R; ++r) {
      if (targets[r] == -1) continue;
      for (int j = 0; j < V; ++j) g.at(r, j) += g0 * (prob.at(r, j) - (j == targets[r] ? T(1) : T(0)));
    }
  });
}

// Which key positions a query may attend to. Query row i of a call sits at
// absolute position i + query_offset.
struct AttentionMask {
  enum class Kind { kFull, kCausal, kPrefix };
  Kind kind = Kind::kCausal;
  // kPrefix: positions < prefix see the whole prefix; later positions see the
  // prefix plus themselves and earlier positions.
  int prefix = 0;
  int query_offset = 0;

  static AttentionMask causal(int offset = 0) { return {Kind::kCausal, 0, offset}; }
  static AttentionMask full() { return {Kind::kFull, 0, 0}; }
  static AttentionMask prefix_lm(int prefix_len, int offset = 0) { return {Kind::kPrefix, prefix_len, offset}; }

  bool allowed(int i, int j) const {
    const int q = i + query_offset;
    switch (kind) {
      case Kind::kFull:
        return true;
      case Kind::kCausal:
        return j <= q;
      case Kind::kPrefix:
        return q < prefix ? j < prefix : (j < prefix || j <= q);
    }
    return false;
  }
};

// Scaled dot-product attention over `heads` heads. q[Tq,D], k[Tk,D], v[Tk,D]
// are already projected; output is [Tq,D].
template <class T>
Var<T> attention(const Var<T>& q, const Var<T>& k, const Var<T>& v, int heads, AttentionMask mask) {
  const int Tq = q.rows(), Tk = k.rows(), D = q.cols();
  if (heads <= 0 || D % heads != 0)
    throw ConfigError("attention width " + std::to_string(D) + " not divisible by " + std::to_string(heads) + " heads");
  if (k.cols() != D || v.cols() != D || v.rows() != Tk)
    throw DimensionError("attention: q " + shape_str(q.shape()) + ", k " + shape_str(k.shape()) + ", v " +
                         shape_str(v.shape()));
  const int dh = D / heads;
  const T sc = T(1) / std::sqrt(static_cast<T>(dh));
  Tensor<T> y({Tq, D});
  Tensor<T> P({heads, Tq, std::max(Tk, 1)});
  std::vector<T> s(std::max(Tk, 1));
  for (int h = 0; h < heads; ++h) {
    for (int i = 0; i < Tq; ++i) {
      const T* qi = q.value().row(i) + h * dh;
      T mx = -std::numeric_limits<T>::infinity();
      for (int j = 0; j < Tk; ++j) {
        if (!mask.allowed(i, j)) continue;
        s[j] = kernels::dot(dh, qi, k.value().row(j) + h * dh) * sc;
        mx = std::max(mx, s[j]);
      }
      T tot = T(0);
      T* p = P.data() + (static_cast<size_t>(h) * Tq + i) * P.dim(2);
      for (int j = 0; j < Tk; ++j) {
        if (!mask.allowed(i, j)) continue;
        p[j] = std::exp(s[j] - mx);
        tot += p[j];
      }
      T* yi = y.row(i) + h * dh;
      for (int j = 0; j < Tk; ++j) {
        if (!mask.allowed(i, j)) continue;
        p[j] /= tot;
        kernels::axpy(dh, p[j], v.value().row(j) + h * dh, yi);
      }
    }
  }
  return make_result<T>(std::move(y), {q, k, v}, [=, P = std::move(P)](Node<T>& n) {
    const auto& Q = n.parent(0).value;
    const auto& K = n.parent(1).value;
    const auto& Vv = n.parent(2).value;
    Tensor<T> dq({Tq, D}), dk({Tk, D}), dv({Tk, D});
    std::vector<T> ds(std::max(Tk, 1));
    for (int h = 0; h < heads; ++h) {
      for (int i = 0; i < Tq; ++i) {
        const T* p = P.data() + (static_cast<size_t>(h) * Tq + i) * P.dim(2);
        const T* go = n.grad.row(i) + h * dh;
        T c = T(0);
        for (int j = 0; j < Tk; ++j) {
          if (!mask.allowed(i, j)) continue;
          ds[j] = kernels::dot(dh, go, Vv.row(j) + h * dh);
          c += p[j] * ds[j];
        }
        for (int j = 0; j < Tk; ++j) {
          if (!mask.allowed(i, j)) continue;
          const T d = p[j] * (ds[j] - c) * sc;
          kernels::axpy(dh, d, K.row(j) + h * dh, dq.row(i) + h * dh);
          kernels::axpy(dh, d, Q.row(i) + h * dh, dk.row(j) + h * dh);
          kernels::axpy(dh, p[j], go, dv.row(j) + h * dh);
        }
      }
    }
    Tensor<T>* grads[3] = {&dq, &dk, &dv};
    for (size_t a = 0; a < 3; ++a) {
      if (!detail::wants(n, a)) continue;
      auto& g = n.parent(a).grad_buf();
      for (size_t i = 0; i < g.numel(); ++i) g[i] += (*grads[a])[i];
    }
  });
}

namespace detail {

inline int conv_out_width(int F, int stride) { return (F + stride - 1) / stride; }

inline int conv_pad_left(int F, int kf, int stride) {
  const int Fo = conv_out_width(F, stride);
  return std::max((Fo - 1) * stride + kf - F, 0) / 2;
}

// [kt,kf,Ci,Co] -> [kt,kf,Co,Ci]
template <class T>
std::vector<T> transpose_kernel_blocks(const Tensor<T>& K) {
  const int blocks = K.dim(0) * K.dim(1), Ci = K.dim(2), Co = K.dim(3);
  std::vector<T> out(K.numel());
  for (int b = 0; b < blocks; ++b)
    for (int i = 0; i < Ci; ++i)
      for (int o = 0; o < Co; ++o)
        out[(static_cast<size_t>(b) * Co + o) * Ci + i] = K[(static_cast<size_t>(b) * Ci + i) * Co + o];
  return out;
}

}  // namespace detail

// Causal 2-D convolution over x[T,F,Cin] with kernel[kt,kf,Cin,Cout] and
// bias[Cout]. Kernel tap kt-1 sees the current frame, tap 0 the frame kt-1
// steps back (zero before the start). The frequency axis is padded
// symmetrically so the output width is ceil(F / stride_f). Computed as one
// GEMM over an im2col patch matrix [T*Fo, kt*kf*Cin].
template <class T>
Var<T> causal_conv2d(const Var<T>& x, const Var<T>& W, const Var<T>& b, int stride_f) {
  if (stride_f <= 0) throw ConfigError("conv stride must be positive, got " + std::to_string(stride_f));
  const auto& X = x.value();
  const auto& K = W.value();
  if (X.ndim() != 3 || K.ndim() != 4 || K.dim(2) != X.dim(2) || b.value().numel() != static_cast<size_t>(K.dim(3)))
    throw DimensionError("causal_conv2d: x " + shape_str(X.shape()) + ", kernel " + shape_str(K.shape()));
  const int T_ = X.dim(0), F = X.dim(1), Ci = X.dim(2);
  const int kt = K.dim(0), kf = K.dim(1), Co = K.dim(3);
  const int Fo = detail::conv_out_width(F, stride_f);
  const int pl = detail::conv_pad_left(F, kf, stride_f);
  const int KK = kt * kf * Ci;
  // Visits every (patch row, patch column block, input offset) triple.
  auto for_each_tap = [=](auto&& fn) {
    for (int t = 0; t < T_; ++t)
      for (int fo = 0; fo < Fo; ++fo)
        for (int i = 0; i < kt; ++i) {
          const int ti = t - (kt - 1) + i;
          if (ti < 0) continue;
          for (int j = 0; j < kf; ++j) {
            const int fi = fo * stride_f - pl + j;
            if (fi < 0 || fi >= F) continue;
            fn(static_cast<size_t>(t) * Fo + fo, (i * kf + j) * Ci, (static_cast<size_t>(ti) * F + fi) * Ci);
          }
        }
  };
  auto im2col = [=](const Tensor<T>& Xv) {
    std::vector<T> P(static_cast<size_t>(T_) * Fo * KK, T(0));
    for_each_tap([&](size_t row, int col, size_t xo) {
      std::copy(Xv.data() + xo, Xv.data() + xo + Ci, P.data() + row * KK + col);
    });
    return P;
  };
  Tensor<T> y({T_, Fo, Co});
  for (size_t r = 0; r < static_cast<size_t>(T_) * Fo; ++r) std::copy(b.value().data(), b.value().data() + Co, y.data() + r * Co);
  {
    const auto P = im2col(X);
    kernels::gemm_nn(T_ * Fo, KK, Co, P.data(), K.data(), y.data());
  }
  return make_result<T>(std::move(y), {x, W, b}, [=](Node<T>& n) {
    const auto& X = n.parent(0).value;
    const auto& K = n.parent(1).value;
    const bool gx = detail::wants(n, 0), gw = detail::wants(n, 1), gb = detail::wants(n, 2);
    const size_t rows = static_cast<size_t>(T_) * Fo;
    if (gb) {
      T* db = n.parent(2).grad_buf().data();
      for (size_t r = 0; r < rows; ++r)
        for (int c = 0; c < Co; ++c) db[c] += n.grad[r * Co + c];
    }
    if (gw) {
      const auto P = im2col(X);
      kernels::gemm_tn(static_cast<int>(rows), KK, Co, P.data(), n.grad.data(), n.parent(1).grad_buf().data());
    }
    if (gx) {
      std::vector<T> Kt(static_cast<size_t>(Co) * KK);
      for (int k = 0; k < KK; ++k)
        for (int c = 0; c < Co; ++c) Kt[static_cast<size_t>(c) * KK + k] = K[static_cast<size_t>(k) * Co + c];
      std::vector<T> dP(rows * KK, T(0));
      kernels::gemm_nn(static_cast<int>(rows), Co, KK, n.grad.data(), Kt.data(), dP.data());
      T* dx = n.parent(0).grad_buf().data();
      for_each_tap([&](size_t row, int col, size_t xo) {
        const T* src = dP.data() + row * KK + col;
        for (int c = 0; c < Ci; ++c) dx[xo + c] += src[c];
      });
    }
  });
}

// Causal transposed convolution along frequency: input bin fi with tap j
// writes output bin fi*stride_f + j - pad, pad = max(kf - stride_f, 0) / 2.
// Output width is out_f (extra bins are cropped, missing bins get bias only).
// Per time tap i the products X[T*F, Ci] * W_i[Ci, kf*Co] are one GEMM and
// are then scattered into the output.
template <class T>
Var<T> causal_conv_transpose2d(const Var<T>& x, const Var<T>& W, const Var<T>& b, int stride_f, int out_f) {
  if (stride_f <= 0) throw ConfigError("conv stride must be positive, got " + std::to_string(stride_f));
  const auto& X = x.value();
  const auto& K = W.value();
  if (X.ndim() != 3 || K.ndim() != 4 || K.dim(2) != X.dim(2) || b.value().numel() != static_cast<size_t>(K.dim(3)))
    throw DimensionError("causal_conv_transpose2d: x " + shape_str(X.shape()) + ", kernel " + shape_str(K.shape()));
  const int T_ = X.dim(0), F = X.dim(1), Ci = X.dim(2);
  const int kt = K.dim(0), kf = K.dim(1), Co = K.dim(3);
  const int pad = std::max(kf - stride_f, 0) / 2;
  const int KC = kf * Co;
  const int rows = T_ * F;
  // W_i as [Ci, kf*Co].
  auto tap_matrix = [=](const Tensor<T>& Kv, int i) {
    std::vector<T> M(static_cast<size_t>(Ci) * KC);
    for (int j = 0; j < kf; ++j)
      for (int c = 0; c < Ci; ++c)
        for (int o = 0; o < Co; ++o)
          M[static_cast<size_t>(c) * KC + j * Co + o] = Kv[((static_cast<size_t>(i) * kf + j) * Ci + c) * Co + o];
    return M;
  };
  // Maps (t, fi, j) of tap i to the output element offset, or -1.
  auto for_each_target = [=](int i, auto&& fn) {
    const int shift = kt - 1 - i;
    for (int t = shift; t < T_; ++t)
      for (int fi = 0; fi < F; ++fi)
        for (int j = 0; j < kf; ++j) {
          const int fo = fi * stride_f + j - pad;
          if (fo < 0 || fo >= out_f) continue;
          fn(static_cast<size_t>(t - shift) * F + fi, j * Co, (static_cast<size_t>(t) * out_f + fo) * Co);
        }
  };
  Tensor<T> y({T_, out_f, Co});
  for (size_t r = 0; r < static_cast<size_t>(T_) * out_f; ++r)
    std::copy(b.value().data(), b.value().data() + Co, y.data() + r * Co);
  std::vector<T> U(static_cast<size_t>(rows) * KC);
  for (int i = 0; i < kt; ++i) {
    const auto M = tap_matrix(K, i);
    std::fill(U.begin(), U.end(), T(0));
    kernels::gemm_nn(rows, Ci, KC, X.data(), M.data(), U.data());
    for_each_target(i, [&](size_t urow, int col, size_t yo) {
      const T* src = U.data() + urow * KC + col;
      for (int o = 0; o < Co; ++o) y[yo + o] += src[o];
    });
  }
  return make_result<T>(std::move(y), {x, W, b}, [=](Node<T>& n) {
    const auto& X = n.parent(0).value;
    const auto& K = n.parent(1).value;
    const bool gx = detail::wants(n, 0), gw = detail::wants(n, 1), gb = detail::wants(n, 2);
    if (gb) {
      T* db = n.parent(2).grad_buf().data();
      for (size_t r = 0; r < static_cast<size_t>(T_) * out_f; ++r)
        for (int c = 0; c < Co; ++c) db[c] += n.grad[r * Co + c];
    }
    if (!gx && !gw) return;
    std::vector<T> dU(static_cast<size_t>(rows) * KC);
    for (int i = 0; i < kt; ++i) {
      std::fill(dU.begin(), dU.end(), T(0));
      for_each_target(i, [&](size_t urow, int col, size_t yo) {
        std::copy(n.grad.data() + yo, n.grad.data() + yo + Co, dU.data() + urow * KC + col);
      });
      if (gw) {
        std::vector<T> dM(static_cast<size_t>(Ci) * KC, T(0));
        kernels::gemm_tn(rows, Ci, KC, X.data(), dU.data(), dM.data());
        T* dw = n.parent(1).grad_buf().data();
        for (int j = 0; j < kf; ++j)
          for (int c = 0; c < Ci; ++c)
            for (int o = 0; o < Co; ++o)
              dw[((static_cast<size_t>(i) * kf + j) * Ci + c) * Co + o] += dM[static_cast<size_t>(c) * KC + j * Co + o];
      }
      if (gx) {
        // dX += dU * M^T, with M^T laid out as [kf*Co, Ci].
        std::vector<T> Mt(static_cast<size_t>(KC) * Ci);
        for (int j = 0; j < kf; ++j)
          for (int c = 0; c < Ci; ++c)
            for (int o = 0; o < Co; ++o)
              Mt[static_cast<size_t>(j * Co + o) * Ci + c] = K[((static_cast<size_t>(i) * kf + j) * Ci + c) * Co + o];
        kernels::gemm_nn(rows, KC, Ci, dU.data(), Mt.data(), n.parent(0).grad_buf().data());
      }
    }
  });
}

// Depthwise causal dilated convolution: x[T,C], kernel[k,C], bias[C].
// y[t,c] = b[c] + sum_i W[i,c] * x[t - (k-1-i)*dilation, c].
template <class T>
Var<T> causal_depthwise_conv1d(const Var<T>& x, const Var<T>& W, const Var<T>& b, int dilation) {
  if (dilation <= 0) throw ConfigError("dilation must be positive, got " + std::to_string(dilation));
  const int T_ = x.rows(), C = x.cols(), k = W.value().dim(0);
  if (W.value().ndim() != 2 || W.value().dim(1) != C || b.value().numel() != static_cast<size_t>(C))
    throw DimensionError("depthwise conv: x " + shape_str(x.shape()) + ", kernel " + shape_str(W.shape()));
  Tensor<T> y({T_, C});
  for (int t = 0; t < T_; ++t) {
    T* yr = y.row(t);
    std::copy(b.value().data(), b.value().data() + C, yr);
    for (int i = 0; i < k; ++i) {
      const int ti = t - (k - 1 - i) * dilation;
      if (ti < 0) continue;
      const T* xr = x.value().row(ti);
      const T* w = W.value().row(i);
      for (int c = 0; c < C; ++c) yr[c] += w[c] * xr[c];
    }
  }
  return make_result<T>(std::move(y), {x, W, b}, [=](Node<T>& n) {
    const auto& X = n.parent(0).value;
    const auto& K = n.parent(1).value;
    const bool gx = detail::wants(n, 0), gw = detail::wants(n, 1), gb = detail::wants(n, 2);
    for (int t = 0; t < T_; ++t) {
      const T* g = n.grad.row(t);
      if (gb) {
        auto& db = n.parent(2).grad_buf();
        for (int c = 0; c < C; ++c) db[c] += g[c];
      }
      for (int i = 0; i < k; ++i) {
        const int ti = t - (k - 1 - i) * dilation;
        if (ti < 0) continue;
        if (gx) {
          T* dx = n.parent(0).grad_buf().row(ti);
          for (int c = 0; c < C; ++c) dx[c] += g[c] * K.row(i)[c];
        }
        if (gw) {
          T* dw = n.parent(1).grad_buf().row(i);
          for (int c = 0; c < C; ++c) dw[c] += g[c] * X.row(ti)[c];
        }
      }
    }
  });
}

// GRU recurrence over x[T,Din] from state h0[H]. Gate layout in the weight
// columns is [reset | update | candidate]:
//   r = sigmoid(x Wxr + bxr + h Whr + bhr)
//   z = sigmoid(x Wxz + bxz + h Whz + bhz)
//   n = tanh(x Wxn + bxn + r * (h Whn + bhn))
//   h' = (1 - z) * n + z * h
// Returns all hidden states [T,H].
template <class T>
Var<T> gru(const Var<T>& x, const Var<T>& h0, const Var<T>& Wx, const Var<T>& Wh, const Var<T>& bx,
           const Var<T>& bh) {
  const int T_ = x.rows(), Din = x.cols();
  const int H = static_cast<int>(h0.value().numel());
  if (Wx.value().ndim() != 2 || Wx.value().dim(0) != Din || Wx.value().dim(1) != 3 * H ||
      Wh.value().dim(0) != H || Wh.value().dim(1) != 3 * H || bx.value().numel() != static_cast<size_t>(3 * H) ||
      bh.value().numel() != static_cast<size_t>(3 * H))
    throw DimensionError("gru: x " + shape_str(x.shape()) + ", h0 " + shape_str(h0.shape()) + ", Wx " +
                         shape_str(Wx.shape()) + ", Wh " + shape_str(Wh.shape()));
  Tensor<T> xg({T_, 3 * H});
  for (int t = 0; t < T_; ++t) std::copy(bx.value().data(), bx.value().data() + 3 * H, xg.row(t));
  kernels::gemm_nn(T_, Din, 3 * H, x.value().data(), Wx.value().data(), xg.data());
  Tensor<T> y({T_, H});
  Tensor<T> gates({T_, 4 * H});  // r, z, n, (h Whn + bhn)
  std::vector<T> hg(3 * H);
  const T* hp = h0.value().data();
  for (int t = 0; t < T_; ++t) {
    std::copy(bh.value().data(), bh.value().data() + 3 * H, hg.begin());
    kernels::gemm_nn(1, H, 3 * H, hp, Wh.value().data(), hg.data());
    const T* xr = xg.row(t);
    T* gr = gates.row(t);
    T* yr = y.row(t);
    for (int c = 0; c < H; ++c) {
      const T r = T(1) / (T(1) + std::exp(-(xr[c] + hg[c])));
      const T z = T(1) / (T(1) + std::exp(-(xr[H + c] + hg[H + c])));
      const T nn = std::tanh(xr[2 * H + c] + r * hg[2 * H + c]);
      gr[c] = r;
      gr[H + c] = z;
      gr[2 * H + c] = nn;
      gr[3 * H + c] = hg[2 * H + c];
      yr[c] = (T(1) - z) * nn + z * hp[c];
    }
    hp = yr;
  }
  return make_result<T>(std::move(y), {x, h0, Wx, Wh, bx, bh}, [=, gates = std::move(gates)](Node<T>& n) {
    const auto& X = n.parent(0).value;
    const auto& H0 = n.parent(1).value;
    const auto& WxV = n.parent(2).value;
    const auto& WhV = n.parent(3).value;
    Tensor<T> dxg({T_, 3 * H});
    std::vector<T> dh(H, T(0)), dhp(H), dhg(3 * H);
    const bool gwh = detail::wants(n, 3), gbh = detail::wants(n, 5);
    std::vector<T> whT(static_cast<size_t>(3) * H * H);
    for (int i = 0; i < H; ++i)
      for (int j = 0; j < 3 * H; ++j) whT[static_cast<size_t>(j) * H + i] = WhV[static_cast<size_t>(i) * 3 * H + j];
    for (int t = T_ - 1; t >= 0; --t) {
      const T* gr = gates.row(t);
      const T* hprev = t > 0 ? n.value.row(t - 1) : H0.data();
      const T* go = n.grad.row(t);
      T* dx = dxg.row(t);
      for (int c = 0; c < H; ++c) {
        const T d = dh[c] + go[c];
        const T r = gr[c], z = gr[H + c], nn = gr[2 * H + c], hn = gr[3 * H + c];
        const T dn = d * (T(1) - z);
        const T dz = d * (hprev[c] - nn);
        dhp[c] = d * z;
        const T dan = dn * (T(1) - nn * nn);
        const T dr = dan * hn;
        const T dar = dr * r * (T(1) - r);
        const T daz = dz * z * (T(1) - z);
        dx[c] = dar;
        dx[H + c] = daz;
        dx[2 * H + c] = dan;
        dhg[c] = dar;
        dhg[H + c] = daz;
        dhg[2 * H + c] = dan * r;
      }
      kernels::gemm_nn(1, 3 * H, H, dhg.data(), whT.data(), dhp.data());
      if (gwh) kernels::gemm_tn(1, H, 3 * H, hprev, dhg.data(), n.parent(3).grad_buf().data());
      if (gbh) {
        auto& g = n.parent(5).grad_buf();
        for (int c = 0; c < 3 * H; ++c) g[c] += dhg[c];
      }
      dh.swap(dhp);
    }
    if (detail::wants(n, 1)) {
      auto& g = n.parent(1).grad_buf();
      for (int c = 0; c < H; ++c) g[c] += dh[c];
    }
    if (detail::wants(n, 0)) kernels::gemm_nt(T_, 3 * H, Din, dxg.data(), WxV.data(), n.parent(0).grad_buf().data());
    if (detail::wants(n, 2)) kernels::gemm_tn(T_, Din, 3 * H, X.data(), dxg.data(), n.parent(2).grad_buf().data());
    if (detail::wants(n, 4)) {
      auto& g = n.parent(4).grad_buf();
      for (int t = 0; t < T_; ++t)
        for (int c = 0; c < 3 * H; ++c) g[c] += dxg.at(t, c);
    }
  });
}

}  // namespace gense::nn
