// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "gense/nn/kernels.hpp"
#include "gense/nn/rng.hpp"
#include "gense/nn/tensor.hpp"

namespace gense::nn {

// Reverse-mode autodiff over whole tensors. Each op produces a Node holding its
// value, its parents and a closure that pushes the node's gradient back into
// the parents. Leaves that require gradients are parameters; their gradients
// accumulate across backward() calls until explicitly reset.
template <class T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;
  bool requires_grad = false;

  Tensor<T>& grad_buf() {
    if (grad.shape() != value.shape()) grad = Tensor<T>(value.shape());
    return grad;
  }
  Node& parent(size_t i) { return *parents[i]; }
};

struct GradMode {
  static bool& enabled() {
    thread_local bool on = true;
    return on;
  }
};

class NoGradGuard {
 public:
  NoGradGuard() : prev_(GradMode::enabled()) { GradMode::enabled() = false; }
  ~NoGradGuard() { GradMode::enabled() = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

template <class T>
class Var {
 public:
  Var() = default;
  explicit Var(Tensor<T> value, bool requires_grad = false) : node_(std::make_shared<Node<T>>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
  }
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  const Tensor<T>& value() const { return node_->value; }
  Tensor<T>& mutable_value() { return node_->value; }
  const Tensor<T>& grad() const { return node_->grad; }
  Tensor<T>& mutable_grad() { return node_->grad_buf(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  const Shape& shape() const { return node_->value.shape(); }
  int rows() const { return node_->value.rows(); }
  int cols() const { return node_->value.cols(); }
  bool defined() const { return static_cast<bool>(node_); }

  const std::shared_ptr<Node<T>>& node() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

template <class T>
Var<T> constant(Tensor<T> value) {
  return Var<T>(std::move(value), false);
}

// Builds a result node; the graph edge is only recorded when gradients are
// enabled and some parent needs a gradient.
template <class T>
Var<T> make_result(Tensor<T> value, std::vector<Var<T>> parents, std::function<void(Node<T>&)> fn) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  bool needs = false;
  if (GradMode::enabled())
    for (const auto& p : parents) needs = needs || p.requires_grad();
  if (needs) {
    node->requires_grad = true;
    node->parents.reserve(parents.size());
    for (auto& p : parents) node->parents.push_back(p.node());
    node->backward_fn = std::move(fn);
  }
  return Var<T>(std::move(node));
}

// Runs reverse accumulation from `root`. A scalar root is seeded with 1; any
// other root must be given an explicit seed gradient.
template <class T>
void backward(const Var<T>& root, const Tensor<T>* seed = nullptr) {
  if (!root.requires_grad()) return;
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto& [n, idx] = stack.back();
    if (idx < n->parents.size()) {
      Node<T>* p = n->parents[idx++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  Node<T>& r = *root.node();
  Tensor<T>& g = r.grad_buf();
  if (seed) {
    require_same_shape(*seed, r.value, "backward seed");
    for (size_t i = 0; i < g.numel(); ++i) g[i] += (*seed)[i];
  } else {
    if (r.value.numel() != 1) throw DimensionError("backward from non-scalar " + shape_str(r.value.shape()));
    g[0] += T(1);
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
}

namespace detail {

template <class T>
bool wants(Node<T>& n, size_t i) {
  return n.parents[i]->requires_grad;
}

template <class T, class F, class DF>
Var<T> unary(const Var<T>& a, F f, DF df) {
  const auto& x = a.value();
  Tensor<T> y(x.shape());
  for (size_t i = 0; i < x.numel(); ++i) y[i] = f(x[i]);
  return make_result<T>(std::move(y), {a}, [df](Node<T>& n) {
    auto& p = n.parent(0);
    auto& pg = p.grad_buf();
    for (size_t i = 0; i < pg.numel(); ++i) pg[i] += n.grad[i] * df(p.value[i], n.value[i]);
  });
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Linear algebra

// y[..., N] = a[..., K] * b[K, N]
template <class T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  const auto& A = a.value();
  const auto& B = b.value();
  if (B.ndim() != 2 || A.cols() != B.dim(0))
    throw DimensionError("matmul: " + shape_str(A.shape()) + " x " + shape_str(B.shape()));
  const int M = A.rows(), K = A.cols(), N = B.dim(1);
  Shape out_shape = A.shape();
  out_shape.back() = N;
  Tensor<T> y(out_shape);
  kernels::gemm_nn(M, K, N, A.data(), B.data(), y.data());
  return make_result<T>(std::move(y), {a, b}, [M, K, N](Node<T>& n) {
    if (detail::wants(n, 0))
      kernels::gemm_nt(M, N, K, n.grad.data(), n.parent(1).value.data(), n.parent(0).grad_buf().data());
    if (detail::wants(n, 1))
      kernels::gemm_tn(M, K, N, n.parent(0).value.data(), n.grad.data(), n.parent(1).grad_buf().data());
  });
}

// y = x W + b, with x[..., Din], W[Din, Dout], b[Dout]. The bias is the first
// term of every accumulation.
template <class T>
Var<T> linear(const Var<T>& x, const Var<T>& W, const Var<T>& b) {
  const auto& X = x.value();
  const auto& Wv = W.value();
  if (Wv.ndim() != 2 || X.cols() != Wv.dim(0) || b.value().numel() != static_cast<size_t>(Wv.dim(1)))
    throw DimensionError("linear: x " + shape_str(X.shape()) + ", W " + shape_str(Wv.shape()) + ", b " +
                         shape_str(b.shape()));
  const int M = X.rows(), K = X.cols(), N = Wv.dim(1);
  Shape out_shape = X.shape();
  out_shape.back() = N;
  Tensor<T> y(out_shape);
  for (int i = 0; i < M; ++i) std::copy(b.value().data(), b.value().data() + N, y.row(i));
  kernels::gemm_nn(M, K, N, X.data(), Wv.data(), y.data());
  return make_result<T>(std::move(y), {x, W, b}, [M, K, N](Node<T>& n) {
    if (detail::wants(n, 0))
      kernels::gemm_nt(M, N, K, n.grad.data(), n.parent(1).value.data(), n.parent(0).grad_buf().data());
    if (detail::wants(n, 1))
      kernels::gemm_tn(M, K, N, n.parent(0).value.data(), n.grad.data(), n.parent(1).grad_buf().data());
    if (detail::wants(n, 2)) {
      auto& gb = n.parent(2).grad_buf();
      for (int i = 0; i < M; ++i)
        for (int j = 0; j < N; ++j) gb[j] += n.grad[static_cast<size_t>(i) * N + j];
    }
  });
}

// ---------------------------------------------------------------------------
// Elementwise

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor<T> y = a.value();
  for (size_t i = 0; i < y.numel(); ++i) y[i] += b.value()[i];
  return make_result<T>(std::move(y), {a, b}, [](Node<T>& n) {
    for (size_t k = 0; k < 2; ++k)
      if (detail::wants(n, k)) {
        auto& g = n.parent(k).grad_buf();
        for (size_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i];
      }
  });
}

template <class T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a.value(), b.value(), "sub");
  Tensor<T> y = a.value();
  for (size_t i = 0; i < y.numel(); ++i) y[i] -= b.value()[i];
  return make_result<T>(std::move(y), {a, b}, [](Node<T>& n) {
    if (detail::wants(n, 0)) {
      auto& g = n.parent(0).grad_buf();
      for (size_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i];
    }
    if (detail::wants(n, 1)) {
      auto& g = n.parent(1).grad_buf();
      for (size_t i = 0; i < g.numel(); ++i) g[i] -= n.grad[i];
    }
  });
}

template <class T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tensor<T> y = a.value();
  for (size_t i = 0; i < y.numel(); ++i) y[i] *= b.value()[i];
  return make_result<T>(std::move(y), {a, b}, [](Node<T>& n) {
    if (detail::wants(n, 0)) {
      auto& g = n.parent(0).grad_buf();
      for (size_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i] * n.parent(1).value[i];
    }
    if (detail::wants(n, 1)) {
      auto& g = n.parent(1).grad_buf();
      for (size_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i] * n.parent(0).value[i];
    }
  });
}

// a[..., N] + b[N]
template <class T>
Var<T> add_row(const Var<T>& a, const Var<T>& b) {
  const int N = a.cols();
  if (b.value().numel() != static_cast<size_t>(N))
    throw DimensionError("add_row: " + shape_str(a.shape()) + " + " + shape_str(b.shape()));
  Tensor<T> y = a.value();
  const int M = y.rows();
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < N; ++j) y.at(i, j) += b.value()[j];
  return make_result<T>(std::move(y), {a, b}, [M, N](Node<T>& n) {
    if (detail::wants(n, 0)) {
      auto& g = n.parent(0).grad_buf();
      for (size_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i];
    }
    if (detail::wants(n, 1)) {
      auto& g = n.parent(1).grad_buf();
      for (int i = 0; i < M; ++i)
        for (int j = 0; j < N; ++j) g[j] += n.grad.at(i, j);
    }
  });
}

template <class T>
Var<T> scale(const Var<T>& a, T s) {
  Tensor<T> y = a.value();
  for (auto& v : y.vec()) v *= s;
  return make_result<T>(std::move(y), {a}, [s](Node<T>& n) {
    auto& g = n.parent(0).grad_buf();
    for (size_t i = 0; i < g.numel(); ++i) g[i] += s * n.grad[i];
  });
}

template <class T>
Var<T> tanh(const Var<T>& a) {
  return detail::unary<T>(a, [](T x) { return std::tanh(x); }, [](T, T y) { return T(1) - y * y; });
}

template <class T>
Var<T> sigmoid(const Var<T>& a) {
  return detail::unary<T>(
      a, [](T x) { return T(1) / (T(1) + std::exp(-x)); }, [](T, T y) { return y * (T(1) - y); });
}

template <class T>
Var<T> relu(const Var<T>& a) {
  return detail::unary<T>(a, [](T x) { return x > T(0) ? x : T(0); }, [](T x, T) { return x > T(0) ? T(1) : T(0); });
}

// ELU with alpha = 1; continuously differentiable at 0.
template <class T>
Var<T> elu(const Var<T>& a) {
  return detail::unary<T>(
      a, [](T x) { return x > T(0) ? x : std::expm1(x); }, [](T x, T y) { return x > T(0) ? T(1) : y + T(1); });
}

// tanh approximation of GELU.
template <class T>
Var<T> gelu(const Var<T>& a) {
  constexpr T c = T(0.7978845608028654);  // sqrt(2/pi)
  constexpr T k = T(0.044715);
  return detail::unary<T>(
      a,
      [](T x) { return T(0.5) * x * (T(1) + std::tanh(c * (x + k * x * x * x))); },
      [](T x, T) {
        const T u = c * (x + k * x * x * x);
        const T t = std::tanh(u);
        return T(0.5) * (T(1) + t) + T(0.5) * x * (T(1) - t * t) * c * (T(1) + T(3) * k * x * x);
      });
}

// sqrt(a^2 + b^2 + eps), used for spectral magnitudes.
template <class T>
Var<T> magnitude(const Var<T>& re, const Var<T>& im, T eps) {
  require_same_shape(re.value(), im.value(), "magnitude");
  Tensor<T> y(re.shape());
  for (size_t i = 0; i < y.numel(); ++i) {
    const T r = re.value()[i], m = im.value()[i];
    y[i] = std::sqrt(r * r + m * m + eps);
  }
  return make_result<T>(std::move(y), {re, im}, [](Node<T>& n) {
    for (size_t k = 0; k < 2; ++k)
      if (detail::wants(n, k)) {
        auto& g = n.parent(k).grad_buf();
        const auto& v = n.parent(k).value;
        for (size_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i] * v[i] / n.value[i];
      }
  });
}

// Forward value `replacement`, identity gradient to `a` (straight-through).
template <class T>
Var<T> straight_through(const Var<T>& a, Tensor<T> replacement) {
  require_same_shape(a.value(), replacement, "straight_through");
  return make_result<T>(std::move(replacement), {a}, [](Node<T>& n) {
    auto& g = n.parent(0).grad_buf();
    for (size_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i];
  });
}

// Inverted dropout. Identity when not training or p == 0.
template <class T>
Var<T> dropout(const Var<T>& a, T p, bool training, Rng& rng) {
  if (!training || p <= T(0)) return a;
  const T keep = T(1) - p;
  Tensor<T> mask(a.shape());
  for (auto& m : mask.vec()) m = rng.uniform() < static_cast<double>(keep) ? T(1) / keep : T(0);
  Tensor<T> y = a.value();
  for (size_t i = 0; i < y.numel(); ++i) y[i] *= mask[i];
  return make_result<T>(std::move(y), {a}, [mask = std::move(mask)](Node<T>& n) {
    auto& g = n.parent(0).grad_buf();
    for (size_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i] * mask[i];
  });
}

// ---------------------------------------------------------------------------
// Shape manipulation (2-D views: rows x cols)

template <class T>
Var<T> reshape(const Var<T>& a, Shape shape) {
  Tensor<T> y = a.value().reshaped(std::move(shape));
  return make_result<T>(std::move(y), {a}, [](Node<T>& n) {
    auto& g = n.parent(0).grad_buf();
    for (size_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i];
  });
}

template <class T>
Var<T> concat_cols(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols of nothing");
  const int M = parts[0].rows();
  int N = 0;
  std::vector<int> offs;
  for (const auto& p : parts) {
    if (p.rows() != M) throw DimensionError("concat_cols: row mismatch " + shape_str(p.shape()));
    offs.push_back(N);
    N += p.cols();
  }
  Tensor<T> y({M, N});
  for (size_t k = 0; k < parts.size(); ++k) {
    const int c = parts[k].cols();
    for (int i = 0; i < M; ++i) std::copy(parts[k].value().row(i), parts[k].value().row(i) + c, y.row(i) + offs[k]);
  }
  return make_result<T>(std::move(y), parts, [offs, M, N](Node<T>& n) {
    for (size_t k = 0; k < n.parents.size(); ++k) {
      if (!detail::wants(n, k)) continue;
      auto& g = n.parent(k).grad_buf();
      const int c = g.cols();
      for (int i = 0; i < M; ++i)
        for (int j = 0; j < c; ++j) g.at(i, j) += n.grad[static_cast<size_t>(i) * N + offs[k] + j];
    }
  });
}

template <class T>
Var<T> slice_cols(const Var<T>& a, int start, int len) {
  const int M = a.rows(), N = a.cols();
  if (start < 0 || len < 0 || start + len > N)
    throw DimensionError("slice_cols [" + std::to_string(start) + "," + std::to_string(start + len) + ") of " +
                         shape_str(a.shape()));
  Tensor<T> y({M, len});
  for (int i = 0; i < M; ++i) std::copy(a.value().row(i) + start, a.value().row(i) + start + len, y.row(i));
  return make_result<T>(std::move(y), {a}, [start, len, M](Node<T>& n) {
    auto& g = n.parent(0).grad_buf();
    for (int i = 0; i < M; ++i)
      for (int j = 0; j < len; ++j) g.at(i, start + j) += n.grad.at(i, j);
  });
}

template <class T>
Var<T> concat_rows(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows of nothing");
  const int N = parts[0].cols();
  int M = 0;
  for (const auto& p : parts) {
    if (p.cols() != N) throw DimensionError("concat_rows: column mismatch " + shape_str(p.shape()));
    M += p.rows();
  }
  Tensor<T> y({M, N});
  size_t off = 0;
  for (const auto& p : parts) {
    std::copy(p.value().data(), p.value().data() + p.value().numel(), y.data() + off);
    off += p.value().numel();
  }
  return make_result<T>(std::move(y), parts, [](Node<T>& n) {
    size_t off = 0;
    for (size_t k = 0; k < n.parents.size(); ++k) {
      const size_t cnt = n.parent(k).value.numel();
      if (detail::wants(n, k)) {
        auto& g = n.parent(k).grad_buf();
        for (size_t i = 0; i < cnt; ++i) g[i] += n.grad[off + i];
      }
      off += cnt;
    }
  });
}

template <class T>
Var<T> slice_rows(const Var<T>& a, int start, int len) {
  const int M = a.rows(), N = a.cols();
  if (start < 0 || len < 0 || start + len > M)
    throw DimensionError("slice_rows [" + std::to_string(start) + "," + std::to_string(start + len) + ") of " +
                         shape_str(a.shape()));
  Tensor<T> y({len, N});
  std::copy(a.value().row(start), a.value().row(start) + static_cast<size_t>(len) * N, y.data());
  return make_result<T>(std::move(y), {a}, [start, len, N](Node<T>& n) {
    auto& g = n.parent(0).grad_buf();
    T* dst = g.row(start);
    for (size_t i = 0; i < static_cast<size_t>(len) * N; ++i) dst[i] += n.grad[i];
  });
}

// Embedding lookup: rows of table[V, D] selected by idx.
template <class T>
Var<T> gather_rows(const Var<T>& table, const std::vector<int>& idx) {
  const int V = table.rows(), D = table.cols();
  Tensor<T> y({static_cast<int>(idx.size()), D});
  for (size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= V)
      throw IndexError("embedding index " + std::to_string(idx[i]) + " outside [0," + std::to_string(V) + ")");
    std::copy(table.value().row(idx[i]), table.value().row(idx[i]) + D, y.row(static_cast<int>(i)));
  }
  return make_result<T>(std::move(y), {table}, [idx, D](Node<T>& n) {
    auto& g = n.parent(0).grad_buf();
    for (size_t i = 0; i < idx.size(); ++i)
      for (int j = 0; j < D; ++j) g.at(idx[i], j) += n.grad.at(static_cast<int>(i), j);
  });
}

// ---------------------------------------------------------------------------
// Reductions

template <class T>
Var<T> sum(const Var<T>& a) {
  T s = T(0);
  for (T v : a.value().vec()) s += v;
  return make_result<T>(Tensor<T>::scalar(s), {a}, [](Node<T>& n) {
    auto& g = n.parent(0).grad_buf();
    for (size_t i = 0; i < g.numel(); ++i) g[i] += n.grad[0];
  });
}

template <class T>
Var<T> mean(const Var<T>& a) {
  return scale(sum(a), T(1) / static_cast<T>(std::max<size_t>(1, a.value().numel())));
}

// Mean squared difference.
template <class T>
Var<T> mse(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a.value(), b.value(), "mse");
  const size_t n = a.value().numel();
  T s = T(0);
  for (size_t i = 0; i < n; ++i) {
    const T d = a.value()[i] - b.value()[i];
    s += d * d;
  }
  const T inv = T(1) / static_cast<T>(std::max<size_t>(1, n));
  return make_result<T>(Tensor<T>::scalar(s * inv), {a, b}, [inv](Node<T>& n) {
    const T g0 = n.grad[0] * T(2) * inv;
    auto& av = n.parent(0).value;
    auto& bv = n.parent(1).value;
    if (detail::wants(n, 0)) {
      auto& g = n.parent(0).grad_buf();
      for (size_t i = 0; i < g.numel(); ++i) g[i] += g0 * (av[i] - bv[i]);
    }
    if (detail::wants(n, 1)) {
      auto& g = n.parent(1).grad_buf();
      for (size_t i = 0; i < g.numel(); ++i) g[i] -= g0 * (av[i] - bv[i]);
    }
  });
}

// Sum of scalars, left to right.
template <class T>
Var<T> add_scalars(const std::vector<Var<T>>& xs) {
  if (xs.empty()) return constant(Tensor<T>::scalar(T(0)));
  T s = T(0);
  for (const auto& x : xs) s += x.value()[0];
  return make_result<T>(Tensor<T>::scalar(s), xs, [](Node<T>& n) {
    for (size_t k = 0; k < n.parents.size(); ++k)
      if (detail::wants(n, k)) n.parent(k).grad_buf()[0] += n.grad[0];
  });
}

}  // namespace gense::nn
