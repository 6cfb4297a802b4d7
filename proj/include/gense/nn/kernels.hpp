// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstddef>
#include <cstring>
#include <vector>

// Dense kernels. Every output element is accumulated in a fixed order (the
// reduction index ascending, starting from the existing value), so a row
// computed alone has the same bits as the same row inside a larger batch.
// Incremental decoding and chunked streaming rely on this. Register blocks
// use GCC/Clang vector extensions.
namespace gense::nn::kernels {

// Multiply then add, never fused: the build disables FP contraction so the
// vector blocks and the scalar tails round identically.
template <class T>
inline T mac(T a, T b, T c) {
  return c + a * b;
}

template <class T, int W>
struct VecT {
  typedef T type __attribute__((vector_size(W * sizeof(T))));
};

// C[i..i+R, j0..j0+NV*W) += A * B
template <class T, int R, int NV, int W>
inline void block_nn(int K, int N, const T* __restrict A, const T* __restrict B, T* __restrict C, int i, int j0) {
  using V = typename VecT<T, W>::type;
  V acc[R][NV];
  for (int r = 0; r < R; ++r)
    for (int v = 0; v < NV; ++v) std::memcpy(&acc[r][v], C + static_cast<size_t>(i + r) * N + j0 + v * W, sizeof(V));
  for (int k = 0; k < K; ++k) {
    V b[NV];
    for (int v = 0; v < NV; ++v) std::memcpy(&b[v], B + static_cast<size_t>(k) * N + j0 + v * W, sizeof(V));
    for (int r = 0; r < R; ++r) {
      const T a = A[static_cast<size_t>(i + r) * K + k];
      for (int v = 0; v < NV; ++v) acc[r][v] = acc[r][v] + a * b[v];
    }
  }
  for (int r = 0; r < R; ++r)
    for (int v = 0; v < NV; ++v) std::memcpy(C + static_cast<size_t>(i + r) * N + j0 + v * W, &acc[r][v], sizeof(V));
}

template <class T, int R>
inline void rows_nn(int K, int N, const T* A, const T* B, T* C, int i) {
  constexpr int W = 64 / sizeof(T);
  int j0 = 0;
  for (; j0 + 2 * W <= N; j0 += 2 * W) block_nn<T, R, 2, W>(K, N, A, B, C, i, j0);
  for (; j0 + W <= N; j0 += W) block_nn<T, R, 1, W>(K, N, A, B, C, i, j0);
  for (; j0 + W / 2 <= N; j0 += W / 2) block_nn<T, R, 1, W / 2>(K, N, A, B, C, i, j0);
  for (; j0 + W / 4 <= N; j0 += W / 4) block_nn<T, R, 1, W / 4>(K, N, A, B, C, i, j0);
  if (j0 < N)
    for (int r = 0; r < R; ++r) {
      T* c = C + static_cast<size_t>(i + r) * N;
      const T* a = A + static_cast<size_t>(i + r) * K;
      for (int k = 0; k < K; ++k) {
        const T* b = B + static_cast<size_t>(k) * N;
        for (int j = j0; j < N; ++j) c[j] = mac(a[k], b[j], c[j]);
      }
    }
}

template <class T>
void gemm_nn(int M, int K, int N, const T* __restrict A, const T* __restrict B, T* __restrict C) {
  int i = 0;
  for (; i + 4 <= M; i += 4) rows_nn<T, 4>(K, N, A, B, C, i);
  for (; i < M; ++i) rows_nn<T, 1>(K, N, A, B, C, i);
}

// C[k0..k0+R, j0..) += A[:,k0..]^T G
template <class T, int R, int NV, int W>
inline void block_tn(int M, int K, int N, const T* __restrict A, const T* __restrict G, T* __restrict C, int k0, int j0) {
  using V = typename VecT<T, W>::type;
  V acc[R][NV];
  for (int r = 0; r < R; ++r)
    for (int v = 0; v < NV; ++v) std::memcpy(&acc[r][v], C + static_cast<size_t>(k0 + r) * N + j0 + v * W, sizeof(V));
  for (int i = 0; i < M; ++i) {
    V g[NV];
    for (int v = 0; v < NV; ++v) std::memcpy(&g[v], G + static_cast<size_t>(i) * N + j0 + v * W, sizeof(V));
    for (int r = 0; r < R; ++r) {
      const T a = A[static_cast<size_t>(i) * K + k0 + r];
      for (int v = 0; v < NV; ++v) acc[r][v] = acc[r][v] + a * g[v];
    }
  }
  for (int r = 0; r < R; ++r)
    for (int v = 0; v < NV; ++v) std::memcpy(C + static_cast<size_t>(k0 + r) * N + j0 + v * W, &acc[r][v], sizeof(V));
}

template <class T, int R>
inline void rows_tn(int M, int K, int N, const T* A, const T* G, T* C, int k0) {
  constexpr int W = 64 / sizeof(T);
  int j0 = 0;
  for (; j0 + 2 * W <= N; j0 += 2 * W) block_tn<T, R, 2, W>(M, K, N, A, G, C, k0, j0);
  for (; j0 + W <= N; j0 += W) block_tn<T, R, 1, W>(M, K, N, A, G, C, k0, j0);
  for (; j0 + W / 2 <= N; j0 += W / 2) block_tn<T, R, 1, W / 2>(M, K, N, A, G, C, k0, j0);
  for (; j0 + W / 4 <= N; j0 += W / 4) block_tn<T, R, 1, W / 4>(M, K, N, A, G, C, k0, j0);
  if (j0 < N)
    for (int i = 0; i < M; ++i)
      for (int r = 0; r < R; ++r) {
        const T a = A[static_cast<size_t>(i) * K + k0 + r];
        T* c = C + static_cast<size_t>(k0 + r) * N;
        const T* g = G + static_cast<size_t>(i) * N;
        for (int j = j0; j < N; ++j) c[j] = mac(a, g[j], c[j]);
      }
}

template <class T>
void gemm_tn(int M, int K, int N, const T* __restrict A, const T* __restrict G, T* __restrict C) {
  int k0 = 0;
  for (; k0 + 4 <= K; k0 += 4) rows_tn<T, 4>(M, K, N, A, G, C, k0);
  for (; k0 < K; ++k0) rows_tn<T, 1>(M, K, N, A, G, C, k0);
}

// C[M,K] += G[M,N] * B[K,N]^T
template <class T>
void gemm_nt(int M, int N, int K, const T* __restrict G, const T* __restrict B, T* __restrict C) {
  std::vector<T> bt(static_cast<size_t>(N) * K);
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < N; ++j) bt[static_cast<size_t>(j) * K + k] = B[static_cast<size_t>(k) * N + j];
  gemm_nn(M, N, K, G, bt.data(), C);
}

template <class T>
T dot(int n, const T* __restrict a, const T* __restrict b) {
  T s = T(0);
  for (int i = 0; i < n; ++i) s = mac(a[i], b[i], s);
  return s;
}

template <class T>
void axpy(int n, T alpha, const T* __restrict x, T* __restrict y) {
  for (int i = 0; i < n; ++i) y[i] = mac(alpha, x[i], y[i]);
}

}  // namespace gense::nn::kernels
