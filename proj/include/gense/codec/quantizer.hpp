// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>
#include <vector>

#include "gense/codec/codes.hpp"
#include "gense/nn/checkpoint.hpp"
#include "gense/nn/param.hpp"

namespace gense::codec {

using nn::Tensor;
using nn::Var;

template <class T>
struct QuantizeResult {
  CodeSequence codes;
  Var<T> quantized;      // forward: selected codewords; backward: identity to the latent
  Var<T> loss;           // codebook term + beta * commitment term
  double commitment = 0; // mean squared latent-to-codeword distance
};

// K independent vector quantizers over contiguous latent chunks. Codebooks
// are parameters "<name>.g<k>" of shape [V, code_dim]; with EMA learning they
// are frozen for the optimizer and updated by ema_update().
template <class T>
class GroupQuantizer {
 public:
  GroupQuantizer() = default;
  GroupQuantizer(nn::ParamStore<T>& ps, const std::string& name, int groups, int codewords, int code_dim, bool ema)
      : K_(groups), V_(codewords), D_(code_dim), ema_(ema) {
    for (int k = 0; k < K_; ++k) {
      tables_.push_back(ps.add(name + ".g" + std::to_string(k), {V_, D_}, nn::Init::normal(1.0)));
      if (ema_) tables_.back().node()->requires_grad = false;
    }
    counts_ = Tensor<T>({K_, V_});
    sums_ = Tensor<T>({K_, V_, D_});
    unused_ = Tensor<T>({K_, V_});
    reset_ema_from_tables();
  }

  int groups() const { return K_; }
  int codewords() const { return V_; }
  int code_dim() const { return D_; }
  bool ema() const { return ema_; }
  bool initialized() const { return initialized_; }
  const Var<T>& table(int k) const { return tables_[k]; }

  // Nearest codeword per group by squared Euclidean distance, accumulated in
  // double; ties go to the lowest index.
  CodeSequence assign(const Tensor<T>& z) const {
    check_latent(z);
    const int Tc = z.rows();
    CodeSequence codes(Tc, K_);
    for (int t = 0; t < Tc; ++t)
      for (int k = 0; k < K_; ++k) {
        const T* x = z.data() + static_cast<size_t>(t) * K_ * D_ + static_cast<size_t>(k) * D_;
        const T* tab = tables_[k].value().data();
        double best = 0;
        int arg = -1;
        for (int v = 0; v < V_; ++v) {
          double d = 0;
          for (int i = 0; i < D_; ++i) {
            const double e = double(x[i]) - double(tab[static_cast<size_t>(v) * D_ + i]);
            d += e * e;
          }
          if (arg < 0 || d < best) best = d, arg = v;
        }
        codes.at(t, k) = arg;
      }
    return codes;
  }

  // Table lookup and concatenation; every index is range-checked.
  Tensor<T> lookup(const CodeSequence& codes) const {
    if (codes.groups() != K_)
      throw DimensionError("code frames have " + std::to_string(codes.groups()) + " groups, codebook has " +
                           std::to_string(K_));
    codes.check_range(V_);
    const int Tc = codes.frames();
    Tensor<T> out({Tc, K_ * D_});
    for (int t = 0; t < Tc; ++t)
      for (int k = 0; k < K_; ++k) {
        const T* src = tables_[k].value().data() + static_cast<size_t>(codes.at(t, k)) * D_;
        std::copy(src, src + D_, out.data() + static_cast<size_t>(t) * K_ * D_ + static_cast<size_t>(k) * D_);
      }
    return out;
  }

  QuantizeResult<T> quantize(const Var<T>& z, T beta) const {
    QuantizeResult<T> r;
    r.codes = assign(z.value());
    const Tensor<T> q = lookup(r.codes);
    r.quantized = nn::straight_through(z, q);
    if (z.rows() == 0) {
      r.loss = nn::constant(Tensor<T>::scalar(T(0)));
      return r;
    }
    // Codebook term pulls selected codewords toward the frozen latent; it
    // only carries gradient when codebooks are gradient-trained.
    std::vector<Var<T>> parts;
    for (int k = 0; k < K_; ++k) {
      std::vector<int> idx(r.codes.frames());
      for (int t = 0; t < r.codes.frames(); ++t) idx[t] = r.codes.at(t, k);
      parts.push_back(nn::gather_rows(tables_[k], idx));
    }
    const Var<T> codebook_term = nn::mse(nn::concat_cols(parts), nn::constant(z.value()));
    const Var<T> commitment = nn::mse(z, nn::constant(q));
    r.commitment = commitment.value()[0];
    r.loss = nn::add(codebook_term, nn::scale(commitment, beta));
    return r;
  }

  // Overwrites every codeword with a random latent chunk (plus a tiny
  // perturbation so duplicates stay distinct). Used once before training.
  void init_from(const std::vector<const Tensor<T>*>& latents, nn::Rng& rng) {
    std::vector<const T*> pool = chunks(latents);
    if (pool.empty()) return;
    for (int k = 0; k < K_; ++k) {
      auto& tab = tables_[k].mutable_value();
      for (int v = 0; v < V_; ++v) {
        const T* src = pool[rng.below(pool.size())] + static_cast<size_t>(k) * D_;
        for (int i = 0; i < D_; ++i) tab[static_cast<size_t>(v) * D_ + i] = src[i] + T(1e-3 * rng.normal());
      }
    }
    reset_ema_from_tables();
    initialized_ = true;
  }

  // One EMA step over a batch of latents and their assignments, followed by
  // dead-code re-seeding. With decay 1 the codebook does not move (short of
  // re-seeding).
  void ema_update(const std::vector<const Tensor<T>*>& latents, const std::vector<const CodeSequence*>& codes,
                  double decay, int dead_after, nn::Rng& rng) {
    if (!ema_) return;
    Tensor<double> n({K_, V_});
    Tensor<double> s({K_, V_, D_});
    for (size_t b = 0; b < latents.size(); ++b) {
      const auto& z = *latents[b];
      for (int t = 0; t < codes[b]->frames(); ++t)
        for (int k = 0; k < K_; ++k) {
          const int v = codes[b]->at(t, k);
          n[static_cast<size_t>(k) * V_ + v] += 1.0;
          const T* x = z.data() + static_cast<size_t>(t) * K_ * D_ + static_cast<size_t>(k) * D_;
          double* acc = s.data() + (static_cast<size_t>(k) * V_ + v) * D_;
          for (int i = 0; i < D_; ++i) acc[i] += x[i];
        }
    }
    const std::vector<const T*> pool = chunks(latents);
    for (int k = 0; k < K_; ++k) {
      auto& tab = tables_[k].mutable_value();
      for (int v = 0; v < V_; ++v) {
        const size_t kv = static_cast<size_t>(k) * V_ + v;
        T* e = tab.data() + static_cast<size_t>(v) * D_;
        T* m = sums_.data() + kv * D_;
        if (decay < 1.0) {
          counts_[kv] = static_cast<T>(decay * counts_[kv] + (1.0 - decay) * n[kv]);
          for (int i = 0; i < D_; ++i) m[i] = static_cast<T>(decay * m[i] + (1.0 - decay) * s[kv * D_ + i]);
          if (counts_[kv] > T(1e-12))
            for (int i = 0; i < D_; ++i) e[i] = m[i] / counts_[kv];
        }
        unused_[kv] = n[kv] > 0 ? T(0) : unused_[kv] + T(1);
        if (dead_after > 0 && unused_[kv] >= T(dead_after) && !pool.empty()) {
          const T* src = pool[rng.below(pool.size())] + static_cast<size_t>(k) * D_;
          for (int i = 0; i < D_; ++i) e[i] = m[i] = src[i] + T(1e-3 * rng.normal());
          counts_[kv] = T(1);
          unused_[kv] = T(0);
          ++reseeds_;
        }
      }
    }
  }

  // Replaces one group's table and resets its EMA statistics to match.
  void set_codebook(int k, const Tensor<T>& table) {
    if (k < 0 || k >= K_) throw IndexError("codebook group " + std::to_string(k) + " outside [0," + std::to_string(K_) + ")");
    if (table.shape() != tables_[k].value().shape())
      throw DimensionError("codebook must be " + shape_str(tables_[k].value().shape()) + ", got " + shape_str(table.shape()));
    tables_[k].mutable_value() = table;
    reset_ema_from_tables();
  }

  int64_t reseed_count() const { return reseeds_; }

  // EMA state travels with the model in checkpoints.
  void save_state(nn::Checkpoint& ck, const std::string& prefix) const {
    ck.add(prefix + "ema.counts", counts_.template cast<float>());
    ck.add(prefix + "ema.sums", sums_.template cast<float>());
    ck.add(prefix + "ema.unused", unused_.template cast<float>());
    ck.add(prefix + "ema.initialized", Tensor<float>::scalar(initialized_ ? 1.f : 0.f));
  }
  void load_state(const nn::Checkpoint& ck, const std::string& prefix) {
    auto grab = [&](const std::string& n, Tensor<T>& dst) {
      const auto& t = ck.get(prefix + n);
      if (t.shape() != dst.shape()) throw FormatError("checkpoint array '" + prefix + n + "' has wrong shape");
      dst = t.template cast<T>();
    };
    grab("ema.counts", counts_);
    grab("ema.sums", sums_);
    grab("ema.unused", unused_);
    initialized_ = ck.get(prefix + "ema.initialized")[0] != 0.f;
  }

 private:
  void check_latent(const Tensor<T>& z) const {
    if (z.ndim() != 2 || z.dim(1) != K_ * D_)
      throw DimensionError("latent must be [Tc, " + std::to_string(K_ * D_) + "], got " + shape_str(z.shape()));
  }

  std::vector<const T*> chunks(const std::vector<const Tensor<T>*>& latents) const {
    std::vector<const T*> pool;
    for (const auto* z : latents)
      for (int t = 0; t < z->rows(); ++t) pool.push_back(z->data() + static_cast<size_t>(t) * K_ * D_);
    return pool;
  }

  void reset_ema_from_tables() {
    for (int k = 0; k < K_; ++k) {
      const auto& tab = tables_[k].value();
      for (int v = 0; v < V_; ++v) {
        const size_t kv = static_cast<size_t>(k) * V_ + v;
        counts_[kv] = T(1);
        unused_[kv] = T(0);
        for (int i = 0; i < D_; ++i) sums_[kv * D_ + i] = tab[static_cast<size_t>(v) * D_ + i];
      }
    }
  }

  int K_ = 0, V_ = 0, D_ = 0;
  bool ema_ = true;
  bool initialized_ = false;
  std::vector<Var<T>> tables_;
  Tensor<T> counts_, sums_, unused_;
  int64_t reseeds_ = 0;
};

// Fraction of codewords per group that appear at least once.
inline std::vector<double> utilization(const std::vector<CodeSequence>& seqs, int codewords) {
  if (seqs.empty()) return {};
  const int K = seqs.front().groups();
  std::vector<std::vector<char>> seen(K, std::vector<char>(codewords, 0));
  for (const auto& s : seqs)
    for (int t = 0; t < s.frames(); ++t)
      for (int k = 0; k < K; ++k) seen[k][s.at(t, k)] = 1;
  std::vector<double> out(K);
  for (int k = 0; k < K; ++k) {
    int c = 0;
    for (char x : seen[k]) c += x;
    out[k] = double(c) / codewords;
  }
  return out;
}

}  // namespace gense::codec
