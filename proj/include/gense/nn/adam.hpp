// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "gense/nn/param.hpp"

namespace gense::nn {

struct AdamOptions {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 0.0;  // global gradient-norm clip; 0 disables
};

// Bias-corrected Adam. Moments are kept per parameter in store order.
template <class T>
class Adam {
 public:
  Adam(ParamStore<T>& store, AdamOptions opt) : store_(&store), opt_(opt) {
    for (const auto& p : store.params()) {
      m_.emplace_back(p.value().shape());
      v_.emplace_back(p.value().shape());
    }
  }

  // Applies one update and resets all gradients. Returns the pre-clip
  // global gradient norm.
  double step() {
    auto& ps = store_->params();
    double norm2 = 0.0;
    for (auto& p : ps) {
      const auto& g = p.grad();
      for (size_t i = 0; i < g.numel(); ++i) {
        if (!std::isfinite(g[i])) throw TrainingError("non-finite gradient in parameter '" + p.name + "'");
        norm2 += double(g[i]) * double(g[i]);
      }
    }
    const double norm = std::sqrt(norm2);
    const T gscale = (opt_.clip_norm > 0.0 && norm > opt_.clip_norm) ? T(opt_.clip_norm / norm) : T(1);
    ++step_;
    const T b1 = T(opt_.beta1), b2 = T(opt_.beta2);
    const T c1 = T(1) - static_cast<T>(std::pow(opt_.beta1, double(step_)));
    const T c2 = T(1) - static_cast<T>(std::pow(opt_.beta2, double(step_)));
    const T lr = T(opt_.lr), eps = T(opt_.eps);
    for (size_t k = 0; k < ps.size(); ++k) {
      auto& w = ps[k].mutable_value();
      auto& g = ps[k].grad();
      auto& m = m_[k];
      auto& v = v_[k];
      for (size_t i = 0; i < w.numel(); ++i) {
        const T gi = g[i] * gscale;
        m[i] = b1 * m[i] + (T(1) - b1) * gi;
        v[i] = b2 * v[i] + (T(1) - b2) * gi * gi;
        const T mh = m[i] / c1;
        const T vh = v[i] / c2;
        w[i] -= lr * mh / (std::sqrt(vh) + eps);
      }
      g.fill(T(0));
    }
    return norm;
  }

  int64_t steps() const { return step_; }
  void set_steps(int64_t s) { step_ = s; }
  double lr() const { return opt_.lr; }
  void set_lr(double lr) { opt_.lr = lr; }
  std::vector<Tensor<T>>& first_moments() { return m_; }
  std::vector<Tensor<T>>& second_moments() { return v_; }
  const std::vector<Tensor<T>>& first_moments() const { return m_; }
  const std::vector<Tensor<T>>& second_moments() const { return v_; }

 private:
  ParamStore<T>* store_;
  AdamOptions opt_;
  std::vector<Tensor<T>> m_, v_;
  int64_t step_ = 0;
};

}  // namespace gense::nn
