// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "gense/nn/autograd.hpp"

namespace gense::nn {

struct GradCheckOptions {
  double eps = 1e-6;
  // Coordinates sampled per checked array; arrays smaller than this are
  // checked exhaustively.
  int max_coords = 24;
  uint64_t seed = 1;
};

// Compares reverse-mode gradients of the scalar f() with central differences
// over `wrt`. Returns max |analytic - numeric| / max(1e-12, |analytic| +
// |numeric|) over the checked coordinates.
template <class T>
double grad_check(const std::function<Var<T>()>& f, std::vector<Var<T>> wrt, GradCheckOptions opt = {}) {
  for (auto& w : wrt) w.mutable_grad().fill(T(0));
  {
    Var<T> y = f();
    backward(y);
  }
  std::vector<Tensor<T>> analytic;
  for (const auto& w : wrt) analytic.push_back(w.grad());
  Rng rng(opt.seed);
  double worst = 0.0;
  NoGradGuard ng;
  for (size_t k = 0; k < wrt.size(); ++k) {
    auto& value = wrt[k].mutable_value();
    std::vector<size_t> coords(value.numel());
    for (size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    if (coords.size() > static_cast<size_t>(opt.max_coords)) {
      for (size_t i = 0; i < static_cast<size_t>(opt.max_coords); ++i)
        std::swap(coords[i], coords[i + rng.below(coords.size() - i)]);
      coords.resize(opt.max_coords);
    }
    for (size_t c : coords) {
      const T orig = value[c];
      value[c] = orig + T(opt.eps);
      const double fp = double(f().value()[0]);
      value[c] = orig - T(opt.eps);
      const double fm = double(f().value()[0]);
      value[c] = orig;
      const double numeric = (fp - fm) / (2.0 * opt.eps);
      const double a = double(analytic[k][c]);
      const double err = std::abs(a - numeric) / std::max(1e-12, std::abs(a) + std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace gense::nn
