// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gense/nn/autograd.hpp"

namespace gense::nn {

// A named trainable array. The gradient lives in the leaf node and
// accumulates until zero_grad().
template <class T>
struct Parameter {
  std::string name;
  Var<T> var;

  const Tensor<T>& value() const { return var.value(); }
  Tensor<T>& mutable_value() { return var.mutable_value(); }
  Tensor<T>& grad() { return var.mutable_grad(); }
};

struct Init {
  enum class Kind { kZeros, kOnes, kGlorot, kUniform, kNormal };
  Kind kind = Kind::kZeros;
  double a = 0.0;  // glorot: fan_in; uniform: limit; normal: stddev
  double b = 0.0;  // glorot: fan_out

  static Init zeros() { return {Kind::kZeros}; }
  static Init ones() { return {Kind::kOnes}; }
  static Init glorot(int fan_in, int fan_out) { return {Kind::kGlorot, double(fan_in), double(fan_out)}; }
  static Init uniform(double limit) { return {Kind::kUniform, limit}; }
  static Init normal(double stddev) { return {Kind::kNormal, stddev}; }
};

// Owns every parameter of a model in creation order. Each parameter is drawn
// from its own stream, seeded by derive_seed(root_seed, name), so values do
// not depend on construction order or on the scalar type beyond rounding.
template <class T>
class ParamStore {
 public:
  explicit ParamStore(uint64_t seed = 0) : seed_(seed) {}
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;

  Var<T> add(const std::string& name, Shape shape, Init init) {
    if (index_.count(name)) throw ConfigError("duplicate parameter name '" + name + "'");
    Tensor<T> v(shape);
    Rng rng(derive_seed(seed_, name));
    for (auto& x : v.vec()) {
      double d = 0.0;
      switch (init.kind) {
        case Init::Kind::kZeros: d = 0.0; break;
        case Init::Kind::kOnes: d = 1.0; break;
        case Init::Kind::kGlorot: {
          const double lim = std::sqrt(6.0 / std::max(1.0, init.a + init.b));
          d = rng.uniform(-lim, lim);
          break;
        }
        case Init::Kind::kUniform: d = rng.uniform(-init.a, init.a); break;
        case Init::Kind::kNormal: d = rng.normal() * init.a; break;
      }
      x = static_cast<T>(d);
    }
    index_[name] = params_.size();
    params_.push_back({name, Var<T>(std::move(v), true)});
    return params_.back().var;
  }

  std::vector<Parameter<T>>& params() { return params_; }
  const std::vector<Parameter<T>>& params() const { return params_; }

  Parameter<T>& get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw IndexError("no parameter named '" + name + "'");
    return params_[it->second];
  }
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  void zero_grad() {
    for (auto& p : params_) p.grad().fill(T(0));
  }

  void set_requires_grad(bool on) {
    for (auto& p : params_) p.var.node()->requires_grad = on;
  }

  size_t scalar_count() const {
    size_t n = 0;
    for (const auto& p : params_) n += p.value().numel();
    return n;
  }

  // Order-independent fingerprint of all parameter bits.
  uint64_t fingerprint() const {
    uint64_t h = 0xCBF29CE484222325ull;
    for (const auto& p : params_) {
      h ^= fnv1a(p.name);
      const auto* bytes = reinterpret_cast<const unsigned char*>(p.value().data());
      for (size_t i = 0; i < p.value().numel() * sizeof(T); ++i) {
        h ^= bytes[i];
        h *= 0x100000001B3ull;
      }
    }
    return h;
  }

  uint64_t seed() const { return seed_; }

 private:
  uint64_t seed_;
  std::vector<Parameter<T>> params_;
  std::map<std::string, size_t> index_;
};

}  // namespace gense::nn
