// Copyright 2026 The gense Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "gense/error.hpp"

namespace gense::nn {

using Shape = std::vector<int>;

inline size_t shape_numel(const Shape& shape) {
  size_t n = 1;
  for (int d : shape) n *= static_cast<size_t>(d);
  return n;
}

// Dense row-major array. Shapes are small vectors of positive extents; a
// scalar is represented with shape {1}.
template <class T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0)) : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {
    check_shape();
  }
  Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape();
    if (data_.size() != shape_numel(shape_))
      throw DimensionError("data length " + std::to_string(data_.size()) + " does not match shape " +
                           shape_str(shape_));
  }

  static Tensor scalar(T v) { return Tensor({1}, std::vector<T>{v}); }

  const Shape& shape() const { return shape_; }
  int dim(int i) const { return shape_.at(i < 0 ? shape_.size() + i : i); }
  int ndim() const { return static_cast<int>(shape_.size()); }
  size_t numel() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> span() { return data_; }
  std::span<const T> span() const { return data_; }
  std::vector<T>& vec() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  T& operator[](size_t i) { return data_[i]; }
  const T& operator[](size_t i) const { return data_[i]; }

  // 2-D accessors; rows() is the product of all leading dims.
  int rows() const { return shape_.empty() ? 0 : static_cast<int>(data_.size() / shape_.back()); }
  int cols() const { return shape_.empty() ? 0 : shape_.back(); }
  T& at(int r, int c) { return data_[static_cast<size_t>(r) * cols() + c]; }
  const T& at(int r, int c) const { return data_[static_cast<size_t>(r) * cols() + c]; }
  T* row(int r) { return data_.data() + static_cast<size_t>(r) * cols(); }
  const T* row(int r) const { return data_.data() + static_cast<size_t>(r) * cols(); }

  Tensor reshaped(Shape shape) const {
    if (shape_numel(shape) != numel())
      throw DimensionError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
    return Tensor(std::move(shape), data_);
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  template <class U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(out));
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
  }

  friend bool operator==(const Tensor& a, const Tensor& b) { return a.shape_ == b.shape_ && a.data_ == b.data_; }

 private:
  void check_shape() const {
    for (int d : shape_)
      if (d < 0) throw DimensionError("negative extent in shape " + shape_str(shape_));
  }

  Shape shape_;
  std::vector<T> data_;
};

template <class T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()) +
                         " differ");
}

}  // namespace gense::nn
