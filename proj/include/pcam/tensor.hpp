#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcam/errors.hpp"

namespace pcam {

// Dense row-major value tensor. Shape is dynamic; CHW order is the
// convention for feature maps throughout (channel, row, column).
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
    std::size_t n = 1;
    if (shape_.empty()) throw std::invalid_argument("Tensor: empty shape");
    for (std::size_t d : shape_) {
      if (d == 0) throw std::invalid_argument("Tensor: zero dimension");
      n *= d;
    }
    data_.assign(n, 0.0);
  }

  Tensor(std::vector<std::size_t> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    std::size_t n = 1;
    if (shape_.empty()) throw std::invalid_argument("Tensor: empty shape");
    for (std::size_t d : shape_) {
      if (d == 0) throw std::invalid_argument("Tensor: zero dimension");
      n *= d;
    }
    if (n != data_.size())
      throw std::invalid_argument("Tensor: data size does not match shape");
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // CHW accessor for rank-3 tensors.
  double& at(std::size_t c, std::size_t y, std::size_t x) {
    return data_[(c * shape_[1] + y) * shape_[2] + x];
  }
  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * shape_[1] + y) * shape_[2] + x];
  }

  // HW accessor for rank-2 tensors.
  double& at(std::size_t y, std::size_t x) { return data_[y * shape_[1] + x]; }
  double at(std::size_t y, std::size_t x) const {
    return data_[y * shape_[1] + x];
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  void fill(double v) { data_.assign(data_.size(), v); }

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

// Elementwise combine of two same-shaped tensors.
template <typename F>
Tensor tensor_map2(const Tensor& a, const Tensor& b, F&& f) {
  if (!a.same_shape(b))
    throw std::invalid_argument("tensor_map2: shape mismatch");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

}  // namespace pcam
