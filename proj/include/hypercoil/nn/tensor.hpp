#pragma once

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "hypercoil/aligned.hpp"

namespace hypercoil::nn {

// Minimal dense tensor: flat storage plus a shape used by the layers for
// index math. Row-major; for [C,H,W] the channel is the slowest axis.
template <typename T>
struct Tensor {
  std::vector<int> shape;
  avec<T> v;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    v.assign(static_cast<size_t>(numel_of(shape)), T(0));
  }

  static long numel_of(const std::vector<int>& s) {
    long n = 1;
    for (int d : s) n *= d;
    return n;
  }

  long numel() const { return static_cast<long>(v.size()); }
  T* data() { return v.data(); }
  const T* data() const { return v.data(); }
  void zero() { std::fill(v.begin(), v.end(), T(0)); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

// Named view of a parameter tensor and its gradient accumulator.
template <typename T>
struct ParamRef {
  std::string name;
  Tensor<T>* value;
  Tensor<T>* grad;
};

}  // namespace hypercoil::nn
