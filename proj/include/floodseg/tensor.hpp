#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "floodseg/error.hpp"

namespace floodseg {

// Dense N-dimensional array. Activations use N x C x H x W, convolution
// weights Cout x Cin x kH x kW. `grad` is either empty or value-shaped.
// float is the working precision; double instantiations exist for
// finite-difference gradient checking.
template <class T>
struct Tensor {
  std::vector<int64_t> shape;
  std::vector<T> values;
  std::vector<T> grad;

  Tensor() = default;

  static Tensor zeros(std::vector<int64_t> dims) {
    Tensor t;
    t.shape = std::move(dims);
    int64_t n = 1;
    for (int64_t d : t.shape) {
      if (d <= 0) fail(Errc::shape, "tensor extent must be positive, got " + std::to_string(d));
      n *= d;
    }
    t.values.assign(static_cast<size_t>(n), T{0});
    return t;
  }

  int64_t numel() const { return static_cast<int64_t>(values.size()); }
  int64_t dim(size_t i) const { return shape.at(i); }

  T* data() { return values.data(); }
  const T* data() const { return values.data(); }

  void alloc_grad() { grad.assign(values.size(), T{0}); }

  template <class U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.shape = shape;
    out.values.assign(values.begin(), values.end());
    return out;
  }
};

template <class T>
void check_finite(const T* data, size_t n, const std::string& context) {
  for (size_t i = 0; i < n; ++i) {
    if (!std::isfinite(static_cast<double>(data[i]))) {
      fail(Errc::numeric, "non-finite value in " + context + " at index " + std::to_string(i));
    }
  }
}

template <class T>
void check_finite(const Tensor<T>& t, const std::string& context) {
  check_finite(t.data(), t.values.size(), context);
}

inline std::string shape_string(const std::vector<int64_t>& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

}  // namespace floodseg
