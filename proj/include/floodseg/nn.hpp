#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "floodseg/error.hpp"
#include "floodseg/model.hpp"
#include "floodseg/tensor.hpp"

namespace floodseg {

namespace detail {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Per-thread scratch for the im2col matrix and its gradient twin, so
// parallel patch/batch workers never share buffers.
template <class T>
struct ConvWorkspace {
  std::vector<T> cols;
  std::vector<T> cols_grad;
};

template <class T>
inline ConvWorkspace<T>& conv_workspace() {
  thread_local ConvWorkspace<T> ws;
  return ws;
}

// Expands one Cin x H x W item into a (Cin*k*k) x (H*W) matrix. Row
// (ci*k + ky)*k + kx holds the input shifted by (ky - pad, kx - pad) with
// zeros outside the image.
template <class T>
void im2col(const T* input, int64_t cin, int64_t h, int64_t w, int64_t k, int64_t pad, T* cols) {
  const int64_t hw = h * w;
  for (int64_t ci = 0; ci < cin; ++ci) {
    const T* chan = input + ci * hw;
    for (int64_t ky = 0; ky < k; ++ky) {
      for (int64_t kx = 0; kx < k; ++kx) {
        T* row = cols + ((ci * k + ky) * k + kx) * hw;
        const int64_t dx = kx - pad;
        const int64_t lead = std::max<int64_t>(0, -dx);
        const int64_t count = w - std::abs(dx);
        for (int64_t y = 0; y < h; ++y) {
          T* dst = row + y * w;
          const int64_t iy = y + ky - pad;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + w, T{0});
            continue;
          }
          std::fill(dst, dst + lead, T{0});
          std::memcpy(dst + lead, chan + iy * w + std::max<int64_t>(0, dx),
                      static_cast<size_t>(count) * sizeof(T));
          std::fill(dst + lead + count, dst + w, T{0});
        }
      }
    }
  }
}

// Transpose of im2col: scatter-adds a (Cin*k*k) x (H*W) gradient back onto
// the Cin x H x W input gradient.
template <class T>
void col2im_add(const T* cols, int64_t cin, int64_t h, int64_t w, int64_t k, int64_t pad,
                T* input_grad) {
  const int64_t hw = h * w;
  for (int64_t ci = 0; ci < cin; ++ci) {
    T* chan = input_grad + ci * hw;
    for (int64_t ky = 0; ky < k; ++ky) {
      for (int64_t kx = 0; kx < k; ++kx) {
        const T* row = cols + ((ci * k + ky) * k + kx) * hw;
        const int64_t dx = kx - pad;
        const int64_t lead = std::max<int64_t>(0, -dx);
        const int64_t count = w - std::abs(dx);
        for (int64_t y = 0; y < h; ++y) {
          const int64_t iy = y + ky - pad;
          if (iy < 0 || iy >= h) continue;
          const T* src = row + y * w + lead;
          T* dst = chan + iy * w + std::max<int64_t>(0, dx);
          for (int64_t i = 0; i < count; ++i) dst[i] += src[i];
        }
      }
    }
  }
}

template <class T>
void check_conv_input(const Tensor<T>& input, const Conv2d<T>& layer) {
  if (input.shape.size() != 4) {
    fail(Errc::shape, "conv2d expects an NxCxHxW input, got " + shape_string(input.shape));
  }
  if (input.dim(1) != layer.in_channels) {
    fail(Errc::shape, "conv2d channel mismatch: input " + shape_string(input.shape) +
                          " vs layer [" + std::to_string(layer.out_channels) + "x" +
                          std::to_string(layer.in_channels) + "x" + std::to_string(layer.kernel) +
                          "x" + std::to_string(layer.kernel) + "]");
  }
}

}  // namespace detail

// Same-padding cross-correlation plus bias. Input N x Cin x H x W, output
// N x Cout x H x W.
template <class T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Conv2d<T>& layer) {
  detail::check_conv_input(input, layer);
  const int64_t n = input.dim(0), h = input.dim(2), w = input.dim(3);
  const int64_t hw = h * w;
  const int64_t kk = layer.in_channels * layer.kernel * layer.kernel;

  Tensor<T> out = Tensor<T>::zeros({n, layer.out_channels, h, w});
  auto& ws = detail::conv_workspace<T>();
  ws.cols.resize(static_cast<size_t>(kk * hw));

  Eigen::Map<const detail::RowMat<T>> wmat(layer.weight.data(), layer.out_channels, kk);
  Eigen::Map<detail::RowMat<T>> cols(ws.cols.data(), kk, hw);

  for (int64_t item = 0; item < n; ++item) {
    detail::im2col(input.data() + item * layer.in_channels * hw, layer.in_channels, h, w,
                   layer.kernel, layer.padding(), ws.cols.data());
    Eigen::Map<detail::RowMat<T>> omat(out.data() + item * layer.out_channels * hw,
                                       layer.out_channels, hw);
    omat.noalias() = wmat * cols;
    for (int64_t co = 0; co < layer.out_channels; ++co) {
      omat.row(co).array() += layer.bias[static_cast<size_t>(co)];
    }
  }
  check_finite(out, "conv2d output");
  return out;
}

// Exact analytic gradients. Returns the input gradient and accumulates the
// weight/bias gradients into the supplied buffers (sized like the layer's
// weight and bias).
template <class T>
Tensor<T> conv2d_backward(const Tensor<T>& input, const Conv2d<T>& layer,
                          const Tensor<T>& out_grad, std::vector<T>& weight_grad,
                          std::vector<T>& bias_grad) {
  detail::check_conv_input(input, layer);
  if (out_grad.shape != std::vector<int64_t>{input.dim(0), layer.out_channels, input.dim(2),
                                             input.dim(3)}) {
    fail(Errc::shape, "conv2d_backward gradient shape " + shape_string(out_grad.shape) +
                          " does not match output of input " + shape_string(input.shape));
  }
  const int64_t n = input.dim(0), h = input.dim(2), w = input.dim(3);
  const int64_t hw = h * w;
  const int64_t kk = layer.in_channels * layer.kernel * layer.kernel;

  Tensor<T> in_grad = Tensor<T>::zeros(input.shape);
  auto& ws = detail::conv_workspace<T>();
  ws.cols.resize(static_cast<size_t>(kk * hw));
  ws.cols_grad.resize(static_cast<size_t>(kk * hw));

  Eigen::Map<const detail::RowMat<T>> wmat(layer.weight.data(), layer.out_channels, kk);
  Eigen::Map<detail::RowMat<T>> cols(ws.cols.data(), kk, hw);
  Eigen::Map<detail::RowMat<T>> cols_grad(ws.cols_grad.data(), kk, hw);
  Eigen::Map<detail::RowMat<T>> wgrad(weight_grad.data(), layer.out_channels, kk);

  for (int64_t item = 0; item < n; ++item) {
    detail::im2col(input.data() + item * layer.in_channels * hw, layer.in_channels, h, w,
                   layer.kernel, layer.padding(), ws.cols.data());
    Eigen::Map<const detail::RowMat<T>> gmat(out_grad.data() + item * layer.out_channels * hw,
                                             layer.out_channels, hw);
    wgrad.noalias() += gmat * cols.transpose();
    for (int64_t co = 0; co < layer.out_channels; ++co) {
      bias_grad[static_cast<size_t>(co)] += gmat.row(co).sum();
    }
    cols_grad.noalias() = wmat.transpose() * gmat;
    detail::col2im_add(ws.cols_grad.data(), layer.in_channels, h, w, layer.kernel,
                       layer.padding(), in_grad.data() + item * layer.in_channels * hw);
  }
  return in_grad;
}

template <class T>
Tensor<T> relu_forward(const Tensor<T>& x) {
  Tensor<T> out = x;
  for (auto& v : out.values) v = v > T{0} ? v : T{0};
  return out;
}

// Gates the upstream gradient by x > 0; the subgradient at exactly 0 is 0.
template <class T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& upstream) {
  if (x.shape != upstream.shape) {
    fail(Errc::shape, "relu_backward shape mismatch: " + shape_string(x.shape) + " vs " +
                          shape_string(upstream.shape));
  }
  Tensor<T> out = upstream;
  for (size_t i = 0; i < out.values.size(); ++i) {
    if (!(x.values[i] > T{0})) out.values[i] = T{0};
  }
  return out;
}

// Softmax over the class axis (axis 1) of an N x C x H x W tensor, computed
// with max-subtraction so large scores cannot overflow.
template <class T>
Tensor<T> softmax(const Tensor<T>& scores) {
  if (scores.shape.size() != 4) {
    fail(Errc::shape, "softmax expects NxCxHxW scores, got " + shape_string(scores.shape));
  }
  const int64_t n = scores.dim(0), c = scores.dim(1), hw = scores.dim(2) * scores.dim(3);
  Tensor<T> probs = Tensor<T>::zeros(scores.shape);
  for (int64_t item = 0; item < n; ++item) {
    const T* z = scores.data() + item * c * hw;
    T* p = probs.data() + item * c * hw;
    for (int64_t j = 0; j < hw; ++j) {
      T m = z[j];
      for (int64_t ch = 1; ch < c; ++ch) m = std::max(m, z[ch * hw + j]);
      T sum = T{0};
      for (int64_t ch = 0; ch < c; ++ch) {
        const T e = std::exp(z[ch * hw + j] - m);
        p[ch * hw + j] = e;
        sum += e;
      }
      for (int64_t ch = 0; ch < c; ++ch) p[ch * hw + j] /= sum;
    }
  }
  return probs;
}

// Inputs seen by each layer during a forward pass; consumed by backward.
template <class T>
struct ForwardTrace {
  std::vector<Tensor<T>> inputs;
};

template <class T>
Tensor<T> model_forward(const ModelT<T>& model, const Tensor<T>& batch,
                        ForwardTrace<T>* trace = nullptr) {
  if (batch.shape.size() != 4) {
    fail(Errc::shape, "model_forward expects NxCxHxW, got " + shape_string(batch.shape));
  }
  if (batch.dim(1) != model.input_bands) {
    fail(Errc::shape, "model expects " + std::to_string(model.input_bands) + " bands, input has " +
                          std::to_string(batch.dim(1)));
  }
  Tensor<T> act = batch;
  for (const auto& layer : model.layers) {
    if (trace) trace->inputs.push_back(act);
    act = layer.kind == LayerKind::conv ? conv2d_forward(act, layer.conv) : relu_forward(act);
  }
  return act;
}

// Gradient buffers mirroring a model's layer list (empty slots for ReLU).
template <class T>
struct ModelGrads {
  std::vector<std::vector<T>> weight;
  std::vector<std::vector<T>> bias;

  static ModelGrads like(const ModelT<T>& model) {
    ModelGrads g;
    g.weight.resize(model.layers.size());
    g.bias.resize(model.layers.size());
    for (size_t i = 0; i < model.layers.size(); ++i) {
      if (model.layers[i].kind == LayerKind::conv) {
        g.weight[i].assign(model.layers[i].conv.weight_count(), T{0});
        g.bias[i].assign(static_cast<size_t>(model.layers[i].conv.out_channels), T{0});
      }
    }
    return g;
  }

  void add(const ModelGrads& other) {
    for (size_t i = 0; i < weight.size(); ++i) {
      for (size_t j = 0; j < weight[i].size(); ++j) weight[i][j] += other.weight[i][j];
      for (size_t j = 0; j < bias[i].size(); ++j) bias[i][j] += other.bias[i][j];
    }
  }
};

// Reverse pass over the trace; accumulates layer gradients into `grads` and
// returns the gradient w.r.t. the batch input.
template <class T>
Tensor<T> model_backward(const ModelT<T>& model, const ForwardTrace<T>& trace,
                         const Tensor<T>& output_grad, ModelGrads<T>& grads) {
  if (trace.inputs.size() != model.layers.size()) {
    fail(Errc::argument, "forward trace does not match model layer count");
  }
  Tensor<T> g = output_grad;
  for (size_t i = model.layers.size(); i-- > 0;) {
    const auto& layer = model.layers[i];
    if (layer.kind == LayerKind::conv) {
      g = conv2d_backward(trace.inputs[i], layer.conv, g, grads.weight[i], grads.bias[i]);
    } else {
      g = relu_backward(trace.inputs[i], g);
    }
  }
  return g;
}

}  // namespace floodseg
