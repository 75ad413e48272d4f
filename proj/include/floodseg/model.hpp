#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "floodseg/raster.hpp"
#include "floodseg/tensor.hpp"

namespace floodseg {

// 2-D convolution layer: stride 1, odd kernel, "same" zero padding, so the
// output keeps the input's spatial dimensions.
template <class T>
struct Conv2d {
  int64_t out_channels = 0;
  int64_t in_channels = 0;
  int64_t kernel = 0;     // odd
  std::vector<T> weight;  // cout x cin x k x k
  std::vector<T> bias;    // cout

  int64_t padding() const { return (kernel - 1) / 2; }
  size_t weight_count() const {
    return static_cast<size_t>(out_channels * in_channels * kernel * kernel);
  }
};

enum class LayerKind : uint32_t { conv = 0, relu = 1 };

template <class T>
struct Layer {
  LayerKind kind = LayerKind::conv;
  Conv2d<T> conv;  // empty when kind == relu
};

enum class ModelKind : uint32_t { linear = 0, scnn = 1 };

const char* model_kind_name(ModelKind kind);

// Sequential fully-convolutional per-pixel classifier over kModelClasses
// classes. Weights are immutable during inference; only the trainer writes
// them.
template <class T>
struct ModelT {
  ModelKind kind = ModelKind::linear;
  int64_t input_bands = 0;
  std::vector<Layer<T>> layers;
};

using Model = ModelT<float>;

// Builders. `linear` is a single 1x1 convolution (bands -> 3). `scnn` is the
// four-convolution stack 3x3(bands->64) / ReLU / 3x3(64->128) / ReLU /
// 3x3(128->128) / ReLU / 1x1(128->3). Conv weights are He-uniform
// initialised from the given seed, biases start at zero.
template <class T>
ModelT<T> make_model(ModelKind kind, int64_t bands, uint64_t seed);

Model make_linear(int64_t bands, uint64_t seed);
Model make_scnn(int64_t bands, uint64_t seed);

template <class T>
uint64_t count_params(const ModelT<T>& model);

struct FlopCount {
  uint64_t conv = 0;     // 2 * H * W * Cin * Cout * k^2 per conv layer
  uint64_t relu = 0;     // 1 op per element
  uint64_t softmax = 0;  // 5 ops per element of the class map
  uint64_t total() const { return conv + relu + softmax; }
};

template <class T>
FlopCount count_flops(const ModelT<T>& model, int64_t height, int64_t width);

// WFM1 model file: "WFM1" | u32 layer_count | per layer: u32 kind,
// for conv layers u32 cout | u32 cin | u32 k followed by little-endian f32
// weights then biases. Roundtrips are bit-exact.
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

// 1 x C x H x W activation from a scene, channels in band order.
Tensor<float> image_to_tensor(const MultiBandImage& image);

// Argmax over the class axis of a kModelClasses x H x W (or 1 x C x H x W)
// score map. Ties take the lowest class code; INVALID is never emitted.
ClassMask scores_to_mask(const Tensor<float>& scores);

// Runs the model on a single patch-sized scene.
ClassMask predict(const Model& model, const MultiBandImage& patch);

}  // namespace floodseg
