#include "floodseg/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

#include "floodseg/nn.hpp"
#include "floodseg/rng.hpp"

namespace floodseg {

namespace {

constexpr uint32_t kMaxChannels = 1u << 14;
constexpr int64_t kMaxKernel = 31;

template <class T>
Conv2d<T> make_conv(int64_t cout, int64_t cin, int64_t k, Rng& rng) {
  Conv2d<T> conv;
  conv.out_channels = cout;
  conv.in_channels = cin;
  conv.kernel = k;
  conv.weight.resize(conv.weight_count());
  conv.bias.assign(static_cast<size_t>(cout), T{0});
  // He-uniform over fan-in; draws are doubles so float and double models
  // built from the same seed share weights.
  const double limit = std::sqrt(6.0 / static_cast<double>(cin * k * k));
  for (auto& w : conv.weight) w = static_cast<T>(rng.uniform(-limit, limit));
  return conv;
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 24));
}

uint32_t get_u32(const uint8_t* p) {
  return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 | uint32_t(p[3]) << 24;
}

}  // namespace

const char* model_kind_name(ModelKind kind) {
  return kind == ModelKind::linear ? "linear" : "scnn";
}

template <class T>
ModelT<T> make_model(ModelKind kind, int64_t bands, uint64_t seed) {
  if (bands < 1) fail(Errc::argument, "model needs at least one input band");
  Rng rng(seed);
  ModelT<T> model;
  model.kind = kind;
  model.input_bands = bands;
  auto conv = [&](int64_t cout, int64_t cin, int64_t k) {
    Layer<T> layer;
    layer.kind = LayerKind::conv;
    layer.conv = make_conv<T>(cout, cin, k, rng);
    model.layers.push_back(std::move(layer));
  };
  auto relu = [&] {
    Layer<T> layer;
    layer.kind = LayerKind::relu;
    model.layers.push_back(std::move(layer));
  };
  if (kind == ModelKind::linear) {
    conv(kModelClasses, bands, 1);
  } else {
    conv(64, bands, 3);
    relu();
    conv(128, 64, 3);
    relu();
    conv(128, 128, 3);
    relu();
    conv(kModelClasses, 128, 1);
  }
  return model;
}

template ModelT<float> make_model<float>(ModelKind, int64_t, uint64_t);
template ModelT<double> make_model<double>(ModelKind, int64_t, uint64_t);

Model make_linear(int64_t bands, uint64_t seed) {
  return make_model<float>(ModelKind::linear, bands, seed);
}

Model make_scnn(int64_t bands, uint64_t seed) {
  return make_model<float>(ModelKind::scnn, bands, seed);
}

template <class T>
uint64_t count_params(const ModelT<T>& model) {
  uint64_t total = 0;
  for (const auto& layer : model.layers) {
    if (layer.kind != LayerKind::conv) continue;
    total += layer.conv.weight_count() + static_cast<uint64_t>(layer.conv.out_channels);
  }
  return total;
}

template uint64_t count_params<float>(const ModelT<float>&);
template uint64_t count_params<double>(const ModelT<double>&);

template <class T>
FlopCount count_flops(const ModelT<T>& model, int64_t height, int64_t width) {
  FlopCount flops;
  const uint64_t hw = static_cast<uint64_t>(height) * static_cast<uint64_t>(width);
  int64_t channels = model.input_bands;
  for (const auto& layer : model.layers) {
    if (layer.kind == LayerKind::conv) {
      const auto& c = layer.conv;
      flops.conv += 2ull * hw * static_cast<uint64_t>(c.in_channels) *
                    static_cast<uint64_t>(c.out_channels) *
                    static_cast<uint64_t>(c.kernel * c.kernel);
      channels = c.out_channels;
    } else {
      flops.relu += hw * static_cast<uint64_t>(channels);
    }
  }
  flops.softmax += 5ull * hw * kModelClasses;
  return flops;
}

template FlopCount count_flops<float>(const ModelT<float>&, int64_t, int64_t);
template FlopCount count_flops<double>(const ModelT<double>&, int64_t, int64_t);

// ---- WFM1 serialisation ------------------------------------------------------

void save_model(const Model& model, const std::string& path) {
  std::vector<uint8_t> bytes;
  bytes.insert(bytes.end(), {'W', 'F', 'M', '1'});
  put_u32(bytes, static_cast<uint32_t>(model.layers.size()));
  for (const auto& layer : model.layers) {
    put_u32(bytes, static_cast<uint32_t>(layer.kind));
    if (layer.kind != LayerKind::conv) continue;
    put_u32(bytes, static_cast<uint32_t>(layer.conv.out_channels));
    put_u32(bytes, static_cast<uint32_t>(layer.conv.in_channels));
    put_u32(bytes, static_cast<uint32_t>(layer.conv.kernel));
    for (float w : layer.conv.weight) put_u32(bytes, std::bit_cast<uint32_t>(w));
    for (float b : layer.conv.bias) put_u32(bytes, std::bit_cast<uint32_t>(b));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io, "cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(Errc::io, "cannot write " + path);
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io, "cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "WFM1", 4) != 0) {
    fail(Errc::format, path + ": bad magic, expected WFM1");
  }
  size_t pos = 4;
  auto need = [&](size_t n, const char* what) {
    if (bytes.size() - pos < n) fail(Errc::format, path + ": truncated " + std::string(what));
  };
  need(4, "layer count");
  const uint32_t layer_count = get_u32(bytes.data() + pos);
  pos += 4;
  if (layer_count == 0 || layer_count > 64) {
    fail(Errc::format, path + ": layer count out of range");
  }

  Model model;
  for (uint32_t i = 0; i < layer_count; ++i) {
    need(4, "layer kind");
    const uint32_t kind = get_u32(bytes.data() + pos);
    pos += 4;
    if (kind == static_cast<uint32_t>(LayerKind::relu)) {
      Layer<float> layer;
      layer.kind = LayerKind::relu;
      model.layers.push_back(std::move(layer));
      continue;
    }
    if (kind != static_cast<uint32_t>(LayerKind::conv)) {
      fail(Errc::format, path + ": unknown layer kind " + std::to_string(kind));
    }
    need(12, "conv dims");
    const uint32_t cout = get_u32(bytes.data() + pos);
    const uint32_t cin = get_u32(bytes.data() + pos + 4);
    const uint32_t k = get_u32(bytes.data() + pos + 8);
    pos += 12;
    if (cout == 0 || cout > kMaxChannels || cin == 0 || cin > kMaxChannels) {
      fail(Errc::format, path + ": conv channel count out of range");
    }
    if (k == 0 || k % 2 == 0 || static_cast<int64_t>(k) > kMaxKernel) {
      fail(Errc::format, path + ": conv kernel must be odd and small, got " + std::to_string(k));
    }
    Layer<float> layer;
    layer.kind = LayerKind::conv;
    layer.conv.out_channels = cout;
    layer.conv.in_channels = cin;
    layer.conv.kernel = k;
    const size_t weights = layer.conv.weight_count();
    need((weights + cout) * 4, "conv weights");
    layer.conv.weight.resize(weights);
    for (size_t j = 0; j < weights; ++j, pos += 4) {
      layer.conv.weight[j] = std::bit_cast<float>(get_u32(bytes.data() + pos));
    }
    layer.conv.bias.resize(cout);
    for (size_t j = 0; j < cout; ++j, pos += 4) {
      layer.conv.bias[j] = std::bit_cast<float>(get_u32(bytes.data() + pos));
    }
    model.layers.push_back(std::move(layer));
  }
  if (pos != bytes.size()) fail(Errc::format, path + ": trailing bytes after last layer");

  // Wire the architecture summary back up from the layer list.
  const Conv2d<float>* first_conv = nullptr;
  const Conv2d<float>* last_conv = nullptr;
  int64_t channels = -1;
  for (const auto& layer : model.layers) {
    if (layer.kind != LayerKind::conv) continue;
    if (!first_conv) first_conv = &layer.conv;
    if (channels >= 0 && layer.conv.in_channels != channels) {
      fail(Errc::format, path + ": conv layers do not chain");
    }
    channels = layer.conv.out_channels;
    last_conv = &layer.conv;
  }
  if (!first_conv) fail(Errc::format, path + ": model has no conv layer");
  if (last_conv->out_channels != kModelClasses) {
    fail(Errc::format, path + ": final layer must emit " + std::to_string(kModelClasses) +
                           " class channels");
  }
  model.input_bands = first_conv->in_channels;
  model.kind = model.layers.size() == 1 && first_conv->kernel == 1 ? ModelKind::linear
                                                                   : ModelKind::scnn;
  return model;
}

// ---- inference helpers ----------------------------------------------------------

Tensor<float> image_to_tensor(const MultiBandImage& image) {
  Tensor<float> t = Tensor<float>::zeros({1, static_cast<int64_t>(image.band_count()),
                                          static_cast<int64_t>(image.height),
                                          static_cast<int64_t>(image.width)});
  std::memcpy(t.data(), image.data.data(), image.data.size() * sizeof(float));
  return t;
}

ClassMask scores_to_mask(const Tensor<float>& scores) {
  const auto& s = scores.shape;
  int64_t h = 0, w = 0;
  if (s.size() == 3 && s[0] == kModelClasses) {
    h = s[1];
    w = s[2];
  } else if (s.size() == 4 && s[0] == 1 && s[1] == kModelClasses) {
    h = s[2];
    w = s[3];
  } else {
    fail(Errc::shape, "expected 3xHxW or 1x3xHxW scores, got " + shape_string(scores.shape));
  }
  const size_t plane = static_cast<size_t>(h) * static_cast<size_t>(w);
  ClassMask mask = ClassMask::filled(static_cast<uint32_t>(w), static_cast<uint32_t>(h), kLand);
  const float* base = scores.data();
  for (size_t j = 0; j < plane; ++j) {
    int best = 0;
    float best_score = base[j];
    for (int c = 1; c < kModelClasses; ++c) {
      const float v = base[c * plane + j];
      if (v > best_score) {
        best = c;
        best_score = v;
      }
    }
    mask.labels[j] = static_cast<uint8_t>(best + 1);  // channel c -> class code c+1
  }
  return mask;
}

ClassMask predict(const Model& model, const MultiBandImage& patch) {
  if (static_cast<int64_t>(patch.band_count()) != model.input_bands) {
    fail(Errc::shape, "model expects " + std::to_string(model.input_bands) + " bands, image has " +
                          std::to_string(patch.band_count()));
  }
  return scores_to_mask(model_forward(model, image_to_tensor(patch)));
}

}  // namespace floodseg
