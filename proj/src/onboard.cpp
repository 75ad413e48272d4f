#include "floodseg/onboard.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include "floodseg/nn.hpp"
#include "floodseg/parallel.hpp"
#include "floodseg/rng.hpp"

namespace floodseg {

// ---- 2-bit packing -----------------------------------------------------------

std::vector<uint8_t> pack_mask(const ClassMask& mask) {
  mask.check_valid();
  std::vector<uint8_t> bytes(packed_size_bytes(mask.pixel_count()), 0);
  for (size_t i = 0; i < mask.labels.size(); ++i) {
    bytes[i / 4] |= static_cast<uint8_t>(mask.labels[i] << ((i % 4) * 2));
  }
  return bytes;
}

ClassMask unpack_mask(std::span<const uint8_t> bytes, uint32_t width, uint32_t height) {
  const uint64_t pixels = uint64_t(width) * height;
  const uint64_t expected = packed_size_bytes(pixels);
  if (bytes.size() < expected) {
    fail(Errc::format, "packed payload too short: expected " + std::to_string(expected) +
                           " bytes, got " + std::to_string(bytes.size()));
  }
  if (bytes.size() > expected) {
    fail(Errc::format, "packed payload too long: expected " + std::to_string(expected) +
                           " bytes, got " + std::to_string(bytes.size()));
  }
  if (pixels % 4 != 0) {
    const unsigned used = static_cast<unsigned>((pixels % 4) * 2);
    if (bytes[expected - 1] >> used != 0) {
      fail(Errc::format, "nonzero padding bits in final packed byte");
    }
  }
  ClassMask mask = ClassMask::filled(width, height, kInvalid);
  for (uint64_t i = 0; i < pixels; ++i) {
    mask.labels[i] = static_cast<uint8_t>((bytes[i / 4] >> ((i % 4) * 2)) & 0x3);
  }
  return mask;
}

// ---- downlink accounting --------------------------------------------------------

void DownlinkSpec::validate() const {
  if (source_bands == 0 || bits_per_sample == 0) {
    fail(Errc::argument, "downlink bands and bits per sample must be > 0");
  }
  if (map_bits_per_pixel != 1 && map_bits_per_pixel != 2 && map_bits_per_pixel != 4 &&
      map_bits_per_pixel != 8) {
    fail(Errc::argument, "map bits per pixel must be one of 1, 2, 4, 8");
  }
}

Ratio reduction_factor(const DownlinkSpec& spec) {
  spec.validate();
  Ratio r;
  r.num = int64_t(spec.source_bands) * spec.bits_per_sample;
  r.den = spec.map_bits_per_pixel;
  const int64_t g = std::gcd(r.num, r.den);
  r.num /= g;
  r.den /= g;
  return r;
}

// ---- full-scene inference ---------------------------------------------------------

namespace {

struct SceneGrid {
  uint32_t patch = 0;
  PatchGrid grid;
};

SceneGrid plan_grid(const MultiBandImage& image, uint32_t patch_size, uint32_t overlap) {
  if (patch_size == 0) fail(Errc::argument, "patch size must be >= 1");
  if (overlap >= patch_size) fail(Errc::argument, "overlap must be smaller than the patch size");
  SceneGrid plan;
  // Scenes smaller than the patch fall back to one inward-fit patch.
  plan.patch = std::min({patch_size, image.width, image.height});
  const uint32_t stride = plan.patch > overlap ? plan.patch - overlap : 1;
  plan.grid = make_patch_grid(image.width, image.height, plan.patch, stride);
  return plan;
}

}  // namespace

Tensor<float> scene_scores(const Model& model, const MultiBandImage& image, uint32_t patch_size,
                           uint32_t overlap, unsigned threads) {
  if (static_cast<int64_t>(image.band_count()) != model.input_bands) {
    fail(Errc::shape, "model expects " + std::to_string(model.input_bands) + " bands, scene has " +
                          std::to_string(image.band_count()));
  }
  const SceneGrid plan = plan_grid(image, patch_size, overlap);
  const size_t n = plan.grid.offsets.size();

  std::vector<Tensor<float>> patch_scores(n);
  parallel_for(n, threads, [&](size_t i) {
    const auto [r, c] = plan.grid.offsets[i];
    const MultiBandImage patch = crop_image(image, r, c, plan.patch, plan.patch);
    Tensor<float> out = model_forward(model, image_to_tensor(patch));
    out.shape = {kModelClasses, int64_t(plan.patch), int64_t(plan.patch)};
    patch_scores[i] = std::move(out);
  });

  return stitch(patch_scores, plan.grid.offsets, image.width, image.height);
}

ClassMask segment_scene(const Model& model, const MultiBandImage& image, uint32_t patch_size,
                        uint32_t overlap, unsigned threads) {
  return scores_to_mask(scene_scores(model, image, patch_size, overlap, threads));
}

std::vector<float> water_probability(const Model& model, const MultiBandImage& image,
                                     uint32_t patch_size, uint32_t overlap, unsigned threads) {
  Tensor<float> scores = scene_scores(model, image, patch_size, overlap, threads);
  scores.shape = {1, kModelClasses, scores.shape[1], scores.shape[2]};
  const Tensor<float> probs = softmax(scores);
  const size_t plane = image.pixel_count();
  const int water_channel = kWater - 1;
  std::vector<float> out(plane);
  std::copy_n(probs.data() + size_t(water_channel) * plane, plane, out.begin());
  return out;
}

// ---- throughput benchmark -----------------------------------------------------------

BenchResult benchmark(const Model& model, uint32_t width, uint32_t height, uint32_t bands,
                      uint32_t repetitions, uint32_t patch_size, uint32_t overlap,
                      unsigned threads, uint64_t seed) {
  if (repetitions == 0) fail(Errc::argument, "repetitions must be >= 1");
  if (static_cast<int64_t>(bands) != model.input_bands) {
    fail(Errc::shape, "model expects " + std::to_string(model.input_bands) + " bands, requested " +
                          std::to_string(bands));
  }

  MultiBandImage scene =
      MultiBandImage::zeros(width, height, BandId::canonical(static_cast<int32_t>(bands)));
  Rng rng(derive_seed(seed, 0x5ce4e));
  for (auto& v : scene.data) v = static_cast<float>(rng.uniform());

  std::vector<double> wall_ms(repetitions);
  for (uint32_t rep = 0; rep < repetitions; ++rep) {
    const auto t0 = std::chrono::steady_clock::now();
    const ClassMask mask = segment_scene(model, scene, patch_size, overlap, threads);
    const auto t1 = std::chrono::steady_clock::now();
    (void)mask;
    wall_ms[rep] = std::chrono::duration<double, std::milli>(t1 - t0).count();
  }
  std::sort(wall_ms.begin(), wall_ms.end());
  const double median = wall_ms[wall_ms.size() / 2];

  const SceneGrid plan = plan_grid(scene, patch_size, overlap);
  const uint64_t patches = plan.grid.offsets.size();

  BenchResult result;
  result.pixels = uint64_t(width) * height;
  result.wall_ms = median;
  result.pixels_per_second = static_cast<double>(result.pixels) / (median / 1000.0);
  result.flops = count_flops(model, plan.patch, plan.patch).total() * patches;

  // Scene + stitched scores + coverage counts + per-patch outputs + the
  // per-thread im2col scratch at the widest layer.
  uint64_t widest = 0;
  for (const auto& layer : model.layers) {
    if (layer.kind != LayerKind::conv) continue;
    widest = std::max(widest, uint64_t(layer.conv.in_channels) * layer.conv.kernel *
                                  layer.conv.kernel * plan.patch * plan.patch);
  }
  result.peak_bytes = uint64_t(scene.data.size()) * sizeof(float) +
                      uint64_t(kModelClasses) * result.pixels * sizeof(float) +
                      result.pixels * sizeof(uint32_t) +
                      patches * kModelClasses * plan.patch * plan.patch * sizeof(float) +
                      uint64_t(resolve_threads(threads)) * widest * sizeof(float);
  return result;
}

}  // namespace floodseg
