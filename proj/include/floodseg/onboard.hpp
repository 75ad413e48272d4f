#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "floodseg/model.hpp"
#include "floodseg/raster.hpp"

namespace floodseg {

// ---- 2-bit flood-map packing -----------------------------------------------
//
// Row-major pixel order, LSB-first 2-bit fields (pixel i occupies bits 2i
// and 2i+1 of the stream), final byte zero-padded. This is also the payload
// layout of the WFL mask format.

std::vector<uint8_t> pack_mask(const ClassMask& mask);
ClassMask unpack_mask(std::span<const uint8_t> bytes, uint32_t width, uint32_t height);

constexpr uint64_t packed_size_bytes(uint64_t pixel_count) { return (pixel_count * 2 + 7) / 8; }

// ---- downlink accounting -----------------------------------------------------

struct DownlinkSpec {
  uint32_t source_bands = 49;
  uint32_t bits_per_sample = 16;
  uint32_t map_bits_per_pixel = 2;  // one of 1, 2, 4, 8

  void validate() const;
};

// Exact rational; never touches floating point.
struct Ratio {
  int64_t num = 0;
  int64_t den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

// (source_bands * bits_per_sample) / map_bits_per_pixel, reduced.
Ratio reduction_factor(const DownlinkSpec& spec);

// ---- full-scene inference ----------------------------------------------------

// Tiles the scene with stride patch_size - overlap (edge patches shifted
// inward), infers per patch, averages class scores on overlaps, then takes
// the per-pixel argmax. Bit-identical for any thread count. Images smaller
// than the patch fall back to a single inward-fit patch.
ClassMask segment_scene(const Model& model, const MultiBandImage& image, uint32_t patch_size = 64,
                        uint32_t overlap = 8, unsigned threads = 1);

// Stitched class scores before the argmax (kModelClasses x H x W).
Tensor<float> scene_scores(const Model& model, const MultiBandImage& image, uint32_t patch_size,
                           uint32_t overlap, unsigned threads);

// Softmax water probability per pixel of the stitched scores, row-major.
std::vector<float> water_probability(const Model& model, const MultiBandImage& image,
                                     uint32_t patch_size = 64, uint32_t overlap = 8,
                                     unsigned threads = 1);

// ---- throughput benchmark ----------------------------------------------------

struct BenchResult {
  uint64_t pixels = 0;
  double wall_ms = 0.0;        // median over repetitions
  double pixels_per_second = 0.0;
  uint64_t flops = 0;          // count_flops(model, patch) x patch count
  uint64_t peak_bytes = 0;     // scene + score buffers + per-thread workspace
};

// Times segment_scene on a seeded random scene of the given size. Scene
// synthesis is excluded from the clock.
BenchResult benchmark(const Model& model, uint32_t width, uint32_t height, uint32_t bands,
                      uint32_t repetitions, uint32_t patch_size = 64, uint32_t overlap = 8,
                      unsigned threads = 1, uint64_t seed = 0);

}  // namespace floodseg
