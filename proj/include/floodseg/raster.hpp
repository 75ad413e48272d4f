#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "floodseg/error.hpp"
#include "floodseg/tensor.hpp"

namespace floodseg {

// ---- class labels --------------------------------------------------------

// Per-pixel classes; exactly four codes so a mask packs into 2 bits/pixel.
inline constexpr uint8_t kInvalid = 0;
inline constexpr uint8_t kLand = 1;
inline constexpr uint8_t kWater = 2;
inline constexpr uint8_t kCloud = 3;
inline constexpr int kClassCount = 4;

// The three semantic classes a model can emit (INVALID is a data-quality
// label, never a prediction). Channel c of a score tensor corresponds to
// class code c + 1.
inline constexpr int kModelClasses = 3;

const char* class_name(uint8_t label);

// ---- bands ---------------------------------------------------------------

enum class S2Band : int32_t {
  B01 = 0, B02, B03, B04, B05, B06, B07, B08, B8A, B09, B10, B11, B12
};
inline constexpr int kS2BandCount = 13;

// Identifies one spectral channel: either one of the 13 Sentinel-2 bands or
// a generic index for synthetic / hyperspectral (e.g. 49-channel) stacks.
class BandId {
 public:
  static BandId s2(S2Band b) { return BandId(static_cast<int32_t>(b)); }
  static BandId generic(int32_t index);
  static std::vector<BandId> s2_all();
  static std::vector<BandId> generic_run(int32_t count);
  // Canonical band list for a channel count: 13 -> the S2 set, anything
  // else -> generic indices. This is also the convention WFB readers use,
  // since the file format stores only a channel count.
  static std::vector<BandId> canonical(int32_t count);

  bool is_s2() const { return code_ < kS2BandCount; }
  S2Band s2_band() const;
  int32_t generic_index() const;
  int32_t code() const { return code_; }
  std::string name() const;

  friend bool operator==(BandId a, BandId b) { return a.code_ == b.code_; }

 private:
  explicit BandId(int32_t code) : code_(code) {}
  int32_t code_;
};

// ---- image and mask ------------------------------------------------------

// H x W x C scene of unitless top-of-atmosphere reflectances. Samples are
// stored band-sequential, row-major within each band. Treated as immutable
// once filled; all pipeline stages produce fresh instances.
struct MultiBandImage {
  uint32_t width = 0;
  uint32_t height = 0;
  std::vector<BandId> bands;
  std::vector<float> data;

  static MultiBandImage zeros(uint32_t width, uint32_t height, std::vector<BandId> bands);

  size_t pixel_count() const { return size_t(width) * height; }
  size_t band_count() const { return bands.size(); }

  size_t band_index(BandId id) const;  // argument error if the band is absent

  float at(size_t band, uint32_t row, uint32_t col) const {
    return data[band * pixel_count() + size_t(row) * width + col];
  }
  float& at(size_t band, uint32_t row, uint32_t col) {
    return data[band * pixel_count() + size_t(row) * width + col];
  }

  std::span<const float> band(size_t b) const {
    return {data.data() + b * pixel_count(), pixel_count()};
  }
  std::span<float> band(size_t b) {
    return {data.data() + b * pixel_count(), pixel_count()};
  }

  void check_valid() const;  // sizes, unique bands, finite samples
};

// Per-pixel 4-class label grid, 2-bit codable, row-major.
struct ClassMask {
  uint32_t width = 0;
  uint32_t height = 0;
  std::vector<uint8_t> labels;

  static ClassMask filled(uint32_t width, uint32_t height, uint8_t label);

  size_t pixel_count() const { return size_t(width) * height; }
  bool empty() const { return labels.empty(); }

  uint8_t at(uint32_t row, uint32_t col) const { return labels[size_t(row) * width + col]; }
  uint8_t& at(uint32_t row, uint32_t col) { return labels[size_t(row) * width + col]; }

  // Counts indexed by class code: [invalid, land, water, cloud].
  std::array<uint64_t, kClassCount> class_counts() const;

  void check_valid() const;
};

// ---- tiling --------------------------------------------------------------

// Patch placement for one image: offsets step by `stride` and the final
// offset per axis is shifted inward to dim - patch_size, so every patch lies
// fully inside the image and every pixel is covered at least once.
struct PatchGrid {
  uint32_t patch_size = 0;
  uint32_t stride = 0;
  std::vector<std::pair<uint32_t, uint32_t>> offsets;  // (row, col)
};

PatchGrid make_patch_grid(uint32_t width, uint32_t height, uint32_t patch_size, uint32_t stride);

struct Patch {
  MultiBandImage image;
  ClassMask mask;  // empty when tiling an image without labels
  uint32_t row = 0;
  uint32_t col = 0;
};

MultiBandImage crop_image(const MultiBandImage& image, uint32_t row, uint32_t col,
                          uint32_t height, uint32_t width);
ClassMask crop_mask(const ClassMask& mask, uint32_t row, uint32_t col,
                    uint32_t height, uint32_t width);

// Cuts image (and mask, when given) into identical patches.
std::vector<Patch> tile(const MultiBandImage& image, const ClassMask* mask,
                        uint32_t patch_size, uint32_t stride);

// Merges per-patch class scores (each shaped kModelClasses x h x w) back to a
// full kModelClasses x height x width map. Overlapping pixels get the
// arithmetic mean of their score vectors; accumulation runs in patch order,
// so the result is bit-identical for any thread count upstream.
Tensor<float> stitch(const std::vector<Tensor<float>>& patch_scores,
                     const std::vector<std::pair<uint32_t, uint32_t>>& offsets,
                     uint32_t width, uint32_t height);

// ---- resolution degradation ----------------------------------------------

// Block-averages reflectance over factor x factor windows (the area-average
// sensor model) and reduces labels by plurality vote. Vote ties break by
// priority WATER > CLOUD > LAND > INVALID; blocks with more than 50% INVALID
// pixels become INVALID regardless.
std::pair<MultiBandImage, ClassMask> degrade(const MultiBandImage& image, const ClassMask& mask,
                                             uint32_t factor = 8);

// ---- file formats ----------------------------------------------------------
//
// WFB (image):  "WFB1" | u32 width | u32 height | u32 band_count |
//               u32 dtype (0 = IEEE 754 binary32) | samples, band-sequential
//               row-major, little-endian.
// WFL (mask):   "WFL1" | u32 width | u32 height | 2-bit packed labels,
//               row-major pixels, LSB-first within each byte, final byte
//               zero-padded.
// Rendering:    binary PPM (P6), fixed palette.

MultiBandImage read_image(const std::string& path);
void write_image(const MultiBandImage& image, const std::string& path);

ClassMask read_mask(const std::string& path);
void write_mask(const ClassMask& mask, const std::string& path);

// Palette: INVALID black, LAND forest green (34,139,34), WATER blue
// (0,0,255), CLOUD white.
void render_mask(const ClassMask& mask, const std::string& path);

}  // namespace floodseg
