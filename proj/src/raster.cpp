#include "floodseg/raster.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "floodseg/onboard.hpp"

namespace floodseg {

namespace {

constexpr uint32_t kMaxDim = 1u << 20;
constexpr uint64_t kMaxSamples = 1ull << 31;

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 24));
}

uint32_t get_u32(const uint8_t* p) {
  return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 | uint32_t(p[3]) << 24;
}

std::vector<uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io, "cannot open " + path);
  in.seekg(0, std::ios::end);
  const auto size = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<uint8_t> bytes(static_cast<size_t>(size));
  if (size > 0) in.read(reinterpret_cast<char*>(bytes.data()), size);
  if (!in) fail(Errc::io, "cannot read " + path);
  return bytes;
}

void write_file(const std::string& path, const uint8_t* data, size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io, "cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) fail(Errc::io, "cannot write " + path);
}

// Offsets along one axis: 0, stride, 2*stride, ... with the last offset
// shifted inward to dim - patch.
std::vector<uint32_t> axis_offsets(uint32_t dim, uint32_t patch, uint32_t stride) {
  std::vector<uint32_t> offsets;
  const uint32_t last = dim - patch;
  for (uint64_t pos = 0; pos < last; pos += stride) offsets.push_back(static_cast<uint32_t>(pos));
  offsets.push_back(last);
  return offsets;
}

}  // namespace

const char* class_name(uint8_t label) {
  switch (label) {
    case kInvalid: return "invalid";
    case kLand: return "land";
    case kWater: return "water";
    case kCloud: return "cloud";
  }
  return "?";
}

// ---- BandId ----------------------------------------------------------------

BandId BandId::generic(int32_t index) {
  if (index < 0) fail(Errc::argument, "generic band index must be >= 0");
  return BandId(kS2BandCount + index);
}

std::vector<BandId> BandId::s2_all() {
  std::vector<BandId> bands;
  bands.reserve(kS2BandCount);
  for (int32_t i = 0; i < kS2BandCount; ++i) bands.push_back(BandId(i));
  return bands;
}

std::vector<BandId> BandId::generic_run(int32_t count) {
  std::vector<BandId> bands;
  bands.reserve(static_cast<size_t>(count));
  for (int32_t i = 0; i < count; ++i) bands.push_back(generic(i));
  return bands;
}

std::vector<BandId> BandId::canonical(int32_t count) {
  return count == kS2BandCount ? s2_all() : generic_run(count);
}

S2Band BandId::s2_band() const {
  if (!is_s2()) fail(Errc::argument, "band " + name() + " is not a Sentinel-2 band");
  return static_cast<S2Band>(code_);
}

int32_t BandId::generic_index() const {
  if (is_s2()) fail(Errc::argument, "band " + name() + " is not a generic band");
  return code_ - kS2BandCount;
}

std::string BandId::name() const {
  static const char* s2_names[kS2BandCount] = {"B01", "B02", "B03", "B04", "B05", "B06", "B07",
                                               "B08", "B8A", "B09", "B10", "B11", "B12"};
  if (is_s2()) return s2_names[code_];
  return "G" + std::to_string(code_ - kS2BandCount);
}

// ---- MultiBandImage / ClassMask ---------------------------------------------

MultiBandImage MultiBandImage::zeros(uint32_t width, uint32_t height, std::vector<BandId> bands) {
  if (width == 0 || height == 0) fail(Errc::argument, "image dimensions must be positive");
  if (bands.empty()) fail(Errc::argument, "image needs at least one band");
  MultiBandImage img;
  img.width = width;
  img.height = height;
  img.bands = std::move(bands);
  img.data.assign(size_t(width) * height * img.bands.size(), 0.0f);
  return img;
}

size_t MultiBandImage::band_index(BandId id) const {
  for (size_t i = 0; i < bands.size(); ++i) {
    if (bands[i] == id) return i;
  }
  fail(Errc::argument, "band " + id.name() + " not present in image");
}

void MultiBandImage::check_valid() const {
  if (width == 0 || height == 0) fail(Errc::argument, "image dimensions must be positive");
  if (bands.empty()) fail(Errc::argument, "image needs at least one band");
  for (size_t i = 0; i < bands.size(); ++i) {
    for (size_t j = i + 1; j < bands.size(); ++j) {
      if (bands[i] == bands[j]) fail(Errc::argument, "duplicate band " + bands[i].name());
    }
  }
  if (data.size() != pixel_count() * bands.size()) {
    fail(Errc::argument, "image data length does not match width*height*bands");
  }
  check_finite(data.data(), data.size(), "image samples");
}

ClassMask ClassMask::filled(uint32_t width, uint32_t height, uint8_t label) {
  if (width == 0 || height == 0) fail(Errc::argument, "mask dimensions must be positive");
  if (label >= kClassCount) fail(Errc::argument, "class code out of range");
  ClassMask mask;
  mask.width = width;
  mask.height = height;
  mask.labels.assign(size_t(width) * height, label);
  return mask;
}

std::array<uint64_t, kClassCount> ClassMask::class_counts() const {
  std::array<uint64_t, kClassCount> counts{};
  for (uint8_t label : labels) ++counts[label];
  return counts;
}

void ClassMask::check_valid() const {
  if (width == 0 || height == 0) fail(Errc::argument, "mask dimensions must be positive");
  if (labels.size() != pixel_count()) fail(Errc::argument, "mask label count mismatch");
  for (uint8_t label : labels) {
    if (label >= kClassCount) fail(Errc::argument, "class code out of range");
  }
}

// ---- tiling ------------------------------------------------------------------

PatchGrid make_patch_grid(uint32_t width, uint32_t height, uint32_t patch_size, uint32_t stride) {
  if (stride == 0) fail(Errc::argument, "stride must be >= 1");
  if (patch_size == 0 || patch_size > width || patch_size > height) {
    fail(Errc::argument, "patch size " + std::to_string(patch_size) + " does not fit a " +
                             std::to_string(width) + "x" + std::to_string(height) + " image");
  }
  PatchGrid grid;
  grid.patch_size = patch_size;
  grid.stride = stride;
  const auto rows = axis_offsets(height, patch_size, stride);
  const auto cols = axis_offsets(width, patch_size, stride);
  grid.offsets.reserve(rows.size() * cols.size());
  for (uint32_t r : rows) {
    for (uint32_t c : cols) grid.offsets.emplace_back(r, c);
  }
  return grid;
}

MultiBandImage crop_image(const MultiBandImage& image, uint32_t row, uint32_t col, uint32_t height,
                          uint32_t width) {
  if (uint64_t(row) + height > image.height || uint64_t(col) + width > image.width) {
    fail(Errc::argument, "crop window exceeds image bounds");
  }
  MultiBandImage out = MultiBandImage::zeros(width, height, image.bands);
  for (size_t b = 0; b < image.band_count(); ++b) {
    const float* src = image.band(b).data();
    float* dst = out.band(b).data();
    for (uint32_t r = 0; r < height; ++r) {
      std::memcpy(dst + size_t(r) * width, src + size_t(row + r) * image.width + col,
                  size_t(width) * sizeof(float));
    }
  }
  return out;
}

ClassMask crop_mask(const ClassMask& mask, uint32_t row, uint32_t col, uint32_t height,
                    uint32_t width) {
  if (uint64_t(row) + height > mask.height || uint64_t(col) + width > mask.width) {
    fail(Errc::argument, "crop window exceeds mask bounds");
  }
  ClassMask out = ClassMask::filled(width, height, kInvalid);
  for (uint32_t r = 0; r < height; ++r) {
    std::memcpy(out.labels.data() + size_t(r) * width,
                mask.labels.data() + size_t(row + r) * mask.width + col, width);
  }
  return out;
}

std::vector<Patch> tile(const MultiBandImage& image, const ClassMask* mask, uint32_t patch_size,
                        uint32_t stride) {
  if (mask && !mask->empty() && (mask->width != image.width || mask->height != image.height)) {
    fail(Errc::argument, "mask dimensions do not match image");
  }
  const PatchGrid grid = make_patch_grid(image.width, image.height, patch_size, stride);
  std::vector<Patch> patches;
  patches.reserve(grid.offsets.size());
  for (auto [r, c] : grid.offsets) {
    Patch p;
    p.row = r;
    p.col = c;
    p.image = crop_image(image, r, c, patch_size, patch_size);
    if (mask && !mask->empty()) p.mask = crop_mask(*mask, r, c, patch_size, patch_size);
    patches.push_back(std::move(p));
  }
  return patches;
}

Tensor<float> stitch(const std::vector<Tensor<float>>& patch_scores,
                     const std::vector<std::pair<uint32_t, uint32_t>>& offsets, uint32_t width,
                     uint32_t height) {
  if (patch_scores.size() != offsets.size() || patch_scores.empty()) {
    fail(Errc::argument, "stitch needs one offset per patch score map");
  }
  Tensor<float> sum = Tensor<float>::zeros({kModelClasses, int64_t(height), int64_t(width)});
  std::vector<uint32_t> cover(size_t(width) * height, 0);

  const size_t plane = size_t(width) * height;
  for (size_t p = 0; p < patch_scores.size(); ++p) {
    const auto& scores = patch_scores[p];
    if (scores.shape.size() != 3 || scores.dim(0) != kModelClasses) {
      fail(Errc::argument, "patch scores must be shaped 3xHxW, got " + shape_string(scores.shape));
    }
    const auto [row, col] = offsets[p];
    const uint32_t ph = static_cast<uint32_t>(scores.dim(1));
    const uint32_t pw = static_cast<uint32_t>(scores.dim(2));
    if (uint64_t(row) + ph > height || uint64_t(col) + pw > width) {
      fail(Errc::argument, "patch at (" + std::to_string(row) + "," + std::to_string(col) +
                               ") exceeds scene bounds");
    }
    for (int c = 0; c < kModelClasses; ++c) {
      const float* src = scores.data() + size_t(c) * ph * pw;
      float* dst = sum.data() + size_t(c) * plane;
      for (uint32_t r = 0; r < ph; ++r) {
        const float* s = src + size_t(r) * pw;
        float* d = dst + size_t(row + r) * width + col;
        for (uint32_t x = 0; x < pw; ++x) d[x] += s[x];
      }
    }
    for (uint32_t r = 0; r < ph; ++r) {
      uint32_t* cv = cover.data() + size_t(row + r) * width + col;
      for (uint32_t x = 0; x < pw; ++x) ++cv[x];
    }
  }

  for (size_t i = 0; i < cover.size(); ++i) {
    if (cover[i] == 0) {
      fail(Errc::coverage, "pixel (" + std::to_string(i / width) + "," +
                               std::to_string(i % width) + ") not covered by any patch");
    }
  }
  for (int c = 0; c < kModelClasses; ++c) {
    float* dst = sum.data() + size_t(c) * plane;
    for (size_t i = 0; i < plane; ++i) dst[i] /= static_cast<float>(cover[i]);
  }
  return sum;
}

// ---- degradation ---------------------------------------------------------------

std::pair<MultiBandImage, ClassMask> degrade(const MultiBandImage& image, const ClassMask& mask,
                                             uint32_t factor) {
  if (factor == 0) fail(Errc::argument, "degrade factor must be >= 1");
  if (image.width % factor != 0 || image.height % factor != 0) {
    fail(Errc::argument, "image dimensions " + std::to_string(image.width) + "x" +
                             std::to_string(image.height) + " not divisible by factor " +
                             std::to_string(factor));
  }
  if (mask.width != image.width || mask.height != image.height) {
    fail(Errc::argument, "mask dimensions do not match image");
  }
  const uint32_t ow = image.width / factor;
  const uint32_t oh = image.height / factor;
  const uint64_t block = uint64_t(factor) * factor;

  MultiBandImage out_img = MultiBandImage::zeros(ow, oh, image.bands);
  for (size_t b = 0; b < image.band_count(); ++b) {
    const float* src = image.band(b).data();
    float* dst = out_img.band(b).data();
    for (uint32_t r = 0; r < oh; ++r) {
      for (uint32_t c = 0; c < ow; ++c) {
        double acc = 0.0;
        for (uint32_t dr = 0; dr < factor; ++dr) {
          const float* row = src + size_t(r * factor + dr) * image.width + size_t(c) * factor;
          for (uint32_t dc = 0; dc < factor; ++dc) acc += row[dc];
        }
        dst[size_t(r) * ow + c] = static_cast<float>(acc / static_cast<double>(block));
      }
    }
  }

  // Plurality vote with tie priority WATER > CLOUD > LAND > INVALID; blocks
  // with more than half INVALID stay INVALID.
  static constexpr uint8_t kPriority[kClassCount] = {kWater, kCloud, kLand, kInvalid};
  ClassMask out_mask = ClassMask::filled(ow, oh, kInvalid);
  for (uint32_t r = 0; r < oh; ++r) {
    for (uint32_t c = 0; c < ow; ++c) {
      uint64_t count[kClassCount] = {0, 0, 0, 0};
      for (uint32_t dr = 0; dr < factor; ++dr) {
        const uint8_t* row =
            mask.labels.data() + size_t(r * factor + dr) * mask.width + size_t(c) * factor;
        for (uint32_t dc = 0; dc < factor; ++dc) ++count[row[dc]];
      }
      uint8_t winner;
      if (count[kInvalid] * 2 > block) {
        winner = kInvalid;
      } else {
        winner = kPriority[0];
        for (uint8_t cls : kPriority) {
          if (count[cls] > count[winner]) winner = cls;
        }
      }
      out_mask.at(r, c) = winner;
    }
  }
  return {std::move(out_img), std::move(out_mask)};
}

// ---- WFB image format ------------------------------------------------------------

MultiBandImage read_image(const std::string& path) {
  const std::vector<uint8_t> bytes = read_file(path);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "WFB1", 4) != 0) {
    fail(Errc::format, path + ": bad magic, expected WFB1");
  }
  if (bytes.size() < 20) fail(Errc::format, path + ": truncated header");
  const uint32_t width = get_u32(bytes.data() + 4);
  const uint32_t height = get_u32(bytes.data() + 8);
  const uint32_t band_count = get_u32(bytes.data() + 12);
  const uint32_t dtype = get_u32(bytes.data() + 16);
  if (dtype != 0) fail(Errc::format, path + ": unsupported dtype " + std::to_string(dtype));
  if (width == 0 || width > kMaxDim) fail(Errc::format, path + ": width out of range");
  if (height == 0 || height > kMaxDim) fail(Errc::format, path + ": height out of range");
  if (band_count == 0) fail(Errc::format, path + ": band_count must be >= 1");
  const uint64_t samples = uint64_t(width) * height * band_count;
  if (samples > kMaxSamples) fail(Errc::format, path + ": band_count/dimension overflow");

  const uint64_t expected = samples * sizeof(float);
  const uint64_t actual = bytes.size() - 20;
  if (actual < expected) {
    fail(Errc::format, path + ": truncated payload, expected " + std::to_string(expected) +
                           " sample bytes, got " + std::to_string(actual));
  }
  if (actual > expected) {
    fail(Errc::format, path + ": oversized payload, expected " + std::to_string(expected) +
                           " sample bytes, got " + std::to_string(actual));
  }

  MultiBandImage img = MultiBandImage::zeros(width, height, BandId::canonical(int32_t(band_count)));
  const uint8_t* p = bytes.data() + 20;
  for (size_t i = 0; i < samples; ++i, p += 4) {
    img.data[i] = std::bit_cast<float>(get_u32(p));
  }
  for (size_t i = 0; i < samples; ++i) {
    if (!std::isfinite(img.data[i])) {
      fail(Errc::format, path + ": non-finite sample value at index " + std::to_string(i));
    }
  }
  return img;
}

void write_image(const MultiBandImage& image, const std::string& path) {
  image.check_valid();
  std::vector<uint8_t> bytes;
  bytes.reserve(20 + image.data.size() * 4);
  bytes.insert(bytes.end(), {'W', 'F', 'B', '1'});
  put_u32(bytes, image.width);
  put_u32(bytes, image.height);
  put_u32(bytes, static_cast<uint32_t>(image.band_count()));
  put_u32(bytes, 0);  // dtype: IEEE 754 binary32
  for (float v : image.data) put_u32(bytes, std::bit_cast<uint32_t>(v));
  write_file(path, bytes.data(), bytes.size());
}

// ---- WFL mask format --------------------------------------------------------------

ClassMask read_mask(const std::string& path) {
  const std::vector<uint8_t> bytes = read_file(path);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "WFL1", 4) != 0) {
    fail(Errc::format, path + ": bad magic, expected WFL1");
  }
  if (bytes.size() < 12) fail(Errc::format, path + ": truncated header");
  const uint32_t width = get_u32(bytes.data() + 4);
  const uint32_t height = get_u32(bytes.data() + 8);
  if (width == 0 || width > kMaxDim) fail(Errc::format, path + ": width out of range");
  if (height == 0 || height > kMaxDim) fail(Errc::format, path + ": height out of range");
  const uint64_t expected = packed_size_bytes(uint64_t(width) * height);
  const uint64_t actual = bytes.size() - 12;
  if (actual < expected) {
    fail(Errc::format, path + ": truncated payload, expected " + std::to_string(expected) +
                           " packed bytes, got " + std::to_string(actual));
  }
  if (actual > expected) {
    fail(Errc::format, path + ": oversized payload, expected " + std::to_string(expected) +
                           " packed bytes, got " + std::to_string(actual));
  }
  try {
    return unpack_mask({bytes.data() + 12, static_cast<size_t>(actual)}, width, height);
  } catch (const Error& e) {
    fail(e.code(), path + ": " + e.what());
  }
}

void write_mask(const ClassMask& mask, const std::string& path) {
  mask.check_valid();
  std::vector<uint8_t> bytes;
  const std::vector<uint8_t> packed = pack_mask(mask);
  bytes.reserve(12 + packed.size());
  bytes.insert(bytes.end(), {'W', 'F', 'L', '1'});
  put_u32(bytes, mask.width);
  put_u32(bytes, mask.height);
  bytes.insert(bytes.end(), packed.begin(), packed.end());
  write_file(path, bytes.data(), bytes.size());
}

// ---- PPM rendering -----------------------------------------------------------------

void render_mask(const ClassMask& mask, const std::string& path) {
  mask.check_valid();
  static constexpr uint8_t kPalette[kClassCount][3] = {
      {0, 0, 0},        // INVALID
      {34, 139, 34},    // LAND
      {0, 0, 255},      // WATER
      {255, 255, 255},  // CLOUD
  };
  std::string header =
      "P6\n" + std::to_string(mask.width) + " " + std::to_string(mask.height) + "\n255\n";
  std::vector<uint8_t> bytes(header.begin(), header.end());
  bytes.reserve(bytes.size() + mask.labels.size() * 3);
  for (uint8_t label : mask.labels) {
    const uint8_t* rgb = kPalette[label];
    bytes.insert(bytes.end(), rgb, rgb + 3);
  }
  write_file(path, bytes.data(), bytes.size());
}

}  // namespace floodseg
