#include "floodseg/ndwi.hpp"

#include <algorithm>
#include <cmath>

namespace floodseg {

std::vector<float> ndwi(const MultiBandImage& image, BandId band_a, BandId band_b) {
  if (band_a == band_b) fail(Errc::argument, "index bands must differ");
  const auto a = image.band(image.band_index(band_a));
  const auto b = image.band(image.band_index(band_b));
  std::vector<float> index(image.pixel_count());
  for (size_t i = 0; i < index.size(); ++i) {
    const float sum = a[i] + b[i];
    if (sum == 0.0f) {
      index[i] = 0.0f;  // degenerate denominator: neutral value
    } else {
      index[i] = std::clamp((a[i] - b[i]) / sum, -1.0f, 1.0f);
    }
  }
  return index;
}

ClassMask classify_fixed(const MultiBandImage& image, const NdwiConfig& config,
                         const ClassMask* validity) {
  if (validity && !validity->empty() &&
      (validity->width != image.width || validity->height != image.height)) {
    fail(Errc::argument, "validity mask dimensions do not match image");
  }
  const std::vector<float> index = ndwi(image, config.band_a, config.band_b);
  ClassMask mask = ClassMask::filled(image.width, image.height, kLand);
  for (size_t i = 0; i < index.size(); ++i) {
    if (validity && !validity->empty() && validity->labels[i] == kInvalid) {
      mask.labels[i] = kInvalid;
    } else if (static_cast<double>(index[i]) > config.threshold) {
      mask.labels[i] = kWater;
    }
  }
  return mask;
}

TunedThreshold tune_threshold(const MultiBandImage& image, const ClassMask& truth,
                              std::span<const double> grid, const NdwiConfig& bands) {
  if (grid.empty()) fail(Errc::argument, "threshold grid must not be empty");
  for (double t : grid) {
    if (!(t >= -1.0 && t <= 1.0)) fail(Errc::argument, "grid thresholds must lie in [-1, 1]");
  }
  if (truth.width != image.width || truth.height != image.height) {
    fail(Errc::argument, "truth mask dimensions do not match image");
  }
  size_t valid = 0;
  for (uint8_t label : truth.labels) valid += label != kInvalid;
  if (valid == 0) fail(Errc::evaluation, "truth mask has no valid pixel");

  const std::vector<float> index = ndwi(image, bands.band_a, bands.band_b);

  std::vector<double> sorted(grid.begin(), grid.end());
  std::sort(sorted.begin(), sorted.end());

  TunedThreshold best{sorted.front(), -1.0};
  for (double threshold : sorted) {
    uint64_t tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < index.size(); ++i) {
      const uint8_t truth_label = truth.labels[i];
      if (truth_label == kInvalid) continue;
      const bool pred_water = static_cast<double>(index[i]) > threshold;
      const bool is_water = truth_label == kWater;
      tp += pred_water && is_water;
      fp += pred_water && !is_water;
      fn += !pred_water && is_water;
    }
    const uint64_t denom = tp + fp + fn;
    const double iou = denom == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(denom);
    if (iou > best.water_iou) best = {threshold, iou};  // ties keep the smaller threshold
  }
  return best;
}

std::vector<double> default_threshold_grid() {
  std::vector<double> grid(201);
  for (int i = 0; i < 201; ++i) grid[i] = static_cast<double>(i - 100) / 100.0;
  return grid;
}

}  // namespace floodseg
