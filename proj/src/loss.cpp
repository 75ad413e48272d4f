#include "floodseg/loss.hpp"

namespace floodseg {

void LossConfig::validate() const {
  for (double w : class_weights) {
    if (!(w > 0.0) || !std::isfinite(w)) fail(Errc::argument, "class weights must be positive");
  }
  if (!(dice_weight >= 0.0) || !std::isfinite(dice_weight)) {
    fail(Errc::argument, "dice_weight must be >= 0");
  }
  if (!(epsilon > 0.0)) fail(Errc::argument, "epsilon must be > 0");
}

LabelBatch LabelBatch::from_mask(const ClassMask& mask) {
  const ClassMask* ptr = &mask;
  return from_masks(std::span<const ClassMask* const>(&ptr, 1));
}

LabelBatch LabelBatch::from_masks(std::span<const ClassMask* const> masks) {
  if (masks.empty()) fail(Errc::argument, "label batch needs at least one mask");
  LabelBatch batch;
  batch.n = static_cast<int64_t>(masks.size());
  batch.h = masks[0]->height;
  batch.w = masks[0]->width;
  batch.labels.reserve(static_cast<size_t>(batch.n) * batch.h * batch.w);
  for (const ClassMask* mask : masks) {
    if (mask->width != masks[0]->width || mask->height != masks[0]->height) {
      fail(Errc::argument, "all masks in a batch must share dimensions");
    }
    batch.labels.insert(batch.labels.end(), mask->labels.begin(), mask->labels.end());
  }
  return batch;
}

std::array<double, 3> inverse_frequency_weights(const std::array<double, 3>& class_fractions) {
  std::array<double, 3> weights{};
  double sum = 0.0;
  for (size_t i = 0; i < weights.size(); ++i) {
    const double f = class_fractions[i];
    if (!(f > 0.0) || !std::isfinite(f)) {
      fail(Errc::argument, "class fractions must be positive to invert");
    }
    weights[i] = 1.0 / f;
    sum += weights[i];
  }
  const double mean = sum / static_cast<double>(weights.size());
  for (double& w : weights) w /= mean;
  return weights;
}

}  // namespace floodseg
