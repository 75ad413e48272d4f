#pragma once

#include <array>
#include <utility>

#include "floodseg/raster.hpp"
#include "floodseg/rng.hpp"

namespace floodseg {

// Training-time augmentation. Geometric transforms (flips, quarter-turn
// rotations) apply identically to image and mask; photometric transforms
// touch the image only, and reflectances are clamped to >= 0 afterwards.
// Every range defaults to one containing the identity.
struct AugmentationParams {
  double flip_horizontal_prob = 0.5;
  double flip_vertical_prob = 0.5;
  bool rotations = true;  // one of 0/90/180/270 degrees, uniform
  std::array<double, 2> channel_jitter{0.95, 1.05};   // per-band multiplier
  double poisson_scale = 0.002;                       // x += N(0, sqrt(max(x,0)*scale))
  std::array<double, 2> brightness_delta{-0.05, 0.05};
  std::array<double, 2> contrast_factor{0.9, 1.1};    // around the per-band mean

  void validate() const;
};

std::pair<MultiBandImage, ClassMask> augment(const MultiBandImage& image, const ClassMask& mask,
                                             const AugmentationParams& params, Rng& rng);

}  // namespace floodseg
