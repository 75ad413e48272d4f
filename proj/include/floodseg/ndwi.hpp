#pragma once

#include <span>
#include <vector>

#include "floodseg/raster.hpp"

namespace floodseg {

// Normalised-difference water index configuration. The default band pair is
// S2 B02/B08; both bands are parameters, so the McFeeters green/NIR pair
// (B03/B08) is one argument away.
struct NdwiConfig {
  BandId band_a = BandId::s2(S2Band::B02);
  BandId band_b = BandId::s2(S2Band::B08);
  double threshold = 0.0;
};

// Per-pixel (a - b) / (a + b), row-major. A zero denominator maps to 0,
// which classifies as LAND at threshold 0.
std::vector<float> ndwi(const MultiBandImage& image, BandId band_a, BandId band_b);

// Binary water map: WATER where the index exceeds the threshold (strictly),
// LAND elsewhere. When a validity mask is given, its INVALID pixels pass
// through as INVALID.
ClassMask classify_fixed(const MultiBandImage& image, const NdwiConfig& config,
                         const ClassMask* validity = nullptr);

struct TunedThreshold {
  double threshold = 0.0;
  double water_iou = 0.0;
};

// Scans the grid and returns the threshold with the best water IoU against
// the truth (INVALID pixels excluded); ties take the smallest threshold.
TunedThreshold tune_threshold(const MultiBandImage& image, const ClassMask& truth,
                              std::span<const double> grid, const NdwiConfig& bands = {});

// 201 evenly spaced thresholds spanning [-1, 1].
std::vector<double> default_threshold_grid();

}  // namespace floodseg
