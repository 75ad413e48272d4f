#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "floodseg/dataset.hpp"
#include "floodseg/raster.hpp"

namespace floodseg {

// Parameters of one procedural scene. Everything downstream of the seed is
// deterministic; the same spec always produces bit-identical output.
struct SceneSpec {
  uint32_t width = 64;
  uint32_t height = 64;
  uint64_t seed = 0;
  double water_fraction = 0.2;
  double cloud_fraction = 0.2;
  double invalid_fraction = 0.05;
  uint32_t band_count = 13;
  double noise_sigma = 0.14;  // reflectance units, scaled per class

  void validate() const;  // fractions >= 0, sum <= 1, dims >= 16
};

// Class-conditional spectra: a mean reflectance per band per class and a
// per-class multiplier on SceneSpec::noise_sigma. The muddy variant models
// sediment-laden flood water: raised red/NIR (which pushes its blue-NIR
// normalised difference below zero) while SWIR stays near zero.
struct SpectralProfile {
  uint32_t band_count = 13;
  std::vector<float> land_mean;
  std::vector<float> water_mean;
  std::vector<float> cloud_mean;
  std::vector<float> muddy_water_mean;
  double land_noise = 1.0;
  double water_noise = 0.25;
  double cloud_noise = 0.55;
  double muddy_water_noise = 0.3;

  // Hand-tuned 13-band Sentinel-2-like profile (the default everywhere).
  static SpectralProfile default_s2();
  // Smoothly interpolates the 13-band profile onto another band count, for
  // generic synthetic stacks (e.g. 49 channels).
  static SpectralProfile resampled(uint32_t bands);

  void validate() const;
};

// Generates a labelled scene: water and clouds as connected blobs from
// thresholded smoothed noise, an optional invalid (nodata) region, spectra
// as class mean + Gaussian noise clamped to >= 0. A muddy_water_fraction of
// the water pixels (chosen as blobs) uses the muddy spectrum but keeps the
// WATER label.
std::pair<MultiBandImage, ClassMask> generate(const SceneSpec& spec,
                                              const SpectralProfile& profile,
                                              double muddy_water_fraction = 0.0);

// Writes n_scenes WFB/WFL pairs (scene_0000.wfb ...) plus manifest.txt into
// out_dir. Scene i uses seed spec.seed + i. Re-running with the same
// template reproduces every file byte for byte.
struct DatasetResult {
  std::string manifest_path;
  std::vector<ManifestEntry> entries;
};

DatasetResult make_dataset(const SceneSpec& spec_template, const SpectralProfile& profile,
                           uint32_t n_scenes, const std::string& out_dir,
                           double muddy_water_fraction = 0.0);

}  // namespace floodseg
