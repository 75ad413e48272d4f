#include "floodseg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "floodseg/rng.hpp"

namespace floodseg {

namespace {

// Value noise: a Gaussian lattice bilinearly upsampled, two octaves. The
// thresholded superlevel sets form the connected blobs used for water,
// cloud and nodata regions.
std::vector<float> smooth_field(uint32_t width, uint32_t height, Rng& rng) {
  std::vector<float> field(size_t(width) * height, 0.0f);
  const struct {
    uint32_t spacing;
    float amplitude;
  } octaves[] = {{8, 1.0f}, {4, 0.5f}};

  for (const auto& oct : octaves) {
    const uint32_t nx = (width - 1) / oct.spacing + 2;
    const uint32_t ny = (height - 1) / oct.spacing + 2;
    std::vector<float> lattice(size_t(nx) * ny);
    for (auto& v : lattice) v = static_cast<float>(rng.gaussian());

    for (uint32_t r = 0; r < height; ++r) {
      const double v = static_cast<double>(r) / oct.spacing;
      const uint32_t i0 = static_cast<uint32_t>(v);
      const float fy = static_cast<float>(v - i0);
      for (uint32_t c = 0; c < width; ++c) {
        const double u = static_cast<double>(c) / oct.spacing;
        const uint32_t j0 = static_cast<uint32_t>(u);
        const float fx = static_cast<float>(u - j0);
        const float a = lattice[size_t(i0) * nx + j0];
        const float b = lattice[size_t(i0) * nx + j0 + 1];
        const float d = lattice[size_t(i0 + 1) * nx + j0];
        const float e = lattice[size_t(i0 + 1) * nx + j0 + 1];
        const float top = a + (b - a) * fx;
        const float bot = d + (e - d) * fx;
        field[size_t(r) * width + c] += oct.amplitude * (top + (bot - top) * fy);
      }
    }
  }
  return field;
}

// Threshold whose superlevel set covers ~fraction of the pixels.
float fraction_threshold(const std::vector<float>& field, double fraction) {
  if (fraction <= 0.0) return std::numeric_limits<float>::infinity();
  if (fraction >= 1.0) return -std::numeric_limits<float>::infinity();
  std::vector<float> sorted = field;
  const size_t k = std::min(sorted.size() - 1,
                            static_cast<size_t>(fraction * static_cast<double>(sorted.size())));
  std::nth_element(sorted.begin(), sorted.begin() + k, sorted.end(), std::greater<float>());
  return sorted[k];
}

}  // namespace

void SceneSpec::validate() const {
  if (width < 16 || height < 16) fail(Errc::argument, "scene dimensions must be >= 16");
  if (band_count == 0) fail(Errc::argument, "band_count must be >= 1");
  auto in_unit = [](double f) { return f >= 0.0 && f <= 1.0 && std::isfinite(f); };
  if (!in_unit(water_fraction) || !in_unit(cloud_fraction) || !in_unit(invalid_fraction)) {
    fail(Errc::argument, "class fractions must lie in [0, 1]");
  }
  if (water_fraction + cloud_fraction + invalid_fraction > 1.0) {
    fail(Errc::argument, "class fractions sum to more than 1");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    fail(Errc::argument, "noise_sigma must be >= 0");
  }
}

SpectralProfile SpectralProfile::default_s2() {
  SpectralProfile p;
  p.band_count = kS2BandCount;
  //              B01    B02    B03    B04    B05    B06    B07    B08    B8A    B09    B10    B11    B12
  p.land_mean = {0.050f, 0.060f, 0.080f, 0.100f, 0.150f, 0.250f, 0.300f, 0.330f, 0.350f, 0.120f,
                 0.030f, 0.250f, 0.180f};
  p.water_mean = {0.090f, 0.100f, 0.080f, 0.050f, 0.030f, 0.020f, 0.020f, 0.015f, 0.012f, 0.010f,
                  0.005f, 0.004f, 0.003f};
  p.cloud_mean = {0.780f, 0.770f, 0.760f, 0.760f, 0.750f, 0.750f, 0.740f, 0.740f, 0.730f, 0.700f,
                  0.620f, 0.550f, 0.500f};
  // Sediment-laden water: scattering lifts the visible/NIR response above
  // the blue band (so a B02/B08 index goes negative) while absorption keeps
  // SWIR near zero.
  p.muddy_water_mean = {0.100f, 0.110f, 0.120f, 0.150f, 0.130f, 0.120f, 0.120f, 0.130f, 0.120f,
                        0.080f, 0.010f, 0.010f, 0.008f};
  p.land_noise = 1.0;
  p.water_noise = 0.25;
  p.cloud_noise = 0.55;
  p.muddy_water_noise = 0.3;
  return p;
}

SpectralProfile SpectralProfile::resampled(uint32_t bands) {
  if (bands == 0) fail(Errc::argument, "band count must be >= 1");
  const SpectralProfile base = default_s2();
  if (bands == base.band_count) return base;
  SpectralProfile p = base;
  p.band_count = bands;
  auto stretch = [&](const std::vector<float>& src) {
    std::vector<float> dst(bands);
    for (uint32_t i = 0; i < bands; ++i) {
      const double pos = bands == 1 ? 0.0
                                    : static_cast<double>(i) * (src.size() - 1) / (bands - 1);
      const size_t j = static_cast<size_t>(pos);
      const double f = pos - static_cast<double>(j);
      dst[i] = static_cast<float>(src[j] * (1.0 - f) + src[std::min(j + 1, src.size() - 1)] * f);
    }
    return dst;
  };
  p.land_mean = stretch(base.land_mean);
  p.water_mean = stretch(base.water_mean);
  p.cloud_mean = stretch(base.cloud_mean);
  p.muddy_water_mean = stretch(base.muddy_water_mean);
  return p;
}

void SpectralProfile::validate() const {
  const size_t n = band_count;
  if (n == 0) fail(Errc::argument, "profile band count must be >= 1");
  for (const auto* mean : {&land_mean, &water_mean, &cloud_mean, &muddy_water_mean}) {
    if (mean->size() != n) fail(Errc::argument, "profile mean vectors must match band_count");
    for (float v : *mean) {
      if (!(v >= 0.0f && v <= 1.2f)) fail(Errc::argument, "profile means must lie in [0, 1.2]");
    }
  }
  for (double s : {land_noise, water_noise, cloud_noise, muddy_water_noise}) {
    if (!(s >= 0.0) || !std::isfinite(s)) fail(Errc::argument, "noise scales must be >= 0");
  }
  if (band_count == kS2BandCount) {
    // Open water must absorb NIR more than green, so the water-index signal
    // exists in generated scenes.
    const size_t green = static_cast<size_t>(S2Band::B03);
    const size_t nir = static_cast<size_t>(S2Band::B08);
    if (!(water_mean[nir] < water_mean[green])) {
      fail(Errc::argument, "water profile must have NIR mean below green mean");
    }
  }
  const auto [cloud_min, cloud_max] = std::minmax_element(cloud_mean.begin(), cloud_mean.end());
  if (*cloud_min < 0.4f || *cloud_max - *cloud_min > 0.5f) {
    fail(Errc::argument, "cloud profile must be bright and spectrally flat");
  }
}

std::pair<MultiBandImage, ClassMask> generate(const SceneSpec& spec, const SpectralProfile& profile,
                                              double muddy_water_fraction) {
  spec.validate();
  profile.validate();
  if (profile.band_count != spec.band_count) {
    fail(Errc::argument, "profile band count does not match scene spec");
  }
  if (!(muddy_water_fraction >= 0.0 && muddy_water_fraction <= 1.0)) {
    fail(Errc::argument, "muddy_water_fraction must lie in [0, 1]");
  }

  const uint32_t w = spec.width, h = spec.height;
  const size_t pixels = size_t(w) * h;
  Rng rng(spec.seed);

  const std::vector<float> water_field = smooth_field(w, h, rng);
  const std::vector<float> cloud_field = smooth_field(w, h, rng);
  const std::vector<float> invalid_field = smooth_field(w, h, rng);
  const std::vector<float> muddy_field = smooth_field(w, h, rng);

  // Clouds and nodata overwrite water, so oversample the water quantile to
  // land near the requested fraction after the overlays.
  const double survival = (1.0 - spec.cloud_fraction) * (1.0 - spec.invalid_fraction);
  const double water_q = survival > 0.0 ? std::min(1.0, spec.water_fraction / survival)
                                        : spec.water_fraction;
  const double cloud_q = spec.invalid_fraction < 1.0
                             ? std::min(1.0, spec.cloud_fraction / (1.0 - spec.invalid_fraction))
                             : spec.cloud_fraction;

  ClassMask mask = ClassMask::filled(w, h, kLand);
  const float water_thr = fraction_threshold(water_field, water_q);
  const float cloud_thr = fraction_threshold(cloud_field, cloud_q);
  const float invalid_thr = fraction_threshold(invalid_field, spec.invalid_fraction);
  for (size_t i = 0; i < pixels; ++i) {
    if (water_field[i] >= water_thr) mask.labels[i] = kWater;
    if (cloud_field[i] >= cloud_thr) mask.labels[i] = kCloud;
    if (invalid_field[i] >= invalid_thr) mask.labels[i] = kInvalid;
  }

  // Muddy blobs: threshold the muddy field at the requested quantile of the
  // water pixels' field values.
  std::vector<uint8_t> muddy(pixels, 0);
  if (muddy_water_fraction > 0.0) {
    std::vector<float> at_water;
    for (size_t i = 0; i < pixels; ++i) {
      if (mask.labels[i] == kWater) at_water.push_back(muddy_field[i]);
    }
    if (!at_water.empty()) {
      const float thr = fraction_threshold(at_water, muddy_water_fraction);
      for (size_t i = 0; i < pixels; ++i) {
        if (mask.labels[i] == kWater && muddy_field[i] >= thr) muddy[i] = 1;
      }
    }
  }

  MultiBandImage image = MultiBandImage::zeros(w, h, BandId::canonical(int32_t(spec.band_count)));
  const size_t bands = spec.band_count;
  for (size_t i = 0; i < pixels; ++i) {
    const float* mean = nullptr;
    double sigma = 0.0;
    switch (mask.labels[i]) {
      case kLand:
        mean = profile.land_mean.data();
        sigma = spec.noise_sigma * profile.land_noise;
        break;
      case kWater:
        if (muddy[i]) {
          mean = profile.muddy_water_mean.data();
          sigma = spec.noise_sigma * profile.muddy_water_noise;
        } else {
          mean = profile.water_mean.data();
          sigma = spec.noise_sigma * profile.water_noise;
        }
        break;
      case kCloud:
        mean = profile.cloud_mean.data();
        sigma = spec.noise_sigma * profile.cloud_noise;
        break;
      default:
        break;  // INVALID stays zero reflectance
    }
    if (!mean) continue;
    for (size_t b = 0; b < bands; ++b) {
      const double v = mean[b] + sigma * rng.gaussian();
      image.data[b * pixels + i] = static_cast<float>(std::max(0.0, v));
    }
  }
  return {std::move(image), std::move(mask)};
}

DatasetResult make_dataset(const SceneSpec& spec_template, const SpectralProfile& profile,
                           uint32_t n_scenes, const std::string& out_dir,
                           double muddy_water_fraction) {
  if (n_scenes == 0) fail(Errc::argument, "n_scenes must be >= 1");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(Errc::io, "cannot create directory " + out_dir + ": " + ec.message());

  std::vector<ManifestEntry> relative;  // what goes in the manifest file
  DatasetResult result;
  for (uint32_t i = 0; i < n_scenes; ++i) {
    SceneSpec spec = spec_template;
    spec.seed = spec_template.seed + i;
    auto [image, mask] = generate(spec, profile, muddy_water_fraction);

    char name[32];
    std::snprintf(name, sizeof(name), "scene_%04u", i);
    const std::string image_name = std::string(name) + ".wfb";
    const std::string mask_name = std::string(name) + ".wfl";
    const std::string image_path = (fs::path(out_dir) / image_name).string();
    const std::string mask_path = (fs::path(out_dir) / mask_name).string();
    write_image(image, image_path);
    write_mask(mask, mask_path);

    ManifestEntry entry;
    entry.class_counts = mask.class_counts();
    entry.image_path = image_name;
    entry.mask_path = mask_name;
    relative.push_back(entry);
    entry.image_path = image_path;
    entry.mask_path = mask_path;
    result.entries.push_back(std::move(entry));
  }
  result.manifest_path = (fs::path(out_dir) / "manifest.txt").string();
  write_manifest(relative, result.manifest_path);
  return result;
}

}  // namespace floodseg
