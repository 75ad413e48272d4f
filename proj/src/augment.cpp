#include "floodseg/augment.hpp"

#include <algorithm>
#include <cmath>

#include "floodseg/error.hpp"

namespace floodseg {

namespace {

void flip_horizontal(MultiBandImage& image, ClassMask& mask) {
  for (size_t b = 0; b < image.band_count(); ++b) {
    auto band = image.band(b);
    for (uint32_t r = 0; r < image.height; ++r) {
      std::reverse(band.begin() + size_t(r) * image.width,
                   band.begin() + size_t(r + 1) * image.width);
    }
  }
  for (uint32_t r = 0; r < mask.height; ++r) {
    std::reverse(mask.labels.begin() + size_t(r) * mask.width,
                 mask.labels.begin() + size_t(r + 1) * mask.width);
  }
}

void flip_vertical(MultiBandImage& image, ClassMask& mask) {
  for (size_t b = 0; b < image.band_count(); ++b) {
    auto band = image.band(b);
    for (uint32_t r = 0; r < image.height / 2; ++r) {
      std::swap_ranges(band.begin() + size_t(r) * image.width,
                       band.begin() + size_t(r + 1) * image.width,
                       band.begin() + size_t(image.height - 1 - r) * image.width);
    }
  }
  for (uint32_t r = 0; r < mask.height / 2; ++r) {
    std::swap_ranges(mask.labels.begin() + size_t(r) * mask.width,
                     mask.labels.begin() + size_t(r + 1) * mask.width,
                     mask.labels.begin() + size_t(mask.height - 1 - r) * mask.width);
  }
}

// Quarter turns of a square grid; quarters > 0 rotate counter-clockwise.
template <class T>
void rotate_plane(T* data, uint32_t n, int quarters, std::vector<T>& scratch) {
  if (quarters == 0) return;
  scratch.assign(data, data + size_t(n) * n);
  for (uint32_t r = 0; r < n; ++r) {
    for (uint32_t c = 0; c < n; ++c) {
      size_t src;
      switch (quarters) {
        case 1: src = size_t(c) * n + (n - 1 - r); break;
        case 2: src = size_t(n - 1 - r) * n + (n - 1 - c); break;
        default: src = size_t(n - 1 - c) * n + r; break;
      }
      data[size_t(r) * n + c] = scratch[src];
    }
  }
}

}  // namespace

void AugmentationParams::validate() const {
  auto is_prob = [](double p) { return p >= 0.0 && p <= 1.0 && std::isfinite(p); };
  if (!is_prob(flip_horizontal_prob) || !is_prob(flip_vertical_prob)) {
    fail(Errc::argument, "flip probabilities must lie in [0, 1]");
  }
  if (!(channel_jitter[0] <= 1.0 && 1.0 <= channel_jitter[1])) {
    fail(Errc::argument, "channel jitter range must contain 1");
  }
  if (!(poisson_scale >= 0.0) || !std::isfinite(poisson_scale)) {
    fail(Errc::argument, "poisson scale must be >= 0");
  }
  if (!(brightness_delta[0] <= 0.0 && 0.0 <= brightness_delta[1])) {
    fail(Errc::argument, "brightness delta range must contain 0");
  }
  if (!(contrast_factor[0] <= 1.0 && 1.0 <= contrast_factor[1])) {
    fail(Errc::argument, "contrast factor range must contain 1");
  }
}

std::pair<MultiBandImage, ClassMask> augment(const MultiBandImage& image, const ClassMask& mask,
                                             const AugmentationParams& params, Rng& rng) {
  params.validate();
  if (mask.width != image.width || mask.height != image.height) {
    fail(Errc::argument, "mask dimensions do not match image");
  }
  if (params.rotations && image.width != image.height) {
    fail(Errc::argument, "rotations need a square patch, got " + std::to_string(image.width) +
                             "x" + std::to_string(image.height));
  }

  MultiBandImage out = image;
  ClassMask out_mask = mask;

  // Geometric: identical transform for image and mask.
  if (rng.bernoulli(params.flip_horizontal_prob)) flip_horizontal(out, out_mask);
  if (rng.bernoulli(params.flip_vertical_prob)) flip_vertical(out, out_mask);
  if (params.rotations) {
    const int quarters = static_cast<int>(rng.below(4));
    if (quarters != 0) {
      std::vector<float> fscratch;
      std::vector<uint8_t> mscratch;
      for (size_t b = 0; b < out.band_count(); ++b) {
        rotate_plane(out.band(b).data(), out.width, quarters, fscratch);
      }
      rotate_plane(out_mask.labels.data(), out_mask.width, quarters, mscratch);
    }
  }

  // Photometric: image only; draws happen unconditionally so the stream
  // layout depends only on the parameters, and exact-identity draws skip
  // the arithmetic so they stay bit-exact no-ops.
  const size_t pixels = out.pixel_count();
  for (size_t b = 0; b < out.band_count(); ++b) {
    const double jitter = rng.uniform(params.channel_jitter[0], params.channel_jitter[1]);
    if (jitter == 1.0) continue;
    auto band = out.band(b);
    for (auto& v : band) v = static_cast<float>(v * jitter);
  }
  if (params.poisson_scale > 0.0) {
    // Gaussian approximation of shot noise: variance proportional to the
    // signal level.
    for (size_t b = 0; b < out.band_count(); ++b) {
      auto band = out.band(b);
      for (auto& v : band) {
        const double sigma = std::sqrt(std::max(0.0f, v) * params.poisson_scale);
        v = static_cast<float>(v + sigma * rng.gaussian());
      }
    }
  }
  const double delta = rng.uniform(params.brightness_delta[0], params.brightness_delta[1]);
  if (delta != 0.0) {
    for (auto& v : out.data) v = static_cast<float>(v + delta);
  }
  const double gamma = rng.uniform(params.contrast_factor[0], params.contrast_factor[1]);
  if (gamma != 1.0) {
    for (size_t b = 0; b < out.band_count(); ++b) {
      auto band = out.band(b);
      double mean = 0.0;
      for (float v : band) mean += v;
      mean /= static_cast<double>(pixels);
      for (auto& v : band) v = static_cast<float>((v - mean) * gamma + mean);
    }
  }
  for (auto& v : out.data) v = std::max(v, 0.0f);

  return {std::move(out), std::move(out_mask)};
}

}  // namespace floodseg
