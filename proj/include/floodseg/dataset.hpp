#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "floodseg/raster.hpp"

namespace floodseg {

// One line of a dataset manifest:
//   image_path<TAB>mask_path<TAB>invalid,land,water,cloud
// Relative paths are resolved against the manifest's directory on read.
struct ManifestEntry {
  std::string image_path;
  std::string mask_path;
  std::array<uint64_t, kClassCount> class_counts{};  // [invalid, land, water, cloud]
};

std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::vector<ManifestEntry>& entries, const std::string& path);

// Pixel fractions over the whole set, indexed by class code.
std::array<double, kClassCount> class_fractions(const std::vector<ManifestEntry>& entries);

}  // namespace floodseg
