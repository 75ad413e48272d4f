#include "floodseg/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "floodseg/error.hpp"

namespace floodseg {

namespace fs = std::filesystem;

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io, "cannot open manifest " + path);
  const fs::path base = fs::path(path).parent_path();

  auto resolve = [&](const std::string& p) {
    fs::path fp(p);
    return fp.is_absolute() ? fp.string() : (base / fp).string();
  };

  std::vector<ManifestEntry> entries;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    ManifestEntry entry;
    std::string counts;
    if (!std::getline(ss, entry.image_path, '\t') || !std::getline(ss, entry.mask_path, '\t') ||
        !std::getline(ss, counts)) {
      fail(Errc::format, path + ":" + std::to_string(line_no) + ": expected 3 tab-separated fields");
    }
    std::istringstream cs(counts);
    std::string field;
    for (int i = 0; i < kClassCount; ++i) {
      if (!std::getline(cs, field, ',')) {
        fail(Errc::format,
             path + ":" + std::to_string(line_no) + ": expected 4 comma-separated class counts");
      }
      try {
        entry.class_counts[i] = std::stoull(field);
      } catch (const std::exception&) {
        fail(Errc::format, path + ":" + std::to_string(line_no) + ": bad class count '" + field + "'");
      }
    }
    entry.image_path = resolve(entry.image_path);
    entry.mask_path = resolve(entry.mask_path);
    entries.push_back(std::move(entry));
  }
  return entries;
}

void write_manifest(const std::vector<ManifestEntry>& entries, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::io, "cannot open manifest " + path + " for writing");
  for (const auto& e : entries) {
    out << e.image_path << '\t' << e.mask_path << '\t' << e.class_counts[0] << ','
        << e.class_counts[1] << ',' << e.class_counts[2] << ',' << e.class_counts[3] << '\n';
  }
  if (!out) fail(Errc::io, "cannot write manifest " + path);
}

std::array<double, kClassCount> class_fractions(const std::vector<ManifestEntry>& entries) {
  std::array<uint64_t, kClassCount> totals{};
  uint64_t all = 0;
  for (const auto& e : entries) {
    for (int i = 0; i < kClassCount; ++i) {
      totals[i] += e.class_counts[i];
      all += e.class_counts[i];
    }
  }
  std::array<double, kClassCount> fractions{};
  if (all == 0) return fractions;
  for (int i = 0; i < kClassCount; ++i) {
    fractions[i] = static_cast<double>(totals[i]) / static_cast<double>(all);
  }
  return fractions;
}

}  // namespace floodseg
