#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "floodseg/dataset.hpp"
#include "floodseg/raster.hpp"

namespace floodseg {

// 3x3 pixel counts over the semantic classes, rows = truth, cols =
// prediction, valid (non-INVALID truth) pixels only. Addable across images,
// so test-set metrics pool pixels over the whole split.
struct ConfusionMatrix {
  std::array<std::array<uint64_t, kModelClasses>, kModelClasses> counts{};

  void add(const ConfusionMatrix& other);
  uint64_t total() const;
  uint64_t& at(uint8_t truth_code, uint8_t pred_code);      // class codes 1..3
  uint64_t at(uint8_t truth_code, uint8_t pred_code) const;
};

ConfusionMatrix confusion(const ClassMask& pred, const ClassMask& truth);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double iou = 0.0;
};

// precision = TP/(TP+FP), recall = TP/(TP+FN), IoU = TP/(TP+FP+FN); every
// 0/0 resolves to 0 so degenerate inputs cannot produce NaN.
ClassMetrics metrics(const ConfusionMatrix& matrix, uint8_t class_code);

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct PrCurve {
  std::vector<PrPoint> points;  // thresholds strictly increasing
};

// One-vs-rest water PR curve: a pixel counts as predicted WATER when its
// water probability is >= tau. Aggregates over all supplied images; INVALID
// truth pixels are excluded.
PrCurve pr_curve(const std::vector<std::vector<float>>& water_probability_maps,
                 const std::vector<const ClassMask*>& truths,
                 const std::vector<double>& thresholds);

struct OperatingPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  bool met_min_recall = false;
};

// Best-precision point among those with recall >= min_recall; if none
// qualifies, the maximum-recall point with met_min_recall = false.
OperatingPoint operating_point(const PrCurve& curve, double min_recall = 0.95);

// ---- dataset-level evaluation ----------------------------------------------

using Segmenter = std::function<ClassMask(const MultiBandImage&, const ClassMask& truth)>;

struct ImageEval {
  std::string id;
  ConfusionMatrix matrix;
  ClassMetrics water;
};

struct EvalReport {
  std::vector<ImageEval> per_image;
  ConfusionMatrix aggregate;
  ClassMetrics aggregate_water;
};

// Runs the segmenter on every manifest pair and pools confusion counts. The
// truth is passed to the segmenter so baselines can honour INVALID masks or
// tune per image; model segmenters ignore it.
EvalReport evaluate_dataset(const Segmenter& segmenter,
                            const std::vector<ManifestEntry>& entries, unsigned threads = 1);

// CSV: image_id,precision_water,recall_water,iou_water with a final
// AGGREGATE row.
void write_eval_report(const EvalReport& report, const std::string& csv_path);

// CSV: threshold,precision,recall.
void write_pr_curve(const PrCurve& curve, const std::string& csv_path);

// Minimal SVG line plot of the PR curve with a vertical marker at the given
// recall.
void write_pr_curve_svg(const PrCurve& curve, const std::string& svg_path,
                        double recall_marker = 0.95);

}  // namespace floodseg
