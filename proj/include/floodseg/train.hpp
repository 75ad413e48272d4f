#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "floodseg/augment.hpp"
#include "floodseg/dataset.hpp"
#include "floodseg/loss.hpp"
#include "floodseg/model.hpp"

namespace floodseg {

struct TrainConfig {
  uint32_t epochs = 40;
  uint32_t batch_size = 16;
  double learning_rate = 1e-3;  // 1e-2 is the linear-model default
  double momentum = 0.9;
  uint64_t seed = 0;
  uint32_t patch_size = 64;
  unsigned threads = 1;
  bool augment = true;
  AugmentationParams augmentation;

  void validate() const;
};

struct EpochStats {
  uint32_t epoch = 0;
  uint64_t step = 0;        // optimiser steps completed so far
  double train_loss = 0.0;  // mean combined loss over the epoch
  bool has_validation = false;
  double val_water_iou = 0.0;
  double val_water_recall = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> epochs;
};

// SGD with momentum over shuffled patches tiled from the manifest scenes.
// Deterministic for a fixed seed at any thread count: per-sample RNG streams
// derive from (seed, epoch, sample), and batch gradients reduce in sample
// order. Aborts with a numeric error naming the step if the loss leaves the
// finite range.
TrainResult train(Model& model, const std::vector<ManifestEntry>& train_set,
                  const std::vector<ManifestEntry>* validation_set, const TrainConfig& config,
                  const LossConfig& loss_config);

// CSV: epoch,step,loss,val_water_iou,val_water_recall (validation columns
// empty when no validation set was given).
void write_train_log(const TrainResult& result, const std::string& csv_path);

}  // namespace floodseg
