#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "floodseg/error.hpp"
#include "floodseg/nn.hpp"
#include "floodseg/raster.hpp"
#include "floodseg/tensor.hpp"

namespace floodseg {

struct LossConfig {
  // Per-class weights for the cross-entropy term, ordered LAND, WATER, CLOUD.
  std::array<double, 3> class_weights{1.0, 1.0, 1.0};
  double dice_weight = 1.0;  // mix coefficient on the Dice term
  double epsilon = 1e-6;     // Dice denominator smoothing

  void validate() const;
};

// Ground-truth labels for a batch of patches, aligned with N x 3 x H x W
// score tensors. INVALID pixels take part in no loss and no gradient.
struct LabelBatch {
  int64_t n = 0;
  int64_t h = 0;
  int64_t w = 0;
  std::vector<uint8_t> labels;  // n*h*w class codes

  static LabelBatch from_mask(const ClassMask& mask);
  static LabelBatch from_masks(std::span<const ClassMask* const> masks);
};

template <class T>
struct LossValue {
  double value = 0.0;
  Tensor<T> grad;  // w.r.t. the logits
};

// Cross-entropy over softmax(logits), weighted per class and averaged with
// weight normalisation: -(1/sum_valid w) * sum_valid w_c * log p_truth.
template <class T>
LossValue<T> weighted_ce(const Tensor<T>& logits, const LabelBatch& truth,
                         const std::array<double, 3>& class_weights);

// Soft Dice over softmax(logits): per class 1 - (2*sum(p*t)+eps)/(sum p +
// sum t + eps) on valid pixels, averaged with generalised-Dice weights
// 1/(sum t)^2; classes absent from the truth get weight 0.
template <class T>
LossValue<T> dice_loss(const Tensor<T>& logits, const LabelBatch& truth, double epsilon);

// weighted_ce + dice_weight * dice_loss; gradients sum.
template <class T>
LossValue<T> combined_loss(const Tensor<T>& logits, const LabelBatch& truth,
                           const LossConfig& config);

// w_c = 1/fraction_c, normalised to mean 1. Fractions ordered LAND, WATER,
// CLOUD and need not sum to one (INVALID is excluded upstream).
std::array<double, 3> inverse_frequency_weights(const std::array<double, 3>& class_fractions);

// ---- implementation --------------------------------------------------------

namespace detail {

template <class T>
void check_loss_shapes(const Tensor<T>& logits, const LabelBatch& truth) {
  if (logits.shape.size() != 4 || logits.dim(1) != kModelClasses) {
    fail(Errc::shape, "loss expects Nx3xHxW logits, got " + shape_string(logits.shape));
  }
  if (logits.dim(0) != truth.n || logits.dim(2) != truth.h || logits.dim(3) != truth.w) {
    fail(Errc::shape, "loss truth " + std::to_string(truth.n) + "x" + std::to_string(truth.h) +
                          "x" + std::to_string(truth.w) + " does not match logits " +
                          shape_string(logits.shape));
  }
}

// Per-pixel chain rule through softmax: given g = dL/dp, writes
// dL/dz_k = p_k * (g_k - sum_j g_j p_j) into grad.
template <class T>
inline void softmax_chain(const T* probs, const double* dp, T* dz, int64_t hw, int64_t j) {
  double dot = 0.0;
  for (int c = 0; c < kModelClasses; ++c) dot += dp[c] * static_cast<double>(probs[c * hw + j]);
  for (int c = 0; c < kModelClasses; ++c) {
    dz[c * hw + j] =
        static_cast<T>(static_cast<double>(probs[c * hw + j]) * (dp[c] - dot));
  }
}

}  // namespace detail

template <class T>
LossValue<T> weighted_ce(const Tensor<T>& logits, const LabelBatch& truth,
                         const std::array<double, 3>& class_weights) {
  detail::check_loss_shapes(logits, truth);
  for (double w : class_weights) {
    if (!(w > 0.0) || !std::isfinite(w)) fail(Errc::argument, "class weights must be positive");
  }
  const int64_t n = truth.n, hw = truth.h * truth.w;

  // First pass: total weight of valid pixels.
  double weight_sum = 0.0;
  for (uint8_t label : truth.labels) {
    if (label != kInvalid) weight_sum += class_weights[label - 1];
  }
  if (weight_sum == 0.0) fail(Errc::loss, "all pixels INVALID: nothing to train on");

  Tensor<T> probs = softmax(logits);
  LossValue<T> out;
  out.grad = Tensor<T>::zeros(logits.shape);

  double loss = 0.0;
  for (int64_t item = 0; item < n; ++item) {
    const T* p = probs.data() + item * kModelClasses * hw;
    T* dz = out.grad.data() + item * kModelClasses * hw;
    const uint8_t* lab = truth.labels.data() + item * hw;
    for (int64_t j = 0; j < hw; ++j) {
      if (lab[j] == kInvalid) continue;
      const int cls = lab[j] - 1;
      const double w = class_weights[static_cast<size_t>(cls)] / weight_sum;
      const double pt = static_cast<double>(p[cls * hw + j]);
      loss -= w * std::log(std::max(pt, 1e-300));
      // d/dz of -w*log p_t is w*(p - onehot); no softmax chain needed.
      for (int c = 0; c < kModelClasses; ++c) {
        const double onehot = c == cls ? 1.0 : 0.0;
        dz[c * hw + j] += static_cast<T>(w * (static_cast<double>(p[c * hw + j]) - onehot));
      }
    }
  }
  out.value = loss;
  if (!std::isfinite(out.value)) fail(Errc::numeric, "weighted_ce produced a non-finite loss");
  return out;
}

template <class T>
LossValue<T> dice_loss(const Tensor<T>& logits, const LabelBatch& truth, double epsilon) {
  detail::check_loss_shapes(logits, truth);
  if (!(epsilon > 0.0)) fail(Errc::argument, "dice epsilon must be > 0");
  const int64_t n = truth.n, hw = truth.h * truth.w;

  Tensor<T> probs = softmax(logits);

  // Per-class sums over valid pixels.
  double sum_p[kModelClasses] = {0, 0, 0};
  double sum_t[kModelClasses] = {0, 0, 0};
  double sum_pt[kModelClasses] = {0, 0, 0};
  size_t valid = 0;
  for (int64_t item = 0; item < n; ++item) {
    const T* p = probs.data() + item * kModelClasses * hw;
    const uint8_t* lab = truth.labels.data() + item * hw;
    for (int64_t j = 0; j < hw; ++j) {
      if (lab[j] == kInvalid) continue;
      ++valid;
      const int cls = lab[j] - 1;
      sum_t[cls] += 1.0;
      sum_pt[cls] += static_cast<double>(p[cls * hw + j]);
      for (int c = 0; c < kModelClasses; ++c) sum_p[c] += static_cast<double>(p[c * hw + j]);
    }
  }
  if (valid == 0) fail(Errc::loss, "all pixels INVALID: nothing to train on");

  // Generalised-Dice class weights; classes absent from truth drop out.
  double cls_weight[kModelClasses];
  double weight_total = 0.0;
  double dice_term[kModelClasses];
  double denom[kModelClasses];
  for (int c = 0; c < kModelClasses; ++c) {
    cls_weight[c] = sum_t[c] > 0.0 ? 1.0 / (sum_t[c] * sum_t[c]) : 0.0;
    weight_total += cls_weight[c];
    denom[c] = sum_p[c] + sum_t[c] + epsilon;
    dice_term[c] = 1.0 - (2.0 * sum_pt[c] + epsilon) / denom[c];
  }

  LossValue<T> out;
  out.grad = Tensor<T>::zeros(logits.shape);
  double loss = 0.0;
  for (int c = 0; c < kModelClasses; ++c) loss += cls_weight[c] * dice_term[c];
  loss /= weight_total;
  out.value = loss;

  // dL/dp_c(i) = (u_c/U) * -(2*t_ci*D_c - (2*sum_pt_c+eps)) / D_c^2, then
  // chain through softmax per pixel.
  for (int64_t item = 0; item < n; ++item) {
    const T* p = probs.data() + item * kModelClasses * hw;
    T* dz = out.grad.data() + item * kModelClasses * hw;
    const uint8_t* lab = truth.labels.data() + item * hw;
    for (int64_t j = 0; j < hw; ++j) {
      if (lab[j] == kInvalid) continue;
      const int cls = lab[j] - 1;
      double dp[kModelClasses];
      for (int c = 0; c < kModelClasses; ++c) {
        const double t_ci = c == cls ? 1.0 : 0.0;
        const double numer = 2.0 * t_ci * denom[c] - (2.0 * sum_pt[c] + epsilon);
        dp[c] = (cls_weight[c] / weight_total) * (-numer / (denom[c] * denom[c]));
      }
      detail::softmax_chain(p, dp, dz, hw, j);
    }
  }
  if (!std::isfinite(out.value)) fail(Errc::numeric, "dice_loss produced a non-finite loss");
  return out;
}

template <class T>
LossValue<T> combined_loss(const Tensor<T>& logits, const LabelBatch& truth,
                           const LossConfig& config) {
  config.validate();
  LossValue<T> ce = weighted_ce(logits, truth, config.class_weights);
  if (config.dice_weight == 0.0) return ce;
  LossValue<T> dice = dice_loss(logits, truth, config.epsilon);
  ce.value += config.dice_weight * dice.value;
  for (size_t i = 0; i < ce.grad.values.size(); ++i) {
    ce.grad.values[i] += static_cast<T>(config.dice_weight) * dice.grad.values[i];
  }
  return ce;
}

}  // namespace floodseg
