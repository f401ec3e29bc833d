#pragma once

#include <cstdint>
#include <string>

#include "amazonnet/image.hpp"
#include "amazonnet/tensor.hpp"

namespace amazonnet {

struct MetricsReport {
  int64_t tp = 0, fp = 0, tn = 0, fn = 0;
  double pixel_accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double iou = 0.0;
};

// Derived fractions from confusion counts. Degenerate 0/0 cases resolve to 1
// when prediction and reference are both empty of positives, 0 otherwise.
inline MetricsReport metrics_from_counts(int64_t tp, int64_t fp, int64_t tn, int64_t fn) {
  MetricsReport m;
  m.tp = tp;
  m.fp = fp;
  m.tn = tn;
  m.fn = fn;
  const int64_t total = tp + fp + tn + fn;
  m.pixel_accuracy = total > 0 ? static_cast<double>(tp + tn) / total : 1.0;
  m.precision = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : (fn == 0 ? 1.0 : 0.0);
  m.recall = (tp + fn) > 0 ? static_cast<double>(tp) / (tp + fn) : (fp == 0 ? 1.0 : 0.0);
  m.iou = (tp + fp + fn) > 0 ? static_cast<double>(tp) / (tp + fp + fn) : 1.0;
  m.f1 = (2 * tp + fp + fn) > 0 ? static_cast<double>(2 * tp) / (2 * tp + fp + fn) : 1.0;
  return m;
}

inline MetricsReport compute_metrics(const MaskImage& pred, const MaskImage& ref) {
  if (pred.width != ref.width || pred.height != ref.height)
    throw ShapeError("compute_metrics: mask dimensions differ");
  int64_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (size_t i = 0; i < pred.values.size(); ++i) {
    const bool p = pred.values[i] != 0;
    const bool r = ref.values[i] != 0;
    if (p && r)
      ++tp;
    else if (p && !r)
      ++fp;
    else if (!p && r)
      ++fn;
    else
      ++tn;
  }
  return metrics_from_counts(tp, fp, tn, fn);
}

inline void check_tau(double tau) {
  if (!(tau > 0.0 && tau < 1.0))
    throw ConfigError("threshold: tau must be inside (0,1), got " + std::to_string(tau));
}

// mask = 1 where prob >= tau.
inline MaskImage threshold(const std::vector<float>& prob, int64_t width, int64_t height,
                           double tau = 0.5) {
  check_tau(tau);
  MaskImage m(width, height);
  for (size_t i = 0; i < prob.size(); ++i)
    m.values[i] = prob[i] >= static_cast<float>(tau) ? 1 : 0;
  return m;
}

// Rank-4 [N,1,H,W] probability tensor variant; returns one mask per batch
// element stacked vertically is not needed here -- restricted to N == 1.
template <typename S>
MaskImage threshold(const TensorT<S>& prob, double tau = 0.5) {
  check_tau(tau);
  if (prob.shape.size() != 4 || prob.shape[0] != 1 || prob.shape[1] != 1)
    throw ShapeError("threshold: expected [1,1,H,W] tensor, got " + shape_str(prob.shape));
  MaskImage m(prob.shape[3], prob.shape[2]);
  for (size_t i = 0; i < prob.data.size(); ++i)
    m.values[i] = prob.data[i] >= S(tau) ? 1 : 0;
  return m;
}

}  // namespace amazonnet
