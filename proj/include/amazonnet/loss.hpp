#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "amazonnet/tensor.hpp"

namespace amazonnet {

// Mean binary cross-entropy over all pixels. Predictions are clamped to
// [1e-7, 1-1e-7] before the logs; gradient is zero where the clamp is active.
// Targets must be exactly 0 or 1.
template <typename S>
TensorPtr<S> bce_loss(TapeT<S>* tape, const TensorPtr<S>& pred, const TensorPtr<S>& target) {
  check_same_shape(*pred, *target, "bce_loss");
  const S lo = S(1e-7);
  const S hi = S(1) - S(1e-7);
  const size_t count = pred->data.size();

  auto clamped = std::make_shared<std::vector<S>>(count);
  double acc = 0.0;
  for (size_t i = 0; i < count; ++i) {
    const S y = target->data[i];
    if (y != S(0) && y != S(1))
      throw ContractError("bce_loss: target must be binary {0,1}");
    S p = pred->data[i];
    if (p < lo) p = lo;
    if (p > hi) p = hi;
    (*clamped)[i] = p;
    acc -= y == S(1) ? std::log(static_cast<double>(p))
                     : std::log(1.0 - static_cast<double>(p));
  }
  auto out = make_tensor<S>(Shape{1});
  out->data[0] = static_cast<S>(acc / static_cast<double>(count));
  check_all_finite(*out, "bce_loss");

  out->requires_grad = pred->requires_grad;
  if (tape && out->requires_grad) {
    tape->record(out, [pred, target, out, clamped, lo, hi, count] {
      pred->ensure_grad();
      const S g = out->grad[0] / S(count);
      for (size_t i = 0; i < count; ++i) {
        const S raw = pred->data[i];
        if (raw < lo || raw > hi) continue;  // clamp active: zero gradient
        const S p = (*clamped)[i];
        const S y = target->data[i];
        pred->grad[i] += g * (p - y) / (p * (S(1) - p));
      }
    });
  }
  return out;
}

}  // namespace amazonnet
