#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "amazonnet/tensor.hpp"

namespace amazonnet {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment buffers mirroring the parameter list, plus the shared
// step counter. Buffers are addressed by position, so the parameter order
// must stay fixed for the lifetime of the state (and across checkpoints).
template <typename S>
struct AdamStateT {
  std::vector<std::vector<S>> m;
  std::vector<std::vector<S>> v;
  int64_t t = 0;

  explicit AdamStateT(const std::vector<std::pair<std::string, TensorPtr<S>>>& params) {
    m.reserve(params.size());
    v.reserve(params.size());
    for (const auto& [name, p] : params) {
      m.emplace_back(p->data.size(), S(0));
      v.emplace_back(p->data.size(), S(0));
    }
  }
};

// One Adam update with bias correction:
//   m <- b1*m + (1-b1)*g; v <- b2*v + (1-b2)*g^2
//   p <- p - lr * (m/(1-b1^t)) / (sqrt(v/(1-b2^t)) + eps)
template <typename S>
void adam_step(const std::vector<std::pair<std::string, TensorPtr<S>>>& params,
               AdamStateT<S>& state, const AdamConfig& cfg, double lr_in_effect) {
  state.t += 1;
  const S b1 = S(cfg.beta1);
  const S b2 = S(cfg.beta2);
  const S eps = S(cfg.eps);
  const S lr = S(lr_in_effect);
  const S bc1 = S(1) - S(std::pow(cfg.beta1, static_cast<double>(state.t)));
  const S bc2 = S(1) - S(std::pow(cfg.beta2, static_cast<double>(state.t)));
  for (size_t pi = 0; pi < params.size(); ++pi) {
    const auto& p = params[pi].second;
    if (!p->has_grad())
      throw ContractError("adam_step: parameter '" + params[pi].first + "' has no gradient");
    auto& m = state.m[pi];
    auto& v = state.v[pi];
    for (size_t i = 0; i < p->data.size(); ++i) {
      const S g = p->grad[i];
      m[i] = b1 * m[i] + (S(1) - b1) * g;
      v[i] = b2 * v[i] + (S(1) - b2) * g * g;
      const S mhat = m[i] / bc1;
      const S vhat = v[i] / bc2;
      p->data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

template <typename S>
void zero_grads(const std::vector<std::pair<std::string, TensorPtr<S>>>& params) {
  for (const auto& [name, p] : params) p->zero_grad();
}

}  // namespace amazonnet
