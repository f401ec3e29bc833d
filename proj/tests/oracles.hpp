#pragma once

// Independent reference implementations used only by tests. These are the
// naive per-output-element loops (bounds-checked, double accumulation) that
// the production kernels are compared against; they share no code with the
// library implementations.

#include <cstdint>
#include <vector>

#include "amazonnet/tensor.hpp"

namespace oracles {

using amazonnet::Shape;
using amazonnet::TensorPtr;

// Direct six-nested-loop 3x3 convolution, stride 1, zero padding 1.
template <typename S>
std::vector<double> conv2d_naive(const std::vector<S>& x, int64_t n, int64_t cin, int64_t h,
                                 int64_t w, const std::vector<S>& weight,
                                 const std::vector<S>& bias, int64_t cout) {
  std::vector<double> y(static_cast<size_t>(n * cout * h * w), 0.0);
  for (int64_t ni = 0; ni < n; ++ni)
    for (int64_t co = 0; co < cout; ++co)
      for (int64_t oh = 0; oh < h; ++oh)
        for (int64_t ow = 0; ow < w; ++ow) {
          double acc = static_cast<double>(bias[co]);
          for (int64_t ci = 0; ci < cin; ++ci)
            for (int64_t kh = 0; kh < 3; ++kh)
              for (int64_t kw = 0; kw < 3; ++kw) {
                const int64_t ih = oh + kh - 1;
                const int64_t iw = ow + kw - 1;
                if (ih < 0 || ih >= h || iw < 0 || iw >= w) continue;
                acc += static_cast<double>(x[((ni * cin + ci) * h + ih) * w + iw]) *
                       static_cast<double>(weight[((co * cin + ci) * 3 + kh) * 3 + kw]);
              }
          y[((ni * cout + co) * h + oh) * w + ow] = acc;
        }
  return y;
}

// Naive scatter-loop transposed convolution, stride 2, padding 1,
// output_padding 1 (output is exactly 2H x 2W).
template <typename S>
std::vector<double> conv_transpose2d_naive(const std::vector<S>& x, int64_t n, int64_t cin,
                                           int64_t h, int64_t w, const std::vector<S>& weight,
                                           const std::vector<S>& bias, int64_t cout) {
  const int64_t oh_dim = 2 * h, ow_dim = 2 * w;
  std::vector<double> y(static_cast<size_t>(n * cout * oh_dim * ow_dim), 0.0);
  for (int64_t ni = 0; ni < n; ++ni)
    for (int64_t co = 0; co < cout; ++co)
      for (int64_t i = 0; i < oh_dim * ow_dim; ++i)
        y[(ni * cout + co) * oh_dim * ow_dim + i] = static_cast<double>(bias[co]);
  for (int64_t ni = 0; ni < n; ++ni)
    for (int64_t ci = 0; ci < cin; ++ci)
      for (int64_t ih = 0; ih < h; ++ih)
        for (int64_t iw = 0; iw < w; ++iw)
          for (int64_t co = 0; co < cout; ++co)
            for (int64_t kh = 0; kh < 3; ++kh)
              for (int64_t kw = 0; kw < 3; ++kw) {
                const int64_t oh = 2 * ih + kh - 1;
                const int64_t ow = 2 * iw + kw - 1;
                if (oh < 0 || oh >= oh_dim || ow < 0 || ow >= ow_dim) continue;
                y[((ni * cout + co) * oh_dim + oh) * ow_dim + ow] +=
                    static_cast<double>(x[((ni * cin + ci) * h + ih) * w + iw]) *
                    static_cast<double>(weight[((ci * cout + co) * 3 + kh) * 3 + kw]);
              }
  return y;
}

// The strided convolution matched to conv_transpose2d for the adjoint
// identity: maps [N,Cout,2H,2W] down to [N,Cin,H,W] with the same weights.
template <typename S>
std::vector<double> conv2d_stride2_naive(const std::vector<S>& y, int64_t n, int64_t cout,
                                         int64_t oh_dim, int64_t ow_dim,
                                         const std::vector<S>& weight, int64_t cin) {
  const int64_t h = oh_dim / 2, w = ow_dim / 2;
  std::vector<double> z(static_cast<size_t>(n * cin * h * w), 0.0);
  for (int64_t ni = 0; ni < n; ++ni)
    for (int64_t ci = 0; ci < cin; ++ci)
      for (int64_t ih = 0; ih < h; ++ih)
        for (int64_t iw = 0; iw < w; ++iw) {
          double acc = 0.0;
          for (int64_t co = 0; co < cout; ++co)
            for (int64_t kh = 0; kh < 3; ++kh)
              for (int64_t kw = 0; kw < 3; ++kw) {
                const int64_t oh = 2 * ih + kh - 1;
                const int64_t ow = 2 * iw + kw - 1;
                if (oh < 0 || oh >= oh_dim || ow < 0 || ow >= ow_dim) continue;
                acc += static_cast<double>(y[((ni * cout + co) * oh_dim + oh) * ow_dim + ow]) *
                       static_cast<double>(weight[((ci * cout + co) * 3 + kh) * 3 + kw]);
              }
          z[((ni * cin + ci) * h + ih) * w + iw] = acc;
        }
  return z;
}

// 2x2/stride-2 max pooling, first-occurrence tie rule.
template <typename S>
std::vector<S> maxpool2x2_naive(const std::vector<S>& x, int64_t n, int64_t c, int64_t h,
                                int64_t w) {
  const int64_t oh = h / 2, ow = w / 2;
  std::vector<S> y(static_cast<size_t>(n * c * oh * ow));
  for (int64_t nc = 0; nc < n * c; ++nc)
    for (int64_t i = 0; i < oh; ++i)
      for (int64_t j = 0; j < ow; ++j) {
        S best = x[nc * h * w + (2 * i) * w + 2 * j];
        for (int64_t dr = 0; dr < 2; ++dr)
          for (int64_t dc = 0; dc < 2; ++dc) {
            const S v = x[nc * h * w + (2 * i + dr) * w + (2 * j + dc)];
            if (v > best) best = v;
          }
        y[nc * oh * ow + i * ow + j] = best;
      }
  return y;
}

// Straightforward per-pixel BCE with the same clamp rule, scalar loop.
template <typename S>
double bce_naive(const std::vector<S>& pred, const std::vector<S>& target) {
  double acc = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    double p = static_cast<double>(pred[i]);
    const double lo = static_cast<double>(S(1e-7));
    const double hi = static_cast<double>(S(1) - S(1e-7));
    if (p < lo) p = lo;
    if (p > hi) p = hi;
    acc -= target[i] == S(1) ? std::log(p) : std::log(1.0 - p);
  }
  return acc / static_cast<double>(pred.size());
}

}  // namespace oracles
