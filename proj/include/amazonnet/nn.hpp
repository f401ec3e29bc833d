#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "amazonnet/tensor.hpp"

namespace amazonnet {

enum class Mode { kTrain, kEval };

// All convolutions are 3x3 cross-correlations (no kernel flip), stride 1,
// zero padding 1, so spatial dims are preserved. Transposed convolutions use
// stride 2 / padding 1 / output_padding 1, which exactly doubles H and W.

template <typename S>
struct Conv2dLayerT {
  TensorPtr<S> weight;  // [out_ch, in_ch, 3, 3]
  TensorPtr<S> bias;    // [out_ch]

  Conv2dLayerT() = default;
  Conv2dLayerT(int64_t in_ch, int64_t out_ch)
      : weight(make_tensor<S>({out_ch, in_ch, 3, 3})), bias(make_tensor<S>({out_ch})) {}

  int64_t in_channels() const { return weight->shape[1]; }
  int64_t out_channels() const { return weight->shape[0]; }
};

template <typename S>
struct ConvTranspose2dLayerT {
  TensorPtr<S> weight;  // [in_ch, out_ch, 3, 3]
  TensorPtr<S> bias;    // [out_ch]

  ConvTranspose2dLayerT() = default;
  ConvTranspose2dLayerT(int64_t in_ch, int64_t out_ch)
      : weight(make_tensor<S>({in_ch, out_ch, 3, 3})), bias(make_tensor<S>({out_ch})) {}

  int64_t in_channels() const { return weight->shape[0]; }
  int64_t out_channels() const { return weight->shape[1]; }
};

template <typename S>
struct BatchNorm2dLayerT {
  TensorPtr<S> gamma;         // [ch]
  TensorPtr<S> beta;          // [ch]
  TensorPtr<S> running_mean;  // [ch], not trainable
  TensorPtr<S> running_var;   // [ch], not trainable
  S eps = S(1e-5);
  S momentum = S(0.1);

  BatchNorm2dLayerT() = default;
  explicit BatchNorm2dLayerT(int64_t ch)
      : gamma(ones<S>({ch})),
        beta(make_tensor<S>({ch})),
        running_mean(make_tensor<S>({ch})),
        running_var(ones<S>({ch})) {}

  int64_t channels() const { return gamma->shape[0]; }
};

struct Dropout2dParams {
  double p = 0.1;
};

// ---- conv2d ----

template <typename S>
TensorPtr<S> conv2d(TapeT<S>* tape, const TensorPtr<S>& x, const Conv2dLayerT<S>& layer) {
  if (x->shape.size() != 4)
    throw ShapeError("conv2d: input must be rank 4, got " + shape_str(x->shape));
  const int64_t n = x->shape[0], cin = x->shape[1], h = x->shape[2], w = x->shape[3];
  if (cin != layer.in_channels())
    throw ShapeError("conv2d: input has " + std::to_string(cin) + " channels, layer expects " +
                     std::to_string(layer.in_channels()));
  const int64_t cout = layer.out_channels();
  auto out = make_tensor<S>(Shape{n, cout, h, w});

  const S* xd = x->data.data();
  const S* wd = layer.weight->data.data();
  const S* bd = layer.bias->data.data();
  S* yd = out->data.data();
  const int64_t plane = h * w;

  // Accumulation order per output element is fixed (bias, then ci,kh,kw), so
  // parallel slices over (n, co) are bit-identical to the sequential run.
#ifdef _OPENMP
#pragma omp parallel for collapse(2) schedule(static)
#endif
  for (int64_t ni = 0; ni < n; ++ni) {
    for (int64_t co = 0; co < cout; ++co) {
      S* yp = yd + (ni * cout + co) * plane;
      for (int64_t i = 0; i < plane; ++i) yp[i] = bd[co];
      for (int64_t ci = 0; ci < cin; ++ci) {
        const S* xp = xd + (ni * cin + ci) * plane;
        for (int64_t kh = 0; kh < 3; ++kh) {
          const int64_t oh_lo = std::max<int64_t>(0, 1 - kh);
          const int64_t oh_hi = std::min<int64_t>(h, h + 1 - kh);
          for (int64_t kw = 0; kw < 3; ++kw) {
            const S wv = wd[((co * cin + ci) * 3 + kh) * 3 + kw];
            const int64_t ow_lo = std::max<int64_t>(0, 1 - kw);
            const int64_t ow_hi = std::min<int64_t>(w, w + 1 - kw);
            for (int64_t oh = oh_lo; oh < oh_hi; ++oh) {
              const S* xr = xp + (oh + kh - 1) * w + (kw - 1);
              S* yr = yp + oh * w;
              for (int64_t ow = ow_lo; ow < ow_hi; ++ow) yr[ow] += wv * xr[ow];
            }
          }
        }
      }
    }
  }
  check_all_finite(*out, "conv2d");

  const bool needs_grad =
      x->requires_grad || layer.weight->requires_grad || layer.bias->requires_grad;
  out->requires_grad = needs_grad;
  if (tape && needs_grad) {
    auto weight = layer.weight;
    auto bias = layer.bias;
    tape->record(out, [x, weight, bias, out, n, cin, cout, h, w, plane] {
      const S* gd = out->grad.data();
      const S* xd = x->data.data();
      const S* wd = weight->data.data();
      if (x->requires_grad) {
        x->ensure_grad();
        S* dx = x->grad.data();
#ifdef _OPENMP
#pragma omp parallel for collapse(2) schedule(static)
#endif
        for (int64_t ni = 0; ni < n; ++ni) {
          for (int64_t ci = 0; ci < cin; ++ci) {
            S* dxp = dx + (ni * cin + ci) * plane;
            for (int64_t co = 0; co < cout; ++co) {
              const S* gp = gd + (ni * cout + co) * plane;
              for (int64_t kh = 0; kh < 3; ++kh) {
                const int64_t oh_lo = std::max<int64_t>(0, 1 - kh);
                const int64_t oh_hi = std::min<int64_t>(h, h + 1 - kh);
                for (int64_t kw = 0; kw < 3; ++kw) {
                  const S wv = wd[((co * cin + ci) * 3 + kh) * 3 + kw];
                  const int64_t ow_lo = std::max<int64_t>(0, 1 - kw);
                  const int64_t ow_hi = std::min<int64_t>(w, w + 1 - kw);
                  for (int64_t oh = oh_lo; oh < oh_hi; ++oh) {
                    S* dxr = dxp + (oh + kh - 1) * w + (kw - 1);
                    const S* gr = gp + oh * w;
                    for (int64_t ow = ow_lo; ow < ow_hi; ++ow) dxr[ow] += wv * gr[ow];
                  }
                }
              }
            }
          }
        }
      }
      if (weight->requires_grad) {
        weight->ensure_grad();
        S* dw = weight->grad.data();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (int64_t co = 0; co < cout; ++co) {
          for (int64_t ci = 0; ci < cin; ++ci) {
            for (int64_t kh = 0; kh < 3; ++kh) {
              const int64_t oh_lo = std::max<int64_t>(0, 1 - kh);
              const int64_t oh_hi = std::min<int64_t>(h, h + 1 - kh);
              for (int64_t kw = 0; kw < 3; ++kw) {
                const int64_t ow_lo = std::max<int64_t>(0, 1 - kw);
                const int64_t ow_hi = std::min<int64_t>(w, w + 1 - kw);
                S acc = S(0);
                for (int64_t ni = 0; ni < n; ++ni) {
                  const S* xp = xd + (ni * cin + ci) * plane;
                  const S* gp = gd + (ni * cout + co) * plane;
                  for (int64_t oh = oh_lo; oh < oh_hi; ++oh) {
                    const S* xr = xp + (oh + kh - 1) * w + (kw - 1);
                    const S* gr = gp + oh * w;
                    for (int64_t ow = ow_lo; ow < ow_hi; ++ow) acc += xr[ow] * gr[ow];
                  }
                }
                dw[((co * cin + ci) * 3 + kh) * 3 + kw] += acc;
              }
            }
          }
        }
      }
      if (bias->requires_grad) {
        bias->ensure_grad();
        S* db = bias->grad.data();
        for (int64_t co = 0; co < cout; ++co) {
          S acc = S(0);
          for (int64_t ni = 0; ni < n; ++ni) {
            const S* gp = gd + (ni * cout + co) * plane;
            for (int64_t i = 0; i < plane; ++i) acc += gp[i];
          }
          db[co] += acc;
        }
      }
    });
  }
  return out;
}

// ---- conv_transpose2d ----

template <typename S>
TensorPtr<S> conv_transpose2d(TapeT<S>* tape, const TensorPtr<S>& x,
                              const ConvTranspose2dLayerT<S>& layer) {
  if (x->shape.size() != 4)
    throw ShapeError("conv_transpose2d: input must be rank 4, got " + shape_str(x->shape));
  const int64_t n = x->shape[0], cin = x->shape[1], h = x->shape[2], w = x->shape[3];
  if (cin != layer.in_channels())
    throw ShapeError("conv_transpose2d: input has " + std::to_string(cin) +
                     " channels, layer expects " + std::to_string(layer.in_channels()));
  const int64_t cout = layer.out_channels();
  const int64_t oh_dim = 2 * h, ow_dim = 2 * w;
  auto out = make_tensor<S>(Shape{n, cout, oh_dim, ow_dim});

  const S* xd = x->data.data();
  const S* wd = layer.weight->data.data();
  const S* bd = layer.bias->data.data();
  S* yd = out->data.data();
  const int64_t in_plane = h * w;
  const int64_t out_plane = oh_dim * ow_dim;

  // Scatter-accumulate: output(2*ih + kh - 1, 2*iw + kw - 1) += w * x(ih, iw).
#ifdef _OPENMP
#pragma omp parallel for collapse(2) schedule(static)
#endif
  for (int64_t ni = 0; ni < n; ++ni) {
    for (int64_t co = 0; co < cout; ++co) {
      S* yp = yd + (ni * cout + co) * out_plane;
      for (int64_t i = 0; i < out_plane; ++i) yp[i] = bd[co];
      for (int64_t ci = 0; ci < cin; ++ci) {
        const S* xp = xd + (ni * cin + ci) * in_plane;
        for (int64_t kh = 0; kh < 3; ++kh) {
          const int64_t ih_lo = kh == 0 ? 1 : 0;
          for (int64_t kw = 0; kw < 3; ++kw) {
            const S wv = wd[((ci * cout + co) * 3 + kh) * 3 + kw];
            const int64_t iw_lo = kw == 0 ? 1 : 0;
            for (int64_t ih = ih_lo; ih < h; ++ih) {
              S* yr = yp + (2 * ih + kh - 1) * ow_dim + (kw - 1);
              const S* xr = xp + ih * w;
              for (int64_t iw = iw_lo; iw < w; ++iw) yr[2 * iw] += wv * xr[iw];
            }
          }
        }
      }
    }
  }
  check_all_finite(*out, "conv_transpose2d");

  const bool needs_grad =
      x->requires_grad || layer.weight->requires_grad || layer.bias->requires_grad;
  out->requires_grad = needs_grad;
  if (tape && needs_grad) {
    auto weight = layer.weight;
    auto bias = layer.bias;
    tape->record(out, [x, weight, bias, out, n, cin, cout, h, w, in_plane, out_plane,
                       ow_dim] {
      const S* gd = out->grad.data();
      const S* xd = x->data.data();
      const S* wd = weight->data.data();
      if (x->requires_grad) {
        // Gather: dx(ih, iw) = sum over (co, kh, kw) of g(2ih+kh-1, 2iw+kw-1) * w.
        x->ensure_grad();
        S* dx = x->grad.data();
#ifdef _OPENMP
#pragma omp parallel for collapse(2) schedule(static)
#endif
        for (int64_t ni = 0; ni < n; ++ni) {
          for (int64_t ci = 0; ci < cin; ++ci) {
            S* dxp = dx + (ni * cin + ci) * in_plane;
            for (int64_t co = 0; co < cout; ++co) {
              const S* gp = gd + (ni * cout + co) * out_plane;
              for (int64_t kh = 0; kh < 3; ++kh) {
                const int64_t ih_lo = kh == 0 ? 1 : 0;
                for (int64_t kw = 0; kw < 3; ++kw) {
                  const S wv = wd[((ci * cout + co) * 3 + kh) * 3 + kw];
                  const int64_t iw_lo = kw == 0 ? 1 : 0;
                  for (int64_t ih = ih_lo; ih < h; ++ih) {
                    const S* gr = gp + (2 * ih + kh - 1) * ow_dim + (kw - 1);
                    S* dxr = dxp + ih * w;
                    for (int64_t iw = iw_lo; iw < w; ++iw) dxr[iw] += wv * gr[2 * iw];
                  }
                }
              }
            }
          }
        }
      }
      if (weight->requires_grad) {
        weight->ensure_grad();
        S* dw = weight->grad.data();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (int64_t ci = 0; ci < cin; ++ci) {
          for (int64_t co = 0; co < cout; ++co) {
            for (int64_t kh = 0; kh < 3; ++kh) {
              const int64_t ih_lo = kh == 0 ? 1 : 0;
              for (int64_t kw = 0; kw < 3; ++kw) {
                const int64_t iw_lo = kw == 0 ? 1 : 0;
                S acc = S(0);
                for (int64_t ni = 0; ni < n; ++ni) {
                  const S* xp = xd + (ni * cin + ci) * in_plane;
                  const S* gp = gd + (ni * cout + co) * out_plane;
                  for (int64_t ih = ih_lo; ih < h; ++ih) {
                    const S* xr = xp + ih * w;
                    const S* gr = gp + (2 * ih + kh - 1) * ow_dim + (kw - 1);
                    for (int64_t iw = iw_lo; iw < w; ++iw) acc += xr[iw] * gr[2 * iw];
                  }
                }
                dw[((ci * cout + co) * 3 + kh) * 3 + kw] += acc;
              }
            }
          }
        }
      }
      if (bias->requires_grad) {
        bias->ensure_grad();
        S* db = bias->grad.data();
        for (int64_t co = 0; co < cout; ++co) {
          S acc = S(0);
          for (int64_t ni = 0; ni < n; ++ni) {
            const S* gp = gd + (ni * cout + co) * out_plane;
            for (int64_t i = 0; i < out_plane; ++i) acc += gp[i];
          }
          db[co] += acc;
        }
      }
    });
  }
  return out;
}

// ---- maxpool2x2 ----

// 2x2 window, stride 2. Ties go to the first element in row-major scan order;
// backward routes gradient only to the stored argmax positions.
template <typename S>
TensorPtr<S> maxpool2x2(TapeT<S>* tape, const TensorPtr<S>& x) {
  if (x->shape.size() != 4)
    throw ShapeError("maxpool2x2: input must be rank 4, got " + shape_str(x->shape));
  const int64_t n = x->shape[0], c = x->shape[1], h = x->shape[2], w = x->shape[3];
  if (h % 2 != 0 || w % 2 != 0)
    throw ShapeError("maxpool2x2: H and W must be even, got " + shape_str(x->shape));
  const int64_t oh = h / 2, ow = w / 2;
  auto out = make_tensor<S>(Shape{n, c, oh, ow});
  auto argmax = std::make_shared<std::vector<int64_t>>(out->data.size());

  const S* xd = x->data.data();
  S* yd = out->data.data();
  int64_t* am = argmax->data();
  for (int64_t nc = 0; nc < n * c; ++nc) {
    const S* xp = xd + nc * h * w;
    S* yp = yd + nc * oh * ow;
    int64_t* ap = am + nc * oh * ow;
    for (int64_t i = 0; i < oh; ++i) {
      for (int64_t j = 0; j < ow; ++j) {
        const int64_t base = (2 * i) * w + 2 * j;
        const int64_t cand[4] = {base, base + 1, base + w, base + w + 1};
        int64_t best = cand[0];
        S best_v = xp[cand[0]];
        for (int k = 1; k < 4; ++k)
          if (xp[cand[k]] > best_v) {
            best_v = xp[cand[k]];
            best = cand[k];
          }
        yp[i * ow + j] = best_v;
        ap[i * ow + j] = nc * h * w + best;
      }
    }
  }
  check_all_finite(*out, "maxpool2x2");

  out->requires_grad = x->requires_grad;
  if (tape && out->requires_grad) {
    tape->record(out, [x, out, argmax] {
      x->ensure_grad();
      S* dx = x->grad.data();
      const S* g = out->grad.data();
      const int64_t* ap = argmax->data();
      for (size_t i = 0; i < out->grad.size(); ++i) dx[ap[i]] += g[i];
    });
  }
  return out;
}

// ---- batchnorm2d ----

// Train mode normalizes each channel over (batch, H, W) with biased batch
// variance and updates running stats r <- (1-momentum)*r + momentum*stat;
// eval mode uses running stats only. Backward goes through the batch mean and
// variance in train mode.
template <typename S>
TensorPtr<S> batchnorm2d(TapeT<S>* tape, const TensorPtr<S>& x, BatchNorm2dLayerT<S>& layer,
                         Mode mode) {
  if (x->shape.size() != 4)
    throw ShapeError("batchnorm2d: input must be rank 4, got " + shape_str(x->shape));
  const int64_t n = x->shape[0], c = x->shape[1], h = x->shape[2], w = x->shape[3];
  if (c != layer.channels())
    throw ShapeError("batchnorm2d: input has " + std::to_string(c) + " channels, layer has " +
                     std::to_string(layer.channels()));
  const int64_t m = n * h * w;  // statistics count per channel
  if (mode == Mode::kTrain && m < 2)
    throw ContractError("batchnorm2d: train mode requires batch*H*W >= 2 per channel");

  auto out = make_tensor<S>(x->shape);
  const int64_t plane = h * w;
  const S* xd = x->data.data();
  S* yd = out->data.data();
  const S* gm = layer.gamma->data.data();
  const S* bt = layer.beta->data.data();

  auto mean = std::make_shared<std::vector<S>>(c, S(0));
  auto invstd = std::make_shared<std::vector<S>>(c, S(0));
  auto xhat = std::make_shared<std::vector<S>>();

  if (mode == Mode::kTrain) {
    xhat->assign(x->data.size(), S(0));
    for (int64_t ci = 0; ci < c; ++ci) {
      S mu = S(0);
      for (int64_t ni = 0; ni < n; ++ni) {
        const S* xp = xd + (ni * c + ci) * plane;
        for (int64_t i = 0; i < plane; ++i) mu += xp[i];
      }
      mu /= S(m);
      S var = S(0);
      for (int64_t ni = 0; ni < n; ++ni) {
        const S* xp = xd + (ni * c + ci) * plane;
        for (int64_t i = 0; i < plane; ++i) {
          const S d = xp[i] - mu;
          var += d * d;
        }
      }
      var /= S(m);
      const S istd = S(1) / std::sqrt(var + layer.eps);
      (*mean)[ci] = mu;
      (*invstd)[ci] = istd;
      for (int64_t ni = 0; ni < n; ++ni) {
        const S* xp = xd + (ni * c + ci) * plane;
        S* hp = xhat->data() + (ni * c + ci) * plane;
        S* yp = yd + (ni * c + ci) * plane;
        for (int64_t i = 0; i < plane; ++i) {
          const S xh = (xp[i] - mu) * istd;
          hp[i] = xh;
          yp[i] = gm[ci] * xh + bt[ci];
        }
      }
      layer.running_mean->data[ci] =
          (S(1) - layer.momentum) * layer.running_mean->data[ci] + layer.momentum * mu;
      layer.running_var->data[ci] =
          (S(1) - layer.momentum) * layer.running_var->data[ci] + layer.momentum * var;
    }
  } else {
    for (int64_t ci = 0; ci < c; ++ci) {
      const S mu = layer.running_mean->data[ci];
      const S istd = S(1) / std::sqrt(layer.running_var->data[ci] + layer.eps);
      (*mean)[ci] = mu;
      (*invstd)[ci] = istd;
      for (int64_t ni = 0; ni < n; ++ni) {
        const S* xp = xd + (ni * c + ci) * plane;
        S* yp = yd + (ni * c + ci) * plane;
        for (int64_t i = 0; i < plane; ++i) yp[i] = gm[ci] * (xp[i] - mu) * istd + bt[ci];
      }
    }
  }
  check_all_finite(*out, "batchnorm2d");

  const bool needs_grad =
      x->requires_grad || layer.gamma->requires_grad || layer.beta->requires_grad;
  out->requires_grad = needs_grad;
  if (tape && needs_grad) {
    auto gamma = layer.gamma;
    auto beta = layer.beta;
    const bool train = mode == Mode::kTrain;
    tape->record(out, [x, gamma, beta, out, mean, invstd, xhat, n, c, plane, m, train] {
      const S* g = out->grad.data();
      const S* xd = x->data.data();
      for (int64_t ci = 0; ci < c; ++ci) {
        // Per-channel reductions of the incoming gradient.
        S sum_g = S(0), sum_gx = S(0);
        for (int64_t ni = 0; ni < n; ++ni) {
          const S* gp = g + (ni * c + ci) * plane;
          const S* hp = train ? xhat->data() + (ni * c + ci) * plane : nullptr;
          const S* xp = xd + (ni * c + ci) * plane;
          for (int64_t i = 0; i < plane; ++i) {
            sum_g += gp[i];
            const S xh = train ? hp[i] : (xp[i] - (*mean)[ci]) * (*invstd)[ci];
            sum_gx += gp[i] * xh;
          }
        }
        if (gamma->requires_grad) {
          gamma->ensure_grad();
          gamma->grad[ci] += sum_gx;
        }
        if (beta->requires_grad) {
          beta->ensure_grad();
          beta->grad[ci] += sum_g;
        }
        if (x->requires_grad) {
          x->ensure_grad();
          const S gmv = gamma->data[ci];
          const S istd = (*invstd)[ci];
          for (int64_t ni = 0; ni < n; ++ni) {
            const S* gp = g + (ni * c + ci) * plane;
            const S* hp = train ? xhat->data() + (ni * c + ci) * plane : nullptr;
            S* dxp = x->grad.data() + (ni * c + ci) * plane;
            for (int64_t i = 0; i < plane; ++i) {
              if (train) {
                // dx = gamma*istd*(g - mean(g) - xhat*mean(g*xhat))
                dxp[i] += gmv * istd * (gp[i] - sum_g / S(m) - hp[i] * (sum_gx / S(m)));
              } else {
                dxp[i] += gmv * istd * gp[i];
              }
            }
          }
        }
      }
    });
  }
  return out;
}

// ---- dropout2d ----

// Channel-granular dropout: each (sample, channel) plane is kept with
// probability 1-p and scaled by 1/(1-p); the same mask drives backward.
// Eval mode and p == 0 are exact identities (no rng draws).
template <typename S>
TensorPtr<S> dropout2d(TapeT<S>* tape, const TensorPtr<S>& x, const Dropout2dParams& params,
                       Mode mode, Rng& rng) {
  if (params.p < 0.0 || params.p >= 1.0)
    throw ConfigError("dropout2d: p must be in [0,1), got " + std::to_string(params.p));
  if (x->shape.size() != 4)
    throw ShapeError("dropout2d: input must be rank 4, got " + shape_str(x->shape));

  if (mode == Mode::kEval || params.p == 0.0) {
    auto out = make_tensor<S>(x->shape);
    out->data = x->data;
    out->requires_grad = x->requires_grad;
    if (tape && out->requires_grad) {
      tape->record(out, [x, out] {
        x->ensure_grad();
        for (size_t i = 0; i < x->grad.size(); ++i) x->grad[i] += out->grad[i];
      });
    }
    return out;
  }

  const int64_t n = x->shape[0], c = x->shape[1];
  const int64_t plane = x->shape[2] * x->shape[3];
  auto out = make_tensor<S>(x->shape);
  auto keep_scale = std::make_shared<std::vector<S>>(n * c, S(0));
  const S scale = S(1.0 / (1.0 - params.p));
  for (int64_t nc = 0; nc < n * c; ++nc) {
    const bool keep = rng.next_double() >= params.p;
    (*keep_scale)[nc] = keep ? scale : S(0);
    const S* xp = x->data.data() + nc * plane;
    S* yp = out->data.data() + nc * plane;
    const S f = (*keep_scale)[nc];
    for (int64_t i = 0; i < plane; ++i) yp[i] = f * xp[i];
  }
  check_all_finite(*out, "dropout2d");

  out->requires_grad = x->requires_grad;
  if (tape && out->requires_grad) {
    tape->record(out, [x, out, keep_scale, n, c, plane] {
      x->ensure_grad();
      for (int64_t nc = 0; nc < n * c; ++nc) {
        const S f = (*keep_scale)[nc];
        if (f == S(0)) continue;
        const S* gp = out->grad.data() + nc * plane;
        S* dxp = x->grad.data() + nc * plane;
        for (int64_t i = 0; i < plane; ++i) dxp[i] += f * gp[i];
      }
    });
  }
  return out;
}

// ---- initialization ----

// He initialization: weights ~ N(0, sqrt(2/fan_in)), biases zero. The fan_in
// of a 3x3 (transposed) convolution is in_channels * 9.
template <typename S>
void init_he_weight(const TensorPtr<S>& weight, int64_t fan_in, Rng& rng) {
  const double std = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (auto& v : weight->data) v = static_cast<S>(std * rng.next_gaussian());
}

template <typename S>
void init_he(Conv2dLayerT<S>& layer, Rng& rng) {
  init_he_weight(layer.weight, layer.in_channels() * 9, rng);
  std::fill(layer.bias->data.begin(), layer.bias->data.end(), S(0));
}

template <typename S>
void init_he(ConvTranspose2dLayerT<S>& layer, Rng& rng) {
  init_he_weight(layer.weight, layer.in_channels() * 9, rng);
  std::fill(layer.bias->data.begin(), layer.bias->data.end(), S(0));
}

template <typename S>
void init_he(BatchNorm2dLayerT<S>& layer, Rng&) {
  std::fill(layer.gamma->data.begin(), layer.gamma->data.end(), S(1));
  std::fill(layer.beta->data.begin(), layer.beta->data.end(), S(0));
  std::fill(layer.running_mean->data.begin(), layer.running_mean->data.end(), S(0));
  std::fill(layer.running_var->data.begin(), layer.running_var->data.end(), S(1));
}

}  // namespace amazonnet
