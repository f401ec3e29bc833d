#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "amazonnet/nn.hpp"
#include "amazonnet/tensor.hpp"

namespace amazonnet {

struct UNetConfig {
  int64_t in_channels = 4;  // stacked R,G,B,NIR
  int64_t depth = 4;        // number of pooling stages
  int64_t base_width = 16;  // channels at the first stage; stage k has base_width*2^k
  int64_t out_channels = 1;
  double dropout_p = 0.1;

  void validate() const {
    if (depth < 1 || base_width < 1 || in_channels < 1 || out_channels < 1)
      throw ConfigError("unet config: depth, base_width and channel counts must be >= 1");
    if (dropout_p < 0.0 || dropout_p >= 1.0)
      throw ConfigError("unet config: dropout_p must be in [0,1)");
  }
};

// Two conv->bn->relu units, the building block of every stage.
template <typename S>
struct ConvBnBlockT {
  Conv2dLayerT<S> conv1;
  BatchNorm2dLayerT<S> bn1;
  Conv2dLayerT<S> conv2;
  BatchNorm2dLayerT<S> bn2;

  ConvBnBlockT() = default;
  ConvBnBlockT(int64_t in_ch, int64_t out_ch)
      : conv1(in_ch, out_ch), bn1(out_ch), conv2(out_ch, out_ch), bn2(out_ch) {}

  TensorPtr<S> forward(TapeT<S>* tape, const TensorPtr<S>& x, Mode mode) {
    auto h = relu(tape, batchnorm2d(tape, conv2d(tape, x, conv1), bn1, mode));
    return relu(tape, batchnorm2d(tape, conv2d(tape, h, conv2), bn2, mode));
  }
};

// Optional instrumentation of a forward pass: the stored encoder activations
// and the exact tensors concatenated at each decoder stage.
template <typename S>
struct ForwardTraceT {
  std::vector<TensorPtr<S>> encoder_skips;        // index = stage
  std::vector<TensorPtr<S>> decoder_skip_inputs;  // index = stage
};

// Encoder/decoder with skip connections. Each encoder stage is a ConvBnBlock
// followed by 2x2 max pooling; the pre-pool activation is stored and
// concatenated into the matching decoder stage. Each decoder stage upsamples
// with a transposed conv, concatenates the skip, runs a ConvBnBlock and
// channel dropout. A final 3x3 conv maps to out_channels, then sigmoid.
template <typename S>
struct UNetT {
  struct DecoderStage {
    ConvTranspose2dLayerT<S> up;
    ConvBnBlockT<S> body;
  };

  UNetConfig config;
  std::vector<ConvBnBlockT<S>> encoders;  // stage 0..depth-1
  ConvBnBlockT<S> bottleneck;
  std::vector<DecoderStage> decoders;  // index k = stage k (width base*2^k)
  Conv2dLayerT<S> head;
  Dropout2dParams dropout;
  Mode mode = Mode::kTrain;

  int64_t stage_width(int64_t k) const { return config.base_width << k; }

  // Stable parameter ordering used by init, the optimizer and checkpoints:
  // enc0..encD-1, bottleneck, decD-1..dec0, head; within a block conv1, bn1,
  // conv2, bn2; within a decoder stage the transposed conv precedes the block.
  template <typename Fn>
  void visit_params(Fn&& fn) {
    auto block = [&](const std::string& prefix, ConvBnBlockT<S>& b) {
      fn(prefix + ".conv1.weight", b.conv1.weight);
      fn(prefix + ".conv1.bias", b.conv1.bias);
      fn(prefix + ".bn1.gamma", b.bn1.gamma);
      fn(prefix + ".bn1.beta", b.bn1.beta);
      fn(prefix + ".conv2.weight", b.conv2.weight);
      fn(prefix + ".conv2.bias", b.conv2.bias);
      fn(prefix + ".bn2.gamma", b.bn2.gamma);
      fn(prefix + ".bn2.beta", b.bn2.beta);
    };
    for (size_t k = 0; k < encoders.size(); ++k)
      block("enc" + std::to_string(k), encoders[k]);
    block("bottleneck", bottleneck);
    for (int64_t k = config.depth - 1; k >= 0; --k) {
      auto& d = decoders[static_cast<size_t>(k)];
      fn("dec" + std::to_string(k) + ".up.weight", d.up.weight);
      fn("dec" + std::to_string(k) + ".up.bias", d.up.bias);
      block("dec" + std::to_string(k), d.body);
    }
    fn("head.conv.weight", head.weight);
    fn("head.conv.bias", head.bias);
  }

  std::vector<std::pair<std::string, TensorPtr<S>>> named_parameters() {
    std::vector<std::pair<std::string, TensorPtr<S>>> out;
    visit_params([&](const std::string& name, const TensorPtr<S>& t) {
      out.emplace_back(name, t);
    });
    return out;
  }

  std::vector<std::pair<std::string, TensorPtr<S>>> named_buffers() {
    std::vector<std::pair<std::string, TensorPtr<S>>> out;
    auto block = [&](const std::string& prefix, ConvBnBlockT<S>& b) {
      out.emplace_back(prefix + ".bn1.running_mean", b.bn1.running_mean);
      out.emplace_back(prefix + ".bn1.running_var", b.bn1.running_var);
      out.emplace_back(prefix + ".bn2.running_mean", b.bn2.running_mean);
      out.emplace_back(prefix + ".bn2.running_var", b.bn2.running_var);
    };
    for (size_t k = 0; k < encoders.size(); ++k)
      block("enc" + std::to_string(k), encoders[k]);
    block("bottleneck", bottleneck);
    for (int64_t k = config.depth - 1; k >= 0; --k)
      block("dec" + std::to_string(k), decoders[static_cast<size_t>(k)].body);
    return out;
  }

  TensorPtr<S> forward(TapeT<S>* tape, const TensorPtr<S>& x, Rng* dropout_rng = nullptr,
                       ForwardTraceT<S>* trace = nullptr) {
    if (x->shape.size() != 4)
      throw ShapeError("unet forward: input must be rank 4, got " + shape_str(x->shape));
    if (x->shape[1] != config.in_channels)
      throw ShapeError("unet forward: expected " + std::to_string(config.in_channels) +
                       " input channels, got " + std::to_string(x->shape[1]));
    const int64_t multiple = int64_t(1) << config.depth;
    if (x->shape[2] % multiple != 0 || x->shape[3] % multiple != 0)
      throw ShapeError("unet forward: H and W must be multiples of " +
                       std::to_string(multiple) + ", got " + shape_str(x->shape));
    if (mode == Mode::kTrain && config.dropout_p > 0.0 && dropout_rng == nullptr)
      throw ContractError("unet forward: train mode with dropout needs an rng stream");

    std::vector<TensorPtr<S>> skips;
    auto h = x;
    for (auto& enc : encoders) {
      auto a = enc.forward(tape, h, mode);
      skips.push_back(a);
      h = maxpool2x2(tape, a);
    }
    h = bottleneck.forward(tape, h, mode);
    for (int64_t k = config.depth - 1; k >= 0; --k) {
      auto& dec = decoders[static_cast<size_t>(k)];
      auto up = conv_transpose2d(tape, h, dec.up);
      const auto& skip = skips[static_cast<size_t>(k)];
      if (trace) {
        trace->decoder_skip_inputs.push_back(skip);
      }
      h = concat_channels<S>(tape, {skip, up});
      h = dec.body.forward(tape, h, mode);
      // Dropout is identity in eval mode and when p == 0, so it is only
      // applied when it can actually act.
      if (config.dropout_p > 0.0 && mode == Mode::kTrain)
        h = dropout2d(tape, h, dropout, mode, *dropout_rng);
    }
    if (trace) trace->encoder_skips = skips;
    return sigmoid(tape, conv2d(tape, h, head));
  }
};

template <typename S>
void set_mode(UNetT<S>& model, Mode mode) {
  model.mode = mode;
}

// Constructs and He-initializes all layers in the documented parameter order
// using the init stream split from rng, so two builds from the same seed are
// bit-identical.
template <typename S>
UNetT<S> build_unet(const UNetConfig& config, const Rng& rng) {
  config.validate();
  UNetT<S> model;
  model.config = config;
  model.dropout.p = config.dropout_p;

  int64_t in_ch = config.in_channels;
  for (int64_t k = 0; k < config.depth; ++k) {
    const int64_t wdt = config.base_width << k;
    model.encoders.emplace_back(in_ch, wdt);
    in_ch = wdt;
  }
  const int64_t bottleneck_w = config.base_width << config.depth;
  model.bottleneck = ConvBnBlockT<S>(in_ch, bottleneck_w);
  model.decoders.resize(static_cast<size_t>(config.depth));
  for (int64_t k = config.depth - 1; k >= 0; --k) {
    const int64_t wdt = config.base_width << k;
    const int64_t above = config.base_width << (k + 1);
    auto& d = model.decoders[static_cast<size_t>(k)];
    d.up = ConvTranspose2dLayerT<S>(above, wdt);
    d.body = ConvBnBlockT<S>(2 * wdt, wdt);
  }
  model.head = Conv2dLayerT<S>(config.base_width, config.out_channels);

  Rng init_rng = rng.split("init");
  auto init_block = [&](ConvBnBlockT<S>& b) {
    init_he(b.conv1, init_rng);
    init_he(b.bn1, init_rng);
    init_he(b.conv2, init_rng);
    init_he(b.bn2, init_rng);
  };
  for (auto& enc : model.encoders) init_block(enc);
  init_block(model.bottleneck);
  for (int64_t k = config.depth - 1; k >= 0; --k) {
    auto& d = model.decoders[static_cast<size_t>(k)];
    init_he(d.up, init_rng);
    init_block(d.body);
  }
  init_he(model.head, init_rng);

  model.visit_params([](const std::string&, const TensorPtr<S>& t) {
    t->requires_grad = true;
  });
  return model;
}

template <typename S>
int64_t parameter_count(UNetT<S>& model) {
  int64_t total = 0;
  model.visit_params([&](const std::string&, const TensorPtr<S>& t) { total += t->numel(); });
  return total;
}

}  // namespace amazonnet
