#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "amazonnet/data.hpp"
#include "amazonnet/metrics.hpp"
#include "amazonnet/unet.hpp"

namespace amazonnet {

// Overlapping-tile inference over a full scene. Tiles cover every pixel
// (trailing windows shifted inward); overlapped probabilities are averaged
// arithmetically. Runs in eval mode, so the result is a pure function of the
// scene and the model parameters.
template <typename S>
std::vector<float> predict_scene(UNetT<S>& model, const SceneSample& sample, int64_t tile,
                                 int64_t stride) {
  const int64_t h = sample.height(), w = sample.width();
  if (tile > h || tile > w)
    throw ShapeError("predict_scene: scene " + std::to_string(w) + "x" + std::to_string(h) +
                     " is smaller than tile " + std::to_string(tile));
  const auto rows = tile_offsets(h, tile, stride);
  const auto cols = tile_offsets(w, tile, stride);

  std::vector<double> acc(static_cast<size_t>(h * w), 0.0);
  std::vector<int32_t> cover(static_cast<size_t>(h * w), 0);
  set_mode(model, Mode::kEval);
  for (int64_t r0 : rows) {
    for (int64_t c0 : cols) {
      const SceneSample crop = crop_scene(sample, r0, c0, tile);
      const auto input = normalize_stack<S>(crop);
      const auto prob = model.forward(nullptr, input);
      for (int64_t r = 0; r < tile; ++r) {
        for (int64_t c = 0; c < tile; ++c) {
          const size_t i = static_cast<size_t>((r0 + r) * w + (c0 + c));
          acc[i] += static_cast<double>(prob->data[r * tile + c]);
          cover[i] += 1;
        }
      }
    }
  }
  std::vector<float> out(acc.size());
  for (size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<float>(acc[i] / cover[i]);
  return out;
}

inline GrayImage probability_image(const std::vector<float>& prob, int64_t width,
                                   int64_t height) {
  GrayImage img(width, height, 8);
  for (size_t i = 0; i < prob.size(); ++i)
    img.pixels[i] = static_cast<uint16_t>(std::lround(std::clamp(prob[i], 0.f, 1.f) * 255.f));
  return img;
}

// Writes <stem>_prob.png (8-bit probability) and <stem>_mask.png (binary).
inline void write_prediction(const std::filesystem::path& dir, const std::string& stem,
                             const std::vector<float>& prob, int64_t width, int64_t height,
                             double tau = 0.5) {
  std::filesystem::create_directories(dir);
  write_png(dir / (stem + "_prob.png"), probability_image(prob, width, height));
  write_png(dir / (stem + "_mask.png"), threshold(prob, width, height, tau));
}

}  // namespace amazonnet
