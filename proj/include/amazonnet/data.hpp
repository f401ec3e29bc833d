#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "amazonnet/image.hpp"
#include "amazonnet/rng.hpp"
#include "amazonnet/tensor.hpp"

namespace amazonnet {

// One training unit: co-registered VIS (RGB) and NIR rasters, a binary label
// mask (possibly partial or mislabelled), and -- for synthetic scenes -- the
// clean oracle mask plus confuser masks used only for evaluation.
struct SceneSample {
  std::string scene_id;
  ImageU8 vis;     // 3 channels
  GrayImage nir;   // 1 band, 8- or 16-bit
  MaskImage labels;
  std::optional<MaskImage> oracle;
  std::optional<MaskImage> river_mask;
  std::optional<MaskImage> cloud_mask;

  int64_t height() const { return vis.height; }
  int64_t width() const { return vis.width; }
};

// One tile ready for batching: input stack [1, 4, T, T] in [0,1] and binary
// target [1, 1, T, T], with provenance back to the source scene.
template <typename S>
struct TrainSample {
  TensorPtr<S> input;
  TensorPtr<S> target;
  std::string scene_id;
  int64_t row_off = 0;
  int64_t col_off = 0;
};

// ---- scene loading ----

inline MaskImage binarize_mask(const PngData& png, const std::string& name) {
  if (png.channels != 1 || png.bit_depth != 8)
    throw IoError("mask must be 8-bit grayscale: " + name);
  MaskImage m(png.width, png.height);
  for (size_t i = 0; i < png.samples.size(); ++i)
    m.values[i] = png.samples[i] >= 128 ? 1 : 0;  // midpoint threshold
  return m;
}

// Loads <dir>/{vis.png, nir.png, mask.png[, oracle.png]}. All rasters must
// share dimensions; the masks are binarized at 128.
inline SceneSample load_scene(const std::filesystem::path& dir) {
  SceneSample s;
  s.scene_id = dir.filename().string();

  const auto vis_path = dir / "vis.png";
  const auto nir_path = dir / "nir.png";
  const auto mask_path = dir / "mask.png";
  for (const auto& p : {vis_path, nir_path, mask_path})
    if (!std::filesystem::exists(p)) throw IoError("missing scene file: " + p.string());

  const PngData vis = read_png(vis_path);
  if (vis.channels != 3 || vis.bit_depth != 8)
    throw IoError("vis must be 8-bit RGB: " + vis_path.string());
  s.vis.width = vis.width;
  s.vis.height = vis.height;
  s.vis.channels = 3;
  s.vis.pixels.assign(vis.samples.begin(), vis.samples.end());

  const PngData nir = read_png(nir_path);
  if (nir.channels != 1) throw IoError("nir must be single-band grayscale: " + nir_path.string());
  if (nir.width != vis.width || nir.height != vis.height)
    throw IoError("dimension mismatch between vis.png and nir.png in " + dir.string());
  s.nir.width = nir.width;
  s.nir.height = nir.height;
  s.nir.bit_depth = nir.bit_depth;
  s.nir.pixels = nir.samples;

  const PngData mask = read_png(mask_path);
  if (mask.width != vis.width || mask.height != vis.height)
    throw IoError("dimension mismatch between vis.png and mask.png in " + dir.string());
  s.labels = binarize_mask(mask, mask_path.string());

  const auto oracle_path = dir / "oracle.png";
  if (std::filesystem::exists(oracle_path)) {
    const PngData oracle = read_png(oracle_path);
    if (oracle.width != vis.width || oracle.height != vis.height)
      throw IoError("dimension mismatch between vis.png and oracle.png in " + dir.string());
    s.oracle = binarize_mask(oracle, oracle_path.string());
  }
  return s;
}

// ---- normalization ----

// Stacks the sample into [1, 4, H, W] with channel order R,G,B,NIR, each
// channel scaled by its bit-depth maximum into [0,1].
template <typename S>
TensorPtr<S> normalize_stack(const SceneSample& sample) {
  const int64_t h = sample.height(), w = sample.width();
  auto t = make_tensor<S>(Shape{1, 4, h, w});
  const int64_t plane = h * w;
  const S inv255 = S(1) / S(255);
  for (int64_t i = 0; i < plane; ++i) {
    t->data[0 * plane + i] = S(sample.vis.pixels[3 * i + 0]) * inv255;
    t->data[1 * plane + i] = S(sample.vis.pixels[3 * i + 1]) * inv255;
    t->data[2 * plane + i] = S(sample.vis.pixels[3 * i + 2]) * inv255;
  }
  const S inv_nir = S(1) / S(static_cast<double>(sample.nir.max_value()));
  for (int64_t i = 0; i < plane; ++i) t->data[3 * plane + i] = S(sample.nir.pixels[i]) * inv_nir;
  return t;
}

template <typename S>
TensorPtr<S> mask_tensor(const MaskImage& mask) {
  auto t = make_tensor<S>(Shape{1, 1, mask.height, mask.width});
  for (size_t i = 0; i < mask.values.size(); ++i) t->data[i] = mask.values[i] ? S(1) : S(0);
  return t;
}

template <typename S>
TrainSample<S> to_train_sample(const SceneSample& sample, int64_t row_off = 0,
                               int64_t col_off = 0) {
  return {normalize_stack<S>(sample), mask_tensor<S>(sample.labels), sample.scene_id, row_off,
          col_off};
}

// ---- tiling ----

// Top-left anchored grid; a trailing partial window is shifted inward so
// every tile is full-size.
inline std::vector<int64_t> tile_offsets(int64_t extent, int64_t tile, int64_t stride) {
  if (tile > extent)
    throw ShapeError("tile size " + std::to_string(tile) + " exceeds extent " +
                     std::to_string(extent));
  if (stride < 1) throw ShapeError("tile stride must be >= 1");
  std::vector<int64_t> offsets;
  for (int64_t off = 0; off + tile <= extent; off += stride) offsets.push_back(off);
  if (offsets.back() + tile < extent) offsets.push_back(extent - tile);
  return offsets;
}

inline MaskImage crop_mask(const MaskImage& m, int64_t r0, int64_t c0, int64_t size) {
  MaskImage out(size, size);
  for (int64_t r = 0; r < size; ++r)
    for (int64_t c = 0; c < size; ++c)
      out.values[r * size + c] = m.values[(r0 + r) * m.width + (c0 + c)];
  return out;
}

inline SceneSample crop_scene(const SceneSample& s, int64_t r0, int64_t c0, int64_t size) {
  SceneSample out;
  out.scene_id = s.scene_id;
  out.vis = ImageU8(size, size, 3);
  for (int64_t r = 0; r < size; ++r)
    for (int64_t c = 0; c < size; ++c)
      for (int64_t ch = 0; ch < 3; ++ch)
        out.vis.pixels[(r * size + c) * 3 + ch] =
            s.vis.pixels[((r0 + r) * s.vis.width + (c0 + c)) * 3 + ch];
  out.nir = GrayImage(size, size, s.nir.bit_depth);
  for (int64_t r = 0; r < size; ++r)
    for (int64_t c = 0; c < size; ++c)
      out.nir.pixels[r * size + c] = s.nir.pixels[(r0 + r) * s.nir.width + (c0 + c)];
  out.labels = crop_mask(s.labels, r0, c0, size);
  if (s.oracle) out.oracle = crop_mask(*s.oracle, r0, c0, size);
  if (s.river_mask) out.river_mask = crop_mask(*s.river_mask, r0, c0, size);
  if (s.cloud_mask) out.cloud_mask = crop_mask(*s.cloud_mask, r0, c0, size);
  return out;
}

struct SceneTile {
  int64_t row_off = 0;
  int64_t col_off = 0;
  SceneSample raster;
};

inline std::vector<SceneTile> tile_scene(const SceneSample& sample, int64_t tile,
                                         int64_t stride) {
  const auto rows = tile_offsets(sample.height(), tile, stride);
  const auto cols = tile_offsets(sample.width(), tile, stride);
  std::vector<SceneTile> tiles;
  tiles.reserve(rows.size() * cols.size());
  for (int64_t r : rows)
    for (int64_t c : cols) tiles.push_back({r, c, crop_scene(sample, r, c, tile)});
  return tiles;
}

// ---- train/val split ----

struct SplitResult {
  std::vector<size_t> train;
  std::vector<size_t> val;
};

// Seeded shuffle then prefix split at scene granularity (tiles of one scene
// never straddle the split). The val count rounds half-up and is clamped so
// both sides are non-empty.
inline SplitResult split_dataset(size_t n_scenes, double val_fraction, uint64_t seed) {
  if (n_scenes < 2) throw ContractError("split_dataset: need at least 2 scenes");
  if (val_fraction < 0.0 || val_fraction > 1.0)
    throw ConfigError("split_dataset: val_fraction must be in [0,1]");
  std::vector<size_t> idx(n_scenes);
  for (size_t i = 0; i < n_scenes; ++i) idx[i] = i;
  Rng rng = Rng(seed).split("data-split");
  for (size_t i = n_scenes - 1; i > 0; --i) {
    const size_t j = static_cast<size_t>(rng.next_below(i + 1));
    std::swap(idx[i], idx[j]);
  }
  int64_t n_val = static_cast<int64_t>(std::floor(val_fraction * static_cast<double>(n_scenes) + 0.5));
  n_val = std::max<int64_t>(1, std::min<int64_t>(n_val, static_cast<int64_t>(n_scenes) - 1));
  SplitResult out;
  out.val.assign(idx.begin(), idx.begin() + n_val);
  out.train.assign(idx.begin() + n_val, idx.end());
  std::sort(out.val.begin(), out.val.end());
  std::sort(out.train.begin(), out.train.end());
  return out;
}

}  // namespace amazonnet
