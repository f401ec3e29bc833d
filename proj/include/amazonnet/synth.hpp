#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "amazonnet/data.hpp"
#include "amazonnet/rng.hpp"

namespace amazonnet {

struct Range {
  int64_t lo = 0;
  int64_t hi = 0;
};

struct SynthConfig {
  int64_t canvas = 128;
  int64_t n_scenes = 16;
  Range scar_count_range{2, 6};
  Range scar_size_range{60, 220};  // random-walk steps per scar
  double river_prob = 0.15;
  double cloud_prob = 0.15;
  double label_drop_fraction = 0.0;  // f: fraction of scar components removed
  int64_t false_label_count = 0;     // k: spurious components injected
  uint64_t seed = 0;

  void validate() const {
    if (canvas < 16) throw ConfigError("synth config: canvas must be >= 16");
    if (n_scenes < 1) throw ConfigError("synth config: n_scenes must be >= 1");
    if (scar_count_range.lo > scar_count_range.hi || scar_count_range.lo < 0)
      throw ConfigError("synth config: bad scar_count_range");
    if (scar_size_range.lo > scar_size_range.hi || scar_size_range.lo < 1)
      throw ConfigError("synth config: bad scar_size_range");
    if (river_prob < 0 || river_prob > 1 || cloud_prob < 0 || cloud_prob > 1)
      throw ConfigError("synth config: probabilities must be in [0,1]");
    if (label_drop_fraction < 0 || label_drop_fraction > 1)
      throw ConfigError("synth config: label_drop_fraction must be in [0,1]");
    if (false_label_count < 0)
      throw ConfigError("synth config: false_label_count must be >= 0");
  }
};

// ---- connected components (8-connectivity) ----

struct Components {
  std::vector<int32_t> labels;  // 0 = background, components numbered from 1
  int32_t count = 0;
};

inline Components label_components(const MaskImage& mask) {
  const int64_t h = mask.height, w = mask.width;
  Components out;
  out.labels.assign(static_cast<size_t>(h * w), 0);
  std::vector<int64_t> stack;
  for (int64_t start = 0; start < h * w; ++start) {
    if (!mask.values[start] || out.labels[start] != 0) continue;
    ++out.count;
    stack.push_back(start);
    out.labels[start] = out.count;
    while (!stack.empty()) {
      const int64_t p = stack.back();
      stack.pop_back();
      const int64_t r = p / w, c = p % w;
      for (int64_t dr = -1; dr <= 1; ++dr) {
        for (int64_t dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const int64_t rr = r + dr, cc = c + dc;
          if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
          const int64_t q = rr * w + cc;
          if (mask.values[q] && out.labels[q] == 0) {
            out.labels[q] = out.count;
            stack.push_back(q);
          }
        }
      }
    }
  }
  return out;
}

inline MaskImage dilate(const MaskImage& mask, int64_t radius) {
  const int64_t h = mask.height, w = mask.width;
  MaskImage out(w, h);
  for (int64_t r = 0; r < h; ++r) {
    for (int64_t c = 0; c < w; ++c) {
      if (!mask.values[r * w + c]) continue;
      for (int64_t dr = -radius; dr <= radius; ++dr) {
        for (int64_t dc = -radius; dc <= radius; ++dc) {
          if (dr * dr + dc * dc > radius * radius) continue;
          const int64_t rr = r + dr, cc = c + dc;
          if (rr >= 0 && rr < h && cc >= 0 && cc < w) out.values[rr * w + cc] = 1;
        }
      }
    }
  }
  return out;
}

namespace detail {

// Irregular connected blob: a clamped 4-neighbour random walk whose visited
// set is dilated by a small disk.
inline MaskImage random_walk_blob(Rng& rng, int64_t h, int64_t w, int64_t r0, int64_t c0,
                                  int64_t steps, int64_t dilate_r) {
  MaskImage visited(w, h);
  int64_t r = r0, c = c0;
  visited.values[r * w + c] = 1;
  for (int64_t s = 0; s < steps; ++s) {
    switch (rng.next_below(4)) {
      case 0: r += 1; break;
      case 1: r -= 1; break;
      case 2: c += 1; break;
      default: c -= 1; break;
    }
    r = std::clamp<int64_t>(r, 1, h - 2);
    c = std::clamp<int64_t>(c, 1, w - 2);
    visited.values[r * w + c] = 1;
  }
  return dilate(visited, dilate_r);
}

inline void stamp_disk(MaskImage& mask, double cy, double cx, double radius) {
  const int64_t h = mask.height, w = mask.width;
  const int64_t ir = static_cast<int64_t>(radius) + 1;
  const int64_t rc = static_cast<int64_t>(cy), cc = static_cast<int64_t>(cx);
  for (int64_t dr = -ir; dr <= ir; ++dr) {
    for (int64_t dc = -ir; dc <= ir; ++dc) {
      const double dy = static_cast<double>(rc + dr) - cy;
      const double dx = static_cast<double>(cc + dc) - cx;
      if (dy * dy + dx * dx > radius * radius) continue;
      const int64_t rr = rc + dr, ccx = cc + dc;
      if (rr >= 0 && rr < h && ccx >= 0 && ccx < w) mask.values[rr * w + ccx] = 1;
    }
  }
}

}  // namespace detail

// Procedural scene: pasture background, optional river (smooth swept
// polyline, dark VIS / near-zero NIR), optional cloud (bright soft-edged
// blob, high NIR), and burn scars (random-walk blobs, dark red-brown VIS,
// distinctly low NIR) painted last. The oracle is exactly the scar mask and
// labels start equal to it. The rng draw order is fixed, so a fixed seed
// reproduces the scene byte for byte.
inline SceneSample synth_scene(const SynthConfig& cfg, Rng& rng) {
  cfg.validate();
  const int64_t cs = cfg.canvas;
  const int64_t plane = cs * cs;

  SceneSample s;
  s.vis = ImageU8(cs, cs, 3);
  s.nir = GrayImage(cs, cs, 8);
  s.labels = MaskImage(cs, cs);
  s.oracle = MaskImage(cs, cs);
  s.river_mask = MaskImage(cs, cs);
  s.cloud_mask = MaskImage(cs, cs);

  std::vector<double> vr(plane), vg(plane), vb(plane), nir(plane);

  // Pasture base.
  const double pr = 88.0 + rng.uniform(-12, 12);
  const double pg = 135.0 + rng.uniform(-12, 12);
  const double pb = 62.0 + rng.uniform(-10, 10);
  const double pn = 150.0 + rng.uniform(-15, 15);
  std::fill(vr.begin(), vr.end(), pr);
  std::fill(vg.begin(), vg.end(), pg);
  std::fill(vb.begin(), vb.end(), pb);
  std::fill(nir.begin(), nir.end(), pn);

  // River: piecewise-linear path across the canvas swept with varying width.
  if (rng.next_double() < cfg.river_prob) {
    const bool horizontal = rng.next_double() < 0.5;
    const int n_ctrl = 5;
    std::vector<double> px(n_ctrl), py(n_ctrl);
    for (int i = 0; i < n_ctrl; ++i) {
      const double along = static_cast<double>(i) / (n_ctrl - 1) * (cs - 1);
      const double across = rng.uniform(0.15 * cs, 0.85 * cs);
      px[i] = horizontal ? along : across;
      py[i] = horizontal ? across : along;
    }
    const double base_w = rng.uniform(1.5, 3.5);
    const double wobble = rng.uniform(0.3, 0.8);
    const double phase = rng.uniform(0.0, 6.28318);
    MaskImage& river = *s.river_mask;
    for (int i = 0; i + 1 < n_ctrl; ++i) {
      const double seg = std::hypot(px[i + 1] - px[i], py[i + 1] - py[i]);
      const int n_steps = std::max(2, static_cast<int>(seg * 2));
      for (int t = 0; t <= n_steps; ++t) {
        const double a = static_cast<double>(t) / n_steps;
        const double x = px[i] + a * (px[i + 1] - px[i]);
        const double y = py[i] + a * (py[i + 1] - py[i]);
        const double g = (i + a) / (n_ctrl - 1);
        const double width = base_w * (1.0 + wobble * std::sin(6.28318 * 2.0 * g + phase));
        detail::stamp_disk(river, y, x, width);
      }
    }
    const double rr = 36.0 + rng.uniform(-6, 6);
    const double rg = 46.0 + rng.uniform(-6, 6);
    const double rb = 58.0 + rng.uniform(-6, 6);
    const double rn = 5.0 + rng.uniform(0, 5);
    for (int64_t i = 0; i < plane; ++i) {
      if (!river.values[i]) continue;
      vr[i] = rr;
      vg[i] = rg;
      vb[i] = rb;
      nir[i] = rn;
    }
  }

  // Cloud: gaussian-falloff blend toward near-white, high NIR.
  if (rng.next_double() < cfg.cloud_prob) {
    const double cy = rng.uniform(0.2 * cs, 0.8 * cs);
    const double cx = rng.uniform(0.2 * cs, 0.8 * cs);
    const double radius = rng.uniform(cs / 8.0, cs / 4.0);
    MaskImage& cloud = *s.cloud_mask;
    for (int64_t r = 0; r < cs; ++r) {
      for (int64_t c = 0; c < cs; ++c) {
        const double d2 = (r - cy) * (r - cy) + (c - cx) * (c - cx);
        const double alpha = std::exp(-1.5 * d2 / (radius * radius));
        if (alpha < 0.03) continue;
        const int64_t i = r * cs + c;
        vr[i] += alpha * (244.0 - vr[i]);
        vg[i] += alpha * (244.0 - vg[i]);
        vb[i] += alpha * (248.0 - vb[i]);
        nir[i] += alpha * (225.0 - nir[i]);
        if (alpha > 0.35) cloud.values[i] = 1;
      }
    }
  }

  // Burn scars, painted last (fully opaque, so the oracle is exact).
  const int64_t n_scars = rng.uniform_int(cfg.scar_count_range.lo, cfg.scar_count_range.hi);
  MaskImage& oracle = *s.oracle;
  for (int64_t k = 0; k < n_scars; ++k) {
    const int64_t r0 = rng.uniform_int(4, cs - 5);
    const int64_t c0 = rng.uniform_int(4, cs - 5);
    const int64_t steps = rng.uniform_int(cfg.scar_size_range.lo, cfg.scar_size_range.hi);
    const int64_t dil = rng.uniform_int(1, 2);
    const MaskImage blob = detail::random_walk_blob(rng, cs, cs, r0, c0, steps, dil);
    const double sr = 74.0 + rng.uniform(-10, 10);
    const double sg = 48.0 + rng.uniform(-8, 8);
    const double sb = 38.0 + rng.uniform(-8, 8);
    const double sn = 28.0 + rng.uniform(-8, 8);
    for (int64_t i = 0; i < plane; ++i) {
      if (!blob.values[i]) continue;
      oracle.values[i] = 1;
      vr[i] = sr;
      vg[i] = sg;
      vb[i] = sb;
      nir[i] = sn;
    }
  }
  // Confuser masks never claim scar pixels.
  for (int64_t i = 0; i < plane; ++i) {
    if (oracle.values[i]) {
      s.river_mask->values[i] = 0;
      s.cloud_mask->values[i] = 0;
    }
  }

  // Per-pixel sensor noise, then quantize.
  auto quantize = [](double v) {
    return static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
  };
  for (int64_t i = 0; i < plane; ++i) {
    s.vis.pixels[3 * i + 0] = quantize(vr[i] + rng.uniform(-8, 8));
    s.vis.pixels[3 * i + 1] = quantize(vg[i] + rng.uniform(-8, 8));
    s.vis.pixels[3 * i + 2] = quantize(vb[i] + rng.uniform(-8, 8));
    s.nir.pixels[i] = quantize(nir[i] + rng.uniform(-6, 6));
  }

  s.labels = *s.oracle;
  return s;
}

// Removes floor(f * n_components) connected components of the oracle from the
// labels (chosen uniformly) and injects k spurious blob components placed at
// least 3 px away from any oracle-positive pixel. The oracle is untouched.
inline SceneSample corrupt_labels(const SceneSample& sample, double f, int64_t k, Rng& rng) {
  if (f < 0.0 || f > 1.0)
    throw ConfigError("corrupt_labels: drop fraction must be in [0,1]");
  if (!sample.oracle) throw ContractError("corrupt_labels: sample has no oracle mask");

  SceneSample out = sample;
  const MaskImage& oracle = *sample.oracle;
  out.labels = oracle;

  const Components comps = label_components(oracle);
  const int64_t n_drop = static_cast<int64_t>(std::floor(f * comps.count));
  if (n_drop > 0) {
    std::vector<int32_t> ids(comps.count);
    for (int32_t i = 0; i < comps.count; ++i) ids[i] = i + 1;
    for (size_t i = ids.size() - 1; i > 0; --i) {
      const size_t j = static_cast<size_t>(rng.next_below(i + 1));
      std::swap(ids[i], ids[j]);
    }
    std::vector<uint8_t> drop(comps.count + 1, 0);
    for (int64_t i = 0; i < n_drop; ++i) drop[ids[static_cast<size_t>(i)]] = 1;
    for (size_t i = 0; i < out.labels.values.size(); ++i)
      if (comps.labels[i] && drop[comps.labels[i]]) out.labels.values[i] = 0;
  }

  if (k > 0) {
    const MaskImage forbidden = dilate(oracle, 3);
    const int64_t h = oracle.height, w = oracle.width;
    for (int64_t b = 0; b < k; ++b) {
      bool placed = false;
      for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
        const int64_t r0 = rng.uniform_int(4, h - 5);
        const int64_t c0 = rng.uniform_int(4, w - 5);
        const int64_t steps = rng.uniform_int(20, 60);
        const MaskImage blob = detail::random_walk_blob(rng, h, w, r0, c0, steps, 1);
        bool ok = true;
        for (size_t i = 0; i < blob.values.size() && ok; ++i)
          if (blob.values[i] && forbidden.values[i]) ok = false;
        if (!ok) continue;
        for (size_t i = 0; i < blob.values.size(); ++i)
          if (blob.values[i]) out.labels.values[i] = 1;
        placed = true;
      }
      if (!placed)
        throw ContractError("corrupt_labels: could not place false component " +
                            std::to_string(b) + " after 1000 attempts");
    }
  }
  return out;
}

// Deterministic per-scene generator stream.
inline Rng scene_rng(uint64_t seed, int64_t scene_index) {
  return Rng(seed).split("synth").split("scene-" + std::to_string(scene_index));
}

// Full synthetic dataset: generate, then corrupt labels per config.
inline std::vector<SceneSample> synth_dataset(const SynthConfig& cfg) {
  cfg.validate();
  std::vector<SceneSample> scenes;
  scenes.reserve(static_cast<size_t>(cfg.n_scenes));
  char name[32];
  for (int64_t i = 0; i < cfg.n_scenes; ++i) {
    Rng rng = scene_rng(cfg.seed, i);
    SceneSample s = synth_scene(cfg, rng);
    std::snprintf(name, sizeof(name), "scene_%04lld", static_cast<long long>(i));
    s.scene_id = name;
    if (cfg.label_drop_fraction > 0.0 || cfg.false_label_count > 0)
      s = corrupt_labels(s, cfg.label_drop_fraction, cfg.false_label_count, rng);
    scenes.push_back(std::move(s));
  }
  return scenes;
}

}  // namespace amazonnet
