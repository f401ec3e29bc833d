#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "amazonnet/metrics.hpp"
#include "amazonnet/predict.hpp"
#include "amazonnet/synth.hpp"
#include "amazonnet/train.hpp"

namespace amazonnet {

struct SceneRecovery {
  std::string scene_id;
  bool in_val = false;
  double model_iou = 0.0;   // thresholded prediction vs oracle
  double labels_iou = 0.0;  // corrupted training labels vs oracle
  int64_t dropped_total = 0, dropped_hit = 0;
  int64_t false_total = 0, false_rejected = 0;
  int64_t river_px = 0, river_fp = 0;
  int64_t cloud_px = 0, cloud_fp = 0;
};

// Aggregates are pooled over pixel/component counts across all scenes.
// dropped_component_recall: fraction of oracle components absent from the
// training labels that the model recovers at component IoU >= 0.3.
// false_label_rejection_rate: fraction of injected spurious components with
// mean predicted probability < 0.5. Confuser false-positive rates are the
// fraction of river/cloud pixels predicted positive (reported only when such
// pixels exist in the fixture).
struct RecoveryReport {
  std::vector<SceneRecovery> scenes;
  double model_iou = 0.0;
  double labels_iou = 0.0;
  double dropped_component_recall = 1.0;
  double false_label_rejection_rate = 1.0;
  std::optional<double> river_fp_rate;
  std::optional<double> cloud_fp_rate;
  TrainHistory history;

  std::string to_kv() const {
    char buf[96];
    std::string out;
    auto kv = [&](const char* key, double v) {
      std::snprintf(buf, sizeof(buf), "%s=%.6f\n", key, v);
      out += buf;
    };
    kv("model_iou", model_iou);
    kv("labels_iou", labels_iou);
    kv("dropped_component_recall", dropped_component_recall);
    kv("false_label_rejection_rate", false_label_rejection_rate);
    if (river_fp_rate) kv("river_fp_rate", *river_fp_rate);
    if (cloud_fp_rate) kv("cloud_fp_rate", *cloud_fp_rate);
    return out;
  }

  std::string to_csv() const {
    std::string out =
        "scene_id,split,model_iou,labels_iou,dropped_total,dropped_hit,false_total,"
        "false_rejected,river_px,river_fp,cloud_px,cloud_fp\n";
    char buf[256];
    for (const auto& s : scenes) {
      std::snprintf(buf, sizeof(buf), "%s,%s,%.6f,%.6f,%lld,%lld,%lld,%lld,%lld,%lld,%lld,%lld\n",
                    s.scene_id.c_str(), s.in_val ? "val" : "train", s.model_iou, s.labels_iou,
                    static_cast<long long>(s.dropped_total), static_cast<long long>(s.dropped_hit),
                    static_cast<long long>(s.false_total),
                    static_cast<long long>(s.false_rejected),
                    static_cast<long long>(s.river_px), static_cast<long long>(s.river_fp),
                    static_cast<long long>(s.cloud_px), static_cast<long long>(s.cloud_fp));
      out += buf;
    }
    return out;
  }
};

namespace detail {

// Component-level hit test: the union of predicted components touching the
// target component must overlap it at IoU >= 0.3.
inline bool component_recovered(const MaskImage& pred, const Components& pred_comps,
                                const std::vector<size_t>& comp_pixels) {
  std::vector<int32_t> touching;
  for (size_t px : comp_pixels) {
    const int32_t id = pred_comps.labels[px];
    if (id != 0) touching.push_back(id);
  }
  if (touching.empty()) return false;
  std::sort(touching.begin(), touching.end());
  touching.erase(std::unique(touching.begin(), touching.end()), touching.end());

  std::vector<uint8_t> in_union(pred_comps.count + 1, 0);
  for (int32_t id : touching) in_union[id] = 1;
  std::vector<uint8_t> in_comp(pred.values.size(), 0);
  for (size_t px : comp_pixels) in_comp[px] = 1;

  int64_t inter = 0, uni = 0;
  for (size_t i = 0; i < pred.values.size(); ++i) {
    const bool u = pred_comps.labels[i] != 0 && in_union[pred_comps.labels[i]];
    const bool c = in_comp[i];
    if (u && c) ++inter;
    if (u || c) ++uni;
  }
  return uni > 0 && static_cast<double>(inter) / static_cast<double>(uni) >= 0.3;
}

}  // namespace detail

// Scores one scene's prediction against its oracle and noisy labels.
inline SceneRecovery score_scene(const SceneSample& scene, const std::vector<float>& prob,
                                 double tau = 0.5) {
  if (!scene.oracle) throw ContractError("score_scene: sample has no oracle mask");
  SceneRecovery r;
  r.scene_id = scene.scene_id;
  const MaskImage& oracle = *scene.oracle;
  const MaskImage pred = threshold(prob, scene.width(), scene.height(), tau);

  r.model_iou = compute_metrics(pred, oracle).iou;
  r.labels_iou = compute_metrics(scene.labels, oracle).iou;

  // Oracle components with no labelled pixel are the dropped ones.
  const Components oracle_comps = label_components(oracle);
  const Components pred_comps = label_components(pred);
  std::vector<std::vector<size_t>> pixels_of(static_cast<size_t>(oracle_comps.count) + 1);
  for (size_t i = 0; i < oracle.values.size(); ++i)
    if (oracle_comps.labels[i]) pixels_of[oracle_comps.labels[i]].push_back(i);
  for (int32_t id = 1; id <= oracle_comps.count; ++id) {
    bool labelled = false;
    for (size_t px : pixels_of[id])
      if (scene.labels.values[px]) {
        labelled = true;
        break;
      }
    if (labelled) continue;
    ++r.dropped_total;
    if (detail::component_recovered(pred, pred_comps, pixels_of[id])) ++r.dropped_hit;
  }

  // Injected components are exactly labels minus oracle (placement keeps a
  // margin, so there is no overlap to disambiguate).
  MaskImage injected(oracle.width, oracle.height);
  for (size_t i = 0; i < injected.values.size(); ++i)
    injected.values[i] = scene.labels.values[i] && !oracle.values[i] ? 1 : 0;
  const Components false_comps = label_components(injected);
  if (false_comps.count > 0) {
    std::vector<double> prob_sum(static_cast<size_t>(false_comps.count) + 1, 0.0);
    std::vector<int64_t> prob_n(static_cast<size_t>(false_comps.count) + 1, 0);
    for (size_t i = 0; i < injected.values.size(); ++i) {
      const int32_t id = false_comps.labels[i];
      if (id) {
        prob_sum[id] += prob[i];
        prob_n[id] += 1;
      }
    }
    r.false_total = false_comps.count;
    for (int32_t id = 1; id <= false_comps.count; ++id)
      if (prob_sum[id] / prob_n[id] < 0.5) ++r.false_rejected;
  }

  if (scene.river_mask) {
    for (size_t i = 0; i < scene.river_mask->values.size(); ++i)
      if (scene.river_mask->values[i]) {
        ++r.river_px;
        if (pred.values[i]) ++r.river_fp;
      }
  }
  if (scene.cloud_mask) {
    for (size_t i = 0; i < scene.cloud_mask->values.size(); ++i)
      if (scene.cloud_mask->values[i]) {
        ++r.cloud_px;
        if (pred.values[i]) ++r.cloud_fp;
      }
  }
  return r;
}

// Fig.-style side-by-side panel: vis | nir | noisy labels | prediction |
// binary map, separated by white gutters.
inline ImageU8 compose_panels(const SceneSample& scene, const std::vector<float>& prob,
                              double tau = 0.5) {
  const int64_t h = scene.height(), w = scene.width();
  const int64_t gap = 2;
  const int64_t total_w = 5 * w + 4 * gap;
  ImageU8 panel(total_w, h, 3);
  std::fill(panel.pixels.begin(), panel.pixels.end(), 255);

  auto put_rgb = [&](int64_t panel_idx, auto&& pixel_fn) {
    const int64_t x0 = panel_idx * (w + gap);
    for (int64_t r = 0; r < h; ++r)
      for (int64_t c = 0; c < w; ++c) {
        const auto [pr, pg, pb] = pixel_fn(r * w + c);
        uint8_t* dst = panel.pixels.data() + ((r * total_w) + x0 + c) * 3;
        dst[0] = pr;
        dst[1] = pg;
        dst[2] = pb;
      }
  };
  put_rgb(0, [&](int64_t i) {
    return std::tuple(scene.vis.pixels[3 * i], scene.vis.pixels[3 * i + 1],
                      scene.vis.pixels[3 * i + 2]);
  });
  const double nir_scale = 255.0 / static_cast<double>(scene.nir.max_value());
  put_rgb(1, [&](int64_t i) {
    const uint8_t v = static_cast<uint8_t>(scene.nir.pixels[i] * nir_scale);
    return std::tuple(v, v, v);
  });
  put_rgb(2, [&](int64_t i) {
    const uint8_t v = scene.labels.values[i] ? 255 : 0;
    return std::tuple(v, v, v);
  });
  put_rgb(3, [&](int64_t i) {
    const uint8_t v = static_cast<uint8_t>(std::lround(std::clamp(prob[i], 0.f, 1.f) * 255.f));
    return std::tuple(v, v, v);
  });
  const MaskImage binary = threshold(prob, w, h, tau);
  put_rgb(4, [&](int64_t i) {
    const uint8_t v = binary.values[i] ? 255 : 0;
    return std::tuple(v, v, v);
  });
  return panel;
}

struct RecoveryOptions {
  std::filesystem::path out_dir;  // report.csv, report.txt, panels, history
  bool write_files = false;
  bool quiet = false;
  int64_t max_panels = 8;
  double val_fraction = 0.2;
};

// Trains on corrupted labels and evaluates against the clean oracles:
// generates the synthetic dataset, splits at scene granularity, fits the
// model with the standard protocol, then scores every scene.
template <typename S>
RecoveryReport recovery_experiment(const SynthConfig& synth_cfg, const UNetConfig& unet_cfg,
                                   const TrainConfig& train_cfg,
                                   const RecoveryOptions& opts = {}) {
  const std::vector<SceneSample> scenes = synth_dataset(synth_cfg);
  if (scenes.size() < 2)
    throw ContractError("recovery_experiment: need at least 2 scenes");
  for (const auto& s : scenes)
    if (!s.oracle) throw ContractError("recovery_experiment: scene lacks oracle");

  const SplitResult split = split_dataset(scenes.size(), opts.val_fraction, train_cfg.seed);
  std::vector<TrainSample<S>> train_set, val_set;
  for (size_t i : split.train) train_set.push_back(to_train_sample<S>(scenes[i]));
  for (size_t i : split.val) val_set.push_back(to_train_sample<S>(scenes[i]));

  auto model = build_unet<S>(unet_cfg, Rng(train_cfg.seed));
  FitOptions fit_opts;
  fit_opts.quiet = opts.quiet;
  fit_opts.write_files = opts.write_files;
  if (opts.write_files) fit_opts.out_dir = opts.out_dir / "train";
  FitResult fit_result = fit(model, train_set, val_set, train_cfg, fit_opts);

  RecoveryReport report;
  report.history = fit_result.history;
  std::vector<uint8_t> is_val(scenes.size(), 0);
  for (size_t i : split.val) is_val[i] = 1;

  int64_t m_tp = 0, m_fp = 0, m_fn = 0;
  int64_t l_tp = 0, l_fp = 0, l_fn = 0;
  int64_t dropped_total = 0, dropped_hit = 0, false_total = 0, false_rejected = 0;
  int64_t river_px = 0, river_fp = 0, cloud_px = 0, cloud_fp = 0;
  const int64_t tile = std::min<int64_t>(synth_cfg.canvas, 256);
  for (size_t i = 0; i < scenes.size(); ++i) {
    const auto prob = predict_scene(model, scenes[i], tile, tile);
    SceneRecovery r = score_scene(scenes[i], prob);
    r.in_val = is_val[i] != 0;

    const MaskImage pred = threshold(prob, scenes[i].width(), scenes[i].height());
    const auto pm = compute_metrics(pred, *scenes[i].oracle);
    m_tp += pm.tp;
    m_fp += pm.fp;
    m_fn += pm.fn;
    const auto lm = compute_metrics(scenes[i].labels, *scenes[i].oracle);
    l_tp += lm.tp;
    l_fp += lm.fp;
    l_fn += lm.fn;
    dropped_total += r.dropped_total;
    dropped_hit += r.dropped_hit;
    false_total += r.false_total;
    false_rejected += r.false_rejected;
    river_px += r.river_px;
    river_fp += r.river_fp;
    cloud_px += r.cloud_px;
    cloud_fp += r.cloud_fp;

    if (opts.write_files && static_cast<int64_t>(i) < opts.max_panels) {
      std::filesystem::create_directories(opts.out_dir / "panels");
      write_png(opts.out_dir / "panels" / (scenes[i].scene_id + ".png"),
                compose_panels(scenes[i], prob));
    }
    report.scenes.push_back(std::move(r));
  }

  report.model_iou = (m_tp + m_fp + m_fn) > 0
                         ? static_cast<double>(m_tp) / (m_tp + m_fp + m_fn)
                         : 1.0;
  report.labels_iou = (l_tp + l_fp + l_fn) > 0
                          ? static_cast<double>(l_tp) / (l_tp + l_fp + l_fn)
                          : 1.0;
  report.dropped_component_recall =
      dropped_total > 0 ? static_cast<double>(dropped_hit) / dropped_total : 1.0;
  report.false_label_rejection_rate =
      false_total > 0 ? static_cast<double>(false_rejected) / false_total : 1.0;
  if (river_px > 0) report.river_fp_rate = static_cast<double>(river_fp) / river_px;
  if (cloud_px > 0) report.cloud_fp_rate = static_cast<double>(cloud_fp) / cloud_px;

  if (opts.write_files) {
    std::filesystem::create_directories(opts.out_dir);
    std::FILE* f = std::fopen((opts.out_dir / "report.csv").string().c_str(), "wb");
    if (f) {
      const std::string csv = report.to_csv();
      std::fwrite(csv.data(), 1, csv.size(), f);
      std::fclose(f);
    }
    f = std::fopen((opts.out_dir / "report.txt").string().c_str(), "wb");
    if (f) {
      const std::string kv = report.to_kv();
      std::fwrite(kv.data(), 1, kv.size(), f);
      std::fclose(f);
    }
  }
  if (!opts.quiet) std::fputs(report.to_kv().c_str(), stdout);
  return report;
}

}  // namespace amazonnet
