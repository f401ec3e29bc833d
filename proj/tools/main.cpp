// Command-line front end: synth / train / predict / eval / recover.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "amazonnet/amazonnet.hpp"
#include "amazonnet/config_io.hpp"

namespace fs = std::filesystem;
using namespace amazonnet;

namespace {

struct GlobalArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<uint64_t> seed;
  bool quiet = false;
};

std::map<std::string, std::string> load_config(const GlobalArgs& g) {
  if (g.config_path.empty()) return {};
  return parse_kv_file(g.config_path);
}

void write_manifest(const fs::path& root, const std::vector<SceneSample>& scenes) {
  std::FILE* f = std::fopen((root / "manifest.csv").string().c_str(), "wb");
  if (!f) throw IoError("cannot write manifest: " + (root / "manifest.csv").string());
  std::fputs("scene_id,split,biome\n", f);
  for (const auto& s : scenes) std::fprintf(f, "%s,,synthetic\n", s.scene_id.c_str());
  std::fclose(f);
}

int run_synth(const GlobalArgs& g) {
  SynthConfig cfg;
  ConfigBinder binder;
  bind_synth_config(binder, cfg);
  binder.apply(load_config(g));
  if (g.seed) cfg.seed = *g.seed;
  cfg.validate();

  const fs::path root = g.out_dir.empty() ? "synth_out" : g.out_dir;
  const auto scenes = synth_dataset(cfg);
  for (const auto& s : scenes) {
    const fs::path dir = root / "scenes" / s.scene_id;
    fs::create_directories(dir);
    write_png(dir / "vis.png", s.vis);
    write_png(dir / "nir.png", s.nir);
    write_png(dir / "mask.png", s.labels);
    if (s.oracle) write_png(dir / "oracle.png", *s.oracle);
  }
  write_manifest(root, scenes);
  if (!g.quiet)
    std::printf("wrote %zu scenes under %s\n", scenes.size(), root.string().c_str());
  return 0;
}

// Optional manifest split hints: scenes tagged train/val are pinned, the rest
// are split by the seeded scene-level rule.
void read_manifest_hints(const fs::path& root, const std::vector<std::string>& ids,
                         std::map<std::string, std::string>& hints) {
  const fs::path manifest = root / "manifest.csv";
  if (!fs::exists(manifest)) return;
  std::FILE* f = std::fopen(manifest.string().c_str(), "rb");
  if (!f) return;
  char line[512];
  bool header = true;
  while (std::fgets(line, sizeof(line), f)) {
    if (header) {
      header = false;
      continue;
    }
    std::string s(line);
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    const auto c1 = s.find(',');
    if (c1 == std::string::npos) continue;
    const auto c2 = s.find(',', c1 + 1);
    const std::string id = s.substr(0, c1);
    const std::string split =
        c2 == std::string::npos ? s.substr(c1 + 1) : s.substr(c1 + 1, c2 - c1 - 1);
    if (split == "train" || split == "val") hints[id] = split;
  }
  std::fclose(f);
  (void)ids;
}

int run_train(const GlobalArgs& g, const std::string& dataset_root,
              const std::string& resume_path) {
  TrainConfig tcfg;
  UNetConfig ucfg;
  ucfg.depth = 3;
  ucfg.base_width = 8;
  double val_fraction = 0.2;
  int64_t tile = 256, tile_stride = 256;

  ConfigBinder binder;
  bind_train_config(binder, tcfg);
  bind_unet_config(binder, ucfg);
  binder.bind_double("val_fraction", &val_fraction);
  binder.bind_int("tile", &tile);
  binder.bind_int("tile_stride", &tile_stride);
  binder.apply(load_config(g));
  if (g.seed) tcfg.seed = *g.seed;
  tcfg.validate();

  const fs::path root = dataset_root;
  const fs::path scenes_dir = root / "scenes";
  if (!fs::exists(scenes_dir))
    throw IoError("dataset root has no scenes directory: " + scenes_dir.string());

  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(scenes_dir))
    if (e.is_directory()) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  if (dirs.size() < 2) throw IoError("need at least 2 scenes under " + scenes_dir.string());

  std::vector<SceneSample> scenes;
  std::vector<std::string> ids;
  for (const auto& d : dirs) {
    scenes.push_back(load_scene(d));
    ids.push_back(scenes.back().scene_id);
  }

  std::map<std::string, std::string> hints;
  read_manifest_hints(root, ids, hints);
  std::vector<size_t> unhinted;
  std::vector<uint8_t> to_val(scenes.size(), 0), pinned(scenes.size(), 0);
  for (size_t i = 0; i < scenes.size(); ++i) {
    const auto it = hints.find(ids[i]);
    if (it == hints.end()) {
      unhinted.push_back(i);
    } else {
      pinned[i] = 1;
      to_val[i] = it->second == "val";
    }
  }
  if (unhinted.size() >= 2) {
    const auto split = split_dataset(unhinted.size(), val_fraction, tcfg.seed);
    for (size_t j : split.val) to_val[unhinted[j]] = 1;
  } else if (unhinted.size() == 1) {
    to_val[unhinted[0]] = 0;
  }

  std::vector<TrainSample<float>> train_set, val_set;
  for (size_t i = 0; i < scenes.size(); ++i) {
    for (const auto& t : tile_scene(scenes[i], tile, tile_stride)) {
      auto sample = to_train_sample<float>(t.raster, t.row_off, t.col_off);
      (to_val[i] ? val_set : train_set).push_back(std::move(sample));
    }
  }
  if (train_set.empty() || val_set.empty())
    throw IoError("train/val split is empty; check manifest hints and val_fraction");

  FitOptions opts;
  opts.out_dir = g.out_dir.empty() ? "train_out" : g.out_dir;
  opts.quiet = g.quiet;

  if (!resume_path.empty()) {
    auto bundle = load_checkpoint<float>(resume_path);
    if (!bundle.adam || !bundle.trainer)
      throw FormatError("checkpoint has no optimizer/trainer state to resume from: " +
                        resume_path);
    fit(bundle.model, train_set, val_set, tcfg, opts, &*bundle.adam, &bundle.history,
        &*bundle.trainer);
  } else {
    auto model = build_unet<float>(ucfg, Rng(tcfg.seed));
    fit(model, train_set, val_set, tcfg, opts);
  }
  return 0;
}

int run_predict(const GlobalArgs& g, const std::string& checkpoint_path,
                const std::string& scene_dir, int64_t tile, int64_t stride, double tau) {
  auto bundle = load_checkpoint<float>(checkpoint_path);
  const SceneSample sample = load_scene(scene_dir);
  const auto prob = predict_scene(bundle.model, sample, tile, stride);
  const fs::path out = g.out_dir.empty() ? "predict_out" : g.out_dir;
  write_prediction(out, sample.scene_id, prob, sample.width(), sample.height(), tau);
  if (!g.quiet)
    std::printf("wrote %s/{%s_prob.png,%s_mask.png}\n", out.string().c_str(),
                sample.scene_id.c_str(), sample.scene_id.c_str());
  return 0;
}

int run_eval(const GlobalArgs& g, const std::string& pred_dir, const std::string& ref_dir) {
  std::vector<fs::path> refs;
  for (const auto& e : fs::directory_iterator(ref_dir))
    if (e.path().extension() == ".png") refs.push_back(e.path());
  std::sort(refs.begin(), refs.end());
  if (refs.empty()) throw IoError("no reference masks (*.png) in " + ref_dir);

  int64_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::string csv = "file,pixel_accuracy,precision,recall,f1,iou\n";
  char buf[256];
  for (const auto& ref_path : refs) {
    const fs::path pred_path = fs::path(pred_dir) / ref_path.filename();
    if (!fs::exists(pred_path))
      throw IoError("missing prediction for " + ref_path.filename().string() + " in " +
                    pred_dir);
    const MaskImage ref = binarize_mask(read_png(ref_path), ref_path.string());
    const MaskImage pred = binarize_mask(read_png(pred_path), pred_path.string());
    const MetricsReport m = compute_metrics(pred, ref);
    tp += m.tp;
    fp += m.fp;
    tn += m.tn;
    fn += m.fn;
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                  ref_path.filename().string().c_str(), m.pixel_accuracy, m.precision,
                  m.recall, m.f1, m.iou);
    csv += buf;
  }
  const MetricsReport total = metrics_from_counts(tp, fp, tn, fn);
  std::printf("pixel_accuracy=%.6f\n", total.pixel_accuracy);
  std::printf("precision=%.6f\n", total.precision);
  std::printf("recall=%.6f\n", total.recall);
  std::printf("f1=%.6f\n", total.f1);
  std::printf("iou=%.6f\n", total.iou);
  std::printf("tp=%lld\nfp=%lld\ntn=%lld\nfn=%lld\n", static_cast<long long>(tp),
              static_cast<long long>(fp), static_cast<long long>(tn),
              static_cast<long long>(fn));
  if (!g.out_dir.empty()) {
    fs::create_directories(g.out_dir);
    std::snprintf(buf, sizeof(buf), "TOTAL,%.6f,%.6f,%.6f,%.6f,%.6f\n", total.pixel_accuracy,
                  total.precision, total.recall, total.f1, total.iou);
    csv += buf;
    std::FILE* f = std::fopen((fs::path(g.out_dir) / "metrics.csv").string().c_str(), "wb");
    if (!f) throw IoError("cannot write metrics.csv under " + g.out_dir);
    std::fwrite(csv.data(), 1, csv.size(), f);
    std::fclose(f);
  }
  return 0;
}

int run_recover(const GlobalArgs& g) {
  SynthConfig scfg;
  scfg.label_drop_fraction = 0.3;
  scfg.false_label_count = 2;
  TrainConfig tcfg;
  UNetConfig ucfg;
  ucfg.depth = 3;
  ucfg.base_width = 8;
  double val_fraction = 0.2;

  ConfigBinder binder;
  bind_synth_config(binder, scfg);
  bind_train_config(binder, tcfg);
  bind_unet_config(binder, ucfg);
  binder.bind_double("val_fraction", &val_fraction);
  binder.apply(load_config(g));
  if (g.seed) {
    scfg.seed = *g.seed;
    tcfg.seed = *g.seed;
  }
  scfg.validate();
  tcfg.validate();

  RecoveryOptions opts;
  opts.out_dir = g.out_dir.empty() ? "recover_out" : g.out_dir;
  opts.write_files = true;
  opts.quiet = g.quiet;
  opts.val_fraction = val_fraction;
  recovery_experiment<float>(scfg, ucfg, tcfg, opts);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UNet burn-scar segmentation over stacked RGB+NIR rasters"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalArgs g;
  app.add_option("--config", g.config_path, "flat key=value config file");
  app.add_option("--out", g.out_dir, "output directory");
  uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "seed override");
  app.add_flag("--quiet", g.quiet, "suppress progress output");

  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset tree");

  auto* train_cmd = app.add_subcommand("train", "train on a dataset root");
  std::string dataset_root;
  std::string resume_path;
  train_cmd->add_option("root", dataset_root, "dataset root directory")->required();
  train_cmd->add_option("--resume", resume_path, "checkpoint to resume from");

  auto* predict_cmd = app.add_subcommand("predict", "predict burn-scar maps for a scene");
  std::string checkpoint_path, scene_dir;
  int64_t tile = 256, stride = 128;
  double tau = 0.5;
  predict_cmd->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
  predict_cmd->add_option("scene", scene_dir, "scene directory")->required();
  predict_cmd->add_option("--tile", tile, "tile size");
  predict_cmd->add_option("--stride", stride, "tile stride");
  predict_cmd->add_option("--tau", tau, "binarization threshold");

  auto* eval_cmd = app.add_subcommand("eval", "compare prediction masks against references");
  std::string pred_dir, ref_dir;
  eval_cmd->add_option("pred", pred_dir, "directory of predicted masks")->required();
  eval_cmd->add_option("ref", ref_dir, "directory of reference masks")->required();

  auto* recover_cmd =
      app.add_subcommand("recover", "noisy-label recovery experiment on synthetic data");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  if (seed_opt->count() > 0) g.seed = seed_value;

  try {
    if (synth_cmd->parsed()) return run_synth(g);
    if (train_cmd->parsed()) return run_train(g, dataset_root, resume_path);
    if (predict_cmd->parsed())
      return run_predict(g, checkpoint_path, scene_dir, tile, stride, tau);
    if (eval_cmd->parsed()) return run_eval(g, pred_dir, ref_dir);
    if (recover_cmd->parsed()) return run_recover(g);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
