#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "amazonnet/checkpoint.hpp"
#include "amazonnet/data.hpp"
#include "amazonnet/history.hpp"
#include "amazonnet/loss.hpp"
#include "amazonnet/optim.hpp"
#include "amazonnet/rng.hpp"
#include "amazonnet/unet.hpp"

namespace amazonnet {

struct TrainConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_adam = 1e-8;
  int64_t epochs = 50;
  int64_t batch_train = 8;
  int64_t batch_val = 4;
  int64_t early_stop_patience = 10;
  int64_t plateau_patience = 5;
  double plateau_factor = 0.1;
  double min_lr = 1e-7;
  double min_delta = 0.0;
  uint64_t seed = 0;

  void validate() const {
    if (lr <= 0) throw ConfigError("train config: lr must be > 0");
    if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1)
      throw ConfigError("train config: betas must be in [0,1)");
    if (batch_train < 1 || batch_val < 1)
      throw ConfigError("train config: batch sizes must be >= 1");
    if (early_stop_patience < 1 || plateau_patience < 1)
      throw ConfigError("train config: patience must be >= 1");
    if (epochs < 1) throw ConfigError("train config: epochs must be >= 1");
  }
};

struct EpochStats {
  double loss = 0.0;
  double pixel_acc = 0.0;
};

// ---- callbacks (pure replays over recorded history) ----

struct EarlyStopDecision {
  bool stop = false;
  int64_t best_epoch = 0;
};

// Stop once val_loss has failed to improve by more than min_delta for
// `patience` consecutive epochs. An epoch exactly matching the best counts
// as no improvement.
inline EarlyStopDecision early_stopping(const TrainHistory& history, int64_t patience,
                                        float min_delta = 0.f) {
  if (history.rows.empty())
    throw ContractError("early_stopping: needs at least one recorded epoch");
  EarlyStopDecision d;
  float best = std::numeric_limits<float>::infinity();
  int64_t wait = 0;
  for (const auto& row : history.rows) {
    if (row.val_loss < best - min_delta) {
      best = row.val_loss;
      d.best_epoch = row.epoch;
      wait = 0;
    } else {
      ++wait;
    }
  }
  d.stop = wait >= patience;
  return d;
}

// Learning rate in effect after the recorded epochs: each time val_loss is
// stagnant for `patience` epochs, lr <- max(lr*factor, min_lr) and the
// stagnation counter resets (the best-so-far does not).
inline float reduce_lr_on_plateau(const TrainHistory& history, int64_t patience,
                                  double factor, double min_lr, double initial_lr) {
  float lr = static_cast<float>(initial_lr);
  float best = std::numeric_limits<float>::infinity();
  int64_t wait = 0;
  for (const auto& row : history.rows) {
    if (row.val_loss < best) {
      best = row.val_loss;
      wait = 0;
    } else if (++wait >= patience) {
      lr = std::max(static_cast<float>(lr * factor), static_cast<float>(min_lr));
      wait = 0;
    }
  }
  return lr;
}

// ---- epoch loop ----

namespace detail {

template <typename S>
std::pair<TensorPtr<S>, TensorPtr<S>> assemble_batch(
    const std::vector<TrainSample<S>>& split, const std::vector<size_t>& order,
    size_t begin, size_t end) {
  const auto& first = split[order[begin]];
  const int64_t n = static_cast<int64_t>(end - begin);
  Shape in_shape = first.input->shape;
  Shape tg_shape = first.target->shape;
  in_shape[0] = n;
  tg_shape[0] = n;
  auto input = make_tensor<S>(in_shape);
  auto target = make_tensor<S>(tg_shape);
  const int64_t in_stride = first.input->numel();
  const int64_t tg_stride = first.target->numel();
  for (size_t i = begin; i < end; ++i) {
    const auto& s = split[order[i]];
    if (s.input->shape != first.input->shape || s.target->shape != first.target->shape)
      throw ShapeError("batch assembly: sample shape drift at scene '" + s.scene_id +
                       "': " + shape_str(s.input->shape) + " vs " +
                       shape_str(first.input->shape));
    std::copy(s.input->data.begin(), s.input->data.end(),
              input->data.begin() + (i - begin) * in_stride);
    std::copy(s.target->data.begin(), s.target->data.end(),
              target->data.begin() + (i - begin) * tg_stride);
  }
  return {input, target};
}

template <typename S>
void count_correct(const TensorT<S>& pred, const TensorT<S>& target, int64_t& correct,
                   int64_t& total) {
  for (size_t i = 0; i < pred.data.size(); ++i) {
    const int p = pred.data[i] >= S(0.5) ? 1 : 0;
    const int y = target.data[i] != S(0) ? 1 : 0;
    correct += p == y;
  }
  total += static_cast<int64_t>(pred.data.size());
}

}  // namespace detail

// Train mode shuffles with the data-shuffle stream and takes one Adam step
// per batch; val mode is a pure eval-mode pass. Returns the epoch-mean loss
// (per-sample weighted) and pixel accuracy at threshold 0.5. The trailing
// batch is kept; in train mode a trailing singleton is merged into the
// previous batch.
template <typename S>
EpochStats run_epoch(UNetT<S>& model,
                     const std::vector<std::pair<std::string, TensorPtr<S>>>& params,
                     const std::vector<TrainSample<S>>& split, const TrainConfig& cfg,
                     Mode mode, AdamStateT<S>* adam, float lr_in_effect, Rng* shuffle_rng,
                     Rng* dropout_rng) {
  if (split.empty()) throw ContractError("run_epoch: dataset split is empty");
  const size_t n = split.size();
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;

  const bool train = mode == Mode::kTrain;
  if (train) {
    for (size_t i = n - 1; i > 0; --i) {
      const size_t j = static_cast<size_t>(shuffle_rng->next_below(i + 1));
      std::swap(order[i], order[j]);
    }
  }
  const size_t batch = static_cast<size_t>(train ? cfg.batch_train : cfg.batch_val);

  std::vector<std::pair<size_t, size_t>> ranges;
  for (size_t b = 0; b < n; b += batch) ranges.emplace_back(b, std::min(n, b + batch));
  if (train && ranges.size() > 1 && ranges.back().second - ranges.back().first == 1) {
    ranges[ranges.size() - 2].second = n;
    ranges.pop_back();
  }

  set_mode(model, mode);
  double loss_sum = 0.0;
  int64_t correct = 0, total = 0;
  const AdamConfig adam_cfg{cfg.lr, cfg.beta1, cfg.beta2, cfg.eps_adam};
  for (const auto& [b, e] : ranges) {
    auto [input, target] = detail::assemble_batch(split, order, b, e);
    if (train) {
      TapeT<S> tape;
      auto pred = model.forward(&tape, input, dropout_rng);
      auto loss = bce_loss(&tape, pred, target);
      zero_grads(params);
      tape.backward(loss);
      adam_step(params, *adam, adam_cfg, lr_in_effect);
      loss_sum += static_cast<double>(loss->data[0]) * static_cast<double>(e - b);
      detail::count_correct(*pred, *target, correct, total);
    } else {
      auto pred = model.forward(nullptr, input);
      auto loss = bce_loss<S>(nullptr, pred, target);
      loss_sum += static_cast<double>(loss->data[0]) * static_cast<double>(e - b);
      detail::count_correct(*pred, *target, correct, total);
    }
  }
  return {loss_sum / static_cast<double>(n),
          static_cast<double>(correct) / static_cast<double>(total)};
}

// ---- full training protocol ----

struct FitOptions {
  std::filesystem::path out_dir;  // best.ckpt, last.ckpt, history.csv
  bool write_files = true;
  bool quiet = false;
};

struct FitResult {
  TrainHistory history;
  TrainerState trainer;
  bool stopped_early = false;
};

// Epoch protocol: train pass, val pass, then callbacks in pinned order --
// checkpoint (best/last), ReduceLROnPlateau, EarlyStopping. On early stop the
// best-epoch weights are restored from best.ckpt. Resuming from a checkpoint
// bundle continues the uninterrupted trajectory bit-exactly.
template <typename S>
FitResult fit(UNetT<S>& model, const std::vector<TrainSample<S>>& train_set,
              const std::vector<TrainSample<S>>& val_set, const TrainConfig& cfg,
              const FitOptions& opts, AdamStateT<S>* resume_adam = nullptr,
              const TrainHistory* resume_history = nullptr,
              const TrainerState* resume_state = nullptr) {
  cfg.validate();
  if (train_set.empty() || val_set.empty())
    throw ContractError("fit: train and val splits must be non-empty");

  auto params = model.named_parameters();
  AdamStateT<S> fresh_adam(params);
  AdamStateT<S>* adam = resume_adam ? resume_adam : &fresh_adam;

  const Rng root(cfg.seed);
  Rng shuffle_rng = root.split("data-shuffle");
  Rng dropout_rng = root.split("dropout");

  FitResult result;
  TrainerState state;
  state.lr_in_effect = static_cast<float>(cfg.lr);
  state.ckpt_best = std::numeric_limits<float>::infinity();
  if (resume_state) {
    state = *resume_state;
    shuffle_rng.restore(resume_state->shuffle_cursor);
    dropout_rng.restore(resume_state->dropout_cursor);
  }
  if (resume_history) result.history = *resume_history;

  const auto t0 = std::chrono::steady_clock::now();
  const std::filesystem::path best_path = opts.out_dir / "best.ckpt";
  const std::filesystem::path last_path = opts.out_dir / "last.ckpt";
  if (opts.write_files) std::filesystem::create_directories(opts.out_dir);

  for (int64_t epoch = state.epochs_done + 1; epoch <= cfg.epochs; ++epoch) {
    const auto train_stats = run_epoch(model, params, train_set, cfg, Mode::kTrain, adam,
                                       state.lr_in_effect, &shuffle_rng, &dropout_rng);
    const auto val_stats = run_epoch(model, params, val_set, cfg, Mode::kEval, adam,
                                     state.lr_in_effect, nullptr, nullptr);

    HistoryRow row;
    row.epoch = epoch;
    row.train_loss = static_cast<float>(train_stats.loss);
    row.val_loss = static_cast<float>(val_stats.loss);
    row.train_acc = static_cast<float>(train_stats.pixel_acc);
    row.val_acc = static_cast<float>(val_stats.pixel_acc);
    row.lr = state.lr_in_effect;
    row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.history.rows.push_back(row);

    // Callback order: checkpoint -> plateau -> early stop.
    const bool is_best = row.val_loss < state.ckpt_best;
    if (is_best) {
      state.ckpt_best = row.val_loss;
      state.best_epoch = epoch;
    }
    const float next_lr = reduce_lr_on_plateau(result.history, cfg.plateau_patience,
                                               cfg.plateau_factor, cfg.min_lr, cfg.lr);
    const auto es = early_stopping(result.history, cfg.early_stop_patience,
                                   static_cast<float>(cfg.min_delta));

    state.lr_in_effect = next_lr;
    state.epochs_done = epoch;
    state.shuffle_cursor = shuffle_rng.cursor();
    state.dropout_cursor = dropout_rng.cursor();

    if (opts.write_files) {
      if (is_best) save_checkpoint(best_path, model, adam, result.history, &state);
      save_checkpoint(last_path, model, adam, result.history, &state);
      result.history.write_csv(opts.out_dir / "history.csv");
    }
    if (!opts.quiet) {
      std::printf("epoch %3lld  train_loss %.6f  val_loss %.6f  train_acc %.4f  "
                  "val_acc %.4f  lr %.3g%s\n",
                  static_cast<long long>(epoch), train_stats.loss, val_stats.loss,
                  train_stats.pixel_acc, val_stats.pixel_acc,
                  static_cast<double>(row.lr), is_best ? "  *" : "");
      std::fflush(stdout);
    }

    if (es.stop) {
      result.stopped_early = true;
      if (opts.write_files && std::filesystem::exists(best_path)) {
        auto best = load_checkpoint<S>(best_path);
        auto best_params = best.model.named_parameters();
        for (size_t i = 0; i < params.size(); ++i)
          params[i].second->data = best_params[i].second->data;
        auto buffers = model.named_buffers();
        auto best_buffers = best.model.named_buffers();
        for (size_t i = 0; i < buffers.size(); ++i)
          buffers[i].second->data = best_buffers[i].second->data;
      }
      break;
    }
  }
  result.trainer = state;
  return result;
}

}  // namespace amazonnet
