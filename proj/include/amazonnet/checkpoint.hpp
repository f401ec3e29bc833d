#pragma once

#include <zlib.h>

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "amazonnet/history.hpp"
#include "amazonnet/optim.hpp"
#include "amazonnet/rng.hpp"
#include "amazonnet/unet.hpp"

namespace amazonnet {

// Checkpoint file layout (all integers little-endian):
//   magic "AMZS" | u16 version | name table (u32 count, per name u32 len +
//   UTF-8 bytes) | u32 record count | records (u32 name index, u32 rank,
//   rank*u32 extents, numel*f32 payload) | u32 CRC32 of everything above.
// Every payload is 32-bit floats; non-float state (rng cursors, counters)
// is stored bit-cast into f32 slots and never arithmetically touched.

inline constexpr char kCkptMagic[4] = {'A', 'M', 'Z', 'S'};
inline constexpr uint16_t kCkptVersion = 1;

struct CkptTensor {
  std::string name;
  std::vector<uint32_t> extents;
  std::vector<float> values;
};

namespace detail {

inline void put_u16(std::vector<uint8_t>& b, uint16_t v) {
  b.push_back(static_cast<uint8_t>(v & 0xff));
  b.push_back(static_cast<uint8_t>(v >> 8));
}

inline void put_u32(std::vector<uint8_t>& b, uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

inline void put_f32(std::vector<uint8_t>& b, float v) {
  put_u32(b, std::bit_cast<uint32_t>(v));
}

struct ByteReader {
  const std::vector<uint8_t>& buf;
  size_t off = 0;

  void need(size_t n, const char* what) const {
    if (off + n > buf.size())
      throw FormatError("checkpoint truncated at offset " + std::to_string(off) +
                        " while reading " + what);
  }
  uint16_t u16(const char* what) {
    need(2, what);
    uint16_t v = static_cast<uint16_t>(buf[off] | (buf[off + 1] << 8));
    off += 2;
    return v;
  }
  uint32_t u32(const char* what) {
    need(4, what);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(buf[off + i]) << (8 * i);
    off += 4;
    return v;
  }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
};

}  // namespace detail

inline void write_checkpoint_file(const std::filesystem::path& path,
                                  const std::vector<CkptTensor>& tensors) {
  std::vector<uint8_t> buf;
  buf.insert(buf.end(), kCkptMagic, kCkptMagic + 4);
  detail::put_u16(buf, kCkptVersion);
  detail::put_u32(buf, static_cast<uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    detail::put_u32(buf, static_cast<uint32_t>(t.name.size()));
    buf.insert(buf.end(), t.name.begin(), t.name.end());
  }
  detail::put_u32(buf, static_cast<uint32_t>(tensors.size()));
  for (size_t i = 0; i < tensors.size(); ++i) {
    const auto& t = tensors[i];
    detail::put_u32(buf, static_cast<uint32_t>(i));
    detail::put_u32(buf, static_cast<uint32_t>(t.extents.size()));
    uint64_t numel = 1;
    for (uint32_t e : t.extents) {
      detail::put_u32(buf, e);
      numel *= e;
    }
    if (numel != t.values.size())
      throw ContractError("checkpoint tensor '" + t.name + "' extents do not match payload");
    for (float v : t.values) detail::put_f32(buf, v);
  }
  const uint32_t crc =
      static_cast<uint32_t>(crc32(0L, buf.data(), static_cast<uInt>(buf.size())));
  detail::put_u32(buf, crc);

  // Atomic write: temp file in the same directory, then rename.
  const std::filesystem::path tmp = path.string() + ".tmp";
  std::FILE* f = std::fopen(tmp.string().c_str(), "wb");
  if (!f) throw IoError("cannot open checkpoint for writing: " + tmp.string());
  const size_t written = std::fwrite(buf.data(), 1, buf.size(), f);
  std::fclose(f);
  if (written != buf.size()) throw IoError("short write to " + tmp.string());
  std::filesystem::rename(tmp, path);
}

inline std::vector<CkptTensor> read_checkpoint_file(const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "rb");
  if (!f) throw IoError("cannot open checkpoint: " + path.string());
  std::fseek(f, 0, SEEK_END);
  const long size = std::ftell(f);
  std::fseek(f, 0, SEEK_SET);
  std::vector<uint8_t> buf(static_cast<size_t>(size));
  const size_t got = std::fread(buf.data(), 1, buf.size(), f);
  std::fclose(f);
  if (got != buf.size()) throw IoError("short read from " + path.string());

  detail::ByteReader r{buf};
  r.need(4, "magic");
  if (std::memcmp(buf.data(), kCkptMagic, 4) != 0)
    throw FormatError("bad checkpoint magic at offset 0");
  r.off = 4;
  const uint16_t version = r.u16("version");
  if (version != kCkptVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version) +
                      " at offset 4");
  const uint32_t name_count = r.u32("name table count");
  std::vector<std::string> names(name_count);
  for (auto& name : names) {
    const uint32_t len = r.u32("name length");
    r.need(len, "name bytes");
    name.assign(reinterpret_cast<const char*>(buf.data() + r.off), len);
    r.off += len;
  }
  const uint32_t rec_count = r.u32("record count");
  std::vector<CkptTensor> tensors;
  tensors.reserve(rec_count);
  for (uint32_t i = 0; i < rec_count; ++i) {
    CkptTensor t;
    const uint32_t name_idx = r.u32("name index");
    if (name_idx >= names.size())
      throw FormatError("name index out of range at offset " + std::to_string(r.off - 4));
    t.name = names[name_idx];
    const uint32_t rank = r.u32("rank");
    if (rank > 4)
      throw FormatError("implausible tensor rank at offset " + std::to_string(r.off - 4));
    uint64_t numel = 1;
    for (uint32_t d = 0; d < rank; ++d) {
      const uint32_t e = r.u32("extent");
      t.extents.push_back(e);
      numel *= e;
    }
    t.values.resize(numel);
    for (auto& v : t.values) v = r.f32("payload");
    tensors.push_back(std::move(t));
  }
  const size_t crc_off = r.off;
  const uint32_t stored_crc = r.u32("crc32");
  const uint32_t actual_crc =
      static_cast<uint32_t>(crc32(0L, buf.data(), static_cast<uInt>(crc_off)));
  if (stored_crc != actual_crc)
    throw FormatError("checkpoint crc mismatch at offset " + std::to_string(crc_off));
  if (r.off != buf.size())
    throw FormatError("trailing bytes after checkpoint crc at offset " +
                      std::to_string(r.off));
  return tensors;
}

// ---- model/trainer state <-> tensor records ----

// Resumable trainer internals: effective learning rate, the per-callback best
// values and wait counters, and the rng cursors for the shuffle and dropout
// streams.
struct TrainerState {
  // Kept in f32 so a resumed run sees bit-identical values to an
  // uninterrupted one (history and adam also operate on f32).
  float lr_in_effect = 0.f;
  float ckpt_best = 0.f;  // best val loss seen by the checkpoint callback
  float es_best = 0.f;
  int64_t es_wait = 0;
  float pl_best = 0.f;
  int64_t pl_wait = 0;
  int64_t epochs_done = 0;
  int64_t best_epoch = 0;
  std::array<uint64_t, Rng::kCursorWords> shuffle_cursor{};
  std::array<uint64_t, Rng::kCursorWords> dropout_cursor{};
};

namespace detail {

inline void push_u64_bits(std::vector<float>& out, uint64_t v) {
  out.push_back(std::bit_cast<float>(static_cast<uint32_t>(v & 0xffffffffULL)));
  out.push_back(std::bit_cast<float>(static_cast<uint32_t>(v >> 32)));
}

inline uint64_t pop_u64_bits(const std::vector<float>& in, size_t i) {
  const uint64_t lo = std::bit_cast<uint32_t>(in[i]);
  const uint64_t hi = std::bit_cast<uint32_t>(in[i + 1]);
  return lo | (hi << 32);
}

template <typename S>
std::vector<float> to_f32(const std::vector<S>& v) {
  return std::vector<float>(v.begin(), v.end());
}

template <typename S>
CkptTensor tensor_record(const std::string& name, const TensorPtr<S>& t) {
  CkptTensor rec;
  rec.name = name;
  for (int64_t e : t->shape) rec.extents.push_back(static_cast<uint32_t>(e));
  rec.values.assign(t->data.begin(), t->data.end());
  return rec;
}

}  // namespace detail

template <typename S>
std::vector<CkptTensor> checkpoint_records(UNetT<S>& model, const AdamStateT<S>* adam,
                                           const TrainHistory& history,
                                           const TrainerState* trainer) {
  std::vector<CkptTensor> recs;
  const auto& cfg = model.config;
  {
    CkptTensor c;
    c.name = "config";
    c.values = {static_cast<float>(cfg.in_channels), static_cast<float>(cfg.depth),
                static_cast<float>(cfg.base_width), static_cast<float>(cfg.out_channels)};
    // dropout_p gates rng draws on resume, so it is stored bit-exactly.
    detail::push_u64_bits(c.values, std::bit_cast<uint64_t>(cfg.dropout_p));
    c.extents = {static_cast<uint32_t>(c.values.size())};
    recs.push_back(std::move(c));
  }
  model.visit_params([&](const std::string& name, const TensorPtr<S>& t) {
    recs.push_back(detail::tensor_record("param." + name, t));
  });
  for (auto& [name, t] : model.named_buffers())
    recs.push_back(detail::tensor_record("buffer." + name, t));
  if (adam) {
    recs.push_back(CkptTensor{"adam.t", {1}, {static_cast<float>(adam->t)}});
    size_t pi = 0;
    model.visit_params([&](const std::string& name, const TensorPtr<S>&) {
      recs.push_back(CkptTensor{"adam.m." + name, {static_cast<uint32_t>(adam->m[pi].size())},
                                detail::to_f32(adam->m[pi])});
      recs.push_back(CkptTensor{"adam.v." + name, {static_cast<uint32_t>(adam->v[pi].size())},
                                detail::to_f32(adam->v[pi])});
      ++pi;
    });
  }
  if (trainer) {
    CkptTensor ts;
    ts.name = "trainer.state";
    ts.values = {static_cast<float>(trainer->lr_in_effect), trainer->ckpt_best,
                 trainer->es_best, static_cast<float>(trainer->es_wait), trainer->pl_best,
                 static_cast<float>(trainer->pl_wait), static_cast<float>(trainer->epochs_done),
                 static_cast<float>(trainer->best_epoch)};
    ts.extents = {static_cast<uint32_t>(ts.values.size())};
    recs.push_back(std::move(ts));

    CkptTensor rc;
    rc.name = "rng.cursor";
    for (uint64_t w : trainer->shuffle_cursor) detail::push_u64_bits(rc.values, w);
    for (uint64_t w : trainer->dropout_cursor) detail::push_u64_bits(rc.values, w);
    rc.extents = {static_cast<uint32_t>(rc.values.size())};
    recs.push_back(std::move(rc));
  }
  {
    CkptTensor h;
    h.name = "history";
    h.extents = {static_cast<uint32_t>(history.rows.size()), 7};
    for (const auto& row : history.rows) {
      h.values.push_back(static_cast<float>(row.epoch));
      h.values.push_back(row.train_loss);
      h.values.push_back(row.val_loss);
      h.values.push_back(row.train_acc);
      h.values.push_back(row.val_acc);
      h.values.push_back(row.lr);
      h.values.push_back(static_cast<float>(row.wall_time));
    }
    recs.push_back(std::move(h));
  }
  return recs;
}

template <typename S>
void save_checkpoint(const std::filesystem::path& path, UNetT<S>& model,
                     const AdamStateT<S>* adam, const TrainHistory& history,
                     const TrainerState* trainer) {
  write_checkpoint_file(path, checkpoint_records(model, adam, history, trainer));
}

template <typename S>
struct CheckpointBundle {
  UNetT<S> model;
  std::optional<AdamStateT<S>> adam;
  TrainHistory history;
  std::optional<TrainerState> trainer;
};

template <typename S>
CheckpointBundle<S> load_checkpoint(const std::filesystem::path& path) {
  const auto recs = read_checkpoint_file(path);
  std::map<std::string, const CkptTensor*> by_name;
  for (const auto& r : recs) by_name[r.name] = &r;

  auto require = [&](const std::string& name) -> const CkptTensor& {
    auto it = by_name.find(name);
    if (it == by_name.end())
      throw FormatError("checkpoint missing required tensor '" + name + "'");
    return *it->second;
  };

  const auto& cfg_rec = require("config");
  if (cfg_rec.values.size() != 6) throw FormatError("checkpoint config record malformed");
  UNetConfig cfg;
  cfg.in_channels = static_cast<int64_t>(cfg_rec.values[0]);
  cfg.depth = static_cast<int64_t>(cfg_rec.values[1]);
  cfg.base_width = static_cast<int64_t>(cfg_rec.values[2]);
  cfg.out_channels = static_cast<int64_t>(cfg_rec.values[3]);
  cfg.dropout_p = std::bit_cast<double>(detail::pop_u64_bits(cfg_rec.values, 4));

  CheckpointBundle<S> bundle{build_unet<S>(cfg, Rng(0)), std::nullopt, {}, std::nullopt};
  auto load_into = [&](const std::string& name, const TensorPtr<S>& t) {
    const auto& rec = require(name);
    if (static_cast<int64_t>(rec.values.size()) != t->numel())
      throw FormatError("checkpoint tensor '" + name + "' has wrong size");
    for (size_t i = 0; i < rec.values.size(); ++i) t->data[i] = S(rec.values[i]);
  };
  bundle.model.visit_params([&](const std::string& name, const TensorPtr<S>& t) {
    load_into("param." + name, t);
  });
  for (auto& [name, t] : bundle.model.named_buffers()) load_into("buffer." + name, t);

  if (by_name.count("adam.t")) {
    AdamStateT<S> adam(bundle.model.named_parameters());
    adam.t = static_cast<int64_t>(require("adam.t").values[0]);
    size_t pi = 0;
    bundle.model.visit_params([&](const std::string& name, const TensorPtr<S>&) {
      const auto& m = require("adam.m." + name);
      const auto& v = require("adam.v." + name);
      if (m.values.size() != adam.m[pi].size() || v.values.size() != adam.v[pi].size())
        throw FormatError("checkpoint adam state for '" + name + "' has wrong size");
      adam.m[pi].assign(m.values.begin(), m.values.end());
      adam.v[pi].assign(v.values.begin(), v.values.end());
      ++pi;
    });
    bundle.adam = std::move(adam);
  }

  if (by_name.count("trainer.state")) {
    const auto& ts = require("trainer.state");
    if (ts.values.size() != 8) throw FormatError("checkpoint trainer.state malformed");
    TrainerState t;
    t.lr_in_effect = ts.values[0];
    t.ckpt_best = ts.values[1];
    t.es_best = ts.values[2];
    t.es_wait = static_cast<int64_t>(ts.values[3]);
    t.pl_best = ts.values[4];
    t.pl_wait = static_cast<int64_t>(ts.values[5]);
    t.epochs_done = static_cast<int64_t>(ts.values[6]);
    t.best_epoch = static_cast<int64_t>(ts.values[7]);
    const auto& rc = require("rng.cursor");
    if (rc.values.size() != 4 * Rng::kCursorWords)
      throw FormatError("checkpoint rng.cursor malformed");
    for (int i = 0; i < Rng::kCursorWords; ++i)
      t.shuffle_cursor[i] = detail::pop_u64_bits(rc.values, 2 * i);
    for (int i = 0; i < Rng::kCursorWords; ++i)
      t.dropout_cursor[i] =
          detail::pop_u64_bits(rc.values, 2 * (Rng::kCursorWords + i));
    bundle.trainer = t;
  }

  const auto& h = require("history");
  if (h.extents.size() != 2 || h.extents[1] != 7)
    throw FormatError("checkpoint history record malformed");
  for (uint32_t i = 0; i < h.extents[0]; ++i) {
    HistoryRow row;
    const float* v = h.values.data() + i * 7;
    row.epoch = static_cast<int64_t>(v[0]);
    row.train_loss = v[1];
    row.val_loss = v[2];
    row.train_acc = v[3];
    row.val_acc = v[4];
    row.lr = v[5];
    row.wall_time = v[6];
    bundle.history.rows.push_back(row);
  }
  return bundle;
}

}  // namespace amazonnet
