#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "amazonnet/errors.hpp"

namespace amazonnet {

struct HistoryRow {
  int64_t epoch = 0;  // 1-based
  float train_loss = 0.f;
  float val_loss = 0.f;
  float train_acc = 0.f;
  float val_acc = 0.f;
  float lr = 0.f;
  double wall_time = 0.0;  // seconds; recorded but not exported to CSV
};

struct TrainHistory {
  std::vector<HistoryRow> rows;

  // CSV columns are fixed; wall_time is deliberately absent so that two runs
  // with the same seed and config produce byte-identical files.
  std::string to_csv() const {
    std::string out = "epoch,train_loss,val_loss,train_acc,val_acc,lr\n";
    char buf[192];
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof(buf), "%lld,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                    static_cast<long long>(r.epoch), r.train_loss, r.val_loss,
                    r.train_acc, r.val_acc, r.lr);
      out += buf;
    }
    return out;
  }

  void write_csv(const std::filesystem::path& path) const {
    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    if (!f) throw IoError("cannot open history csv for writing: " + path.string());
    const std::string csv = to_csv();
    std::fwrite(csv.data(), 1, csv.size(), f);
    std::fclose(f);
  }
};

}  // namespace amazonnet
