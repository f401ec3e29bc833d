#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "amazonnet/errors.hpp"
#include "amazonnet/synth.hpp"
#include "amazonnet/train.hpp"
#include "amazonnet/unet.hpp"

namespace amazonnet {

// Flat key=value config text: one pair per line, '#' comments, blank lines
// ignored. Keys match the config struct field names exactly.
inline std::map<std::string, std::string> parse_kv_text(const std::string& text,
                                                        const std::string& origin) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key=value");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
    out[key] = value;
  }
  return out;
}

inline std::map<std::string, std::string> parse_kv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_kv_text(ss.str(), path.string());
}

// Binds config-struct fields to their key names; applying a key/value map
// consumes known keys and rejects unknown ones, listing the valid set.
class ConfigBinder {
 public:
  void bind_double(const std::string& key, double* target) {
    add(key, [target, key](const std::string& v) { *target = parse_double(key, v); });
  }
  void bind_int(const std::string& key, int64_t* target) {
    add(key, [target, key](const std::string& v) { *target = parse_int(key, v); });
  }
  void bind_u64(const std::string& key, uint64_t* target) {
    add(key, [target, key](const std::string& v) {
      *target = static_cast<uint64_t>(std::stoull(v));
    });
  }
  void bind_range(const std::string& key, Range* target) {
    add(key, [target, key](const std::string& v) {
      const auto sep = v.find_first_of(",:");
      if (sep == std::string::npos)
        throw ConfigError("config key '" + key + "' expects 'lo,hi', got '" + v + "'");
      target->lo = parse_int(key, v.substr(0, sep));
      target->hi = parse_int(key, v.substr(sep + 1));
    });
  }

  void apply(const std::map<std::string, std::string>& kv) const {
    for (const auto& [key, value] : kv) {
      const auto it = setters_.find(key);
      if (it == setters_.end()) {
        std::string valid;
        for (const auto& [k, fns] : setters_) valid += (valid.empty() ? "" : ", ") + k;
        throw ConfigError("unknown config key '" + key + "'; valid keys: " + valid);
      }
      for (const auto& fn : it->second) fn(value);
    }
  }

 private:
  static double parse_double(const std::string& key, const std::string& v) {
    try {
      size_t pos = 0;
      const double d = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "' expects a number, got '" + v + "'");
    }
  }
  static int64_t parse_int(const std::string& key, const std::string& v) {
    try {
      size_t pos = 0;
      const long long i = std::stoll(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return i;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "' expects an integer, got '" + v + "'");
    }
  }
  void add(const std::string& key, std::function<void(const std::string&)> fn) {
    setters_[key].push_back(std::move(fn));
  }
  std::map<std::string, std::vector<std::function<void(const std::string&)>>> setters_;
};

inline void bind_synth_config(ConfigBinder& b, SynthConfig& cfg) {
  b.bind_int("canvas", &cfg.canvas);
  b.bind_int("n_scenes", &cfg.n_scenes);
  b.bind_range("scar_count_range", &cfg.scar_count_range);
  b.bind_range("scar_size_range", &cfg.scar_size_range);
  b.bind_double("river_prob", &cfg.river_prob);
  b.bind_double("cloud_prob", &cfg.cloud_prob);
  b.bind_double("label_drop_fraction", &cfg.label_drop_fraction);
  b.bind_int("false_label_count", &cfg.false_label_count);
  b.bind_u64("seed", &cfg.seed);
}

inline void bind_train_config(ConfigBinder& b, TrainConfig& cfg) {
  b.bind_double("lr", &cfg.lr);
  b.bind_double("beta1", &cfg.beta1);
  b.bind_double("beta2", &cfg.beta2);
  b.bind_double("eps_adam", &cfg.eps_adam);
  b.bind_int("epochs", &cfg.epochs);
  b.bind_int("batch_train", &cfg.batch_train);
  b.bind_int("batch_val", &cfg.batch_val);
  b.bind_int("early_stop_patience", &cfg.early_stop_patience);
  b.bind_int("plateau_patience", &cfg.plateau_patience);
  b.bind_double("plateau_factor", &cfg.plateau_factor);
  b.bind_double("min_lr", &cfg.min_lr);
  b.bind_double("min_delta", &cfg.min_delta);
  b.bind_u64("seed", &cfg.seed);
}

inline void bind_unet_config(ConfigBinder& b, UNetConfig& cfg) {
  b.bind_int("in_channels", &cfg.in_channels);
  b.bind_int("depth", &cfg.depth);
  b.bind_int("base_width", &cfg.base_width);
  b.bind_int("out_channels", &cfg.out_channels);
  b.bind_double("dropout_p", &cfg.dropout_p);
}

}  // namespace amazonnet
