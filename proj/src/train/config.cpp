// Copyright (c) 2026 The mpfkansc Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "train/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "core/error.hpp"

namespace mpk::train {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string where_of(std::string_view source, const IniEntry& e) {
  return std::string(source) + ":" + std::to_string(e.line) + ": [" + e.section + "] " + e.key;
}

std::size_t parse_size(std::string_view v, const std::string& where) {
  const auto n = parse_int(v, where);
  if (n < 0) throw ConfigError(where + ": expected a non-negative integer, got '" + std::string(v) + "'");
  return static_cast<std::size_t>(n);
}

std::array<std::size_t, 3> parse_dims(std::string_view v, const std::string& where) {
  std::array<std::size_t, 3> dims{};
  std::size_t pos = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const std::size_t x = i < 2 ? v.find('x', pos) : v.size();
    if (x == std::string_view::npos) throw ConfigError(where + ": expected DxHxW, got '" + std::string(v) + "'");
    dims[i] = parse_size(trim(v.substr(pos, x - pos)), where);
    pos = x + 1;
  }
  return dims;
}

using Setter = std::function<void(TrainConfig&, std::string_view, const std::string&)>;

const std::map<std::string, std::map<std::string, Setter>>& train_schema() {
  static const std::map<std::string, std::map<std::string, Setter>> schema = {
      {"train",
       {
           {"epochs", [](TrainConfig& c, auto v, auto& w) { c.epochs = static_cast<int>(parse_int(v, w)); }},
           {"batch_size", [](TrainConfig& c, auto v, auto& w) { c.batch_size = parse_size(v, w); }},
           {"lr", [](TrainConfig& c, auto v, auto& w) { c.lr = parse_double(v, w); }},
           {"transfer_lr", [](TrainConfig& c, auto v, auto& w) { c.transfer_lr = parse_double(v, w); }},
           {"lr_decay", [](TrainConfig& c, auto v, auto& w) { c.lr_decay = parse_double(v, w); }},
           {"lr_decay_every",
            [](TrainConfig& c, auto v, auto& w) { c.lr_decay_every = static_cast<int>(parse_int(v, w)); }},
           {"momentum", [](TrainConfig& c, auto v, auto& w) { c.momentum = parse_double(v, w); }},
           {"seed", [](TrainConfig& c, auto v, auto& w) { c.seed = parse_size(v, w); }},
           {"folds", [](TrainConfig& c, auto v, auto& w) { c.folds = parse_size(v, w); }},
           {"val_fraction", [](TrainConfig& c, auto v, auto& w) { c.val_fraction = parse_double(v, w); }},
           {"threads", [](TrainConfig& c, auto v, auto& w) { c.threads = parse_size(v, w); }},
           {"crop", [](TrainConfig& c, auto v, auto& w) { c.crop = parse_dims(v, w); }},
       }},
      {"loss",
       {
           {"lambda", [](TrainConfig& c, auto v, auto& w) { c.loss.lambda = parse_double(v, w); }},
           {"ramp_start",
            [](TrainConfig& c, auto v, auto& w) { c.loss.ramp_start_epoch = static_cast<int>(parse_int(v, w)); }},
           {"ramp_steps",
            [](TrainConfig& c, auto v, auto& w) { c.loss.ramp_steps = static_cast<int>(parse_int(v, w)); }},
           {"mode",
            [](TrainConfig& c, auto v, auto& w) {
              try {
                c.loss.mode = parse_ramp_mode(v);
              } catch (const ConfigError& e) {
                throw ConfigError(w + ": " + e.what());
              }
            }},
       }},
      {"model",
       {
           {"planes",
            [](TrainConfig& c, auto v, auto& w) {
              try {
                c.model.planes = model::parse_planes(v);
              } catch (const ConfigError& e) {
                throw ConfigError(w + ": " + e.what());
              }
            }},
           {"attention",
            [](TrainConfig& c, auto v, auto& w) {
              if (v == "off" || v == "none") {
                c.model.use_attention = false;
                return;
              }
              try {
                c.model.attention = model::parse_attention_variant(v);
                c.model.use_attention = true;
              } catch (const ConfigError& e) {
                throw ConfigError(w + ": " + e.what());
              }
            }},
           {"attention_hidden",
            [](TrainConfig& c, auto v, auto& w) { c.model.attention_hidden = parse_size(v, w); }},
           {"head_hidden", [](TrainConfig& c, auto v, auto& w) { c.model.head_hidden = parse_size(v, w); }},
           {"grid_size", [](TrainConfig& c, auto v, auto& w) { c.model.grid.grid_size = parse_size(v, w); }},
           {"spline_degree", [](TrainConfig& c, auto v, auto& w) { c.model.grid.degree = parse_size(v, w); }},
       }},
      {"augment",
       {
           {"enabled", [](TrainConfig& c, auto v, auto& w) { c.augment.enabled = parse_bool(v, w); }},
           {"translate_fraction",
            [](TrainConfig& c, auto v, auto& w) { c.augment.translate_fraction = parse_double(v, w); }},
           {"flip", [](TrainConfig& c, auto v, auto& w) { c.augment.flip = parse_bool(v, w); }},
           {"flip_probability",
            [](TrainConfig& c, auto v, auto& w) { c.augment.flip_probability = parse_double(v, w); }},
       }},
  };
  return schema;
}

}  // namespace

std::vector<IniEntry> parse_ini(std::string_view text, std::string_view source) {
  std::vector<IniEntry> entries;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    const std::size_t hash = line.find_first_of("#;");
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string loc = std::string(source) + ":" + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(loc + ": unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section.empty()) throw ConfigError(loc + ": empty section name");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(loc + ": expected 'key = value'");
    IniEntry e;
    e.section = section;
    e.key = std::string(trim(line.substr(0, eq)));
    e.value = std::string(trim(line.substr(eq + 1)));
    e.line = line_no;
    if (e.key.empty()) throw ConfigError(loc + ": missing key");
    if (section.empty()) throw ConfigError(loc + ": key '" + e.key + "' appears before any [section]");
    entries.push_back(std::move(e));
  }
  return entries;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

long long parse_int(std::string_view value, const std::string& where) {
  long long v = 0;
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || p != value.data() + value.size() || value.empty()) {
    throw ConfigError(where + ": expected an integer, got '" + std::string(value) + "'");
  }
  return v;
}

double parse_double(std::string_view value, const std::string& where) {
  double v = 0;
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || p != value.data() + value.size() || value.empty() || !std::isfinite(v)) {
    throw ConfigError(where + ": expected a finite number, got '" + std::string(value) + "'");
  }
  return v;
}

bool parse_bool(std::string_view value, const std::string& where) {
  if (value == "true" || value == "on" || value == "yes" || value == "1") return true;
  if (value == "false" || value == "off" || value == "no" || value == "0") return false;
  throw ConfigError(where + ": expected true/false, got '" + std::string(value) + "'");
}

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (!(lr >= 0.0) || !(transfer_lr >= 0.0)) throw ConfigError("learning rates must be >= 0");
  if (!(lr_decay > 0.0) || lr_decay_every < 1) throw ConfigError("lr decay must be positive with a period >= 1");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train.momentum must lie in [0, 1)");
  if (folds < 2) throw ConfigError("train.folds must be >= 2");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw ConfigError("train.val_fraction must lie in [0, 1)");
  if (threads < 1) throw ConfigError("train.threads must be >= 1");
  for (auto d : crop) {
    if (d % model::kBackboneDownsample != 0) throw ConfigError("train.crop dims must be multiples of 32");
  }
  if (!(augment.translate_fraction >= 0.0)) throw ConfigError("augment.translate_fraction must be >= 0");
  if (!(augment.flip_probability >= 0.0 && augment.flip_probability <= 1.0)) {
    throw ConfigError("augment.flip_probability must lie in [0, 1]");
  }
  loss.validate();
  model.validate();
}

TrainConfig parse_train_config(std::string_view text, std::string_view source) {
  TrainConfig cfg;
  const auto& schema = train_schema();
  for (const auto& e : parse_ini(text, source)) {
    const std::string where = where_of(source, e);
    auto sec = schema.find(e.section);
    if (sec == schema.end()) {
      throw ConfigError(std::string(source) + ":" + std::to_string(e.line) + ": unknown section [" + e.section + "]");
    }
    auto key = sec->second.find(e.key);
    if (key == sec->second.end()) throw ConfigError(where + ": unknown key");
    key->second(cfg, e.value, where);
  }
  cfg.validate();
  return cfg;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  return parse_train_config(read_text_file(path), path.string());
}

std::string to_ini(const TrainConfig& c) {
  std::ostringstream o;
  o << "[train]\n"
    << "epochs = " << c.epochs << "\n"
    << "batch_size = " << c.batch_size << "\n"
    << "lr = " << format_double(c.lr) << "\n"
    << "transfer_lr = " << format_double(c.transfer_lr) << "\n"
    << "lr_decay = " << format_double(c.lr_decay) << "\n"
    << "lr_decay_every = " << c.lr_decay_every << "\n"
    << "momentum = " << format_double(c.momentum) << "\n"
    << "seed = " << c.seed << "\n"
    << "folds = " << c.folds << "\n"
    << "val_fraction = " << format_double(c.val_fraction) << "\n"
    << "threads = " << c.threads << "\n"
    << "crop = " << c.crop[0] << "x" << c.crop[1] << "x" << c.crop[2] << "\n"
    << "\n[loss]\n"
    << "lambda = " << format_double(c.loss.lambda) << "\n"
    << "ramp_start = " << c.loss.ramp_start_epoch << "\n"
    << "ramp_steps = " << c.loss.ramp_steps << "\n"
    << "mode = " << ramp_mode_name(c.loss.mode) << "\n"
    << "\n[model]\n"
    << "planes = " << model::planes_str(c.model.planes) << "\n"
    << "attention = " << (c.model.use_attention ? model::attention_variant_name(c.model.attention) : "off") << "\n"
    << "attention_hidden = " << c.model.attention_hidden << "\n"
    << "head_hidden = " << c.model.head_hidden << "\n"
    << "grid_size = " << c.model.grid.grid_size << "\n"
    << "spline_degree = " << c.model.grid.degree << "\n"
    << "\n[augment]\n"
    << "enabled = " << (c.augment.enabled ? "true" : "false") << "\n"
    << "translate_fraction = " << format_double(c.augment.translate_fraction) << "\n"
    << "flip = " << (c.augment.flip ? "true" : "false") << "\n"
    << "flip_probability = " << format_double(c.augment.flip_probability) << "\n";
  return o.str();
}

double lr_at(int epoch, const TrainConfig& cfg, bool transfer) {
  if (epoch < 1) throw ConfigError("epochs are 1-based");
  const double base = transfer ? cfg.transfer_lr : cfg.lr;
  return base * std::pow(cfg.lr_decay, static_cast<double>((epoch - 1) / cfg.lr_decay_every));
}

}  // namespace mpk::train
