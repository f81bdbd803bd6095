/*
 * Copyright 2026 The Telltale Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "telltale/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "telltale/error.hpp"

namespace telltale::config {
namespace {

const std::vector<std::pair<std::string, std::string>>& default_entries() {
  static const std::vector<std::pair<std::string, std::string>> entries = {
      {"data.filter", "wavelet"},
      {"data.manifest", ""},
      {"data.mask_cleanup", "true"},
      {"data.mask_threshold", "0.05"},
      {"model.aggregation", "false"},
      {"model.backbone", "reference"},
      {"model.backbone_channels", "32,64,128"},
      {"model.classifier_hidden", "128"},
      {"model.head_channels", "64"},
      {"model.input_size", "64"},
      {"model.num_classes", "2"},
      {"model.stem_channels", "16"},
      {"run.init_checkpoint", ""},
      {"run.require_step1", "true"},
      {"train.adam_beta1", "0.9"},
      {"train.adam_beta2", "0.999"},
      {"train.batch_size", "32"},
      {"train.epochs_step1", "30"},
      {"train.epochs_step2", "50"},
      {"train.lambda1", "1"},
      {"train.lambda2", "1"},
      {"train.lr", "0.0002"},
      {"train.map_supervision", "true"},
      {"train.noise_reduction", "mean"},
      {"train.real_replication_factor", "4"},
      {"train.seed", "0"},
      {"train.sigma_hq", "5"},
      {"train.sigma_lq", "10"},
      {"train.weight_decay", "0.00001"},
  };
  return entries;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [key, value] : default_entries()) k.push_back(key);
    return k;
  }();
  return keys;
}

FlatConfig FlatConfig::defaults() {
  FlatConfig c;
  for (const auto& [key, value] : default_entries()) c.values_[key] = value;
  return c;
}

FlatConfig FlatConfig::parse(std::string_view text, const std::string& origin) {
  FlatConfig c;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument(origin + ":" + std::to_string(line_no) + ": expected key = value");
    }
    try {
      c.set(trim(std::string_view(body).substr(0, eq)), trim(std::string_view(body).substr(eq + 1)));
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return c;
}

FlatConfig FlatConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void FlatConfig::set(const std::string& key, const std::string& value) {
  const auto& keys = known_keys();
  if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
    throw InvalidArgument("unknown config key '" + key + "'");
  }
  values_[key] = value;
}

void FlatConfig::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw InvalidArgument("override must be key=value: " + assignment);
  set(trim(std::string_view(assignment).substr(0, eq)),
      trim(std::string_view(assignment).substr(eq + 1)));
}

void FlatConfig::merge(const FlatConfig& other) {
  for (const auto& [key, value] : other.values_) values_[key] = value;
}

const std::string& FlatConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw InvalidArgument("missing config key '" + key + "'");
  return it->second;
}

double FlatConfig::get_double(const std::string& key) const {
  const std::string& v = get(key);
  try {
    size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw InvalidArgument(key + ": expected a number, got '" + v + "'");
  }
}

long long FlatConfig::get_int(const std::string& key) const {
  const std::string& v = get(key);
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw InvalidArgument(key + ": expected an integer, got '" + v + "'");
  }
  return out;
}

bool FlatConfig::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InvalidArgument(key + ": expected true or false, got '" + v + "'");
}

std::string FlatConfig::to_text() const {
  std::string out;
  for (const auto& [key, value] : values_) out += key + "=" + value + "\n";
  return out;
}

RunSettings resolve(const FlatConfig& given) {
  FlatConfig cfg = FlatConfig::defaults();
  cfg.merge(given);
  RunSettings s;

  auto& m = s.model;
  m.num_classes = static_cast<int>(cfg.get_int("model.num_classes"));
  m.head_channels = static_cast<int>(cfg.get_int("model.head_channels"));
  m.aggregation = cfg.get_bool("model.aggregation");
  m.backbone = cfg.get("model.backbone");
  m.input_size = static_cast<int>(cfg.get_int("model.input_size"));
  m.stem_channels = static_cast<int>(cfg.get_int("model.stem_channels"));
  m.classifier_hidden = static_cast<int>(cfg.get_int("model.classifier_hidden"));
  {
    const std::string& text = cfg.get("model.backbone_channels");
    std::istringstream in(text);
    std::string part;
    int n = 0;
    while (std::getline(in, part, ',')) {
      if (n >= 3) break;
      try {
        m.backbone_channels[n++] = std::stoi(trim(part));
      } catch (const std::exception&) {
        n = 99;
      }
    }
    if (n != 3) throw InvalidArgument("model.backbone_channels: expected three integers");
  }
  m.validate();

  auto& t = s.train;
  t.lr = cfg.get_double("train.lr");
  t.weight_decay = cfg.get_double("train.weight_decay");
  t.adam_beta1 = cfg.get_double("train.adam_beta1");
  t.adam_beta2 = cfg.get_double("train.adam_beta2");
  t.batch_size = static_cast<int>(cfg.get_int("train.batch_size"));
  t.epochs_step1 = static_cast<int>(cfg.get_int("train.epochs_step1"));
  t.epochs_step2 = static_cast<int>(cfg.get_int("train.epochs_step2"));
  const long long seed = cfg.get_int("train.seed");
  if (seed < 0) throw InvalidArgument("train.seed must be >= 0");
  t.seed = static_cast<uint64_t>(seed);
  t.lambda1 = cfg.get_double("train.lambda1");
  t.lambda2 = cfg.get_double("train.lambda2");
  t.sigma_hq = cfg.get_double("train.sigma_hq");
  t.sigma_lq = cfg.get_double("train.sigma_lq");
  t.real_replication_factor = static_cast<int>(cfg.get_int("train.real_replication_factor"));
  t.map_supervision = cfg.get_bool("train.map_supervision");
  const std::string& red = cfg.get("train.noise_reduction");
  if (red == "mean") {
    t.noise_reduction = losses::Reduction::kMean;
  } else if (red == "sum") {
    t.noise_reduction = losses::Reduction::kSum;
  } else {
    throw InvalidArgument("train.noise_reduction must be mean or sum");
  }
  t.validate();

  auto& p = s.prepare;
  p.sigma_hq = t.sigma_hq;
  p.sigma_lq = t.sigma_lq;
  const std::string& filter = cfg.get("data.filter");
  if (filter == "wavelet") {
    p.filter = residual::Filter::kWavelet;
  } else if (filter == "srm") {
    p.filter = residual::Filter::kSrm;
  } else {
    throw InvalidArgument("data.filter must be wavelet or srm");
  }
  p.mask.threshold = cfg.get_double("data.mask_threshold");
  if (!(p.mask.threshold > 0 && p.mask.threshold < 1)) {
    throw InvalidArgument("data.mask_threshold must be in (0, 1)");
  }
  p.mask.morph_cleanup = cfg.get_bool("data.mask_cleanup");

  s.manifest = cfg.get("data.manifest");
  s.init_checkpoint = cfg.get("run.init_checkpoint");
  s.require_step1 = cfg.get_bool("run.require_step1");
  return s;
}

}  // namespace telltale::config
