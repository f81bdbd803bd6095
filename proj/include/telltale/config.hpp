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

#pragma once

// Flat key=value run configuration. Lines are "key = value"; '#' starts a
// comment. Every key must be one of known_keys(). Later assignments win, so
// command-line overrides applied after the file take precedence.

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "telltale/dataset.hpp"
#include "telltale/net.hpp"
#include "telltale/trainer.hpp"

namespace telltale::config {

const std::vector<std::string>& known_keys();

class FlatConfig {
 public:
  // Every known key at its default.
  static FlatConfig defaults();
  // Throws InvalidArgument on syntax errors or unknown keys.
  static FlatConfig parse(std::string_view text, const std::string& origin = "<config>");
  static FlatConfig load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  // "key=value".
  void apply_override(const std::string& assignment);
  void merge(const FlatConfig& other);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  // Sorted "key=value" lines.
  std::string to_text() const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

struct RunSettings {
  net::ModelConfig model;
  trainer::TrainConfig train;
  data::PrepareOptions prepare;
  std::string manifest;
  std::string init_checkpoint;
  bool require_step1 = true;
};

// Interprets a config (defaults filled in). Throws InvalidArgument on bad values.
RunSettings resolve(const FlatConfig& cfg);

}  // namespace telltale::config
