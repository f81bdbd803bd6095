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

#include "telltale/manifest.hpp"

#include <fstream>

#include "json.hpp"
#include "telltale/error.hpp"

namespace telltale::data {
namespace {

std::string resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_absolute() || base.empty()) return path.string();
  return (base / path).lexically_normal().string();
}

}  // namespace

int class_index(const std::string& label) {
  for (int k = 0; k < kNumClasses; ++k) {
    if (label == kClassNames[k]) return k;
  }
  throw DataError("unknown label '" + label + "'");
}

int binary_label(const std::string& label) { return class_index(label) == 0 ? 0 : 1; }

std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  const std::filesystem::path base = path.parent_path();
  std::vector<ManifestRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + ": " + e.what());
    }
    if (!j.is_object()) throw DataError(where + ": record is not an object");
    for (const auto& [key, value] : j.items()) {
      if (key != "image_path" && key != "label" && key != "mask_path" && key != "pair_path" &&
          key != "split" && key != "quality") {
        throw DataError(where + ": unknown field '" + key + "'");
      }
      if (!value.is_string() && !value.is_null()) {
        throw DataError(where + ": field '" + key + "' must be a string");
      }
    }
    ManifestRecord r;
    if (!j.contains("image_path") || !j["image_path"].is_string()) {
      throw DataError(where + ": missing image_path");
    }
    r.image_path = resolve(base, j["image_path"].get<std::string>());
    if (!j.contains("label") || !j["label"].is_string()) throw DataError(where + ": missing label");
    r.label = j["label"].get<std::string>();
    class_index(r.label);
    if (j.contains("mask_path") && j["mask_path"].is_string()) {
      r.mask_path = resolve(base, j["mask_path"].get<std::string>());
    }
    if (j.contains("pair_path") && j["pair_path"].is_string()) {
      r.pair_path = resolve(base, j["pair_path"].get<std::string>());
    }
    if (j.contains("split") && j["split"].is_string()) r.split = j["split"].get<std::string>();
    if (r.split != "train" && r.split != "val" && r.split != "test") {
      throw DataError(where + ": split must be train, val or test");
    }
    if (j.contains("quality") && j["quality"].is_string()) {
      r.quality = j["quality"].get<std::string>();
    }
    if (r.quality != "hq" && r.quality != "lq") throw DataError(where + ": quality must be hq or lq");
    records.push_back(std::move(r));
  }
  return records;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRecord>& records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write manifest " + path.string());
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["image_path"] = r.image_path;
    j["label"] = r.label;
    if (r.mask_path) j["mask_path"] = *r.mask_path;
    if (r.pair_path) j["pair_path"] = *r.pair_path;
    j["split"] = r.split;
    j["quality"] = r.quality;
    out << j.dump() << "\n";
  }
}

std::vector<ManifestRecord> filter_split(const std::vector<ManifestRecord>& records,
                                         const std::string& split) {
  std::vector<ManifestRecord> out;
  for (const auto& r : records) {
    if (r.split == split) out.push_back(r);
  }
  return out;
}

}  // namespace telltale::data
